//! Corpus-level z-score normalization and the tactical impact value.

use serde::{Deserialize, Serialize};

use crate::error::FitError;
use crate::model::{RawMetrics, StructuralFeatures, Weights};

/// Population mean and standard deviation of each raw metric, in
/// `(lbs, sgm, sdi)` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mu_lbs: f64,
    pub mu_sgm: f64,
    pub mu_sdi: f64,
    pub sd_lbs: f64,
    pub sd_sgm: f64,
    pub sd_sdi: f64,
    pub n_fit: usize,
}

impl NormStats {
    pub fn mean(&self) -> [f64; 3] {
        [self.mu_lbs, self.mu_sgm, self.mu_sdi]
    }

    pub fn sd(&self) -> [f64; 3] {
        [self.sd_lbs, self.sd_sgm, self.sd_sdi]
    }

    /// Z-transforms a raw metric vector. Zero-variance metrics map to 0.
    pub fn z(&self, raw: [f64; 3]) -> [f64; 3] {
        let mu = self.mean();
        let sd = self.sd();
        std::array::from_fn(|k| if sd[k] > 0.0 { (raw[k] - mu[k]) / sd[k] } else { 0.0 })
    }
}

/// Fits population statistics over the whole pass set (two-pass).
pub fn fit_norm_stats(features: &[RawMetrics]) -> Result<NormStats, FitError> {
    fit_columns(features.iter().map(RawMetrics::as_array), features.len())
}

/// Same as [`fit_norm_stats`] for arbitrary real-valued metric rows.
pub fn fit_rows(rows: &[[f64; 3]]) -> Result<NormStats, FitError> {
    fit_columns(rows.iter().copied(), rows.len())
}

fn fit_columns(rows: impl Iterator<Item = [f64; 3]> + Clone, n: usize) -> Result<NormStats, FitError> {
    if n < 2 {
        return Err(FitError::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mut sum = [0.0; 3];
    for r in rows.clone() {
        for k in 0..3 {
            sum[k] += r[k];
        }
    }
    let mu = sum.map(|s| s / nf);
    let mut ss = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            let d = r[k] - mu[k];
            ss[k] += d * d;
        }
    }
    let sd = ss.map(|s| (s / nf).sqrt());
    Ok(NormStats {
        mu_lbs: mu[0],
        mu_sgm: mu[1],
        mu_sdi: mu[2],
        sd_lbs: sd[0],
        sd_sgm: sd[1],
        sd_sdi: sd[2],
        n_fit: n,
    })
}

pub fn tactical_impact_value(z: [f64; 3], w: &Weights) -> f64 {
    let w = w.as_array();
    w[0] * z[0] + w[1] * z[1] + w[2] * z[2]
}

/// Normalizes a raw metric triple and attaches its TIV.
pub fn normalize(raw: &RawMetrics, stats: &NormStats, w: &Weights) -> StructuralFeatures {
    let z = stats.z(raw.as_array());
    StructuralFeatures {
        lbs: raw.lbs,
        sgm: raw.sgm,
        sdi: raw.sdi,
        z_lbs: z[0],
        z_sgm: z[1],
        z_sdi: z[2],
        tiv: tactical_impact_value(z, w),
    }
}

pub fn normalize_all(raw: &[RawMetrics], stats: &NormStats, w: &Weights) -> Vec<StructuralFeatures> {
    raw.iter().map(|r| normalize(r, stats, w)).collect()
}
