//! Raw structural metrics of a pass against its defensive snapshot.
//!
//! * line bypass score: defenders whose attacking-axis coordinate lies in
//!   `(y_start, y_end]`;
//! * space gain: `1/rho(end) - 1/rho(start)` with `rho` a Gaussian-kernel
//!   defensive density, floored at `rho_floor`;
//! * structural disruption: change of the ball's distance to the
//!   defensive centroid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{DefensiveSnapshot, PassEvent, Point2D, RawMetrics};

/// Kernel parameters for the defensive density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityParams {
    /// Kernel bandwidth in meters.
    pub sigma: f64,
    /// Lower bound applied to the density, capping space at `1/rho_floor`.
    pub rho_floor: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho_floor: 1e-6,
        }
    }
}

impl DensityParams {
    pub fn new(sigma: f64, rho_floor: f64) -> Result<Self, ConfigError> {
        let p = Self { sigma, rho_floor };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(ConfigError::invalid("sigma", "must be finite and > 0"));
        }
        if !(self.rho_floor.is_finite() && self.rho_floor > 0.0) {
            return Err(ConfigError::invalid("rho_floor", "must be finite and > 0"));
        }
        Ok(())
    }
}

pub fn line_bypass_score(p: &PassEvent) -> u32 {
    let (ys, yr) = (p.start.y, p.end.y);
    p.snapshot
        .defenders()
        .iter()
        .filter(|d| ys < d.y && d.y <= yr)
        .count() as u32
}

/// Floored Gaussian-kernel density of defenders at `x`.
pub fn defensive_density(x: Point2D, snapshot: &DefensiveSnapshot, params: &DensityParams) -> f64 {
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;
    let rho: f64 = snapshot
        .defenders()
        .iter()
        .map(|d| (-x.dist_sq(*d) / two_sigma_sq).exp())
        .sum();
    rho.max(params.rho_floor)
}

/// Available space at `x`, the reciprocal of the floored density.
pub fn available_space(x: Point2D, snapshot: &DefensiveSnapshot, params: &DensityParams) -> f64 {
    1.0 / defensive_density(x, snapshot, params)
}

pub fn space_gain(p: &PassEvent, params: &DensityParams) -> f64 {
    if p.is_degenerate() {
        return 0.0;
    }
    available_space(p.end, &p.snapshot, params) - available_space(p.start, &p.snapshot, params)
}

pub fn structural_disruption(p: &PassEvent) -> f64 {
    if p.is_degenerate() {
        return 0.0;
    }
    let c = p.snapshot.centroid();
    p.end.dist(c) - p.start.dist(c)
}

pub fn compute_features(p: &PassEvent, params: &DensityParams) -> RawMetrics {
    RawMetrics {
        lbs: line_bypass_score(p),
        sgm: space_gain(p, params),
        sdi: structural_disruption(p),
    }
}

/// Computes metrics for every pass, preserving input order.
pub fn compute_all(passes: &[PassEvent], params: &DensityParams) -> Vec<RawMetrics> {
    passes.par_iter().map(|p| compute_features(p, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PassEvent, Point2D};
    use proptest::prelude::*;

    fn mk(start: Point2D, end: Point2D, defenders: Vec<Point2D>) -> PassEvent {
        PassEvent {
            pass_id: "p".into(),
            match_id: "m".into(),
            team_id: "H".into(),
            passer_id: "a".into(),
            receiver_id: "b".into(),
            period: 1,
            t: 0.0,
            start,
            end,
            snapshot: DefensiveSnapshot::new(0, defenders),
        }
    }

    fn sigma10() -> DensityParams {
        DensityParams::default()
    }

    #[test]
    fn lbs_counts_defenders_between() {
        let d = vec![Point2D::new(30.0, 15.0), Point2D::new(20.0, 20.0), Point2D::new(34.0, 40.0)];
        let p = mk(Point2D::new(34.0, 10.0), Point2D::new(34.0, 30.0), d.clone());
        assert_eq!(line_bypass_score(&p), 2);
        let back = mk(Point2D::new(34.0, 30.0), Point2D::new(34.0, 10.0), d);
        assert_eq!(line_bypass_score(&back), 0);
    }

    #[test]
    fn lbs_upper_bound_closed_lower_open() {
        let p = mk(
            Point2D::new(0.0, 10.0),
            Point2D::new(0.0, 30.0),
            vec![Point2D::new(5.0, 30.0), Point2D::new(5.0, 10.0)],
        );
        assert_eq!(line_bypass_score(&p), 1);
    }

    #[test]
    fn density_examples() {
        let s = DefensiveSnapshot::new(0, vec![Point2D::new(10.0, 10.0)]);
        assert_eq!(defensive_density(Point2D::new(10.0, 10.0), &s, &sigma10()), 1.0);
        let far = defensive_density(Point2D::new(40.0, 10.0), &s, &sigma10());
        assert!((far - 1.1108996538242306e-2).abs() < 1e-15);
        let two = DefensiveSnapshot::new(0, vec![Point2D::new(3.0, 4.0), Point2D::new(3.0, 4.0)]);
        assert_eq!(defensive_density(Point2D::new(3.0, 4.0), &two, &sigma10()), 2.0);
    }

    #[test]
    fn density_floor_applies() {
        let s = DefensiveSnapshot::new(0, vec![Point2D::new(0.0, 0.0)]);
        let rho = defensive_density(Point2D::new(0.0, 100.0), &s, &sigma10());
        assert_eq!(rho, 1e-6);
    }

    #[test]
    fn space_gain_examples() {
        let d = vec![Point2D::new(34.0, 30.0)];
        let p = mk(Point2D::new(34.0, 30.0), Point2D::new(34.0, 60.0), d);
        // e^{4.5} - 1
        assert!((space_gain(&p, &sigma10()) - 89.017_131_300_521_81).abs() < 1e-9);

        let sym = vec![Point2D::new(30.0, 50.0), Point2D::new(38.0, 50.0)];
        let p = mk(Point2D::new(34.0, 40.0), Point2D::new(34.0, 60.0), sym);
        assert!(space_gain(&p, &sigma10()).abs() < 1e-12);

        let dense = vec![Point2D::new(34.0, 60.0), Point2D::new(36.0, 61.0)];
        let p = mk(Point2D::new(34.0, 30.0), Point2D::new(34.0, 58.0), dense);
        assert!(space_gain(&p, &sigma10()) < 0.0);
    }

    #[test]
    fn disruption_examples() {
        let around_origin = vec![Point2D::new(-1.0, 0.0), Point2D::new(1.0, 0.0)];
        let p = mk(Point2D::new(0.0, 10.0), Point2D::new(0.0, 25.0), around_origin.clone());
        assert!((structural_disruption(&p) - 15.0).abs() < 1e-12);
        let p = mk(Point2D::new(0.0, 10.0), Point2D::new(10.0, 0.0), around_origin.clone());
        assert!(structural_disruption(&p).abs() < 1e-12);
        let p = mk(Point2D::new(0.0, 30.0), Point2D::new(0.0, 5.0), around_origin);
        assert!(structural_disruption(&p) < 0.0);
    }

    #[test]
    fn zero_length_pass_is_all_zero() {
        let d = vec![Point2D::new(34.0, 40.0), Point2D::new(20.0, 45.0)];
        let p = mk(Point2D::new(30.0, 30.0), Point2D::new(30.0, 30.0), d);
        let f = compute_features(&p, &sigma10());
        assert_eq!(f, RawMetrics { lbs: 0, sgm: 0.0, sdi: 0.0 });
    }

    #[test]
    fn composed_examples() {
        let d = vec![Point2D::new(30.0, 15.0), Point2D::new(20.0, 20.0), Point2D::new(34.0, 40.0)];
        let p = mk(Point2D::new(34.0, 10.0), Point2D::new(34.0, 30.0), d);
        let f = compute_features(&p, &sigma10());
        assert_eq!(f.lbs, 2);
        // Centroid (28, 25).
        let c = Point2D::new(28.0, 25.0);
        let sdi = Point2D::new(34.0, 30.0).dist(c) - Point2D::new(34.0, 10.0).dist(c);
        assert!((f.sdi - sdi).abs() < 1e-12);
    }

    #[test]
    fn invalid_params() {
        assert!(DensityParams::new(0.0, 1e-6).is_err());
        assert!(DensityParams::new(10.0, 0.0).is_err());
        assert!(DensityParams::new(f64::NAN, 1e-6).is_err());
    }

    fn point() -> impl Strategy<Value = Point2D> {
        (0.0..68.0f64, 0.0..105.0f64).prop_map(|(x, y)| Point2D::new(x, y))
    }

    proptest! {
        #[test]
        fn sdi_antisymmetric_and_bounded(s in point(), r in point(), d in prop::collection::vec(point(), 1..11)) {
            let fwd = mk(s, r, d.clone());
            let rev = mk(r, s, d);
            let a = structural_disruption(&fwd);
            let b = structural_disruption(&rev);
            prop_assert!((a + b).abs() < 1e-9);
            prop_assert!(a.abs() <= s.dist(r) + 1e-9);
        }

        #[test]
        fn lbs_in_range(s in point(), r in point(), d in prop::collection::vec(point(), 1..11)) {
            let n = d.len() as u32;
            let p = mk(s, r, d);
            prop_assert!(line_bypass_score(&p) <= n);
        }

        #[test]
        fn space_bounded_by_density_range(x in point(), d in prop::collection::vec(point(), 1..11)) {
            let s = DefensiveSnapshot::new(0, d);
            let params = sigma10();
            let rho = defensive_density(x, &s, &params);
            prop_assert!(rho > 0.0 && rho <= s.len() as f64 + 1e-12);
            prop_assert!(available_space(x, &s, &params) >= 1.0 / s.len() as f64 - 1e-12);
        }
    }
}
