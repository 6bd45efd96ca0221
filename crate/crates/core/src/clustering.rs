//! Seeded k-means over z-normalized metric vectors and the mapping from
//! clusters to the four structural archetypes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, FitError};
use crate::model::Archetype;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    /// Independent k-means++ starts; the lowest-inertia fit is kept.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 4,
            seed: 42,
            max_iter: 300,
            tol: 1e-6,
            restarts: 1,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::invalid("k", "must be >= 1"));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::invalid("max_iter", "must be >= 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(ConfigError::invalid("tol", "must be finite and >= 0"));
        }
        if self.restarts == 0 {
            return Err(ConfigError::invalid("restarts", "must be >= 1"));
        }
        Ok(())
    }
}

/// Fitted centroids in z-space plus, once labeled, the archetype of each
/// cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeModel {
    pub centroids: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Archetype>>,
    /// Within-cluster sum of squares of the final fit.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

impl ArchetypeModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn label_of(&self, cluster: usize) -> Option<Archetype> {
        self.labels.as_ref().map(|l| l[cluster])
    }

    /// Cluster index carrying archetype `a`.
    pub fn cluster_of(&self, a: Archetype) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|&l| l == a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub model: ArchetypeModel,
    /// Cluster of each input point from the final assignment step.
    pub assignments: Vec<usize>,
}

fn dist_sq(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

/// Index of the closest centroid; ties go to the lowest index.
pub fn nearest_centroid(z: &Vec3, centroids: &[Vec3]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = dist_sq(z, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Nearest-centroid assignment with the archetype of that cluster.
pub fn assign(z: &Vec3, model: &ArchetypeModel) -> (usize, Option<Archetype>) {
    let j = nearest_centroid(z, &model.centroids);
    (j, model.label_of(j))
}

fn sample_d2(d2: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in d2.iter().enumerate() {
        acc += w;
        if acc > target && *w > 0.0 {
            return i;
        }
    }
    d2.iter().rposition(|w| *w > 0.0).unwrap_or(d2.len() - 1)
}

/// Greedy k-means++: each step draws `2 + ln k` D²-weighted candidates and
/// keeps the one that lowers the total potential most (first on ties).
fn kmeans_pp_init(points: &[Vec3], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            centroids.push(points[rng.random_range(0..n)]);
            continue;
        }
        let candidates: Vec<usize> = (0..trials).map(|_| sample_d2(&d2, total, rng)).collect();
        let mut best: Option<(f64, Vec<f64>, usize)> = None;
        for idx in candidates {
            let c = points[idx];
            let next: Vec<f64> = points
                .par_iter()
                .zip(&d2)
                .map(|(p, &d)| d.min(dist_sq(p, &c)))
                .collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, next, idx));
            }
        }
        let (_, next, idx) = best.expect("at least one candidate");
        d2 = next;
        centroids.push(points[idx]);
    }
    centroids
}

fn assign_all(points: &[Vec3], centroids: &[Vec3]) -> Vec<usize> {
    points
        .par_iter()
        .map(|p| nearest_centroid(p, centroids))
        .collect()
}

fn inertia_of(points: &[Vec3], centroids: &[Vec3], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &j)| dist_sq(p, &centroids[j]))
        .sum()
}

/// Cluster means; empty clusters are re-seeded to the point farthest from
/// its own cluster mean.
fn update_centroids(points: &[Vec3], assignments: &[usize], previous: &[Vec3]) -> Vec<Vec3> {
    let k = previous.len();
    let mut sums = vec![[0.0; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &j) in points.iter().zip(assignments) {
        counts[j] += 1;
        for d in 0..3 {
            sums[j][d] += p[d];
        }
    }
    let mut next: Vec<Vec3> = (0..k)
        .map(|j| {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                sums[j].map(|s| s / n)
            } else {
                previous[j]
            }
        })
        .collect();
    let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
    if !empty.is_empty() {
        let spread: Vec<f64> = points
            .iter()
            .zip(assignments)
            .map(|(p, &j)| dist_sq(p, &next[j]))
            .collect();
        let mut used = vec![false; points.len()];
        for j in empty {
            let mut best: Option<usize> = None;
            for (i, &d) in spread.iter().enumerate() {
                if used[i] {
                    continue;
                }
                if best.is_none_or(|b| d > spread[b]) {
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                used[i] = true;
                next[j] = points[i];
            }
        }
    }
    next
}

fn lloyd(points: &[Vec3], cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> KMeansFit {
    let mut centroids = kmeans_pp_init(points, cfg.k, rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let next_assign = assign_all(points, &centroids);
        history.push(inertia_of(points, &centroids, &next_assign));
        let unchanged = next_assign == assignments;
        assignments = next_assign;
        if unchanged {
            converged = true;
            break;
        }
        let next = update_centroids(points, &assignments, &centroids);
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| dist_sq(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < cfg.tol {
            converged = true;
            break;
        }
    }
    let inertia = inertia_of(points, &centroids, &assignments);
    if history.last().is_none_or(|&last| inertia < last) {
        history.push(inertia);
    }
    KMeansFit {
        model: ArchetypeModel {
            centroids,
            labels: None,
            inertia,
            inertia_history: history,
            seed: cfg.seed,
            iterations,
            converged,
        },
        assignments,
    }
}

/// Lloyd's algorithm from seeded k-means++ starts. Deterministic for a
/// given input order and seed.
pub fn fit_kmeans(points: &[Vec3], cfg: &KMeansConfig) -> Result<KMeansFit, FitError> {
    if points.len() < cfg.k || cfg.k == 0 {
        return Err(FitError::TooFewSamples {
            needed: cfg.k.max(1),
            got: points.len(),
        });
    }
    let mut best: Option<KMeansFit> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let fit = lloyd(points, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| fit.model.inertia < b.model.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Names the four clusters by metric dominance: the largest `z_lbs`
/// centroid is line-breaking, then the largest `z_sgm` of the rest is
/// space-expanding, then the largest `z_sdi` is destabilising, and the
/// remaining one is circulatory. Ties go to the lower cluster index.
pub fn label_clusters(mut model: ArchetypeModel) -> Result<ArchetypeModel, FitError> {
    if model.k() != 4 {
        return Err(FitError::NotFourClusters(model.k()));
    }
    let mut remaining: Vec<usize> = (0..4).collect();
    let mut labels = [Archetype::Circulatory; 4];
    for (axis, archetype) in [
        (0, Archetype::LineBreaking),
        (1, Archetype::SpaceExpanding),
        (2, Archetype::Destabilising),
    ] {
        let mut pick = 0;
        for (pos, &j) in remaining.iter().enumerate() {
            if model.centroids[j][axis] > model.centroids[remaining[pick]][axis] {
                pick = pos;
            }
        }
        labels[remaining.remove(pick)] = archetype;
    }
    labels[remaining[0]] = Archetype::Circulatory;
    model.labels = Some(labels.to_vec());
    Ok(model)
}
