//! Team style coordinates, spatial TIV heatmaps, player profiles,
//! passer-receiver TIV deltas and the 2-D projection of the metric space.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, FitError};
use crate::model::{Archetype, PassEvent, Pitch, PlayerId, StructuralFeatures, TeamId};
use crate::outcomes::{rates, OutcomeRates, OutcomeRecord};

fn shares_of(assignments: impl IntoIterator<Item = Archetype>) -> (usize, [f64; 4]) {
    let mut counts = [0usize; 4];
    let mut n = 0;
    for a in assignments {
        counts[a.index()] += 1;
        n += 1;
    }
    let nf = n.max(1) as f64;
    (n, counts.map(|c| c as f64 / nf))
}

// ---------------------------------------------------------------------------
// Team style
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleQuadrant {
    CirculatoryDestabilisation,
    SpaceExpansion,
    DestabilisingProgression,
    DirectProgression,
}

impl StyleQuadrant {
    /// Zero on either axis counts as positive.
    pub fn from_axes(x: f64, y: f64) -> Self {
        match (x >= 0.0, y >= 0.0) {
            (true, true) => StyleQuadrant::CirculatoryDestabilisation,
            (true, false) => StyleQuadrant::SpaceExpansion,
            (false, true) => StyleQuadrant::DestabilisingProgression,
            (false, false) => StyleQuadrant::DirectProgression,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StyleQuadrant::CirculatoryDestabilisation => "circulatory destabilisation",
            StyleQuadrant::SpaceExpansion => "space expansion",
            StyleQuadrant::DestabilisingProgression => "destabilising progression",
            StyleQuadrant::DirectProgression => "direct progression",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStylePoint {
    pub team_id: TeamId,
    pub n_passes: usize,
    /// Circulation versus progression.
    pub x_style: f64,
    /// Destabilising versus space-expanding.
    pub y_style: f64,
    pub quadrant: StyleQuadrant,
    /// Archetype proportions in table order.
    pub shares: [f64; 4],
    pub shot_prob: f64,
    pub box_entry_prob: f64,
}

/// Style axes from archetype shares `(circ, dest, lb, se)`.
pub fn style_axes(shares: &[f64; 4]) -> (f64, f64) {
    let [circ, dest, lb, se] = *shares;
    (circ - lb - se, dest - se)
}

/// One point per team with at least one pass, ordered by team id.
pub fn team_style_points(
    passes: &[PassEvent],
    assignments: &[Archetype],
    outcomes: &[OutcomeRecord],
) -> Vec<TeamStylePoint> {
    let mut by_team: BTreeMap<&TeamId, Vec<usize>> = BTreeMap::new();
    for (i, p) in passes.iter().enumerate() {
        by_team.entry(&p.team_id).or_default().push(i);
    }
    by_team
        .into_iter()
        .map(|(team, idx)| {
            let (n, shares) = shares_of(idx.iter().map(|&i| assignments[i]));
            let (_, r) = rates(idx.iter().map(|&i| &outcomes[i]));
            let r = r.expect("team has passes");
            let (x, y) = style_axes(&shares);
            TeamStylePoint {
                team_id: team.clone(),
                n_passes: n,
                x_style: x,
                y_style: y,
                quadrant: StyleQuadrant::from_axes(x, y),
                shares,
                shot_prob: r.shot_in_window,
                box_entry_prob: r.box_entry,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Heatmaps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    Origin,
    Destination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Bins along the pitch length (attacking axis).
    pub nx: usize,
    /// Bins across the pitch width.
    pub ny: usize,
    /// Cells with fewer passes are flagged unreliable.
    pub min_count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 12,
            ny: 8,
            min_count: 10,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(ConfigError::invalid("grid", "bin counts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub count: usize,
    pub sum_tiv: f64,
}

impl HeatmapCell {
    pub fn mean_tiv(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_tiv / self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub mode: HeatmapMode,
    pub spec: GridSpec,
    /// Row-major over `(row across width, col along length)`.
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapGrid {
    pub fn cell(&self, row: usize, col: usize) -> &HeatmapCell {
        &self.cells[row * self.spec.nx + col]
    }

    pub fn is_reliable(&self, row: usize, col: usize) -> bool {
        self.cell(row, col).count >= self.spec.min_count
    }

    pub fn total_count(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }
}

fn bin(v: f64, extent: f64, n: usize) -> usize {
    let b = (v * n as f64 / extent).floor();
    if b < 0.0 {
        0
    } else {
        (b as usize).min(n - 1)
    }
}

/// Mean TIV per grid cell of pass origins or destinations. Each pass is
/// binned relative to its own match's pitch; positions on a cell boundary
/// go to the higher cell, except on the far edge of the pitch. Positions
/// slightly outside the pitch are clamped into the edge cells.
pub fn tiv_heatmap(
    passes: &[PassEvent],
    tiv: &[f64],
    mode: HeatmapMode,
    spec: GridSpec,
    pitch_of: impl Fn(&PassEvent) -> Pitch,
) -> HeatmapGrid {
    let mut cells = vec![HeatmapCell::default(); spec.nx * spec.ny];
    for (p, &v) in passes.iter().zip(tiv) {
        let pitch = pitch_of(p);
        let loc = match mode {
            HeatmapMode::Origin => p.start,
            HeatmapMode::Destination => p.end,
        };
        let col = bin(loc.y, pitch.length, spec.nx);
        let row = bin(loc.x, pitch.width, spec.ny);
        let c = &mut cells[row * spec.nx + col];
        c.count += 1;
        c.sum_tiv += v;
    }
    HeatmapGrid { mode, spec, cells }
}

// ---------------------------------------------------------------------------
// Player profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub n_passes: usize,
    pub mean_lbs: f64,
    pub mean_sgm: f64,
    pub mean_sdi: f64,
    pub cum_tiv: f64,
    pub mean_tiv: f64,
    pub archetype_shares: [f64; 4],
}

/// Passer profiles with at least `min_passes` passes, ranked by cumulative
/// TIV (descending) then player id.
pub fn player_profiles(
    passes: &[PassEvent],
    features: &[StructuralFeatures],
    assignments: &[Archetype],
    min_passes: usize,
) -> Vec<PlayerProfile> {
    let mut by_player: BTreeMap<&PlayerId, Vec<usize>> = BTreeMap::new();
    for (i, p) in passes.iter().enumerate() {
        by_player.entry(&p.passer_id).or_default().push(i);
    }
    let mut out: Vec<PlayerProfile> = by_player
        .into_iter()
        .filter(|(_, idx)| idx.len() >= min_passes.max(1))
        .map(|(player, idx)| {
            let n = idx.len() as f64;
            let mean = |f: &dyn Fn(&StructuralFeatures) -> f64| idx.iter().map(|&i| f(&features[i])).sum::<f64>() / n;
            let cum_tiv: f64 = idx.iter().map(|&i| features[i].tiv).sum();
            let (_, shares) = shares_of(idx.iter().map(|&i| assignments[i]));
            PlayerProfile {
                player_id: player.clone(),
                team_id: passes[idx[0]].team_id.clone(),
                n_passes: idx.len(),
                mean_lbs: mean(&|f| f64::from(f.lbs)),
                mean_sgm: mean(&|f| f.sgm),
                mean_sdi: mean(&|f| f.sdi),
                cum_tiv,
                mean_tiv: cum_tiv / n,
                archetype_shares: shares,
            }
        })
        .collect();
    out.sort_by(|a, b| b.cum_tiv.total_cmp(&a.cum_tiv).then_with(|| a.player_id.cmp(&b.player_id)));
    out
}

// ---------------------------------------------------------------------------
// Passer-receiver pairs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuoRecord {
    pub passer_id: PlayerId,
    pub receiver_id: PlayerId,
    pub n: usize,
    pub mean_tiv_pair: f64,
    pub passer_baseline_mean: f64,
    pub delta_tiv: f64,
    pub outcome_probs: OutcomeRates,
}

/// TIV gain of each passer-receiver pair over the passer's own mean,
/// for pairs with at least `min_duo_count` passes, ranked by delta
/// (descending) then ids.
pub fn duo_delta_tiv(
    passes: &[PassEvent],
    tiv: &[f64],
    outcomes: &[OutcomeRecord],
    min_duo_count: usize,
) -> Vec<DuoRecord> {
    let mut passer_sum: BTreeMap<&PlayerId, (f64, usize)> = BTreeMap::new();
    let mut pairs: BTreeMap<(&PlayerId, &PlayerId), Vec<usize>> = BTreeMap::new();
    for (i, p) in passes.iter().enumerate() {
        let e = passer_sum.entry(&p.passer_id).or_insert((0.0, 0));
        e.0 += tiv[i];
        e.1 += 1;
        pairs.entry((&p.passer_id, &p.receiver_id)).or_default().push(i);
    }
    let mut out: Vec<DuoRecord> = pairs
        .into_iter()
        .filter(|(_, idx)| idx.len() >= min_duo_count.max(1))
        .map(|((passer, receiver), idx)| {
            let (sum, count) = passer_sum[passer];
            let baseline = sum / count as f64;
            let pair_mean = idx.iter().map(|&i| tiv[i]).sum::<f64>() / idx.len() as f64;
            let (_, probs) = rates(idx.iter().map(|&i| &outcomes[i]));
            DuoRecord {
                passer_id: passer.clone(),
                receiver_id: receiver.clone(),
                n: idx.len(),
                mean_tiv_pair: pair_mean,
                passer_baseline_mean: baseline,
                delta_tiv: pair_mean - baseline,
                outcome_probs: probs.expect("pair has passes"),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.delta_tiv
            .total_cmp(&a.delta_tiv)
            .then_with(|| a.passer_id.cmp(&b.passer_id))
            .then_with(|| a.receiver_id.cmp(&b.receiver_id))
    });
    out
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub mean: [f64; 3],
    /// Top two principal directions; each has its largest-magnitude
    /// loading positive.
    pub components: [[f64; 3]; 2],
    pub explained_variance_ratio: [f64; 2],
    pub coords: Vec<[f64; 2]>,
}

/// Relative eigenvalue below which a direction is treated as zero-variance.
const RANK_TOL: f64 = 1e-12;

/// Principal-component projection of the z-vectors onto two dimensions.
pub fn project_2d(z: &[[f64; 3]]) -> Result<Projection, FitError> {
    let n = z.len();
    if n < 2 {
        return Err(FitError::TooFewSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mut mean = [0.0; 3];
    for v in z {
        for k in 0..3 {
            mean[k] += v[k];
        }
    }
    mean = mean.map(|s| s / nf);
    let mut cov = Matrix3::<f64>::zeros();
    for v in z {
        let d = Vector3::new(v[0] - mean[0], v[1] - mean[1], v[2] - mean[2]);
        cov += d * d.transpose();
    }
    cov /= nf;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let top = eig.eigenvalues[order[0]].max(0.0);

    let mut components = [[0.0; 3]; 2];
    let mut ratios = [0.0; 2];
    let mut active = [false; 2];
    for (slot, &j) in order.iter().take(2).enumerate() {
        let mut v: [f64; 3] = std::array::from_fn(|k| eig.eigenvectors[(k, j)]);
        let lead = (0..3)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .expect("three loadings");
        if v[lead] < 0.0 {
            v = v.map(|x| -x);
        }
        components[slot] = v;
        let lambda = eig.eigenvalues[j].max(0.0);
        active[slot] = top > 0.0 && lambda > RANK_TOL * top;
        ratios[slot] = if total > 0.0 && active[slot] { lambda / total } else { 0.0 };
    }

    let coords = z
        .iter()
        .map(|v| {
            let d = [v[0] - mean[0], v[1] - mean[1], v[2] - mean[2]];
            std::array::from_fn(|s| {
                if active[s] {
                    (0..3).map(|k| d[k] * components[s][k]).sum()
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(Projection {
        mean,
        components,
        explained_variance_ratio: ratios,
        coords,
    })
}
