//! Post-pass outcome flags and outcome probabilities by archetype and by
//! TIV quantile.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, FitError};
use crate::ingest::TimelineEvent;
use crate::model::{Archetype, PassEvent, Pitch, Point2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub pass_id: String,
    pub final_third_entry: bool,
    pub box_entry: bool,
    pub shot_in_window: bool,
    pub goal_in_window: bool,
    pub window_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeConfig {
    /// Length of the evaluation window after each pass, seconds.
    pub window_s: f64,
    /// Whether a set piece awarded to the opponent ends possession.
    pub opponent_set_piece_ends_possession: bool,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        Self {
            window_s: 10.0,
            opponent_set_piece_ends_possession: true,
        }
    }
}

impl OutcomeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.window_s.is_finite() && self.window_s > 0.0) {
            return Err(ConfigError::invalid("window_s", "must be finite and > 0"));
        }
        Ok(())
    }
}

fn loses_possession(e: &TimelineEvent, cfg: &OutcomeConfig) -> bool {
    (e.success && e.kind.is_on_ball()) || (cfg.opponent_set_piece_ends_possession && e.set_piece.is_some())
}

/// Flags what happens after each pass within `(t, t + window_s]`, cut short
/// at the first possession loss or the end of the period.
///
/// `timeline` holds one match's events sorted by `(period, t)`, each in
/// the canonical frame of the team performing it.
pub fn annotate_outcomes(
    passes: &[PassEvent],
    timeline: &[TimelineEvent],
    pitch: &Pitch,
    cfg: &OutcomeConfig,
) -> Vec<OutcomeRecord> {
    passes
        .iter()
        .map(|p| annotate_one(p, timeline, pitch, cfg))
        .collect()
}

fn annotate_one(p: &PassEvent, timeline: &[TimelineEvent], pitch: &Pitch, cfg: &OutcomeConfig) -> OutcomeRecord {
    let mut third = pitch.in_final_third(p.end);
    let mut in_box = pitch.in_box(p.end);
    let mut shot = false;
    let mut goal = false;
    let mut prev: Point2D = p.end;
    let horizon = p.t + cfg.window_s;

    let first = timeline.partition_point(|e| (e.period, e.t) <= (p.period, p.t));
    for e in &timeline[first..] {
        if e.period != p.period || e.t > horizon {
            break;
        }
        if e.team_id != p.team_id {
            if loses_possession(e, cfg) {
                break;
            }
            continue;
        }
        for q in [e.start, e.end].into_iter().flatten() {
            third |= !pitch.in_final_third(prev) && pitch.in_final_third(q);
            in_box |= !pitch.in_box(prev) && pitch.in_box(q);
            prev = q;
        }
        if e.kind == crate::ingest::EventKind::Shot {
            shot = true;
            goal |= e.goal;
        }
    }
    OutcomeRecord {
        pass_id: p.pass_id.clone(),
        final_third_entry: third,
        box_entry: in_box,
        shot_in_window: shot,
        goal_in_window: goal,
        window_s: cfg.window_s,
    }
}

/// Empirical outcome probabilities of a group of passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRates {
    pub final_third_entry: f64,
    pub box_entry: f64,
    pub shot_in_window: f64,
    pub goal_in_window: f64,
}

/// Outcome rates over `records`, or `None` when empty.
pub fn rates<'a>(records: impl IntoIterator<Item = &'a OutcomeRecord>) -> (usize, Option<OutcomeRates>) {
    let mut n = 0usize;
    let mut c = [0usize; 4];
    for r in records {
        n += 1;
        for (slot, flag) in c.iter_mut().zip([
            r.final_third_entry,
            r.box_entry,
            r.shot_in_window,
            r.goal_in_window,
        ]) {
            *slot += usize::from(flag);
        }
    }
    if n == 0 {
        return (0, None);
    }
    let nf = n as f64;
    (
        n,
        Some(OutcomeRates {
            final_third_entry: c[0] as f64 / nf,
            box_entry: c[1] as f64 / nf,
            shot_in_window: c[2] as f64 / nf,
            goal_in_window: c[3] as f64 / nf,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeOutcomeRow {
    pub archetype: Archetype,
    pub n: usize,
    pub rates: Option<OutcomeRates>,
}

/// One row per archetype in table order; empty archetypes carry `None`.
pub fn outcome_rates_by_archetype(records: &[OutcomeRecord], assignments: &[Archetype]) -> Vec<ArchetypeOutcomeRow> {
    assert_eq!(records.len(), assignments.len(), "one archetype per outcome record");
    Archetype::ALL
        .iter()
        .map(|&a| {
            let (n, rates) = rates(
                records
                    .iter()
                    .zip(assignments)
                    .filter(|(_, &b)| b == a)
                    .map(|(r, _)| r),
            );
            ArchetypeOutcomeRow { archetype: a, n, rates }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileOutcomeRow {
    /// Zero-based bin, lowest TIV first.
    pub bin: usize,
    pub n: usize,
    pub tiv_min: f64,
    pub tiv_max: f64,
    pub rates: OutcomeRates,
}

/// Bin of each sample into `q` equal-population TIV bins, lowest first.
/// Samples are ranked by TIV with input order breaking ties; rank `r` goes
/// to bin `floor(r * q / n)`, so bin sizes differ by at most one.
pub fn quantile_bins(tiv: &[f64], q: usize) -> Result<Vec<usize>, FitError> {
    let n = tiv.len();
    if q < 2 || q > n {
        return Err(FitError::BadQuantileCount { q, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| tiv[a].total_cmp(&tiv[b]).then(a.cmp(&b)));
    let mut bins = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = rank * q / n;
    }
    Ok(bins)
}

pub fn outcome_rates_by_tiv_quantile(
    records: &[OutcomeRecord],
    tiv: &[f64],
    q: usize,
) -> Result<Vec<QuantileOutcomeRow>, FitError> {
    assert_eq!(records.len(), tiv.len(), "one TIV per outcome record");
    let bins = quantile_bins(tiv, q)?;
    Ok((0..q)
        .map(|b| {
            let members: Vec<usize> = (0..records.len()).filter(|&i| bins[i] == b).collect();
            let (n, r) = rates(members.iter().map(|&i| &records[i]));
            let (lo, hi) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(tiv[i]), hi.max(tiv[i]))
            });
            QuantileOutcomeRow {
                bin: b,
                n,
                tiv_min: lo,
                tiv_max: hi,
                rates: r.expect("q <= n leaves no bin empty"),
            }
        })
        .collect())
}
