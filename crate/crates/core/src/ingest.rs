//! Canonical-format match files: parsing, tracking smoothing, event/frame
//! synchronization and open-play pass extraction.
//!
//! A match directory holds `meta.json`, `events.jsonl` and
//! `tracking.jsonl`. Provider coordinates are meters with `x` along the
//! pitch length (`0..=length`) and `y` across it (`0..=width`). The home
//! team attacks towards `+x` in odd periods when
//! `home_attacks_positive_x_first` is true, and the direction flips every
//! period. Everything leaving this module is in the canonical attacking
//! frame of the team in possession.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::model::{
    validate_pass_with_tolerance, DefensiveSnapshot, MatchId, PassEvent, Pitch, PlayerId, Point2D,
    TeamId, Violation, DEFAULT_OOB_TOLERANCE,
};

pub const META_FILE: &str = "meta.json";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const TRACKING_FILE: &str = "tracking.jsonl";

/// Nominal tracking rate of the reference data.
pub const DEFAULT_FRAME_RATE: f64 = 29.97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Pass,
    Shot,
    Interception,
    Tackle,
    Clearance,
    Recovery,
    Foul,
    #[serde(other)]
    Other,
}

impl EventKind {
    /// On-ball actions that establish possession when successful.
    pub fn is_on_ball(self) -> bool {
        matches!(
            self,
            EventKind::Pass
                | EventKind::Shot
                | EventKind::Interception
                | EventKind::Tackle
                | EventKind::Clearance
                | EventKind::Recovery
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetPiece {
    Corner,
    ThrowIn,
    FreeKick,
    GoalKick,
    KickOff,
    Penalty,
}

fn yes() -> bool {
    true
}

/// One on-ball event in provider coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub event_id: String,
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub period: u8,
    /// Seconds from the start of `period`.
    pub t: f64,
    #[serde(default)]
    pub actor_id: Option<PlayerId>,
    pub team_id: TeamId,
    #[serde(default)]
    pub receiver_id: Option<PlayerId>,
    #[serde(default)]
    pub start: Option<Point2D>,
    #[serde(default)]
    pub end: Option<Point2D>,
    #[serde(default = "yes")]
    pub success: bool,
    #[serde(default)]
    pub set_piece: Option<SetPiece>,
    /// Only meaningful on shots.
    #[serde(default)]
    pub goal: bool,
}

/// Player and ball positions at one tracking instant, provider frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingFrame {
    pub frame_id: u64,
    pub period: u8,
    pub t: f64,
    pub players: BTreeMap<PlayerId, Point2D>,
    #[serde(default)]
    pub ball: Option<Point2D>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Goalkeeper,
    #[serde(other)]
    Outfield,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub team_id: TeamId,
    pub role: Role,
    #[serde(default)]
    pub jersey: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchMeta {
    #[serde(default)]
    pub match_id: Option<MatchId>,
    #[serde(default)]
    pub pitch: Pitch,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
    pub home_team_id: TeamId,
    pub away_team_id: TeamId,
    #[serde(default = "yes")]
    pub home_attacks_positive_x_first: bool,
    pub roster: BTreeMap<PlayerId, RosterEntry>,
}

fn default_frame_rate() -> f64 {
    DEFAULT_FRAME_RATE
}

impl MatchMeta {
    pub fn validate(&self) -> std::result::Result<(), String> {
        self.pitch.validate().map_err(|e| e.to_string())?;
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err("frame_rate must be positive".into());
        }
        if self.home_team_id == self.away_team_id {
            return Err("home and away team ids must differ".into());
        }
        for team in [&self.home_team_id, &self.away_team_id] {
            let keepers = self
                .roster
                .values()
                .filter(|r| &r.team_id == team && r.role == Role::Goalkeeper)
                .count();
            if keepers != 1 {
                return Err(format!("team {team} has {keepers} goalkeepers in roster, expected 1"));
            }
        }
        if let Some(r) = self
            .roster
            .values()
            .find(|r| r.team_id != self.home_team_id && r.team_id != self.away_team_id)
        {
            return Err(format!("roster references unknown team {}", r.team_id));
        }
        Ok(())
    }

    /// Whether `team` attacks towards provider `+x` in `period`.
    pub fn attacks_positive_x(&self, team: &TeamId, period: u8) -> Result<bool> {
        let home_positive = (period % 2 == 1) == self.home_attacks_positive_x_first;
        if *team == self.home_team_id {
            Ok(home_positive)
        } else if *team == self.away_team_id {
            Ok(!home_positive)
        } else {
            Err(Error::UnknownTeam(team.to_string()))
        }
    }

    /// Maps a provider position into `team`'s canonical attacking frame.
    pub fn to_canonical(&self, team: &TeamId, period: u8, p: Point2D) -> Result<Point2D> {
        Ok(canonical_point(p, self.attacks_positive_x(team, period)?, &self.pitch))
    }

    /// Inverse of [`MatchMeta::to_canonical`].
    pub fn to_provider(&self, team: &TeamId, period: u8, p: Point2D) -> Result<Point2D> {
        let pitch = &self.pitch;
        Ok(if self.attacks_positive_x(team, period)? {
            Point2D::new(p.y, p.x)
        } else {
            Point2D::new(pitch.length - p.y, pitch.width - p.x)
        })
    }
}

fn canonical_point(p: Point2D, positive_x: bool, pitch: &Pitch) -> Point2D {
    if positive_x {
        Point2D::new(p.y, p.x)
    } else {
        Point2D::new(pitch.width - p.y, pitch.length - p.x)
    }
}

/// The team not in possession.
pub fn defending_team(team: &TeamId, meta: &MatchMeta) -> Result<TeamId> {
    if *team == meta.home_team_id {
        Ok(meta.away_team_id.clone())
    } else if *team == meta.away_team_id {
        Ok(meta.home_team_id.clone())
    } else {
        Err(Error::UnknownTeam(team.to_string()))
    }
}

/// Parsed contents of one match directory.
#[derive(Debug, Clone)]
pub struct MatchInput {
    pub match_id: MatchId,
    pub meta: MatchMeta,
    /// Sorted by `(period, t)`, stable.
    pub events: Vec<RawEvent>,
    /// Sorted by `(period, t)`.
    pub frames: Vec<TrackingFrame>,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn cmp_time(pa: u8, ta: f64, pb: u8, tb: f64) -> Ordering {
    pa.cmp(&pb).then(ta.total_cmp(&tb))
}

/// Reads and checks a match directory. The match id defaults to the
/// directory name.
pub fn read_match_dir(dir: &Path) -> Result<MatchInput> {
    let meta_path = dir.join(META_FILE);
    let events_path = dir.join(EVENTS_FILE);
    let tracking_path = dir.join(TRACKING_FILE);
    for p in [&meta_path, &events_path, &tracking_path] {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: MatchMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        path: meta_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    meta.validate().map_err(|message| Error::InvalidInput {
        path: meta_path.clone(),
        message,
    })?;
    let match_id = meta.match_id.clone().unwrap_or_else(|| {
        MatchId(
            dir.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        )
    });

    let mut events: Vec<RawEvent> = read_jsonl(&events_path)?;
    for e in &events {
        if !e.t.is_finite() {
            return Err(Error::InvalidInput {
                path: events_path.clone(),
                message: format!("event {} has non-finite time", e.event_id),
            });
        }
    }
    events.sort_by(|a, b| cmp_time(a.period, a.t, b.period, b.t));

    let mut frames: Vec<TrackingFrame> = read_jsonl(&tracking_path)?;
    frames.sort_by(|a, b| cmp_time(a.period, a.t, b.period, b.t));
    for w in frames.windows(2) {
        if w[0].period == w[1].period && w[1].t.partial_cmp(&w[0].t) != Some(Ordering::Greater) {
            return Err(Error::InvalidInput {
                path: tracking_path.clone(),
                message: format!(
                    "frame timestamps not strictly increasing at frames {} and {}",
                    w[0].frame_id, w[1].frame_id
                ),
            });
        }
    }

    Ok(MatchInput {
        match_id,
        meta,
        events,
        frames,
    })
}

/// Match directories under `root`, sorted by path. `root` itself counts
/// when it directly holds a match.
pub fn discover_matches(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(META_FILE).exists() {
        return Ok(vec![root.to_owned()]);
    }
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let has_any = [META_FILE, EVENTS_FILE, TRACKING_FILE]
            .iter()
            .any(|f| path.join(f).exists());
        if has_any {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidInput {
            path: root.to_owned(),
            message: "no match directories found".into(),
        });
    }
    Ok(dirs)
}

/// Contiguous runs of frames: same period, no gap above 1.2 frame intervals.
fn segments(frames: &[TrackingFrame], frame_rate: f64) -> Vec<(usize, usize)> {
    let max_gap = 1.2 / frame_rate;
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=frames.len() {
        let split = i == frames.len()
            || frames[i].period != frames[i - 1].period
            || frames[i].t - frames[i - 1].t > max_gap;
        if split {
            if i > start {
                out.push((start, i));
            }
            start = i;
        }
    }
    out
}

/// Centered moving average of every player's position over `window`
/// frames. The window shrinks symmetrically at the ends of each contiguous
/// run of frames and never spans a tracking gap or a period change.
/// Players missing from some frames are averaged over the frames where
/// they are present.
pub fn smooth_tracking(
    frames: &[TrackingFrame],
    window: usize,
    frame_rate: f64,
) -> std::result::Result<Vec<TrackingFrame>, ConfigError> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(ConfigError::invalid("smoothing window", "must be odd and >= 1"));
    }
    if window == 1 || frames.is_empty() {
        return Ok(frames.to_vec());
    }
    let h = window / 2;
    let mut out = frames.to_vec();
    for (a, b) in segments(frames, frame_rate) {
        for i in a..b {
            let half = h.min(i - a).min(b - 1 - i);
            if half == 0 {
                continue;
            }
            for (id, pos) in out[i].players.iter_mut() {
                let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
                for f in &frames[i - half..=i + half] {
                    if let Some(p) = f.players.get(id) {
                        sx += p.x;
                        sy += p.y;
                        n += 1;
                    }
                }
                *pos = Point2D::new(sx / n as f64, sy / n as f64);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyncFailure {
    /// No frames in the event's period.
    NoFrames,
    /// Closest frame further away than the threshold.
    TooFar { dt: f64 },
}

/// Index of the frame closest in time to `(period, t)`; ties go to the
/// earlier frame. `frames` must be sorted by `(period, t)`.
pub fn sync_event_to_frame(
    period: u8,
    t: f64,
    frames: &[TrackingFrame],
    max_dt: f64,
) -> std::result::Result<usize, SyncFailure> {
    let lo = frames.partition_point(|f| f.period < period);
    let hi = frames.partition_point(|f| f.period <= period);
    if lo == hi {
        return Err(SyncFailure::NoFrames);
    }
    let period_frames = &frames[lo..hi];
    let idx = period_frames.partition_point(|f| f.t < t);
    let mut best: Option<(usize, f64)> = None;
    for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
        if let Some(f) = period_frames.get(cand) {
            let dt = (f.t - t).abs();
            if best.is_none_or(|(_, d)| dt < d) {
                best = Some((cand, dt));
            }
        }
    }
    let (i, dt) = best.expect("non-empty period");
    if dt > max_dt {
        Err(SyncFailure::TooFar { dt })
    } else {
        Ok(lo + i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Odd frame count of the smoothing window.
    pub smoothing_window: usize,
    /// Largest tolerated event/frame time difference, seconds.
    pub max_sync_dt: f64,
    pub include_goal_kicks: bool,
    pub oob_tolerance: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            smoothing_window: 7,
            max_sync_dt: 0.5,
            include_goal_kicks: false,
            oob_tolerance: DEFAULT_OOB_TOLERANCE,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(ConfigError::invalid("smoothing_window", "must be odd and >= 1"));
        }
        if !(self.max_sync_dt.is_finite() && self.max_sync_dt >= 0.0) {
            return Err(ConfigError::invalid("max_sync_dt", "must be finite and >= 0"));
        }
        if !(self.oob_tolerance.is_finite() && self.oob_tolerance >= 0.0) {
            return Err(ConfigError::invalid("oob_tolerance", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Why a pass event did not make it into the pass store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum DropReason {
    Unsuccessful,
    SetPiece { kind: SetPiece },
    UnknownPasser,
    UnresolvableReceiver,
    MissingLocation,
    SyncFailure { dt: Option<f64> },
    EmptyDefense,
    Inadmissible { violations: Vec<Violation> },
}

impl DropReason {
    pub fn key(&self) -> &'static str {
        match self {
            DropReason::Unsuccessful => "unsuccessful",
            DropReason::SetPiece { .. } => "set_piece",
            DropReason::UnknownPasser => "unknown_passer",
            DropReason::UnresolvableReceiver => "unresolvable_receiver",
            DropReason::MissingLocation => "missing_location",
            DropReason::SyncFailure { .. } => "sync_failure",
            DropReason::EmptyDefense => "empty_defense",
            DropReason::Inadmissible { .. } => "inadmissible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedPass {
    pub event_id: String,
    #[serde(flatten)]
    pub reason: DropReason,
}

/// An event mapped into the canonical frame of the team performing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub match_id: MatchId,
    pub event_id: String,
    pub period: u8,
    pub t: f64,
    pub team_id: TeamId,
    pub kind: EventKind,
    pub success: bool,
    #[serde(default)]
    pub set_piece: Option<SetPiece>,
    #[serde(default)]
    pub goal: bool,
    #[serde(default)]
    pub start: Option<Point2D>,
    #[serde(default)]
    pub end: Option<Point2D>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub match_id: MatchId,
    pub pitch: Pitch,
    pub home_team_id: TeamId,
    pub away_team_id: TeamId,
    pub events: usize,
    pub frames: usize,
    pub pass_events: usize,
    pub passes: usize,
    pub dropped: BTreeMap<String, usize>,
    pub drops: Vec<DroppedPass>,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub passes: Vec<PassEvent>,
    pub timeline: Vec<TimelineEvent>,
    pub report: MatchReport,
}

fn set_piece_excluded(sp: SetPiece, cfg: &IngestConfig) -> bool {
    !(sp == SetPiece::GoalKick && cfg.include_goal_kicks)
}

/// Extracts successful open-play passes with the defending team's outfield
/// shape from the synchronized (already smoothed) frame.
pub fn extract_passes(input: &MatchInput, frames: &[TrackingFrame], cfg: &IngestConfig) -> Result<Extraction> {
    let meta = &input.meta;
    let mut passes = Vec::new();
    let mut drops = Vec::new();
    let mut pass_events = 0;

    for e in &input.events {
        if e.kind != EventKind::Pass {
            continue;
        }
        pass_events += 1;
        let defending = defending_team(&e.team_id, meta)?;
        let drop = |reason: DropReason| DroppedPass {
            event_id: e.event_id.clone(),
            reason,
        };
        if !e.success {
            drops.push(drop(DropReason::Unsuccessful));
            continue;
        }
        if let Some(kind) = e.set_piece.filter(|sp| set_piece_excluded(*sp, cfg)) {
            drops.push(drop(DropReason::SetPiece { kind }));
            continue;
        }
        let on_team = |id: &Option<PlayerId>| {
            id.as_ref()
                .and_then(|id| meta.roster.get(id).map(|r| (id, r)))
                .filter(|(_, r)| r.team_id == e.team_id)
                .map(|(id, _)| id.clone())
        };
        let Some(passer) = on_team(&e.actor_id) else {
            drops.push(drop(DropReason::UnknownPasser));
            continue;
        };
        let Some(receiver) = on_team(&e.receiver_id).filter(|r| *r != passer) else {
            drops.push(drop(DropReason::UnresolvableReceiver));
            continue;
        };
        let (Some(start), Some(end)) = (e.start, e.end) else {
            drops.push(drop(DropReason::MissingLocation));
            continue;
        };
        let fi = match sync_event_to_frame(e.period, e.t, frames, cfg.max_sync_dt) {
            Ok(i) => i,
            Err(fail) => {
                let dt = match fail {
                    SyncFailure::TooFar { dt } => Some(dt),
                    SyncFailure::NoFrames => None,
                };
                log::debug!("{}: pass {} dropped, no frame within {} s", input.match_id, e.event_id, cfg.max_sync_dt);
                drops.push(drop(DropReason::SyncFailure { dt }));
                continue;
            }
        };
        let frame = &frames[fi];
        let positive_x = meta.attacks_positive_x(&e.team_id, e.period)?;
        let defenders: Vec<Point2D> = frame
            .players
            .iter()
            .filter(|(id, _)| {
                meta.roster
                    .get(*id)
                    .is_some_and(|r| r.team_id == defending && r.role == Role::Outfield)
            })
            .map(|(_, p)| canonical_point(*p, positive_x, &meta.pitch))
            .collect();
        if defenders.is_empty() {
            drops.push(drop(DropReason::EmptyDefense));
            continue;
        }
        let pass = PassEvent {
            pass_id: format!("{}:{}", input.match_id, e.event_id),
            match_id: input.match_id.clone(),
            team_id: e.team_id.clone(),
            passer_id: passer,
            receiver_id: receiver,
            period: e.period,
            t: e.t,
            start: canonical_point(start, positive_x, &meta.pitch),
            end: canonical_point(end, positive_x, &meta.pitch),
            snapshot: DefensiveSnapshot::new(frame.frame_id, defenders),
        };
        let report = validate_pass_with_tolerance(&pass, &meta.pitch, cfg.oob_tolerance);
        if !report.is_admissible() {
            drops.push(drop(DropReason::Inadmissible {
                violations: report.violations,
            }));
            continue;
        }
        passes.push(pass);
    }

    let timeline = input
        .events
        .iter()
        .map(|e| {
            let positive_x = meta.attacks_positive_x(&e.team_id, e.period)?;
            Ok(TimelineEvent {
                match_id: input.match_id.clone(),
                event_id: e.event_id.clone(),
                period: e.period,
                t: e.t,
                team_id: e.team_id.clone(),
                kind: e.kind,
                success: e.success,
                set_piece: e.set_piece,
                goal: e.goal,
                start: e.start.map(|p| canonical_point(p, positive_x, &meta.pitch)),
                end: e.end.map(|p| canonical_point(p, positive_x, &meta.pitch)),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut dropped = BTreeMap::new();
    for d in &drops {
        *dropped.entry(d.reason.key().to_owned()).or_insert(0) += 1;
    }
    let report = MatchReport {
        match_id: input.match_id.clone(),
        pitch: meta.pitch,
        home_team_id: meta.home_team_id.clone(),
        away_team_id: meta.away_team_id.clone(),
        events: input.events.len(),
        frames: input.frames.len(),
        pass_events,
        passes: passes.len(),
        dropped,
        drops,
    };
    Ok(Extraction {
        passes,
        timeline,
        report,
    })
}

/// Reads, smooths and extracts one match directory.
pub fn ingest_match(dir: &Path, cfg: &IngestConfig) -> Result<Extraction> {
    cfg.validate()?;
    let input = read_match_dir(dir)?;
    let smoothed = smooth_tracking(&input.frames, cfg.smoothing_window, input.meta.frame_rate)?;
    extract_passes(&input, &smoothed, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(id: u64, period: u8, t: f64, players: &[(&str, f64, f64)]) -> TrackingFrame {
        TrackingFrame {
            frame_id: id,
            period,
            t,
            players: players
                .iter()
                .map(|(p, x, y)| (PlayerId::from(*p), Point2D::new(*x, *y)))
                .collect(),
            ball: None,
        }
    }

    fn meta() -> MatchMeta {
        let mut roster = BTreeMap::new();
        for (id, team, role) in [
            ("h1", "H", Role::Goalkeeper),
            ("h2", "H", Role::Outfield),
            ("h3", "H", Role::Outfield),
            ("a1", "A", Role::Goalkeeper),
            ("a2", "A", Role::Outfield),
            ("a3", "A", Role::Outfield),
        ] {
            roster.insert(
                PlayerId::from(id),
                RosterEntry {
                    team_id: team.into(),
                    role,
                    jersey: None,
                },
            );
        }
        MatchMeta {
            match_id: Some("m1".into()),
            pitch: Pitch::default(),
            frame_rate: 10.0,
            home_team_id: "H".into(),
            away_team_id: "A".into(),
            home_attacks_positive_x_first: true,
            roster,
        }
    }

    #[test]
    fn smoothing_window_one_is_identity() {
        let frames: Vec<_> = (0..5)
            .map(|i| frame(i, 1, i as f64 * 0.1, &[("h2", i as f64, 2.0 * i as f64)]))
            .collect();
        assert_eq!(smooth_tracking(&frames, 1, 10.0).unwrap(), frames);
        assert!(smooth_tracking(&frames, 4, 10.0).is_err());
        assert!(smooth_tracking(&[], 7, 10.0).unwrap().is_empty());
    }

    #[test]
    fn smoothing_middle_frame_mean() {
        let frames = vec![
            frame(0, 1, 0.0, &[("h2", 0.0, 0.0)]),
            frame(1, 1, 0.1, &[("h2", 3.0, 0.0)]),
            frame(2, 1, 0.2, &[("h2", 6.0, 0.0)]),
        ];
        let s = smooth_tracking(&frames, 3, 10.0).unwrap();
        assert_eq!(s[1].players[&PlayerId::from("h2")], Point2D::new(3.0, 0.0));
        // Edges shrink to a window of one.
        assert_eq!(s[0].players[&PlayerId::from("h2")], Point2D::new(0.0, 0.0));
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].t, 0.2);
    }

    #[test]
    fn smoothing_constant_is_unchanged_and_respects_gaps() {
        let mut frames: Vec<_> = (0..9)
            .map(|i| frame(i, 1, i as f64 * 0.1, &[("h2", 4.0, 9.0)]))
            .collect();
        let s = smooth_tracking(&frames, 5, 10.0).unwrap();
        for f in &s {
            let p = f.players[&PlayerId::from("h2")];
            assert!((p.x - 4.0).abs() < 1e-12 && (p.y - 9.0).abs() < 1e-12);
        }
        // A jump after a tracking gap must not leak backwards.
        for (k, f) in frames.iter_mut().enumerate().skip(5) {
            f.t = 10.0 + k as f64 * 0.1;
            f.players.insert("h2".into(), Point2D::new(50.0, 50.0));
        }
        let s = smooth_tracking(&frames, 5, 10.0).unwrap();
        assert_eq!(s[4].players[&PlayerId::from("h2")], Point2D::new(4.0, 9.0));
        assert_eq!(s[5].players[&PlayerId::from("h2")], Point2D::new(50.0, 50.0));
    }

    #[test]
    fn sync_rules() {
        let frames = vec![
            frame(0, 1, 10.0, &[]),
            frame(1, 1, 10.033, &[]),
            frame(2, 1, 10.066, &[]),
            frame(3, 2, 0.0, &[]),
        ];
        assert_eq!(sync_event_to_frame(1, 10.033, &frames, 0.5), Ok(1));
        let tie = vec![frame(0, 1, 1.0, &[]), frame(1, 1, 1.5, &[])];
        assert_eq!(sync_event_to_frame(1, 1.25, &tie, 0.5), Ok(0));
        assert_eq!(sync_event_to_frame(1, 10.02, &frames, 0.5), Ok(1));
        assert_eq!(sync_event_to_frame(2, 0.1, &frames, 0.5), Ok(3));
        assert!(matches!(
            sync_event_to_frame(1, 11.0, &frames, 0.5),
            Err(SyncFailure::TooFar { .. })
        ));
        assert_eq!(sync_event_to_frame(3, 1.0, &frames, 0.5), Err(SyncFailure::NoFrames));
    }

    #[test]
    fn defending_team_rules() {
        let m = meta();
        assert_eq!(defending_team(&"H".into(), &m).unwrap(), TeamId::from("A"));
        assert_eq!(defending_team(&"A".into(), &m).unwrap(), TeamId::from("H"));
        assert!(matches!(defending_team(&"X".into(), &m), Err(Error::UnknownTeam(_))));
    }

    #[test]
    fn orientation_flips_by_period_and_team() {
        let m = meta();
        let p = Point2D::new(80.0, 10.0);
        assert_eq!(m.to_canonical(&"H".into(), 1, p).unwrap(), Point2D::new(10.0, 80.0));
        assert_eq!(m.to_canonical(&"A".into(), 1, p).unwrap(), Point2D::new(58.0, 25.0));
        assert_eq!(m.to_canonical(&"H".into(), 2, p).unwrap(), Point2D::new(58.0, 25.0));
        for team in ["H", "A"] {
            for period in [1, 2] {
                let c = m.to_canonical(&team.into(), period, p).unwrap();
                assert_eq!(m.to_provider(&team.into(), period, c).unwrap(), p);
            }
        }
    }

    fn pass_event(id: &str, t: f64, set_piece: Option<SetPiece>) -> RawEvent {
        RawEvent {
            event_id: id.into(),
            kind: EventKind::Pass,
            period: 1,
            t,
            actor_id: Some("h2".into()),
            team_id: "H".into(),
            receiver_id: Some("h3".into()),
            start: Some(Point2D::new(30.0, 34.0)),
            end: Some(Point2D::new(60.0, 34.0)),
            success: true,
            set_piece,
            goal: false,
        }
    }

    fn input(events: Vec<RawEvent>) -> MatchInput {
        let players = [("h2", 30.0, 34.0), ("a1", 100.0, 34.0), ("a2", 50.0, 30.0), ("a3", 70.0, 40.0)];
        MatchInput {
            match_id: "m1".into(),
            meta: meta(),
            events,
            frames: (0..20).map(|i| frame(i, 1, i as f64 * 0.1, &players)).collect(),
        }
    }

    #[test]
    fn extraction_excludes_set_pieces_and_goalkeeper() {
        let inp = input(vec![
            pass_event("e1", 0.5, None),
            pass_event("e2", 1.0, Some(SetPiece::Corner)),
            pass_event("e3", 1.2, Some(SetPiece::GoalKick)),
        ]);
        let ex = extract_passes(&inp, &inp.frames, &IngestConfig::default()).unwrap();
        assert_eq!(ex.passes.len(), 1);
        let p = &ex.passes[0];
        assert_eq!(p.snapshot.len(), 2);
        assert_eq!(p.start, Point2D::new(34.0, 30.0));
        assert_eq!(p.end, Point2D::new(34.0, 60.0));
        assert_eq!(p.snapshot.frame_id(), 5);
        assert_eq!(ex.report.dropped["set_piece"], 2);

        let cfg = IngestConfig {
            include_goal_kicks: true,
            ..Default::default()
        };
        let ex = extract_passes(&inp, &inp.frames, &cfg).unwrap();
        assert_eq!(ex.passes.len(), 2);
    }

    #[test]
    fn extraction_drop_reasons() {
        let mut bad_receiver = pass_event("e1", 0.5, None);
        bad_receiver.receiver_id = Some("a2".into());
        let mut unsuccessful = pass_event("e2", 0.6, None);
        unsuccessful.success = false;
        let late = pass_event("e3", 5.0, None);
        let mut far_end = pass_event("e4", 0.7, None);
        far_end.end = Some(Point2D::new(60.0, 71.5));
        let inp = input(vec![bad_receiver, unsuccessful, late, far_end]);
        let ex = extract_passes(&inp, &inp.frames, &IngestConfig::default()).unwrap();
        assert!(ex.passes.is_empty());
        let keys: Vec<_> = ex.report.drops.iter().map(|d| d.reason.key()).collect();
        assert_eq!(keys, vec!["unresolvable_receiver", "unsuccessful", "sync_failure", "inadmissible"]);

        let mut unknown = pass_event("e5", 0.5, None);
        unknown.team_id = "X".into();
        let inp = input(vec![unknown]);
        assert!(matches!(
            extract_passes(&inp, &inp.frames, &IngestConfig::default()),
            Err(Error::UnknownTeam(_))
        ));
    }

    #[test]
    fn extraction_empty_defense() {
        let mut inp = input(vec![pass_event("e1", 0.5, None)]);
        for f in &mut inp.frames {
            f.players.retain(|id, _| id.as_str().starts_with('h') || id.as_str() == "a1");
        }
        let ex = extract_passes(&inp, &inp.frames, &IngestConfig::default()).unwrap();
        assert_eq!(ex.report.dropped["empty_defense"], 1);
    }

    #[test]
    fn raw_event_parsing() {
        let e: RawEvent = serde_json::from_str(
            r#"{"event_id":"e9","type":"pass","period":2,"t":1.5,"team_id":"H","actor_id":"h2",
                "start":[1,2],"end":[3,4],"set_piece":"throw_in","extra":"ignored"}"#,
        )
        .unwrap();
        assert_eq!(e.set_piece, Some(SetPiece::ThrowIn));
        assert!(e.success);
        let other: RawEvent =
            serde_json::from_str(r#"{"event_id":"x","type":"dribble","period":1,"t":0,"team_id":"H"}"#).unwrap();
        assert_eq!(other.kind, EventKind::Other);
        assert!(serde_json::from_str::<RawEvent>(r#"{"event_id":"x","period":1,"t":0,"team_id":"H"}"#).is_err());
    }

    #[test]
    fn meta_requires_one_keeper_per_team() {
        let mut m = meta();
        assert!(m.validate().is_ok());
        m.roster.get_mut(&PlayerId::from("a2")).unwrap().role = Role::Goalkeeper;
        assert!(m.validate().is_err());
    }
}
