//! Deterministic synthetic matches with known ground truth.
//!
//! Every generated open-play pass is built around a defensive block and
//! accepted only when its metrics fall inside the signature box of its
//! intended archetype. The expected metrics are computed here by a
//! separate implementation and written to `ground_truth.jsonl`, so the
//! generator doubles as an oracle for the metric pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    EventKind, MatchMeta, RawEvent, Role, RosterEntry, SetPiece, TrackingFrame, EVENTS_FILE, META_FILE,
    TRACKING_FILE,
};
use crate::model::{Archetype, MatchId, Pitch, PlayerId, Point2D, TeamId};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";
pub const SCENARIO_FILE: &str = "scenario.json";

/// Frames emitted around each open-play pass; the pass sits on the middle one.
const BLOCK_FRAMES: u64 = 15;
const MAX_ATTEMPTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseTemplate {
    FlatBackFour,
    #[serde(rename = "two_lines_4_4")]
    TwoLines44,
    CompactBlock,
    StretchedBlock,
}

impl DefenseTemplate {
    /// Outfield offsets from the block center, back line first. Positive
    /// `dy` is deeper, towards the defenders' own goal.
    fn offsets(self) -> [(f64, f64); 10] {
        match self {
            DefenseTemplate::FlatBackFour => [
                (-18.0, 12.0), (-6.0, 12.0), (6.0, 12.0), (18.0, 12.0),
                (-16.0, 0.0), (-5.0, 0.0), (5.0, 0.0), (16.0, 0.0),
                (-8.0, -12.0), (8.0, -12.0),
            ],
            DefenseTemplate::TwoLines44 => [
                (-18.0, 8.0), (-6.0, 8.0), (6.0, 8.0), (18.0, 8.0),
                (-17.0, -2.0), (-6.0, -2.0), (6.0, -2.0), (17.0, -2.0),
                (-7.0, -14.0), (7.0, -14.0),
            ],
            DefenseTemplate::CompactBlock => [
                (-14.0, 6.0), (-5.0, 6.0), (5.0, 6.0), (14.0, 6.0),
                (-16.0, -2.0), (-8.0, -2.0), (0.0, -2.0), (8.0, -2.0), (16.0, -2.0),
                (0.0, -10.0),
            ],
            DefenseTemplate::StretchedBlock => [
                (-20.0, 18.0), (-7.0, 18.0), (7.0, 18.0), (20.0, 18.0),
                (-14.0, 2.0), (0.0, 2.0), (14.0, 2.0),
                (-16.0, -16.0), (0.0, -16.0), (16.0, -16.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub n_matches: usize,
    /// Open-play passes per match.
    pub passes_per_match: usize,
    pub defense_template: DefenseTemplate,
    /// Share of each intended archetype among open-play passes.
    pub pass_mix: BTreeMap<Archetype, f64>,
    /// Per-frame tracking jitter, meters.
    pub noise_sd: f64,
    /// Outfield defenders tracked per snapshot.
    pub defenders: usize,
    pub n_teams: usize,
    pub sigma: f64,
    pub rho_floor: f64,
    pub pitch: Pitch,
    pub frame_rate: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            n_matches: 1,
            passes_per_match: 200,
            defense_template: DefenseTemplate::FlatBackFour,
            pass_mix: Archetype::ALL.iter().map(|&a| (a, 0.25)).collect(),
            noise_sd: 0.0,
            defenders: 10,
            n_teams: 8,
            sigma: 10.0,
            rho_floor: 1e-6,
            pitch: Pitch::default(),
            frame_rate: crate::ingest::DEFAULT_FRAME_RATE,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(crate::error::ConfigError::invalid("scenario", m)));
        if self.n_matches == 0 || self.passes_per_match == 0 {
            return bad("n_matches and passes_per_match must be >= 1");
        }
        if self.n_teams < 2 {
            return bad("n_teams must be >= 2");
        }
        if self.pass_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("pass_mix proportions must be >= 0");
        }
        let total: f64 = self.pass_mix.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad("pass_mix must sum to 1");
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd must be >= 0");
        }
        if !(self.sigma > 0.0 && self.rho_floor > 0.0 && self.frame_rate > 0.0) {
            return bad("sigma, rho_floor and frame_rate must be > 0");
        }
        self.pitch.validate()?;
        if self.defenders > 10 {
            return bad("at most 10 outfield defenders");
        }
        let wants = |a: Archetype| self.pass_mix.get(&a).copied().unwrap_or(0.0) > 0.0;
        if self.defenders == 0 {
            return Err(Error::Infeasible("no defenders to build passes around".into()));
        }
        if wants(Archetype::LineBreaking) && self.defenders < 3 {
            return Err(Error::Infeasible(format!(
                "line-breaking intent needs at least 3 defenders, scenario has {}",
                self.defenders
            )));
        }
        Ok(())
    }
}

/// Expected metrics of one generated pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub pass_id: String,
    pub event_id: String,
    pub team_id: TeamId,
    pub intent: Archetype,
    pub lbs: u32,
    pub sgm: f64,
    pub sdi: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticMatch {
    pub match_id: MatchId,
    pub meta: MatchMeta,
    pub events: Vec<RawEvent>,
    pub frames: Vec<TrackingFrame>,
    pub truth: Vec<TruthRecord>,
}

/// Closed-form metrics written independently of [`crate::metrics`].
mod oracle {
    use crate::model::Point2D;

    pub fn bypassed(from_y: f64, to_y: f64, defenders: &[Point2D]) -> u32 {
        let mut n = 0;
        for d in defenders {
            if d.y > from_y && d.y <= to_y {
                n += 1;
            }
        }
        n
    }

    fn space(at: Point2D, defenders: &[Point2D], sigma: f64, floor: f64) -> f64 {
        let mut rho = 0.0;
        for d in defenders {
            let r = (at.x - d.x).hypot(at.y - d.y);
            rho += (-0.5 * (r / sigma).powi(2)).exp();
        }
        1.0 / if rho < floor { floor } else { rho }
    }

    pub fn space_gain(from: Point2D, to: Point2D, defenders: &[Point2D], sigma: f64, floor: f64) -> f64 {
        space(to, defenders, sigma, floor) - space(from, defenders, sigma, floor)
    }

    pub fn disruption(from: Point2D, to: Point2D, defenders: &[Point2D]) -> f64 {
        let n = defenders.len() as f64;
        let cx = defenders.iter().map(|d| d.x).sum::<f64>() / n;
        let cy = defenders.iter().map(|d| d.y).sum::<f64>() / n;
        (to.x - cx).hypot(to.y - cy) - (from.x - cx).hypot(from.y - cy)
    }
}

struct Block {
    defenders: Vec<Point2D>,
    center: Point2D,
    front_y: f64,
}

impl Block {
    fn new(template: DefenseTemplate, n: usize, center: Point2D) -> Self {
        let defenders: Vec<Point2D> = template.offsets()[..n]
            .iter()
            .map(|(dx, dy)| Point2D::new(center.x + dx, center.y + dy))
            .collect();
        let front_y = defenders.iter().map(|d| d.y).fold(f64::INFINITY, f64::min);
        Self {
            defenders,
            center,
            front_y,
        }
    }

    fn centroid(&self) -> Point2D {
        let n = self.defenders.len() as f64;
        Point2D::new(
            self.defenders.iter().map(|d| d.x).sum::<f64>() / n,
            self.defenders.iter().map(|d| d.y).sum::<f64>() / n,
        )
    }
}

fn u(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn propose(intent: Archetype, b: &Block, rng: &mut ChaCha8Rng) -> Option<(Point2D, Point2D)> {
    let c = b.centroid();
    match intent {
        Archetype::Circulatory => {
            let s = Point2D::new(c.x + u(rng, -22.0, 22.0), b.front_y - u(rng, 6.0, 16.0));
            let e = Point2D::new(s.x + sign(rng) * u(rng, 5.0, 14.0), s.y + u(rng, -6.0, 2.0));
            Some((s, e))
        }
        Archetype::Destabilising => {
            let s = Point2D::new(c.x + u(rng, -6.0, 6.0), c.y + u(rng, -4.0, 4.0));
            let wide: Vec<&Point2D> = b
                .defenders
                .iter()
                .filter(|d| (d.x - c.x).abs() >= 10.0 && d.y < s.y - 2.0)
                .collect();
            if wide.is_empty() {
                return None;
            }
            let d = wide[rng.random_range(0..wide.len())];
            let e = Point2D::new(d.x + u(rng, -3.0, 3.0), d.y - u(rng, 1.0, 4.0));
            Some((s, e))
        }
        Archetype::LineBreaking => {
            let back_y = b.defenders.iter().map(|d| d.y).fold(f64::NEG_INFINITY, f64::max);
            let s = Point2D::new(c.x + u(rng, -12.0, 12.0), b.front_y - u(rng, 2.0, 10.0));
            let e = Point2D::new(c.x + u(rng, -10.0, 10.0), u(rng, c.y, back_y + 6.0));
            Some((s, e))
        }
        Archetype::SpaceExpanding => {
            let forward: Vec<&Point2D> = b.defenders.iter().filter(|d| d.y <= b.center.y + 1.0).collect();
            let d = forward[rng.random_range(0..forward.len())];
            let s = Point2D::new(d.x + u(rng, -2.0, 2.0), d.y - u(rng, 1.5, 3.5));
            let e = Point2D::new(s.x + sign(rng) * u(rng, 10.0, 22.0), s.y - u(rng, 2.0, 12.0));
            Some((s, e))
        }
    }
}

fn matches_intent(intent: Archetype, lbs: u32, sgm: f64, sdi: f64) -> bool {
    match intent {
        Archetype::Circulatory => lbs == 0 && sdi.abs() < 5.0 && sgm.abs() < 0.5,
        Archetype::Destabilising => lbs == 0 && sdi >= 9.0 && sgm.abs() < 0.6,
        Archetype::LineBreaking => (3..=6).contains(&lbs) && sgm.abs() < 0.6 && sdi < 3.0,
        Archetype::SpaceExpanding => lbs == 0 && (1.2..=3.5).contains(&sgm) && sdi.abs() < 15.0,
    }
}

struct PlannedPass {
    start: Point2D,
    end: Point2D,
    defenders: Vec<Point2D>,
    intent: Archetype,
    lbs: u32,
    sgm: f64,
    sdi: f64,
}

fn plan_pass(spec: &ScenarioSpec, intent: Archetype, rng: &mut ChaCha8Rng) -> Result<PlannedPass> {
    let pitch = &spec.pitch;
    for _ in 0..MAX_ATTEMPTS {
        let center = Point2D::new(
            u(rng, pitch.width / 2.0 - 8.0, pitch.width / 2.0 + 8.0),
            u(rng, pitch.length * 0.30, pitch.length * 0.72),
        );
        let block = Block::new(spec.defense_template, spec.defenders, center);
        let Some((s, e)) = propose(intent, &block, rng) else {
            continue;
        };
        let inside = |p: &Point2D| p.x >= 0.5 && p.x <= pitch.width - 0.5 && p.y >= 0.5 && p.y <= pitch.length - 0.5;
        if !(inside(&s) && inside(&e) && block.defenders.iter().all(inside)) {
            continue;
        }
        let lbs = oracle::bypassed(s.y, e.y, &block.defenders);
        let sgm = oracle::space_gain(s, e, &block.defenders, spec.sigma, spec.rho_floor);
        let sdi = oracle::disruption(s, e, &block.defenders);
        if matches_intent(intent, lbs, sgm, sdi) {
            return Ok(PlannedPass {
                start: s,
                end: e,
                defenders: block.defenders,
                intent,
                lbs,
                sgm,
                sdi,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "could not place a {intent} pass within {MAX_ATTEMPTS} attempts"
    )))
}

fn sample_intent(mix: &[(Archetype, f64)], rng: &mut ChaCha8Rng) -> Archetype {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for &(a, w) in mix {
        acc += w;
        if r < acc {
            return a;
        }
    }
    mix.iter().rev().find(|(_, w)| *w > 0.0).map(|(a, _)| *a).expect("non-empty mix")
}

fn player(team: &TeamId, k: usize) -> PlayerId {
    PlayerId(format!("{team}_{k:02}"))
}

/// Per-match state for building events and frames in provider coordinates.
struct MatchBuilder<'a> {
    spec: &'a ScenarioSpec,
    meta: MatchMeta,
    match_id: MatchId,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    events: Vec<RawEvent>,
    frames: Vec<TrackingFrame>,
    truth: Vec<TruthRecord>,
    next_frame_id: u64,
    /// Frame index within the current period; time is `cursor / frame_rate`.
    cursor: u64,
    period: u8,
    event_seq: usize,
}

impl MatchBuilder<'_> {
    fn time(&self, frame: u64) -> f64 {
        frame as f64 / self.spec.frame_rate
    }

    fn next_event_id(&mut self) -> String {
        self.event_seq += 1;
        format!("e{:05}", self.event_seq)
    }

    fn provider(&self, team: &TeamId, p: Point2D) -> Point2D {
        self.meta
            .to_provider(team, self.period, p)
            .expect("builder only uses rostered teams")
    }

    fn other(&self, team: &TeamId) -> TeamId {
        if *team == self.meta.home_team_id {
            self.meta.away_team_id.clone()
        } else {
            self.meta.home_team_id.clone()
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_event(
        &mut self,
        kind: EventKind,
        team: &TeamId,
        actor: PlayerId,
        receiver: Option<PlayerId>,
        start: Option<Point2D>,
        end: Option<Point2D>,
        success: bool,
        set_piece: Option<SetPiece>,
        goal: bool,
        at_frame: u64,
    ) -> String {
        let event_id = self.next_event_id();
        let start = start.map(|p| self.provider(team, p));
        let end = end.map(|p| self.provider(team, p));
        self.events.push(RawEvent {
            event_id: event_id.clone(),
            kind,
            period: self.period,
            t: self.time(at_frame),
            actor_id: Some(actor),
            team_id: team.clone(),
            receiver_id: receiver,
            start,
            end,
            success,
            set_piece,
            goal,
        });
        event_id
    }

    fn open_play_pass(&mut self, team: &TeamId, mix: &[(Archetype, f64)]) -> Result<()> {
        let intent = sample_intent(mix, &mut self.rng);
        let plan = plan_pass(self.spec, intent, &mut self.rng)?;
        let defending = self.other(team);
        let passer_k = self.rng.random_range(2..=11);
        let receiver_k = (passer_k - 2 + self.rng.random_range(1..10)) % 10 + 2;
        let passer = player(team, passer_k);
        let receiver = player(team, receiver_k);

        let block_start = self.cursor;
        let pass_frame = block_start + BLOCK_FRAMES / 2;
        let pitch = self.spec.pitch;
        // Canonical positions of everyone for this block, in the attacking frame.
        let mut base: BTreeMap<PlayerId, Point2D> = BTreeMap::new();
        for (k, d) in plan.defenders.iter().enumerate() {
            base.insert(player(&defending, k + 2), *d);
        }
        base.insert(player(&defending, 1), Point2D::new(pitch.width / 2.0, pitch.length - 1.5));
        base.insert(player(team, 1), Point2D::new(pitch.width / 2.0, 4.0));
        for k in 2..=11 {
            let pos = if k == passer_k {
                plan.start
            } else if k == receiver_k {
                plan.end
            } else {
                Point2D::new(
                    u(&mut self.rng, 2.0, pitch.width - 2.0),
                    u(&mut self.rng, 2.0, pitch.length - 2.0),
                )
            };
            base.insert(player(team, k), pos);
        }
        for f in 0..BLOCK_FRAMES {
            let players = base
                .iter()
                .map(|(id, p)| {
                    let mut q = self.provider(team, *p);
                    if let Some(noise) = &self.noise {
                        q = q.translate(noise.sample(&mut self.rng), noise.sample(&mut self.rng));
                    }
                    (id.clone(), q)
                })
                .collect();
            self.frames.push(TrackingFrame {
                frame_id: self.next_frame_id,
                period: self.period,
                t: self.time(block_start + f),
                players,
                ball: Some(self.provider(team, plan.start)),
            });
            self.next_frame_id += 1;
        }
        let event_id = self.push_event(
            EventKind::Pass,
            team,
            passer,
            Some(receiver),
            Some(plan.start),
            Some(plan.end),
            true,
            None,
            false,
            pass_frame,
        );
        self.truth.push(TruthRecord {
            pass_id: format!("{}:{}", self.match_id, event_id),
            event_id,
            team_id: team.clone(),
            intent: plan.intent,
            lbs: plan.lbs,
            sgm: plan.sgm,
            sdi: plan.sdi,
        });
        // Leave a tracking gap so blocks are smoothed independently.
        self.cursor = block_start + BLOCK_FRAMES + self.rng.random_range(20..90);
        Ok(())
    }

    fn restart(&mut self, team: &TeamId) {
        let pitch = self.spec.pitch;
        let kinds = [SetPiece::ThrowIn, SetPiece::FreeKick, SetPiece::Corner, SetPiece::GoalKick];
        let kind = kinds[self.rng.random_range(0..kinds.len())];
        let start = match kind {
            SetPiece::ThrowIn => Point2D::new(0.0, u(&mut self.rng, 10.0, pitch.length - 10.0)),
            SetPiece::Corner => Point2D::new(0.0, pitch.length),
            SetPiece::GoalKick => Point2D::new(pitch.width / 2.0, 5.5),
            _ => Point2D::new(u(&mut self.rng, 5.0, pitch.width - 5.0), u(&mut self.rng, 20.0, 80.0)),
        };
        let end = Point2D::new(
            u(&mut self.rng, 5.0, pitch.width - 5.0),
            (start.y + u(&mut self.rng, -10.0, 25.0)).clamp(1.0, pitch.length - 1.0),
        );
        let (a, r) = (player(team, 4), player(team, 6));
        let at = self.cursor;
        self.push_event(EventKind::Pass, team, a, Some(r), Some(start), Some(end), true, Some(kind), false, at);
        self.cursor += self.rng.random_range(30..90);
    }

    fn end_possession(&mut self, team: &TeamId) {
        let pitch = self.spec.pitch;
        let defending = self.other(team);
        let roll: f64 = self.rng.random();
        let at = self.cursor;
        if roll < 0.15 {
            let shot_from = Point2D::new(u(&mut self.rng, 20.0, 48.0), u(&mut self.rng, 84.0, 100.0));
            let goal = self.rng.random::<f64>() < 0.12;
            let shooter = player(team, 10);
            self.push_event(
                EventKind::Shot,
                team,
                shooter,
                None,
                Some(shot_from),
                Some(Point2D::new(pitch.width / 2.0, pitch.length)),
                goal,
                None,
                goal,
                at,
            );
            self.cursor += self.rng.random_range(30..120);
            let at = self.cursor;
            let restart = if goal { Some(SetPiece::KickOff) } else { Some(SetPiece::GoalKick) };
            let (start, end) = if goal {
                (Point2D::new(pitch.width / 2.0, pitch.length / 2.0), Point2D::new(pitch.width / 2.0, pitch.length / 2.0 - 8.0))
            } else {
                (Point2D::new(pitch.width / 2.0, 5.5), Point2D::new(10.0, 30.0))
            };
            let (a, r) = (player(&defending, if goal { 9 } else { 1 }), player(&defending, 5));
            self.push_event(EventKind::Pass, &defending, a, Some(r), Some(start), Some(end), true, restart, false, at);
        } else {
            if roll < 0.35 {
                let start = Point2D::new(u(&mut self.rng, 5.0, 63.0), u(&mut self.rng, 20.0, 90.0));
                let end = Point2D::new(u(&mut self.rng, 5.0, 63.0), (start.y + 15.0).min(pitch.length - 1.0));
                let (a, r) = (player(team, 7), player(team, 9));
                self.push_event(EventKind::Pass, team, a, Some(r), Some(start), Some(end), false, None, false, at);
                self.cursor += self.rng.random_range(10..40);
            }
            let at = self.cursor;
            let loc = Point2D::new(u(&mut self.rng, 5.0, 63.0), u(&mut self.rng, 15.0, 90.0));
            let kind = if self.rng.random::<bool>() {
                EventKind::Interception
            } else {
                EventKind::Recovery
            };
            let actor = player(&defending, self.rng.random_range(2..=11));
            self.push_event(kind, &defending, actor, None, Some(loc), None, true, None, false, at);
        }
        self.cursor += self.rng.random_range(30..90);
    }
}

/// Builds match `index` of the scenario in memory.
pub fn generate_match(spec: &ScenarioSpec, index: usize) -> Result<SyntheticMatch> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let home = TeamId(format!("T{:02}", (2 * index) % spec.n_teams));
    let mut away = TeamId(format!("T{:02}", (2 * index + 1) % spec.n_teams));
    if away == home {
        away = TeamId(format!("T{:02}", (2 * index + 1 + 1) % spec.n_teams));
    }
    let mut roster = BTreeMap::new();
    for team in [&home, &away] {
        for k in 1..=11 {
            roster.insert(
                player(team, k),
                RosterEntry {
                    team_id: team.clone(),
                    role: if k == 1 { Role::Goalkeeper } else { Role::Outfield },
                    jersey: Some(k as u32),
                },
            );
        }
    }
    let match_id = MatchId(format!("synth_{index:03}"));
    let meta = MatchMeta {
        match_id: Some(match_id.clone()),
        pitch: spec.pitch,
        frame_rate: spec.frame_rate,
        home_team_id: home.clone(),
        away_team_id: away.clone(),
        home_attacks_positive_x_first: rng.random::<bool>(),
        roster,
    };
    let noise = (spec.noise_sd > 0.0).then(|| Normal::new(0.0, spec.noise_sd).expect("validated sd"));
    let mix: Vec<(Archetype, f64)> = spec.pass_mix.iter().map(|(a, w)| (*a, *w)).collect();

    let mut b = MatchBuilder {
        spec,
        meta,
        match_id: match_id.clone(),
        rng,
        noise,
        events: Vec::new(),
        frames: Vec::new(),
        truth: Vec::new(),
        next_frame_id: 0,
        cursor: 0,
        period: 1,
        event_seq: 0,
    };

    let first_half = spec.passes_per_match.div_ceil(2);
    let mut team = home.clone();
    let mut emitted = 0;
    while emitted < spec.passes_per_match {
        if emitted == first_half && b.period == 1 {
            b.period = 2;
            b.cursor = 0;
        }
        if b.rng.random::<f64>() < 0.15 {
            b.restart(&team);
        }
        let len = b.rng.random_range(1..=5usize);
        for _ in 0..len {
            if emitted == spec.passes_per_match || (emitted == first_half && b.period == 1) {
                break;
            }
            b.open_play_pass(&team, &mix)?;
            emitted += 1;
        }
        b.end_possession(&team);
        team = b.other(&team);
    }

    Ok(SyntheticMatch {
        match_id,
        meta: b.meta,
        events: b.events,
        frames: b.frames,
        truth: b.truth,
    })
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl SyntheticMatch {
    /// Writes the canonical-format files plus the ground-truth sidecar.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta_path = dir.join(META_FILE);
        let text = serde_json::to_string_pretty(&self.meta)? + "\n";
        fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
        write_jsonl(&dir.join(EVENTS_FILE), &self.events)?;
        write_jsonl(&dir.join(TRACKING_FILE), &self.frames)?;
        write_jsonl(&dir.join(GROUND_TRUTH_FILE), &self.truth)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub matches: usize,
    pub open_play_passes: usize,
}

/// Generates every match of `spec` under `out_dir`, one directory each.
pub fn generate(spec: &ScenarioSpec, out_dir: &Path) -> Result<ScenarioSummary> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scenario_path = out_dir.join(SCENARIO_FILE);
    let text = serde_json::to_string_pretty(spec)? + "\n";
    fs::write(&scenario_path, text).map_err(|e| Error::io(&scenario_path, e))?;
    let mut passes = 0;
    for i in 0..spec.n_matches {
        let m = generate_match(spec, i)?;
        passes += m.truth.len();
        m.write(&out_dir.join(m.match_id.as_str()))?;
    }
    Ok(ScenarioSummary {
        matches: spec.n_matches,
        open_play_passes: passes,
    })
}

/// Reads a ground-truth sidecar.
pub fn read_ground_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only(intent: Archetype) -> ScenarioSpec {
        ScenarioSpec {
            pass_mix: [(intent, 1.0)].into_iter().collect(),
            passes_per_match: 120,
            ..Default::default()
        }
    }

    #[test]
    fn circulatory_only_has_no_bypass() {
        let m = generate_match(&only(Archetype::Circulatory), 0).unwrap();
        assert_eq!(m.truth.len(), 120);
        for t in &m.truth {
            assert_eq!(t.lbs, 0);
            assert!(t.sdi.abs() < 5.0);
        }
    }

    #[test]
    fn every_intent_is_feasible_on_every_template() {
        for template in [
            DefenseTemplate::FlatBackFour,
            DefenseTemplate::TwoLines44,
            DefenseTemplate::CompactBlock,
            DefenseTemplate::StretchedBlock,
        ] {
            let spec = ScenarioSpec {
                defense_template: template,
                passes_per_match: 60,
                ..Default::default()
            };
            let m = generate_match(&spec, 3).unwrap();
            for t in &m.truth {
                assert!(matches_intent(t.intent, t.lbs, t.sgm, t.sdi));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ScenarioSpec {
            passes_per_match: 40,
            noise_sd: 0.1,
            ..Default::default()
        };
        let a = generate_match(&spec, 1).unwrap();
        let b = generate_match(&spec, 1).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.truth, b.truth);
        let c = generate_match(&ScenarioSpec { seed: 7, ..spec }, 1).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn infeasible_specs_rejected() {
        let spec = ScenarioSpec {
            defenders: 2,
            ..only(Archetype::LineBreaking)
        };
        assert!(matches!(spec.validate(), Err(Error::Infeasible(_))));
        let spec = ScenarioSpec {
            defenders: 0,
            ..Default::default()
        };
        assert!(matches!(spec.validate(), Err(Error::Infeasible(_))));
        let mut bad_mix = ScenarioSpec::default();
        bad_mix.pass_mix.insert(Archetype::Circulatory, 0.5);
        assert!(matches!(bad_mix.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn events_sorted_and_periods_split() {
        let m = generate_match(&ScenarioSpec { passes_per_match: 50, ..Default::default() }, 0).unwrap();
        for w in m.events.windows(2) {
            assert!((w[0].period, w[0].t) < (w[1].period, w[1].t));
        }
        assert!(m.events.iter().any(|e| e.period == 2));
        for w in m.frames.windows(2) {
            assert!(w[0].frame_id < w[1].frame_id);
        }
    }
}
