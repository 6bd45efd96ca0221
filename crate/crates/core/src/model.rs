//! Canonical domain types shared by every pipeline stage.
//!
//! All positions live in the canonical attacking frame: `x` runs across the
//! pitch width and `y` runs along the attacking direction of the team in
//! possession, with that team's own goal line at `y = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_newtype!(
    /// Player identifier as it appears in the roster.
    PlayerId
);
id_newtype!(
    /// Team identifier.
    TeamId
);
id_newtype!(
    /// Match identifier, usually the match directory name.
    MatchId
);

/// Default tolerance, in meters, for positions slightly outside the pitch.
pub const DEFAULT_OOB_TOLERANCE: f64 = 2.0;

/// Pitch geometry in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pitch {
    pub length: f64,
    pub width: f64,
    #[serde(default = "Pitch::default_box_depth")]
    pub box_depth: f64,
    #[serde(default = "Pitch::default_box_width")]
    pub box_width: f64,
}

impl Default for Pitch {
    fn default() -> Self {
        Self {
            length: 105.0,
            width: 68.0,
            box_depth: Self::default_box_depth(),
            box_width: Self::default_box_width(),
        }
    }
}

impl Pitch {
    fn default_box_depth() -> f64 {
        16.5
    }

    fn default_box_width() -> f64 {
        40.32
    }

    /// Builds a pitch with standard penalty-box dimensions.
    pub fn new(length: f64, width: f64) -> Result<Self, ConfigError> {
        let pitch = Self {
            length,
            width,
            ..Self::default()
        };
        pitch.validate()?;
        Ok(pitch)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [self.length, self.width, self.box_depth, self.box_width]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.length <= 0.0 || self.width <= 0.0 {
            return Err(ConfigError::invalid("pitch", "length and width must be positive"));
        }
        if self.box_depth <= 0.0
            || self.box_width <= 0.0
            || self.box_depth > self.length
            || self.box_width > self.width
        {
            return Err(ConfigError::invalid("pitch", "penalty box must fit inside the pitch"));
        }
        Ok(())
    }

    /// Distance from the own goal line to the start of the final third.
    pub fn final_third_line(&self) -> f64 {
        2.0 * self.length / 3.0
    }

    pub fn in_final_third(&self, p: Point2D) -> bool {
        p.y > self.final_third_line()
    }

    /// Whether `p` lies in the penalty box in front of the opponent's goal.
    pub fn in_box(&self, p: Point2D) -> bool {
        let half = self.box_width / 2.0;
        let cx = self.width / 2.0;
        p.y >= self.length - self.box_depth && p.y <= self.length && (p.x - cx).abs() <= half
    }

    pub fn contains(&self, p: Point2D, tolerance: f64) -> bool {
        p.x >= -tolerance
            && p.x <= self.width + tolerance
            && p.y >= -tolerance
            && p.y <= self.length + tolerance
    }
}

/// A position in the canonical frame. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point2D) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn translate(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl From<[f64; 2]> for Point2D {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2D> for [f64; 2] {
    fn from(p: Point2D) -> Self {
        [p.x, p.y]
    }
}

/// Positions of the defending team's outfield players at pass time.
///
/// The centroid is cached on construction. An empty snapshot has its
/// centroid at the origin; such passes are never admissible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "SnapshotWire", into = "SnapshotWire")]
pub struct DefensiveSnapshot {
    frame_id: u64,
    defenders: Vec<Point2D>,
    centroid: Point2D,
}

#[derive(Serialize, Deserialize)]
struct SnapshotWire {
    frame_id: u64,
    defenders: Vec<Point2D>,
}

impl From<SnapshotWire> for DefensiveSnapshot {
    fn from(w: SnapshotWire) -> Self {
        Self::new(w.frame_id, w.defenders)
    }
}

impl From<DefensiveSnapshot> for SnapshotWire {
    fn from(s: DefensiveSnapshot) -> Self {
        Self {
            frame_id: s.frame_id,
            defenders: s.defenders,
        }
    }
}

impl DefensiveSnapshot {
    pub fn new(frame_id: u64, defenders: Vec<Point2D>) -> Self {
        let centroid = if defenders.is_empty() {
            Point2D::default()
        } else {
            let n = defenders.len() as f64;
            let (sx, sy) = defenders
                .iter()
                .fold((0.0, 0.0), |(sx, sy), d| (sx + d.x, sy + d.y));
            Point2D::new(sx / n, sy / n)
        };
        Self {
            frame_id,
            defenders,
            centroid,
        }
    }

    pub fn frame_id(&self) -> u64 {
        self.frame_id
    }

    pub fn defenders(&self) -> &[Point2D] {
        &self.defenders
    }

    pub fn len(&self) -> usize {
        self.defenders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defenders.is_empty()
    }

    pub fn centroid(&self) -> Point2D {
        self.centroid
    }

    /// Shifts every defender by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(
            self.frame_id,
            self.defenders.iter().map(|d| d.translate(dx, dy)).collect(),
        )
    }

    /// Returns a copy with one more defender appended.
    pub fn with_defender(&self, d: Point2D) -> Self {
        let mut defenders = self.defenders.clone();
        defenders.push(d);
        Self::new(self.frame_id, defenders)
    }
}

/// One completed open-play pass with its defensive context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassEvent {
    pub pass_id: String,
    pub match_id: MatchId,
    pub team_id: TeamId,
    pub passer_id: PlayerId,
    pub receiver_id: PlayerId,
    pub period: u8,
    /// Seconds from the start of `period`.
    pub t: f64,
    pub start: Point2D,
    pub end: Point2D,
    pub snapshot: DefensiveSnapshot,
}

impl PassEvent {
    /// Zero-length passes still get metrics but are excluded from sign
    /// interpretation.
    pub fn is_degenerate(&self) -> bool {
        self.start == self.end
    }

    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }
}

/// The four structural pass archetypes, in canonical table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Archetype {
    Circulatory,
    Destabilising,
    LineBreaking,
    SpaceExpanding,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::Circulatory,
        Archetype::Destabilising,
        Archetype::LineBreaking,
        Archetype::SpaceExpanding,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Display name used in every table.
    pub fn name(self) -> &'static str {
        match self {
            Archetype::Circulatory => "Circulatory",
            Archetype::Destabilising => "Destabilising",
            Archetype::LineBreaking => "Line-breaking",
            Archetype::SpaceExpanding => "Space-expanding",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw structural metrics of one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawMetrics {
    /// Defenders bypassed along the attacking axis.
    pub lbs: u32,
    /// Space gain, in inverse-density units.
    pub sgm: f64,
    /// Change in ball distance to the defensive centroid, in meters.
    pub sdi: f64,
}

impl RawMetrics {
    pub fn as_array(&self) -> [f64; 3] {
        [f64::from(self.lbs), self.sgm, self.sdi]
    }
}

/// Raw and z-normalized metrics plus the combined tactical impact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralFeatures {
    pub lbs: u32,
    pub sgm: f64,
    pub sdi: f64,
    pub z_lbs: f64,
    pub z_sgm: f64,
    pub z_sdi: f64,
    pub tiv: f64,
}

impl StructuralFeatures {
    pub fn raw(&self) -> RawMetrics {
        RawMetrics {
            lbs: self.lbs,
            sgm: self.sgm,
            sdi: self.sdi,
        }
    }

    pub fn z(&self) -> [f64; 3] {
        [self.z_lbs, self.z_sgm, self.z_sdi]
    }
}

/// Non-negative metric weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Weights {
    w: [f64; 3],
}

impl Default for Weights {
    fn default() -> Self {
        Self::EQUAL
    }
}

impl Weights {
    pub const EQUAL: Weights = Weights {
        w: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    };

    const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, ConfigError> {
        let w = [w1, w2, w3];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ConfigError::invalid("weights", "each weight must be finite and >= 0"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(ConfigError::invalid(
                "weights",
                format!("weights must sum to 1 (got {sum})"),
            ));
        }
        Ok(Self { w })
    }

    /// Rescales arbitrary non-negative weights onto the simplex.
    pub fn normalized(w1: f64, w2: f64, w3: f64) -> Result<Self, ConfigError> {
        let sum = w1 + w2 + w3;
        if !(sum.is_finite() && sum > 0.0) {
            return Err(ConfigError::invalid("weights", "weights must have a positive sum"));
        }
        let w = [w1 / sum, w2 / sum, w3 / sum];
        // Division can leave the sum a few ulps off one.
        let w3 = 1.0 - w[0] - w[1];
        Self::new(w[0], w[1], w3.max(0.0))
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.w
    }
}

impl TryFrom<[f64; 3]> for Weights {
    type Error = ConfigError;

    fn try_from(w: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(w[0], w[1], w[2])
    }
}

impl From<Weights> for [f64; 3] {
    fn from(w: Weights) -> Self {
        w.w
    }
}

/// A single reason a pass is not admissible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    EmptyDefense,
    TooManyDefenders,
    NonFiniteCoordinate,
    StartOutOfBounds,
    EndOutOfBounds,
    DefenderOutOfBounds,
    SelfPass,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::EmptyDefense => "empty defense",
            Violation::TooManyDefenders => "more than 10 outfield defenders",
            Violation::NonFiniteCoordinate => "non-finite coordinate",
            Violation::StartOutOfBounds => "pass start out of bounds",
            Violation::EndOutOfBounds => "pass end out of bounds",
            Violation::DefenderOutOfBounds => "defender out of bounds",
            Violation::SelfPass => "passer equals receiver",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Zero-length pass. Not a violation.
    pub degenerate: bool,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every pass invariant against `pitch` with the default
/// out-of-bounds tolerance.
pub fn validate_pass(p: &PassEvent, pitch: &Pitch) -> ValidationReport {
    validate_pass_with_tolerance(p, pitch, DEFAULT_OOB_TOLERANCE)
}

pub fn validate_pass_with_tolerance(p: &PassEvent, pitch: &Pitch, tolerance: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let n = p.snapshot.len();
    if n == 0 {
        violations.push(Violation::EmptyDefense);
    } else if n > 10 {
        violations.push(Violation::TooManyDefenders);
    }
    let all_finite = p.start.is_finite()
        && p.end.is_finite()
        && p.t.is_finite()
        && p.snapshot.defenders().iter().all(|d| d.is_finite());
    if !all_finite {
        violations.push(Violation::NonFiniteCoordinate);
    } else {
        if !pitch.contains(p.start, tolerance) {
            violations.push(Violation::StartOutOfBounds);
        }
        if !pitch.contains(p.end, tolerance) {
            violations.push(Violation::EndOutOfBounds);
        }
        if p.snapshot.defenders().iter().any(|d| !pitch.contains(*d, tolerance)) {
            violations.push(Violation::DefenderOutOfBounds);
        }
    }
    if p.passer_id == p.receiver_id {
        violations.push(Violation::SelfPass);
    }
    ValidationReport {
        violations,
        degenerate: p.is_degenerate(),
    }
}
