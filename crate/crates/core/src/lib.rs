//! Structural analysis of football passes from synchronized event and
//! tracking data.
//!
//! The pipeline extracts open-play passes with the defending team's shape
//! at pass time ([`ingest`]), scores each pass by how it interacts with
//! that shape ([`metrics`]), standardizes and combines the scores into a
//! tactical impact value ([`normalize`]), groups passes into four
//! structural archetypes ([`clustering`]) and relates them to attacking
//! outcomes and to teams, players and passing pairs ([`outcomes`],
//! [`aggregation`]). [`pipeline`] wires the stages together behind the
//! `ingest`/`analyze`/`score`/`synth` commands.

pub mod aggregation;
pub mod clustering;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod normalize;
pub mod outcomes;
pub mod pipeline;
pub mod synthetic;

pub use error::{ConfigError, Error, FitError, Result};
pub use model::{
    Archetype, DefensiveSnapshot, PassEvent, Pitch, PlayerId, Point2D, RawMetrics,
    StructuralFeatures, TeamId, Weights,
};
