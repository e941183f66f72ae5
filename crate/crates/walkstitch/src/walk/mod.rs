//! The distributed random-walk protocols, built as node state machines over
//! the round engine: Phase-1 coupon distribution, coupon sampling by
//! convergecast, on-demand coupon regeneration, walk stitching, many
//! concurrent walks, source-side delivery, full-walk position regeneration,
//! the Metropolis-Hastings variant, and the topology-collection fallback.
//!
//! A long walk of length `ell` is assembled by stitching pre-computed short
//! walks of length uniform in `[lambda, 2*lambda - 1]`, so the round cost is
//! governed by `sqrt(ell * D)` instead of `ell`.

mod coupon;
mod fallback;
mod naive;
mod params;
mod phase1;
mod regenerate;
mod sample;
mod send_more;
mod sod;
mod stitch;

pub use coupon::{Coupon, Placement};
pub use fallback::fallback_collect;
pub use naive::naive_random_walk;
pub use params::WalkParams;
pub use phase1::{phase1_distribute, StepSampler};
pub use regenerate::{regenerate_walk, Positions};
pub use sample::{sample_coupon, SampledCoupon};
pub use send_more::send_more_coupons;
pub use sod::{k_rw_sod, SodOutcome};
pub use stitch::{
    many_random_walks, many_random_walks_recorded, mh_random_walk, single_random_walk,
    single_random_walk_recorded, StitchedSegment, WalkRecord,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congest::{RoundStats, SimError};
use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
    #[error("walk length {ell} exceeds m^2 = {limit}; use fallback_collect")]
    LengthBeyondRange { ell: u64, limit: u64 },
    #[error("walk was run with tracing disabled; no short-walk traces retained")]
    MissingTrace,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Result of one long walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkOutcome {
    pub source: NodeId,
    pub destination: NodeId,
    /// Ordered connector list; starts with the source.
    pub connectors: Vec<NodeId>,
    /// Per-node indices j at which the node was the walk's j-th vertex;
    /// present only when positions were materialized.
    pub positions: Option<Vec<Vec<u64>>>,
    /// Per-node total visits; present only when positions were materialized.
    pub visit_counts: Option<Vec<u64>>,
    pub stats: RoundStats,
}
