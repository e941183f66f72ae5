//! Synchronous CONGEST(B) round engine: per-edge message budgets, per-edge
//! queues with the minimum-counter scheduling rule, and round/message
//! accounting.

mod engine;
pub mod flood;
mod message;
mod stats;

pub use engine::{run_protocol, Envelope, NodeCtx, Protocol};
pub use message::{Message, MessageKind};
pub use stats::{coupon_edge_loads, edge_load_histogram, Delivery, RoundStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId};
use crate::util::log2_ceil;

/// Multiplier on `ceil(log2 n)` for the default per-edge bit budget.
pub const DEFAULT_BITS_FACTOR: u32 = 8;

/// Engine configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Bits one directed edge may carry per round (the B of CONGEST(B)).
    pub bits_per_edge: u32,
    /// Safety cap on rounds per protocol run.
    pub max_rounds: u64,
    /// Master seed; per-node streams derive from it.
    pub seed: u64,
    /// Record the full delivery log (round, edge, kind) for audit.
    pub record_deliveries: bool,
}

impl SimConfig {
    /// Default budget `8 * ceil(log2 n)` bits, enough for one node ID and a
    /// few counters.
    pub fn for_graph(g: &Graph, seed: u64) -> Self {
        SimConfig {
            bits_per_edge: DEFAULT_BITS_FACTOR * log2_ceil(g.n() as u64).max(1),
            max_rounds: 10_000_000,
            seed,
            record_deliveries: false,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn recording(mut self) -> Self {
        self.record_deliveries = true;
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("exceeded {max_rounds} rounds during phase {phase:?}")]
    MaxRoundsExceeded { phase: String, max_rounds: u64 },
    #[error("{kind} payload of {bits} bits exceeds the {budget}-bit edge budget")]
    PayloadOverBudget {
        kind: &'static str,
        bits: u32,
        budget: u32,
    },
    #[error("node {from} tried to send to non-neighbor {to}")]
    NotANeighbor { from: NodeId, to: NodeId },
}
