//! The synchronous round engine.
//!
//! Nodes communicate in discrete pulses: messages sent in round r are
//! delivered at the start of round r+1, at most one message per directed
//! edge per round. Overflow waits in per-edge queues and drains in later
//! rounds, minimum-counter first (ties by owner ID, then send order).

use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::message::Message;
use super::stats::{Delivery, RoundStats};
use super::{SimConfig, SimError};
use crate::graph::{Graph, NodeId};
use crate::util::derive_seed;

/// A delivered message as seen by the receiving node.
#[derive(Debug, Clone, Copy)]
pub struct Envelope {
    pub from: NodeId,
    /// Engine-assigned send sequence number. Protocols may key simulation
    /// bookkeeping (coupon identities, replay cursors) on it; it is not part
    /// of the transmitted payload.
    pub seq: u64,
    pub msg: Message,
}

/// A node-state-machine family run by the engine.
///
/// The engine calls `init` once per node before round 1, then `step` for
/// every node in every round with the messages delivered that round. The run
/// ends when `done` reports true and all queues have drained.
pub trait Protocol {
    fn init(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>);
    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>);
    fn done(&self) -> bool;
}

/// Per-step API handed to a node: its RNG stream, the current round, and
/// message emission into the per-edge outbox queues.
pub struct NodeCtx<'a> {
    node: NodeId,
    round: u64,
    g: &'a Graph,
    rng: &'a mut ChaCha8Rng,
    bits_budget: u32,
    next_seq: &'a mut u64,
    outbox: &'a mut Vec<(NodeId, u64, Message)>,
    error: &'a mut Option<SimError>,
}

impl<'a> NodeCtx<'a> {
    /// Current round number (0 during `init`). Nodes always know it.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn graph(&self) -> &'a Graph {
        self.g
    }

    /// This node's independent random stream.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        self.rng
    }

    /// Queues `msg` on the directed edge to neighbor `to`; it is delivered
    /// in a later round under the scheduling rule. Returns the send
    /// sequence number.
    pub fn send(&mut self, to: NodeId, msg: Message) -> u64 {
        if self.error.is_some() {
            return u64::MAX;
        }
        if self.g.neighbor_index(self.node, to).is_none() {
            *self.error = Some(SimError::NotANeighbor {
                from: self.node,
                to,
            });
            return u64::MAX;
        }
        let bits = msg.bits(self.g.n());
        if bits > self.bits_budget {
            *self.error = Some(SimError::PayloadOverBudget {
                kind: msg.kind().as_str(),
                bits,
                budget: self.bits_budget,
            });
            return u64::MAX;
        }
        let seq = *self.next_seq;
        *self.next_seq += 1;
        self.outbox.push((to, seq, msg));
        seq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Queued {
    priority: u64,
    owner: u64,
    seq: u64,
    from: u32,
    msg: Message,
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we want minimum first.
        (other.priority, other.owner, other.seq).cmp(&(self.priority, self.owner, self.seq))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs `protocol` on `g` to termination. `phase` labels the rounds in the
/// returned stats.
///
/// Identical `(g, cfg, protocol inputs)` produce identical outputs and
/// stats: per-node RNG streams derive deterministically from `cfg.seed`,
/// and delivery order is a strict total order.
pub fn run_protocol<P: Protocol>(
    g: &Graph,
    cfg: &SimConfig,
    phase: &str,
    protocol: &mut P,
) -> Result<RoundStats, SimError> {
    let n = g.n();
    // Directed edge slots in CSR order: edges out of node u occupy
    // offsets[u] .. offsets[u+1], one per neighbor in adjacency order.
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for u in 0..n {
        offsets.push(offsets[u] + g.degree(u));
    }
    let edge_slots = offsets[n];
    let mut queues: Vec<BinaryHeap<Queued>> = (0..edge_slots).map(|_| BinaryHeap::new()).collect();

    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|v| ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, v as u64)))
        .collect();

    let mut stats = RoundStats::default();
    if cfg.record_deliveries {
        stats.deliveries = Some(Vec::new());
    }
    let mut next_seq = 0u64;
    let mut in_flight = 0u64;
    let mut outbox: Vec<(NodeId, u64, Message)> = Vec::new();
    let mut error: Option<SimError> = None;
    let mut inboxes: Vec<Vec<Envelope>> = vec![Vec::new(); n];

    let enqueue =
        |from: NodeId, outbox: &mut Vec<(NodeId, u64, Message)>,
         queues: &mut Vec<BinaryHeap<Queued>>,
         in_flight: &mut u64| {
            for (to, seq, msg) in outbox.drain(..) {
                let slot = offsets[from] + g.neighbor_index(from, to).expect("validated");
                queues[slot].push(Queued {
                    priority: msg.priority(),
                    owner: msg.owner_key(),
                    seq,
                    from: from as u32,
                    msg,
                });
                *in_flight += 1;
            }
        };

    // Round 0: initial knowledge and first sends.
    for node in 0..n {
        let mut ctx = NodeCtx {
            node,
            round: 0,
            g,
            rng: &mut rngs[node],
            bits_budget: cfg.bits_per_edge,
            next_seq: &mut next_seq,
            outbox: &mut outbox,
            error: &mut error,
        };
        protocol.init(node, &mut ctx);
        if let Some(e) = error.take() {
            return Err(e);
        }
        enqueue(node, &mut outbox, &mut queues, &mut in_flight);
    }

    let mut round = 0u64;
    while !(protocol.done() && in_flight == 0) {
        round += 1;
        if round > cfg.max_rounds {
            return Err(SimError::MaxRoundsExceeded {
                phase: phase.to_string(),
                max_rounds: cfg.max_rounds,
            });
        }

        // Measure queue loads, then deliver one message per directed edge.
        let mut max_load = 0u32;
        for node_inbox in &mut inboxes {
            node_inbox.clear();
        }
        for u in 0..n {
            for (idx, &v) in g.adj(u).iter().enumerate() {
                let q = &mut queues[offsets[u] + idx];
                max_load = max_load.max(q.len() as u32);
                if let Some(item) = q.pop() {
                    in_flight -= 1;
                    stats.messages_total += 1;
                    if let Some(log) = stats.deliveries.as_mut() {
                        log.push(Delivery {
                            round,
                            from: u as u32,
                            to: v as u32,
                            kind: item.msg.kind(),
                            priority: item.priority,
                            count: item.msg.multiplicity(),
                        });
                    }
                    inboxes[v].push(Envelope {
                        from: u,
                        seq: item.seq,
                        msg: item.msg,
                    });
                }
            }
        }
        stats.per_round_max_load.push(max_load);
        stats.max_edge_load = stats.max_edge_load.max(max_load as u64);

        // Synchronous step of every node on this round's inbox.
        for node in 0..n {
            let mut ctx = NodeCtx {
                node,
                round,
                g,
                rng: &mut rngs[node],
                bits_budget: cfg.bits_per_edge,
                next_seq: &mut next_seq,
                outbox: &mut outbox,
                error: &mut error,
            };
            protocol.step(node, &inboxes[node], &mut ctx);
            if let Some(e) = error.take() {
                return Err(e);
            }
            enqueue(node, &mut outbox, &mut queues, &mut in_flight);
        }
    }

    stats.rounds_total = round;
    stats.per_phase.insert(phase.to_string(), round);
    debug_assert_eq!(next_seq, stats.messages_total);
    Ok(stats)
}
