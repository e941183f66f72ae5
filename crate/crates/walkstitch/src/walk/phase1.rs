//! Phase 1: every node launches coupons on independent short random walks.
//!
//! Node v creates its quota of coupons (eta * deg(v) for the simple walk),
//! each with a desired length drawn uniformly from `[lambda, 2*lambda - 1]`,
//! and the coupons are forwarded hop by hop until each reaches its desired
//! length. Hops are gated on per-coupon counters, not global barriers:
//! under congestion a hop waits in the edge queue and the schedule delivers
//! minimum-counter coupons first.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, RoundStats, SimConfig};
use crate::graph::{Graph, NodeId};

use super::coupon::{Coupon, Placement};
use super::params::WalkParams;
use super::WalkError;

/// How a coupon or token picks its next hop.
#[derive(Debug, Clone)]
pub enum StepSampler {
    /// Uniform over neighbors: the simple random walk.
    Simple,
    /// Metropolis-Hastings transition probabilities; `None` means stay put.
    Mh { rows: Vec<MhRow> },
}

#[derive(Debug, Clone)]
pub struct MhRow {
    /// Transition probability to each neighbor, in adjacency order.
    pub to_neighbor: Vec<f64>,
}

impl StepSampler {
    /// Builds the Metropolis-Hastings sampler for normalized target `pi`:
    /// P_ij = alpha * min(1/d_i, pi_j / (pi_i * d_j)), remainder a self-loop.
    /// This is node-local knowledge: a node needs only its own and its
    /// neighbors' target weights and degrees.
    pub fn metropolis_hastings(g: &Graph, pi: &[f64], alpha: f64) -> Self {
        let rows = (0..g.n())
            .map(|i| {
                let di = g.degree(i) as f64;
                MhRow {
                    to_neighbor: g
                        .adj(i)
                        .iter()
                        .map(|&j| {
                            let dj = g.degree(j) as f64;
                            alpha * (1.0 / di).min(pi[j] / (pi[i] * dj))
                        })
                        .collect(),
                }
            })
            .collect();
        StepSampler::Mh { rows }
    }

    /// Next hop from `node`; `None` is a self-loop (consumes a step, sends
    /// nothing).
    pub fn step(&self, g: &Graph, node: NodeId, rng: &mut ChaCha8Rng) -> Option<NodeId> {
        match self {
            StepSampler::Simple => {
                let nbrs = g.adj(node);
                Some(nbrs[rng.gen_range(0..nbrs.len())])
            }
            StepSampler::Mh { rows } => {
                let row = &rows[node];
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (idx, &p) in row.to_neighbor.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Some(g.adj(node)[idx]);
                    }
                }
                None
            }
        }
    }
}

/// A coupon in motion.
#[derive(Debug, Clone, Copy)]
struct MovingCoupon {
    owner: u32,
    seq: u32,
    desired: u32,
    counter: u32,
}

pub(crate) struct Phase1Protocol<'a> {
    lambda: u64,
    quotas: &'a [u64],
    sampler: &'a StepSampler,
    /// Coupons to step this round (freshly created or self-looped).
    pending: Vec<Vec<MovingCoupon>>,
    /// Engine send seq -> coupon, for arrival identification.
    in_transit: HashMap<u64, MovingCoupon>,
    active: u64,
    initialized: usize,
    pub placement: Placement,
}

impl<'a> Phase1Protocol<'a> {
    pub fn new(
        g: &Graph,
        lambda: u64,
        quotas: &'a [u64],
        sampler: &'a StepSampler,
        placement: Placement,
    ) -> Self {
        Phase1Protocol {
            lambda,
            quotas,
            sampler,
            pending: vec![Vec::new(); g.n()],
            in_transit: HashMap::new(),
            active: 0,
            initialized: 0,
            placement,
        }
    }

    fn record_hop(&mut self, coupon: &MovingCoupon, node: NodeId) {
        if let Some(traces) = self.placement.traces.as_mut() {
            traces
                .entry((coupon.owner, coupon.seq))
                .or_default()
                .push(node);
        }
    }

    fn rest(&mut self, node: NodeId, c: MovingCoupon) {
        self.placement.rest(
            node,
            Coupon {
                owner: c.owner,
                seq: c.seq,
                length: c.desired,
            },
        );
        self.active -= 1;
    }

    /// Advance one coupon by one chain step.
    fn advance(&mut self, node: NodeId, mut c: MovingCoupon, ctx: &mut NodeCtx<'_>) {
        match self.sampler.step(ctx.graph(), node, ctx.rng()) {
            Some(next) => {
                c.counter += 1;
                let seq = ctx.send(
                    next,
                    Message::CouponBatch {
                        owner: c.owner,
                        desired: c.desired,
                        counter: c.counter,
                        count: 1,
                    },
                );
                self.in_transit.insert(seq, c);
            }
            None => {
                // Self-loop: a step of the chain with no transmission.
                c.counter += 1;
                self.record_hop(&c, node);
                if c.counter == c.desired {
                    self.rest(node, c);
                } else {
                    self.pending[node].push(c);
                }
            }
        }
    }
}

impl Protocol for Phase1Protocol<'_> {
    fn init(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) {
        self.initialized += 1;
        let quota = self.quotas[node];
        for _ in 0..quota {
            let seq = self.placement.next_seq[node];
            self.placement.next_seq[node] += 1;
            let r = ctx.rng().gen_range(0..self.lambda);
            let c = MovingCoupon {
                owner: node as u32,
                seq,
                desired: (self.lambda + r) as u32,
                counter: 0,
            };
            self.active += 1;
            self.record_hop(&c, node);
            self.pending[node].push(c);
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        // Arrivals: rest or queue for the next hop.
        for env in inbox {
            let c = self
                .in_transit
                .remove(&env.seq)
                .expect("coupon bookkeeping");
            self.record_hop(&c, node);
            if c.counter == c.desired {
                self.rest(node, c);
            } else {
                self.pending[node].push(c);
            }
        }
        // One chain step for every coupon waiting here.
        let moving = std::mem::take(&mut self.pending[node]);
        for c in moving {
            self.advance(node, c, ctx);
        }
    }

    fn done(&self) -> bool {
        self.initialized == self.pending.len() && self.active == 0
    }
}

/// Distributes eta * deg(v) coupons from every node v on short walks of
/// desired length uniform in `[lambda, 2*lambda - 1]`. Returns the resting
/// placement and the round cost.
pub fn phase1_distribute(
    g: &Graph,
    p: &WalkParams,
    cfg: &SimConfig,
) -> Result<(Placement, RoundStats), WalkError> {
    p.validate(g)?;
    let quotas: Vec<u64> = (0..g.n()).map(|v| p.eta * g.degree(v) as u64).collect();
    let sampler = StepSampler::Simple;
    phase1_with(g, p.lambda, &quotas, &sampler, cfg, false)
}

pub(crate) fn phase1_with(
    g: &Graph,
    lambda: u64,
    quotas: &[u64],
    sampler: &StepSampler,
    cfg: &SimConfig,
    trace: bool,
) -> Result<(Placement, RoundStats), WalkError> {
    let placement = Placement::new(g.n(), trace);
    let mut proto = Phase1Protocol::new(g, lambda, quotas, sampler, placement);
    let stats = run_protocol(g, cfg, "phase1", &mut proto)?;
    Ok((proto.placement, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn path2_forced_swap() {
        // lambda = 1 forces desired length 1: each node's coupon rests at
        // the other node.
        let g = generate(GraphKind::Path, 2, 0).unwrap();
        let p = WalkParams::new(2, 1, 1);
        let cfg = SimConfig::for_graph(&g, 5);
        let (placement, stats) = phase1_distribute(&g, &p, &cfg).unwrap();
        assert_eq!(placement.at[0].len(), 1);
        assert_eq!(placement.at[1].len(), 1);
        assert_eq!(placement.at[0][0].owner, 1);
        assert_eq!(placement.at[1][0].owner, 0);
        assert!(stats.rounds_total >= 1);
    }

    #[test]
    fn star_parity() {
        // On a star, a walk from the center of even length ends at the
        // center and of odd length at a leaf.
        let g = generate(GraphKind::Star, 5, 0).unwrap();
        let p = WalkParams::new(4, 2, 1);
        for seed in 0..20 {
            let cfg = SimConfig::for_graph(&g, seed);
            let (placement, _) = phase1_distribute(&g, &p, &cfg).unwrap();
            for (holder, c) in placement.coupons_of(0) {
                if c.length % 2 == 0 {
                    assert_eq!(holder, 0);
                } else {
                    assert_ne!(holder, 0);
                }
            }
        }
    }

    #[test]
    fn placement_counts_match_quota() {
        let g = generate(GraphKind::Grid, 9, 0).unwrap();
        let p = WalkParams::new(8, 2, 2);
        let cfg = SimConfig::for_graph(&g, 3);
        let (placement, _) = phase1_distribute(&g, &p, &cfg).unwrap();
        for v in 0..g.n() {
            assert_eq!(
                placement.remaining[v],
                2 * g.degree(v) as u64,
                "node {v} quota"
            );
        }
        let total: usize = placement.at.iter().map(Vec::len).sum();
        assert_eq!(total as u64, 2 * 2 * g.m() as u64);
    }

    #[test]
    fn traces_record_full_paths() {
        let g = generate(GraphKind::Cycle, 6, 0).unwrap();
        let quotas = vec![1u64; 6];
        let sampler = StepSampler::Simple;
        let cfg = SimConfig::for_graph(&g, 7);
        let (placement, _) = phase1_with(&g, 3, &quotas, &sampler, &cfg, true).unwrap();
        for (holder, list) in placement.at.iter().enumerate() {
            for c in list {
                let trace = placement.trace_of(c.id()).unwrap();
                assert_eq!(trace.len() as u32, c.length + 1);
                assert_eq!(trace[0] as u32, c.owner);
                assert_eq!(*trace.last().unwrap(), holder);
                for w in trace.windows(2) {
                    assert!(g.adj(w[0]).contains(&w[1]), "trace steps walk edges");
                }
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = generate(GraphKind::Grid, 16, 0).unwrap();
        let p = WalkParams::new(10, 3, 1);
        let cfg = SimConfig::for_graph(&g, 42);
        let (pa, sa) = phase1_distribute(&g, &p, &cfg).unwrap();
        let (pb, sb) = phase1_distribute(&g, &p, &cfg).unwrap();
        assert_eq!(sa, sb);
        for v in 0..g.n() {
            assert_eq!(pa.at[v], pb.at[v]);
        }
    }
}
