//! Send-More-Coupons: on-demand regeneration of a node's exhausted coupons.
//!
//! Part 1 forwards all new coupons for exactly `lambda` steps, combining
//! the coupons sent along one edge in one round into a single (ID, count)
//! message, so it always finishes within O(lambda) rounds. Part 2 extends
//! each coupon further: after `lambda + i` hops the coupon stops with
//! probability `1/(lambda - i)` (reservoir stopping), which makes the total
//! length uniform on `[lambda, 2*lambda - 1]`.

use std::collections::HashMap;

use rand::Rng;

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, RoundStats, SimConfig};
use crate::graph::{Graph, NodeId};

use super::coupon::{Coupon, Placement};
use super::phase1::StepSampler;
use super::WalkError;

#[derive(Debug, Clone, Copy)]
struct NewCoupon {
    seq: u32,
    counter: u32,
}

pub(crate) struct SmcProtocol<'a> {
    origin: NodeId,
    eta: u64,
    lambda: u64,
    seq_start: u32,
    sampler: &'a StepSampler,
    trace: bool,
    pending: Vec<Vec<NewCoupon>>,
    in_transit: HashMap<u64, Vec<NewCoupon>>,
    active: u64,
    started: bool,
    pub placement: Placement,
}

impl<'a> SmcProtocol<'a> {
    pub fn new(
        g: &Graph,
        origin: NodeId,
        eta: u64,
        lambda: u64,
        seq_start: u32,
        sampler: &'a StepSampler,
        trace: bool,
    ) -> Self {
        SmcProtocol {
            origin,
            eta,
            lambda,
            seq_start,
            sampler,
            trace,
            pending: vec![Vec::new(); g.n()],
            in_transit: HashMap::new(),
            active: 0,
            started: false,
            placement: Placement::new(g.n(), trace),
        }
    }

    fn record_hop(&mut self, seq: u32, node: NodeId) {
        if self.trace {
            if let Some(traces) = self.placement.traces.as_mut() {
                traces
                    .entry((self.origin as u32, seq))
                    .or_default()
                    .push(node);
            }
        }
    }

    fn rest(&mut self, node: NodeId, c: NewCoupon) {
        self.placement.rest(
            node,
            Coupon {
                owner: self.origin as u32,
                seq: c.seq,
                length: c.counter,
            },
        );
        self.active -= 1;
    }

    /// One iteration for every coupon waiting at `node`: the reservoir stop
    /// check once `lambda` hops are done, then a chain step for survivors,
    /// batched per receiving neighbor.
    fn advance_all(&mut self, node: NodeId, coupons: Vec<NewCoupon>, ctx: &mut NodeCtx<'_>) {
        // (neighbor, counter) -> batch
        let mut batches: HashMap<(NodeId, u32), Vec<NewCoupon>> = HashMap::new();
        for mut c in coupons {
            if c.counter >= self.lambda as u32 {
                // Part 2, iteration i = counter - lambda: stop w.p. 1/(lambda - i).
                let denom = 2 * self.lambda as u32 - c.counter;
                if ctx.rng().gen_range(0..denom) == 0 {
                    self.rest(node, c);
                    continue;
                }
            }
            match self.sampler.step(ctx.graph(), node, ctx.rng()) {
                Some(next) => {
                    c.counter += 1;
                    batches.entry((next, c.counter)).or_default().push(c);
                }
                None => {
                    // Self-loop step; the next reservoir check happens when
                    // the coupon is processed again.
                    c.counter += 1;
                    self.record_hop(c.seq, node);
                    self.pending[node].push(c);
                }
            }
        }
        let mut keys: Vec<(NodeId, u32)> = batches.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let group = batches.remove(&key).unwrap();
            let (next, counter) = key;
            let seq = ctx.send(
                next,
                Message::CouponBatch {
                    owner: self.origin as u32,
                    desired: 0,
                    counter,
                    count: group.len() as u32,
                },
            );
            self.in_transit.insert(seq, group);
        }
    }
}

impl Protocol for SmcProtocol<'_> {
    fn init(&mut self, node: NodeId, _ctx: &mut NodeCtx<'_>) {
        if node == self.origin {
            self.started = true;
            for i in 0..self.eta {
                self.active += 1;
                let seq = self.seq_start + i as u32;
                self.record_hop(seq, node);
                self.pending[node].push(NewCoupon { seq, counter: 0 });
            }
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        for env in inbox {
            let group = self.in_transit.remove(&env.seq).expect("batch bookkeeping");
            for c in group {
                self.record_hop(c.seq, node);
                self.pending[node].push(c);
            }
        }
        let moving = std::mem::take(&mut self.pending[node]);
        if !moving.is_empty() {
            self.advance_all(node, moving, ctx);
        }
    }

    fn done(&self) -> bool {
        self.started && self.active == 0
    }
}

/// Distributes `eta` new coupons from `v`, forwarded lambda steps with
/// per-edge count combining and then extended by reservoir stopping.
/// Returns the placement delta (new resting coupons only) and round cost.
pub fn send_more_coupons(
    g: &Graph,
    v: NodeId,
    eta: u64,
    lambda: u64,
    cfg: &SimConfig,
) -> Result<(Placement, RoundStats), WalkError> {
    if lambda == 0 || eta == 0 {
        return Err(WalkError::InvalidParams(
            "send_more_coupons needs lambda >= 1 and eta >= 1".into(),
        ));
    }
    let sampler = StepSampler::Simple;
    let mut proto = SmcProtocol::new(g, v, eta, lambda, 0, &sampler, false);
    let stats = run_protocol(g, cfg, "send_more", &mut proto)?;
    Ok((proto.placement, stats))
}

pub(crate) fn send_more_into(
    g: &Graph,
    v: NodeId,
    eta: u64,
    lambda: u64,
    sampler: &StepSampler,
    placement: &mut Placement,
    cfg: &SimConfig,
) -> Result<RoundStats, WalkError> {
    let trace = placement.traces.is_some();
    let seq_start = placement.next_seq[v];
    let mut proto = SmcProtocol::new(g, v, eta, lambda, seq_start, sampler, trace);
    let stats = run_protocol(g, cfg, "send_more", &mut proto)?;
    placement.next_seq[v] = seq_start + eta as u32;
    for (holder, list) in proto.placement.at.into_iter().enumerate() {
        for c in list {
            placement.rest(holder, c);
        }
    }
    if let Some(new_traces) = proto.placement.traces {
        if let Some(traces) = placement.traces.as_mut() {
            traces.extend(new_traces);
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn lambda_one_stops_every_coupon_at_length_one() {
        let g = generate(GraphKind::Cycle, 5, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 9);
        let (placement, _) = send_more_coupons(&g, 0, 50, 1, &cfg).unwrap();
        let coupons = placement.coupons_of(0);
        assert_eq!(coupons.len(), 50);
        assert!(coupons.iter().all(|(_, c)| c.length == 1));
        // Length 1 means the holder is a neighbor of the origin.
        assert!(coupons.iter().all(|(h, _)| g.adj(0).contains(h)));
    }

    #[test]
    fn part1_rounds_independent_of_eta() {
        // Count combining: one message per edge per iteration regardless of
        // eta, so the whole run stays within a small multiple of lambda.
        let g = generate(GraphKind::Star, 9, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 1);
        let lambda = 4;
        let (_, small) = send_more_coupons(&g, 0, 1, lambda, &cfg).unwrap();
        let (_, big) = send_more_coupons(&g, 0, 50, lambda, &cfg).unwrap();
        assert!(big.rounds_total <= 2 * lambda + 1);
        assert!(small.rounds_total <= 2 * lambda + 1);
    }

    #[test]
    fn lengths_land_in_reservoir_range() {
        let g = generate(GraphKind::Complete, 6, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 3);
        let lambda = 3;
        let (placement, _) = send_more_coupons(&g, 2, 200, lambda, &cfg).unwrap();
        let coupons = placement.coupons_of(2);
        assert_eq!(coupons.len(), 200);
        for (_, c) in &coupons {
            assert!(c.length as u64 >= lambda && c.length as u64 <= 2 * lambda - 1);
        }
    }
}
