//! Naive token forwarding: a walk of length ell costs exactly ell rounds
//! when alone. Multiple tokens run concurrently and contend on edges; the
//! schedule forwards the token with the smallest completed length first.

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, RoundStats, SimConfig};
use crate::graph::{Graph, NodeId};

use super::phase1::StepSampler;
use super::{WalkError, WalkOutcome};

#[derive(Debug, Clone)]
pub(crate) struct TokenSpec {
    pub walk: u32,
    pub source: NodeId,
    pub start: NodeId,
    pub start_completed: u64,
    pub target: u64,
}

pub(crate) struct NaiveTokensProtocol<'a> {
    specs: Vec<TokenSpec>,
    sampler: &'a StepSampler,
    trace: bool,
    /// Tokens waiting at each node: (walk index, completed).
    pending: Vec<Vec<(u32, u64)>>,
    finished: usize,
    pub destinations: Vec<Option<NodeId>>,
    /// Node sequence of each walk from its start, when tracing.
    pub trails: Vec<Vec<NodeId>>,
}

impl<'a> NaiveTokensProtocol<'a> {
    pub fn new(g: &Graph, specs: Vec<TokenSpec>, sampler: &'a StepSampler, trace: bool) -> Self {
        let k = specs.len();
        NaiveTokensProtocol {
            specs,
            sampler,
            trace,
            pending: vec![Vec::new(); g.n()],
            finished: 0,
            destinations: vec![None; k],
            trails: vec![Vec::new(); if trace { k } else { 0 }],
        }
    }

    fn place(&mut self, node: NodeId, walk: u32, completed: u64) {
        if self.trace {
            self.trails[walk as usize].push(node);
        }
        if completed == self.specs[walk as usize].target {
            self.destinations[walk as usize] = Some(node);
            self.finished += 1;
        } else {
            self.pending[node].push((walk, completed));
        }
    }
}

impl Protocol for NaiveTokensProtocol<'_> {
    fn init(&mut self, node: NodeId, _ctx: &mut NodeCtx<'_>) {
        let starts: Vec<(u32, u64)> = self
            .specs
            .iter()
            .filter(|s| s.start == node)
            .map(|s| (s.walk, s.start_completed))
            .collect();
        for (walk, completed) in starts {
            self.place(node, walk, completed);
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        for env in inbox {
            match env.msg {
                Message::Token {
                    walk, completed, ..
                } => self.place(node, walk, completed),
                _ => unreachable!("token protocol receives only tokens"),
            }
        }
        let moving = std::mem::take(&mut self.pending[node]);
        for (walk, completed) in moving {
            match self.sampler.step(ctx.graph(), node, ctx.rng()) {
                Some(next) => {
                    ctx.send(
                        next,
                        Message::Token {
                            source: self.specs[walk as usize].source as u32,
                            walk,
                            completed: completed + 1,
                        },
                    );
                }
                None => {
                    // Self-loop: the step completes without a message.
                    self.place(node, walk, completed + 1);
                }
            }
        }
    }

    fn done(&self) -> bool {
        self.finished == self.specs.len()
    }
}

pub(crate) struct NaiveRun {
    pub destinations: Vec<NodeId>,
    pub trails: Option<Vec<Vec<NodeId>>>,
    pub stats: RoundStats,
}

pub(crate) fn run_tokens(
    g: &Graph,
    specs: Vec<TokenSpec>,
    sampler: &StepSampler,
    trace: bool,
    cfg: &SimConfig,
    phase: &str,
) -> Result<NaiveRun, WalkError> {
    let mut proto = NaiveTokensProtocol::new(g, specs, sampler, trace);
    let stats = run_protocol(g, cfg, phase, &mut proto)?;
    Ok(NaiveRun {
        destinations: proto.destinations.into_iter().map(Option::unwrap).collect(),
        trails: trace.then_some(proto.trails),
        stats,
    })
}

/// The baseline protocol: forward one token for `ell` steps, picking a
/// random neighbor each step. Costs exactly `ell` rounds.
pub fn naive_random_walk(
    g: &Graph,
    s: NodeId,
    ell: u64,
    cfg: &SimConfig,
) -> Result<WalkOutcome, WalkError> {
    assert!(s < g.n());
    let sampler = StepSampler::Simple;
    let run = run_tokens(
        g,
        vec![TokenSpec {
            walk: 0,
            source: s,
            start: s,
            start_completed: 0,
            target: ell,
        }],
        &sampler,
        false,
        cfg,
        "naive",
    )?;
    Ok(WalkOutcome {
        source: s,
        destination: run.destinations[0],
        connectors: vec![s],
        positions: None,
        visit_counts: None,
        stats: run.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn zero_length_stays_home() {
        let g = generate(GraphKind::Cycle, 5, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 1);
        let out = naive_random_walk(&g, 3, 0, &cfg).unwrap();
        assert_eq!(out.destination, 3);
        assert_eq!(out.stats.rounds_total, 0);
    }

    #[test]
    fn rounds_equal_length_exactly() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        for ell in [1u64, 7, 100] {
            let cfg = SimConfig::for_graph(&g, ell);
            let out = naive_random_walk(&g, 0, ell, &cfg).unwrap();
            assert_eq!(out.stats.rounds_total, ell);
            assert_eq!(out.stats.max_edge_load, 1);
        }
    }

    #[test]
    fn concurrent_tokens_all_finish() {
        let g = generate(GraphKind::Star, 6, 0).unwrap();
        let sampler = StepSampler::Simple;
        let specs: Vec<TokenSpec> = (0..4)
            .map(|i| TokenSpec {
                walk: i,
                source: 0,
                start: 0,
                start_completed: 0,
                target: 6,
            })
            .collect();
        let cfg = SimConfig::for_graph(&g, 11);
        let run = run_tokens(&g, specs, &sampler, true, &cfg, "naive").unwrap();
        assert_eq!(run.destinations.len(), 4);
        let trails = run.trails.unwrap();
        for t in &trails {
            assert_eq!(t.len(), 7);
            assert_eq!(t[0], 0);
            for w in t.windows(2) {
                assert!(g.adj(w[0]).contains(&w[1]));
            }
        }
        // Contention on the star's edges delays but never loses tokens.
        assert!(run.stats.rounds_total >= 6);
    }
}
