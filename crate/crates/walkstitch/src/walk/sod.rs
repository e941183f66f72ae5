//! k-RW-SoD: sources learn their walks' destinations.
//!
//! After a destinations-output-sources run, each (walk, destination) pair
//! is upcast along a BFS tree to a fixed root, then broadcast back down;
//! each source picks out the pairs for its own walks. Upcast and downcast
//! are pipelined, so the conversion costs O(D + k) rounds.

use std::collections::HashSet;

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, RoundStats, SimConfig};
use crate::graph::{Graph, NodeId};
use crate::util::derive_seed;

use super::params::WalkParams;
use super::stitch::many_random_walks;
use super::WalkError;

pub(crate) struct SodConversionProtocol {
    root: NodeId,
    k: usize,
    /// Pairs initially resting at each node (its own walks' destinations).
    pairs_at: Vec<Vec<(u32, u32)>>,
    /// Walk indices each node expects to learn (it is that walk's source).
    expected: Vec<Vec<u32>>,
    level: Vec<Option<u64>>,
    parent: Vec<Option<NodeId>>,
    probes_sent: Vec<bool>,
    at_root: Vec<(u32, u32)>,
    flood_started: bool,
    seen: Vec<HashSet<u32>>,
    /// Per-walk destination as learned at its source.
    pub delivered: Vec<Option<NodeId>>,
    delivered_count: usize,
    expected_total: usize,
}

impl SodConversionProtocol {
    pub fn new(g: &Graph, root: NodeId, pairs: &[(u32, NodeId)], sources: &[NodeId]) -> Self {
        let mut pairs_at = vec![Vec::new(); g.n()];
        for &(walk, dest) in pairs {
            pairs_at[dest].push((walk, dest as u32));
        }
        let mut expected = vec![Vec::new(); g.n()];
        for (walk, &s) in sources.iter().enumerate() {
            expected[s].push(walk as u32);
        }
        SodConversionProtocol {
            root,
            k: pairs.len(),
            pairs_at,
            expected,
            level: vec![None; g.n()],
            parent: vec![None; g.n()],
            probes_sent: vec![false; g.n()],
            at_root: Vec::new(),
            flood_started: false,
            seen: vec![HashSet::new(); g.n()],
            delivered: vec![None; pairs.len()],
            delivered_count: 0,
            expected_total: sources.len(),
        }
    }

    fn take_delivery(&mut self, node: NodeId, walk: u32, dest: u32) {
        if self.expected[node].contains(&walk) && self.delivered[walk as usize].is_none() {
            self.delivered[walk as usize] = Some(dest as usize);
            self.delivered_count += 1;
        }
    }

    fn absorb_at_root(&mut self, walk: u32, dest: u32, ctx: &mut NodeCtx<'_>) {
        self.at_root.push((walk, dest));
        self.take_delivery(self.root, walk, dest);
        if self.at_root.len() == self.k && !self.flood_started {
            self.flood_started = true;
            if self.delivered_count < self.expected_total {
                for i in 0..self.at_root.len() {
                    let (walk, dest) = self.at_root[i];
                    self.seen[self.root].insert(walk);
                    for &w in ctx.graph().adj(self.root) {
                        ctx.send(w, Message::DowncastPair { key: walk, node: dest });
                    }
                }
            }
        }
    }

    fn enqueue_upward(&mut self, node: NodeId, walk: u32, dest: u32, ctx: &mut NodeCtx<'_>) {
        if node == self.root {
            self.absorb_at_root(walk, dest, ctx);
        } else {
            let parent = self.parent[node].expect("parented before pairs move");
            ctx.send(parent, Message::UpcastPair { key: walk, node: dest });
        }
    }
}

impl Protocol for SodConversionProtocol {
    fn init(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) {
        if node == self.root {
            self.level[node] = Some(0);
            self.probes_sent[node] = true;
            for &w in ctx.graph().adj(node) {
                ctx.send(
                    w,
                    Message::BfsProbe {
                        root: self.root as u32,
                        level: 1,
                    },
                );
            }
            let own = std::mem::take(&mut self.pairs_at[node]);
            for (walk, dest) in own {
                self.absorb_at_root(walk, dest, ctx);
            }
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        for env in inbox {
            match env.msg {
                Message::BfsProbe { level, .. } => {
                    if self.level[node].is_none() {
                        self.level[node] = Some(level as u64);
                        self.parent[node] = Some(env.from);
                        // Parented: release own pairs up the tree.
                        let own = std::mem::take(&mut self.pairs_at[node]);
                        for (walk, dest) in own {
                            self.enqueue_upward(node, walk, dest, ctx);
                        }
                    }
                }
                Message::UpcastPair { key, node: dest } => {
                    self.enqueue_upward(node, key, dest, ctx);
                }
                Message::DowncastPair { key, node: dest } => {
                    if self.seen[node].insert(key) {
                        self.take_delivery(node, key, dest);
                        for &w in ctx.graph().adj(node).iter().filter(|&&w| w != env.from) {
                            ctx.send(w, Message::DowncastPair { key, node: dest });
                        }
                    }
                }
                _ => unreachable!("unexpected message kind in SoD conversion"),
            }
        }
        // Probe wave forwarding.
        if let Some(level) = self.level[node] {
            if level > 0 && !self.probes_sent[node] && ctx.round() == level {
                self.probes_sent[node] = true;
                let parent = self.parent[node];
                for &w in ctx.graph().adj(node) {
                    if Some(w) != parent {
                        ctx.send(
                            w,
                            Message::BfsProbe {
                                root: self.root as u32,
                                level: (level + 1) as u32,
                            },
                        );
                    }
                }
            }
        }
    }

    fn done(&self) -> bool {
        self.delivered_count == self.expected_total && self.at_root.len() == self.k
    }
}

/// Outcome of a k-RW-SoD run.
#[derive(Debug, Clone)]
pub struct SodOutcome {
    pub sources: Vec<NodeId>,
    /// Per-walk destination as output by the destination node (the DoS run).
    pub dos_destinations: Vec<NodeId>,
    /// Per-walk destination as learned by the walk's source.
    pub delivered: Vec<NodeId>,
    /// Rounds of the upcast/downcast conversion alone.
    pub conversion_rounds: u64,
    pub stats: RoundStats,
}

/// Runs k walks (destinations output sources), then delivers each
/// destination to its source via upcast and downcast through `root`.
pub fn k_rw_sod(
    g: &Graph,
    sources: &[NodeId],
    p: &WalkParams,
    root: NodeId,
    cfg: &SimConfig,
) -> Result<SodOutcome, WalkError> {
    let (outcomes, mut stats) = many_random_walks(g, sources, p, &cfg.with_seed(derive_seed(cfg.seed, 0)))?;
    let pairs: Vec<(u32, NodeId)> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| (i as u32, o.destination))
        .collect();
    let mut proto = SodConversionProtocol::new(g, root, &pairs, sources);
    let conv = run_protocol(
        g,
        &cfg.with_seed(derive_seed(cfg.seed, 1)),
        "sod",
        &mut proto,
    )?;
    let conversion_rounds = conv.rounds_total;
    stats.absorb(conv);
    Ok(SodOutcome {
        sources: sources.to_vec(),
        dos_destinations: outcomes.iter().map(|o| o.destination).collect(),
        delivered: proto.delivered.into_iter().map(Option::unwrap).collect(),
        conversion_rounds,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{diameter, generate, GraphKind};

    #[test]
    fn single_walk_source_learns_destination() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::for_many(&g, 5, 1);
        let cfg = SimConfig::for_graph(&g, 3);
        let out = k_rw_sod(&g, &[2], &p, 0, &cfg).unwrap();
        assert_eq!(out.delivered, out.dos_destinations);
    }

    #[test]
    fn delivered_mapping_matches_dos_exactly() {
        let g = generate(GraphKind::Grid, 16, 0).unwrap();
        let sources = [0, 3, 7, 12, 15];
        let p = WalkParams::for_many(&g, 9, sources.len());
        for seed in 0..25 {
            let cfg = SimConfig::for_graph(&g, seed);
            let out = k_rw_sod(&g, &sources, &p, 0, &cfg).unwrap();
            assert_eq!(out.delivered, out.dos_destinations, "seed {seed}");
        }
    }

    #[test]
    fn conversion_rounds_within_pipelined_bound() {
        let g = generate(GraphKind::Path, 16, 0).unwrap();
        let k = 8;
        let sources: Vec<usize> = (0..k).collect();
        let p = WalkParams::for_many(&g, 4, k);
        let d = diameter(&g) as u64;
        for seed in 0..10 {
            let cfg = SimConfig::for_graph(&g, seed);
            let out = k_rw_sod(&g, &sources, &p, 0, &cfg).unwrap();
            assert!(
                out.conversion_rounds <= 4 * (d + k as u64),
                "seed {seed}: {} rounds",
                out.conversion_rounds
            );
        }
    }
}
