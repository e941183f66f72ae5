//! Fallback for walks longer than m^2: aggregate the whole topology at the
//! source by pipelined upcast over a BFS tree (one edge record per
//! message), compute the walk locally there, and notify the destination.
//! Costs O(m + D) rounds, which meets the target bound once ell exceeds
//! m^2.

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, SimConfig};
use crate::graph::{Graph, NodeId};

use super::{WalkError, WalkOutcome};

struct FallbackProtocol {
    source: NodeId,
    ell: u64,
    depth: u64,
    level: Vec<Option<u64>>,
    parent: Vec<Option<NodeId>>,
    probes_sent: Vec<bool>,
    /// Subtree edge counts accumulated for the level-wave convergecast.
    count_acc: Vec<u64>,
    count_sent: Vec<bool>,
    total_edges: Option<u64>,
    collected: Vec<(NodeId, NodeId)>,
    computed: bool,
    notified: bool,
    pub destination: Option<NodeId>,
    pub visit_counts: Vec<u64>,
}

impl FallbackProtocol {
    fn new(g: &Graph, source: NodeId, ell: u64, depth: u64) -> Self {
        FallbackProtocol {
            source,
            ell,
            depth,
            level: vec![None; g.n()],
            parent: vec![None; g.n()],
            probes_sent: vec![false; g.n()],
            count_acc: (0..g.n())
                .map(|u| g.adj(u).iter().filter(|&&v| u < v).count() as u64)
                .collect(),
            count_sent: vec![false; g.n()],
            total_edges: None,
            collected: Vec::new(),
            computed: false,
            notified: false,
            destination: None,
            visit_counts: vec![0; g.n()],
        }
    }

    fn send_round(&self, level: u64) -> u64 {
        2 * self.depth - level
    }

    /// Local computation at the source once the topology is complete: walk
    /// ell steps over the collected edge list (free in rounds).
    fn compute_walk(&mut self, ctx: &mut NodeCtx<'_>) {
        let n = ctx.graph().n();
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in &self.collected {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        debug_assert!((0..n).all(|u| adj[u].as_slice() == ctx.graph().adj(u)));
        let mut cur = self.source;
        self.visit_counts[cur] += 1;
        for _ in 0..self.ell {
            let nbrs = &adj[cur];
            cur = nbrs[rand::Rng::gen_range(ctx.rng(), 0..nbrs.len())];
            self.visit_counts[cur] += 1;
        }
        self.destination = Some(cur);
        self.computed = true;
        if cur == self.source {
            self.notified = true;
        } else {
            // Flood the (destination, source) pair; the destination outputs
            // the source's ID on receipt.
            for &w in ctx.graph().adj(self.source) {
                ctx.send(
                    w,
                    Message::DowncastPair {
                        key: cur as u32,
                        node: self.source as u32,
                    },
                );
            }
        }
    }
}

impl Protocol for FallbackProtocol {
    fn init(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) {
        if node == self.source {
            self.level[node] = Some(0);
            self.probes_sent[node] = true;
            for &w in ctx.graph().adj(node) {
                ctx.send(
                    w,
                    Message::BfsProbe {
                        root: self.source as u32,
                        level: 1,
                    },
                );
            }
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        let mut seen_pair = false;
        for env in inbox {
            match env.msg {
                Message::BfsProbe { level, .. } => {
                    if self.level[node].is_none() {
                        self.level[node] = Some(level as u64);
                        self.parent[node] = Some(env.from);
                        // Parented: release this node's own edge records.
                        let own: Vec<(NodeId, NodeId)> = ctx
                            .graph()
                            .adj(node)
                            .iter()
                            .filter(|&&v| node < v)
                            .map(|&v| (node, v))
                            .collect();
                        for (u, v) in own {
                            ctx.send(
                                env.from,
                                Message::UpcastPair {
                                    key: u as u32,
                                    node: v as u32,
                                },
                            );
                        }
                    }
                }
                Message::CountPair { count, .. } => {
                    self.count_acc[node] += count;
                }
                Message::UpcastPair { key, node: v } => {
                    if node == self.source {
                        self.collected.push((key as usize, v as usize));
                    } else {
                        let parent = self.parent[node].expect("parented");
                        ctx.send(parent, Message::UpcastPair { key, node: v });
                    }
                }
                Message::DowncastPair { key, node: src } => {
                    if !seen_pair {
                        seen_pair = true;
                        if node == key as usize && !self.notified {
                            // This node is the destination: it outputs the
                            // source's ID.
                            self.notified = true;
                            debug_assert_eq!(src as usize, self.source);
                        }
                        for &w in ctx.graph().adj(node).iter().filter(|&&w| w != env.from) {
                            ctx.send(w, Message::DowncastPair { key, node: src });
                        }
                    }
                }
                _ => unreachable!("unexpected message kind in fallback"),
            }
        }

        let round = ctx.round();
        if let Some(level) = self.level[node] {
            // Probe wave.
            if level > 0 && !self.probes_sent[node] && round == level {
                self.probes_sent[node] = true;
                let parent = self.parent[node];
                for &w in ctx.graph().adj(node) {
                    if Some(w) != parent {
                        ctx.send(
                            w,
                            Message::BfsProbe {
                                root: self.source as u32,
                                level: (level + 1) as u32,
                            },
                        );
                    }
                }
            }
            // Edge-count convergecast (level waves) so the source knows m.
            if level > 0 && !self.count_sent[node] && round == self.send_round(level) {
                self.count_sent[node] = true;
                ctx.send(
                    self.parent[node].expect("parented"),
                    Message::CountPair {
                        key: 0,
                        count: self.count_acc[node],
                        weight: 0,
                    },
                );
            }
        }

        if node == self.source {
            if self.total_edges.is_none() && round == self.send_round(0) {
                self.total_edges = Some(self.count_acc[node]);
            }
            if !self.computed {
                if let Some(m) = self.total_edges {
                    let own = ctx.graph().adj(node).iter().filter(|&&v| node < v).count();
                    if self.collected.len() as u64 + own as u64 == m {
                        for v in ctx.graph().adj(node).iter().copied() {
                            if node < v {
                                self.collected.push((node, v));
                            }
                        }
                        self.compute_walk(ctx);
                    }
                }
            }
        }
    }

    fn done(&self) -> bool {
        self.computed && self.notified
    }
}

/// Walks `ell` steps from `s` by topology aggregation: the full edge list
/// is upcast to `s`, the walk is computed there, and the destination is
/// notified. Intended for `ell > m^2`, where stitching gains nothing.
pub fn fallback_collect(
    g: &Graph,
    s: NodeId,
    ell: u64,
    cfg: &SimConfig,
) -> Result<WalkOutcome, WalkError> {
    assert!(s < g.n());
    let depth = crate::graph::bfs_tree(g, s).depth.max(1) as u64;
    let mut proto = FallbackProtocol::new(g, s, ell, depth);
    let stats = run_protocol(g, cfg, "fallback", &mut proto)?;
    Ok(WalkOutcome {
        source: s,
        destination: proto.destination.expect("walk computed"),
        connectors: vec![s],
        positions: None,
        visit_counts: Some(proto.visit_counts),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{diameter, generate, GraphKind};

    #[test]
    fn zero_steps_stays_at_source() {
        let g = generate(GraphKind::Grid, 9, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 5);
        let out = fallback_collect(&g, 4, 0, &cfg).unwrap();
        assert_eq!(out.destination, 4);
        assert_eq!(out.visit_counts.as_ref().unwrap()[4], 1);
    }

    #[test]
    fn round_cost_linear_in_edges_plus_depth() {
        let g = generate(GraphKind::Cycle, 16, 0).unwrap();
        let d = diameter(&g) as u64;
        let m = g.m() as u64;
        for seed in 0..5 {
            let cfg = SimConfig::for_graph(&g, seed);
            let out = fallback_collect(&g, 0, 1000, &cfg).unwrap();
            assert!(
                out.stats.rounds_total <= 4 * (m + d),
                "rounds {} vs bound {}",
                out.stats.rounds_total,
                4 * (m + d)
            );
        }
    }

    #[test]
    fn visit_counts_sum_to_length_plus_one() {
        let g = generate(GraphKind::Path, 4, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 2);
        let out = fallback_collect(&g, 1, 500, &cfg).unwrap();
        let total: u64 = out.visit_counts.unwrap().iter().sum();
        assert_eq!(total, 501);
    }
}
