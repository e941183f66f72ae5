//! Broadcast flood: the simplest protocol, used to exercise and test the
//! round engine. The root floods a mark; every node forwards it once.
//! Terminates in exactly `eccentricity(root)` rounds.

use super::engine::{Envelope, NodeCtx, Protocol};
use super::message::Message;
use crate::graph::NodeId;

pub struct FloodProtocol {
    root: NodeId,
    reached: Vec<bool>,
    reached_count: usize,
    /// Round at which each node first heard the mark (0 for the root).
    pub heard_at: Vec<Option<u64>>,
}

impl FloodProtocol {
    pub fn new(n: usize, root: NodeId) -> Self {
        FloodProtocol {
            root,
            reached: vec![false; n],
            reached_count: 0,
            heard_at: vec![None; n],
        }
    }

    fn mark(&mut self, node: NodeId, round: u64) -> bool {
        if self.reached[node] {
            return false;
        }
        self.reached[node] = true;
        self.reached_count += 1;
        self.heard_at[node] = Some(round);
        true
    }
}

impl Protocol for FloodProtocol {
    fn init(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) {
        if node == self.root {
            self.mark(node, 0);
            for &w in ctx.graph().adj(node) {
                ctx.send(w, Message::CoverMark { covered: true });
            }
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        if inbox.is_empty() {
            return;
        }
        let first_time = self.mark(node, ctx.round());
        if first_time {
            let from = inbox[0].from;
            for &w in ctx.graph().adj(node).iter().filter(|&&w| w != from) {
                ctx.send(w, Message::CoverMark { covered: true });
            }
        }
    }

    fn done(&self) -> bool {
        self.reached_count == self.reached.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congest::{run_protocol, SimConfig};
    use crate::graph::{generate, GraphKind};

    #[test]
    fn flood_star_terminates_in_one_round() {
        let g = generate(GraphKind::Star, 5, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 1);
        let mut p = FloodProtocol::new(g.n(), 0);
        let stats = run_protocol(&g, &cfg, "flood", &mut p).unwrap();
        assert_eq!(stats.rounds_total, 1);
    }

    #[test]
    fn flood_cycle_takes_eccentricity_rounds() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let cfg = SimConfig::for_graph(&g, 1);
        let mut p = FloodProtocol::new(g.n(), 0);
        let stats = run_protocol(&g, &cfg, "flood", &mut p).unwrap();
        assert_eq!(stats.rounds_total, 4);
        assert_eq!(p.heard_at[4], Some(4));
    }

    #[test]
    fn flood_is_deterministic() {
        let g = generate(GraphKind::ErdosRenyi { p: 0.5 }, 12, 5).unwrap();
        let cfg = SimConfig::for_graph(&g, 9);
        let mut a = FloodProtocol::new(g.n(), 3);
        let mut b = FloodProtocol::new(g.n(), 3);
        let sa = run_protocol(&g, &cfg, "flood", &mut a).unwrap();
        let sb = run_protocol(&g, &cfg, "flood", &mut b).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.heard_at, b.heard_at);
    }
}
