//! Walk regeneration (k-RW-pos): after a stitched walk completes, every
//! node learns every index at which it appears in the walk.
//!
//! Connectors already know their offsets from Phase-2 length tracking; each
//! stitched short walk is then replayed by one message traversing its
//! recorded hop sequence, announcing positions as it goes. Naive-tail
//! positions were learned during the walk itself. All replays run
//! concurrently; congestion is handled by the usual edge queues.

use std::collections::HashMap;

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, RoundStats, SimConfig};
use crate::graph::{Graph, NodeId};

use super::stitch::WalkRecord;
use super::WalkError;

/// Per-node walk positions with, for every index, the node holding the
/// previous index (the walk edge used to arrive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Positions {
    pub ell: u64,
    /// For each node, sorted (index, predecessor) entries; the predecessor
    /// is `None` exactly for index 0.
    pub entries: Vec<Vec<(u64, Option<NodeId>)>>,
}

impl Positions {
    pub fn indices(&self, v: NodeId) -> Vec<u64> {
        self.entries[v].iter().map(|&(i, _)| i).collect()
    }

    pub fn per_node_indices(&self) -> Vec<Vec<u64>> {
        (0..self.entries.len()).map(|v| self.indices(v)).collect()
    }

    pub fn visit_counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.len() as u64).collect()
    }

    /// True iff every node holds at least one position.
    pub fn covered(&self) -> bool {
        self.entries.iter().all(|e| !e.is_empty())
    }

    /// Reconstructs the walk as a node sequence of length ell + 1.
    pub fn walk_sequence(&self) -> Vec<NodeId> {
        let mut seq = vec![usize::MAX; self.ell as usize + 1];
        for (v, entries) in self.entries.iter().enumerate() {
            for &(i, _) in entries {
                seq[i as usize] = v;
            }
        }
        assert!(
            seq.iter().all(|&v| v != usize::MAX),
            "positions tile 0..=ell"
        );
        seq
    }

    /// Smallest index at `v` with its predecessor.
    pub fn first_visit(&self, v: NodeId) -> Option<(u64, Option<NodeId>)> {
        self.entries[v].first().copied()
    }

    /// Shifts all indices by `offset` (walk extension).
    pub fn shift(&mut self, offset: u64) {
        for entries in &mut self.entries {
            for e in entries {
                e.0 += offset;
            }
        }
        self.ell += offset;
    }

    /// Merges another walk's positions (indices already shifted); when both
    /// hold the same index the existing entry wins.
    pub fn merge(&mut self, other: &Positions) {
        self.ell = self.ell.max(other.ell);
        for (v, entries) in other.entries.iter().enumerate() {
            for &(i, pred) in entries {
                if !self.entries[v].iter().any(|&(j, _)| j == i) {
                    self.entries[v].push((i, pred));
                }
            }
        }
        for entries in &mut self.entries {
            entries.sort_unstable();
        }
    }
}

struct Replay {
    path: Vec<NodeId>,
    base: u64,
}

struct ReplayProtocol {
    replays: Vec<Replay>,
    /// Engine seq -> (replay index, path position just delivered).
    in_transit: HashMap<u64, (usize, usize)>,
    hops_left: u64,
    positions: Vec<Vec<(u64, Option<NodeId>)>>,
}

impl ReplayProtocol {
    fn new(n: usize, replays: Vec<Replay>) -> Self {
        let hops_left = replays.iter().map(|r| r.path.len() as u64 - 1).sum();
        ReplayProtocol {
            replays,
            in_transit: HashMap::new(),
            hops_left,
            positions: vec![Vec::new(); n],
        }
    }

    fn record(&mut self, node: NodeId, index: u64, pred: Option<NodeId>) {
        self.positions[node].push((index, pred));
    }

    /// Announce position `pos` of replay `ridx` at `node`, then forward.
    /// Self-loop hops (same node at consecutive indices) resolve locally.
    fn advance(&mut self, node: NodeId, ridx: usize, mut pos: usize, ctx: &mut NodeCtx<'_>) {
        loop {
            let replay = &self.replays[ridx];
            if pos + 1 > replay.path.len() - 1 {
                return;
            }
            let next = replay.path[pos + 1];
            let index = replay.base + pos as u64 + 1;
            if next == node {
                self.hops_left -= 1;
                self.record(node, index, Some(node));
                pos += 1;
            } else {
                let seq = ctx.send(next, Message::PositionNotify { index });
                self.in_transit.insert(seq, (ridx, pos + 1));
                return;
            }
        }
    }
}

impl Protocol for ReplayProtocol {
    fn init(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) {
        let starting: Vec<usize> = self
            .replays
            .iter()
            .enumerate()
            .filter(|(_, r)| r.path[0] == node)
            .map(|(i, _)| i)
            .collect();
        for ridx in starting {
            self.advance(node, ridx, 0, ctx);
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        for env in inbox {
            let (ridx, pos) = self.in_transit.remove(&env.seq).expect("replay cursor");
            let index = self.replays[ridx].base + pos as u64;
            debug_assert!(matches!(env.msg, Message::PositionNotify { index: i } if i == index));
            self.hops_left -= 1;
            self.record(node, index, Some(env.from));
            self.advance(node, ridx, pos, ctx);
        }
    }

    fn done(&self) -> bool {
        self.hops_left == 0
    }
}

/// Replays a completed walk so every node learns its positions. Requires
/// the walk to have been run with tracing.
pub fn regenerate_walk(
    g: &Graph,
    record: &WalkRecord,
    cfg: &SimConfig,
) -> Result<(Positions, RoundStats), WalkError> {
    let traces = record.traces.as_ref().ok_or(WalkError::MissingTrace)?;
    let replays: Vec<Replay> = record
        .stitched
        .iter()
        .map(|seg| Replay {
            path: traces
                .get(&(seg.owner, seg.seq))
                .expect("stitched coupon trace")
                .clone(),
            base: seg.base,
        })
        .collect();

    let mut proto = ReplayProtocol::new(g.n(), replays);
    // Knowledge already held from the walk itself: the source's index 0 and
    // the naive tail's positions (the token announced them on arrival).
    proto.record(record.source, 0, None);
    if let Some(tail) = &record.tail {
        for (i, w) in tail.path.windows(2).enumerate() {
            proto.record(w[1], tail.start_index + i as u64 + 1, Some(w[0]));
        }
    }
    let stats = run_protocol(g, cfg, "regenerate", &mut proto)?;
    let mut entries = proto.positions;
    for e in &mut entries {
        e.sort_unstable();
    }
    let positions = Positions {
        ell: record.ell,
        entries,
    };
    debug_assert_eq!(
        positions.visit_counts().iter().sum::<u64>(),
        record.ell + 1
    );
    Ok((positions, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::walk::params::WalkParams;
    use crate::walk::stitch::single_random_walk_recorded;
    use crate::walk::single_random_walk;

    #[test]
    fn zero_length_gives_single_position() {
        let g = generate(GraphKind::Path, 2, 0).unwrap();
        let p = WalkParams::new(0, 1, 1);
        let cfg = SimConfig::for_graph(&g, 1);
        let (_, record) = single_random_walk_recorded(&g, 0, &p, &cfg).unwrap();
        let (pos, stats) = regenerate_walk(&g, &record, &cfg).unwrap();
        assert_eq!(pos.indices(0), vec![0]);
        assert!(pos.indices(1).is_empty());
        assert_eq!(stats.rounds_total, 0);
    }

    #[test]
    fn path2_alternation() {
        let g = generate(GraphKind::Path, 2, 0).unwrap();
        let p = WalkParams::new(3, 1, 1);
        let cfg = SimConfig::for_graph(&g, 4);
        let (_, record) = single_random_walk_recorded(&g, 0, &p, &cfg).unwrap();
        let (pos, _) = regenerate_walk(&g, &record, &cfg).unwrap();
        assert_eq!(pos.indices(0), vec![0, 2]);
        assert_eq!(pos.indices(1), vec![1, 3]);
    }

    #[test]
    fn missing_trace_is_an_error() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::new(12, 3, 1);
        let cfg = SimConfig::for_graph(&g, 4);
        let out = single_random_walk(&g, 0, &p, &cfg).unwrap();
        // The untraced op keeps no record at all; simulate the error path
        // by stripping a recorded walk's traces.
        let (_, mut record) = single_random_walk_recorded(&g, 0, &p, &cfg).unwrap();
        record.traces = None;
        assert!(matches!(
            regenerate_walk(&g, &record, &cfg),
            Err(WalkError::MissingTrace)
        ));
        assert!(out.positions.is_none());
    }

    #[test]
    fn regenerated_sequence_is_a_valid_walk() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::new(12, 3, 2);
        for seed in 0..50 {
            let cfg = SimConfig::for_graph(&g, seed);
            let (out, record) = single_random_walk_recorded(&g, 0, &p, &cfg).unwrap();
            let (pos, _) = regenerate_walk(&g, &record, &cfg).unwrap();
            let seq = pos.walk_sequence();
            assert_eq!(seq.len(), 13);
            assert_eq!(seq[0], 0);
            assert_eq!(*seq.last().unwrap(), out.destination);
            for w in seq.windows(2) {
                assert!(g.adj(w[0]).contains(&w[1]), "every step is an edge");
            }
            // Predecessors point along the walk.
            for v in 0..g.n() {
                for (i, pred) in pos.entries[v].iter() {
                    if *i > 0 {
                        assert_eq!(pred.unwrap(), seq[*i as usize - 1]);
                    }
                }
            }
        }
    }
}
