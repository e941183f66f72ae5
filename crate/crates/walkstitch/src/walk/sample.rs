//! Sample-Coupon: uniform sampling of one of a node's resting coupons by a
//! weighted convergecast over a freshly built BFS tree.
//!
//! The tree is rebuilt on every call and both the probe wave and the
//! leaf-to-root convergecast are charged, so each call costs O(D) rounds.
//! Every node holding coupons of the root nominates one uniformly at
//! random; aggregation picks among candidates with probability proportional
//! to subtree coupon counts, which telescopes to a uniform choice over all
//! coupons. When a token ride is requested, the handoff retraces the
//! winning candidate's tree path, and the holder deletes the sampled coupon
//! on arrival.

use rand::Rng;

use crate::congest::{run_protocol, Envelope, Message, NodeCtx, Protocol, RoundStats, SimConfig};
use crate::graph::{Graph, NodeId};

use super::coupon::Placement;
use super::WalkError;

/// The uniformly sampled coupon, as learned at the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledCoupon {
    pub holder: NodeId,
    pub owner: u32,
    pub seq: u32,
    pub length: u32,
}

/// Whether the run only samples or also rides the token to the holder.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SampleMode {
    SampleOnly,
    RouteToken { source: NodeId, completed: u64 },
}

#[derive(Debug, Clone, Copy)]
enum CandidateVia {
    /// Index into this node's local coupon list.
    Local(usize),
    Child(NodeId),
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    holder: u32,
    length: u32,
    count: u64,
    via: CandidateVia,
}

pub(crate) struct SampleProtocol<'a> {
    root: NodeId,
    /// Depth of the BFS tree rooted at `root`; drives the level-wave
    /// schedule of the convergecast (the aggregation loop runs level by
    /// level from the deepest).
    depth: u64,
    mode: SampleMode,
    /// Coupons of `root` resting at each node: (owner-seq, length).
    local_coupons: &'a [Vec<(u32, u32)>],
    level: Vec<Option<u64>>,
    parent: Vec<Option<NodeId>>,
    probes_sent: Vec<bool>,
    candidates: Vec<Vec<Candidate>>,
    chosen: Vec<Option<Candidate>>,
    /// Root's decision.
    pub result: Option<SampledCoupon>,
    decided: bool,
    /// Set when the token arrived at the holder (RouteToken mode).
    pub token_done: bool,
}

impl<'a> SampleProtocol<'a> {
    pub fn new(
        g: &Graph,
        root: NodeId,
        depth: u64,
        local_coupons: &'a [Vec<(u32, u32)>],
        mode: SampleMode,
    ) -> Self {
        assert!(depth >= 1, "graphs have at least two nodes");
        SampleProtocol {
            root,
            depth,
            mode,
            local_coupons,
            level: vec![None; g.n()],
            parent: vec![None; g.n()],
            probes_sent: vec![false; g.n()],
            candidates: vec![Vec::new(); g.n()],
            chosen: vec![None; g.n()],
            result: None,
            decided: false,
            token_done: false,
        }
    }

    /// Round at which a node on `level` sends its convergecast message.
    fn send_round(&self, level: u64) -> u64 {
        2 * self.depth - level
    }

    fn decision_round(&self) -> u64 {
        2 * self.depth
    }

    /// Nominate one local coupon uniformly and fold it into the candidate
    /// list.
    fn nominate_local(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) {
        let locals = &self.local_coupons[node];
        if locals.is_empty() {
            return;
        }
        let idx = ctx.rng().gen_range(0..locals.len());
        self.candidates[node].push(Candidate {
            holder: node as u32,
            length: locals[idx].1,
            count: locals.len() as u64,
            via: CandidateVia::Local(idx),
        });
    }

    /// Weighted pick among candidates: candidate j with probability
    /// count_j / sum(counts).
    fn pick(&mut self, node: NodeId, ctx: &mut NodeCtx<'_>) -> Option<Candidate> {
        let cands = &self.candidates[node];
        if cands.is_empty() {
            return None;
        }
        let total: u64 = cands.iter().map(|c| c.count).sum();
        let mut draw = ctx.rng().gen_range(0..total);
        let mut winner = *cands.last().unwrap();
        for c in cands {
            if draw < c.count {
                winner = *c;
                break;
            }
            draw -= c.count;
        }
        self.chosen[node] = Some(winner);
        Some(winner)
    }

    fn deliver_token_or_forward(&mut self, node: NodeId, completed: u64, ctx: &mut NodeCtx<'_>) {
        let winner = self.chosen[node].expect("token follows winner pointers");
        match winner.via {
            CandidateVia::Local(_) => {
                self.token_done = true;
            }
            CandidateVia::Child(child) => {
                let source = match self.mode {
                    SampleMode::RouteToken { source, .. } => source,
                    SampleMode::SampleOnly => unreachable!(),
                };
                ctx.send(
                    child,
                    Message::SampleRequest {
                        source: source as u32,
                        completed,
                    },
                );
            }
        }
    }
}

impl Protocol for SampleProtocol<'_> {
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
            self.nominate_local(node, ctx);
        }
    }

    fn step(&mut self, node: NodeId, inbox: &[Envelope], ctx: &mut NodeCtx<'_>) {
        for env in inbox {
            match env.msg {
                Message::BfsProbe { level, .. } => {
                    // Same-wave probes arrive ordered by sender ID, so the
                    // first one already carries the lowest-ID parent.
                    if self.level[node].is_none() {
                        self.level[node] = Some(level as u64);
                        self.parent[node] = Some(env.from);
                        self.nominate_local(node, ctx);
                    }
                }
                Message::SampleUp {
                    holder,
                    length,
                    count,
                } => {
                    self.candidates[node].push(Candidate {
                        holder,
                        length,
                        count,
                        via: CandidateVia::Child(env.from),
                    });
                }
                Message::SampleRequest { completed, .. } => {
                    self.deliver_token_or_forward(node, completed, ctx);
                }
                _ => unreachable!("unexpected message kind in sampling"),
            }
        }

        let round = ctx.round();
        // Forward the probe wave one level per round.
        if let Some(level) = self.level[node] {
            if level > 0 && !self.probes_sent[node] && round == level {
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

            // Convergecast wave for this node's level.
            if level > 0 && round == self.send_round(level) {
                if let Some(winner) = self.pick(node, ctx) {
                    let total: u64 = self.candidates[node].iter().map(|c| c.count).sum();
                    ctx.send(
                        self.parent[node].expect("non-root has a parent"),
                        Message::SampleUp {
                            holder: winner.holder,
                            length: winner.length,
                            count: total,
                        },
                    );
                }
            }
        }

        // Root decision.
        if node == self.root && round == self.decision_round() {
            self.decided = true;
            if let Some(winner) = self.pick(node, ctx) {
                // The holder's nominated coupon is the sampled one; its seq
                // is resolved from the holder's nomination after the run.
                self.result = Some(SampledCoupon {
                    holder: winner.holder as usize,
                    owner: self.root as u32,
                    seq: 0,
                    length: winner.length,
                });
                match self.mode {
                    SampleMode::SampleOnly => {}
                    SampleMode::RouteToken { completed, .. } => {
                        let new_completed = completed + winner.length as u64;
                        self.deliver_token_or_forward(node, new_completed, ctx);
                    }
                }
            }
        }
    }

    fn done(&self) -> bool {
        if !self.decided {
            return false;
        }
        match (self.result.is_some(), self.mode) {
            (false, _) => true,
            (true, SampleMode::SampleOnly) => true,
            (true, SampleMode::RouteToken { .. }) => self.token_done,
        }
    }
}

impl SampleProtocol<'_> {
    /// The sampled coupon's identity, resolved from the holder's nomination.
    pub fn resolve(&self) -> Option<SampledCoupon> {
        let r = self.result?;
        let chosen = self.chosen[r.holder].expect("holder nominated");
        let idx = match chosen.via {
            CandidateVia::Local(i) => i,
            CandidateVia::Child(_) => {
                // The winner recorded at the holder is always its own
                // nomination: the holder is where the winning candidate
                // entered the tree.
                unreachable!("winner at holder is local")
            }
        };
        let (seq, length) = self.local_coupons[r.holder][idx];
        Some(SampledCoupon {
            holder: r.holder,
            owner: r.owner,
            seq,
            length,
        })
    }
}

/// Uniformly samples one coupon owned by `root` from `placement`, by BFS
/// construction plus one leaf-to-root convergecast. Returns `None` when the
/// root owns no resting coupons. The placement is not modified; deletion
/// happens on token arrival during stitching.
pub fn sample_coupon(
    g: &Graph,
    root: NodeId,
    placement: &Placement,
    cfg: &SimConfig,
) -> Result<(Option<SampledCoupon>, RoundStats), WalkError> {
    let locals = coupon_view(g, root, placement);
    let depth = crate::graph::bfs_tree(g, root).depth.max(1) as u64;
    let mut proto = SampleProtocol::new(g, root, depth, &locals, SampleMode::SampleOnly);
    let stats = run_protocol(g, cfg, "sample", &mut proto)?;
    Ok((proto.resolve(), stats))
}

/// Per-node (seq, length) list of `root`'s coupons.
pub(crate) fn coupon_view(g: &Graph, root: NodeId, placement: &Placement) -> Vec<Vec<(u32, u32)>> {
    let mut view = vec![Vec::new(); g.n()];
    for (holder, list) in placement.at.iter().enumerate() {
        for c in list {
            if c.owner as usize == root {
                view[holder].push((c.seq, c.length));
            }
        }
    }
    view
}
