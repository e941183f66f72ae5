//! Resting coupons and their placement across the network.

use std::collections::HashMap;

use crate::graph::NodeId;

/// A short-walk record at rest: it traveled exactly `length` hops from
/// `owner` and now waits to be sampled and stitched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupon {
    pub owner: u32,
    /// Creation sequence number within the owner; identifies the coupon.
    pub seq: u32,
    pub length: u32,
}

impl Coupon {
    pub fn id(&self) -> (u32, u32) {
        (self.owner, self.seq)
    }
}

/// Where every resting coupon sits, plus per-owner bookkeeping.
///
/// When tracing is on, the full hop sequence of each coupon is retained so
/// completed walks can be regenerated (`trace[0]` is the owner).
#[derive(Debug, Clone)]
pub struct Placement {
    /// Resting coupons per holder node.
    pub at: Vec<Vec<Coupon>>,
    /// Remaining (not yet sampled) coupons per owner.
    pub remaining: Vec<u64>,
    /// Next coupon sequence number per owner.
    pub next_seq: Vec<u32>,
    pub traces: Option<HashMap<(u32, u32), Vec<NodeId>>>,
}

impl Placement {
    pub fn new(n: usize, trace: bool) -> Self {
        Placement {
            at: vec![Vec::new(); n],
            remaining: vec![0; n],
            next_seq: vec![0; n],
            traces: trace.then(HashMap::new),
        }
    }

    pub fn total(&self) -> u64 {
        self.remaining.iter().sum()
    }

    pub fn rest(&mut self, holder: NodeId, coupon: Coupon) {
        self.remaining[coupon.owner as usize] += 1;
        self.at[holder].push(coupon);
    }

    /// Removes the sampled coupon at `holder`.
    pub fn delete(&mut self, holder: NodeId, id: (u32, u32)) {
        let idx = self.at[holder]
            .iter()
            .position(|c| c.id() == id)
            .expect("sampled coupon rests at holder");
        let c = self.at[holder].swap_remove(idx);
        self.remaining[c.owner as usize] -= 1;
    }

    /// Coupons owned by `owner`, with their holders.
    pub fn coupons_of(&self, owner: NodeId) -> Vec<(NodeId, Coupon)> {
        let mut out = Vec::new();
        for (holder, list) in self.at.iter().enumerate() {
            for c in list {
                if c.owner as usize == owner {
                    out.push((holder, *c));
                }
            }
        }
        out
    }

    pub fn trace_of(&self, id: (u32, u32)) -> Option<&Vec<NodeId>> {
        self.traces.as_ref().and_then(|t| t.get(&id))
    }
}
