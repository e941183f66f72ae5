//! Protocol messages and their wire-size accounting.
//!
//! Every message is a small fixed tuple of node IDs and counters. The
//! encoded size is charged as `ceil(log2 n)` bits per node ID plus the
//! minimal binary width of each counter, and validated against the
//! configured per-edge budget at send time.

use serde::{Deserialize, Serialize};

use crate::util::log2_ceil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    CouponBatch,
    Token,
    BfsProbe,
    SampleUp,
    SampleRequest,
    CountPair,
    PositionNotify,
    CoverMark,
    UpcastPair,
    DowncastPair,
}

impl MessageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageKind::CouponBatch => "coupon-batch",
            MessageKind::Token => "token",
            MessageKind::BfsProbe => "bfs-probe",
            MessageKind::SampleUp => "sample-up",
            MessageKind::SampleRequest => "sample-request",
            MessageKind::CountPair => "count-pair",
            MessageKind::PositionNotify => "position-notify",
            MessageKind::CoverMark => "cover-mark",
            MessageKind::UpcastPair => "upcast-pair",
            MessageKind::DowncastPair => "downcast-pair",
        }
    }
}

/// One protocol message. The kind determines the payload arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Message {
    /// One or more coupons of `owner` moving together over an edge.
    /// Phase-1 coupons travel singly (`count` = 1) with a pre-drawn
    /// `desired` length; Send-More-Coupons batches travel with `desired` = 0
    /// and decide their stopping lengths en route.
    CouponBatch {
        owner: u32,
        desired: u32,
        counter: u32,
        count: u32,
    },
    /// The long-walk head during naive forwarding.
    Token {
        source: u32,
        walk: u32,
        completed: u64,
    },
    /// BFS tree construction wave.
    BfsProbe { root: u32, level: u32 },
    /// Convergecast candidate: a coupon sampled from a subtree, with the
    /// subtree's coupon count and the candidate's walk length.
    SampleUp {
        holder: u32,
        length: u32,
        count: u64,
    },
    /// Token handoff routed down the sampling tree toward the winning
    /// coupon's holder.
    SampleRequest { source: u32, completed: u64 },
    /// Keyed counter aggregation (bucket tallies, edge counts, value
    /// broadcasts).
    CountPair { key: u32, count: u64, weight: u64 },
    /// Walk-position announcement carried along a replayed short walk.
    PositionNotify { index: u64 },
    /// Cover flag for the AND-convergecast and its result broadcast.
    CoverMark { covered: bool },
    /// Pipelined (key, node) pair moving leaf-to-root.
    UpcastPair { key: u32, node: u32 },
    /// Pipelined (key, node) pair moving root-to-leaves.
    DowncastPair { key: u32, node: u32 },
}

fn counter_bits(v: u64) -> u32 {
    64 - v.max(1).leading_zeros()
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::CouponBatch { .. } => MessageKind::CouponBatch,
            Message::Token { .. } => MessageKind::Token,
            Message::BfsProbe { .. } => MessageKind::BfsProbe,
            Message::SampleUp { .. } => MessageKind::SampleUp,
            Message::SampleRequest { .. } => MessageKind::SampleRequest,
            Message::CountPair { .. } => MessageKind::CountPair,
            Message::PositionNotify { .. } => MessageKind::PositionNotify,
            Message::CoverMark { .. } => MessageKind::CoverMark,
            Message::UpcastPair { .. } => MessageKind::UpcastPair,
            Message::DowncastPair { .. } => MessageKind::DowncastPair,
        }
    }

    /// Encoded payload width in bits for a graph with `n` nodes.
    pub fn bits(&self, n: usize) -> u32 {
        let id = log2_ceil(n as u64).max(1);
        match *self {
            Message::CouponBatch {
                desired,
                counter,
                count,
                ..
            } => {
                id + counter_bits(desired as u64)
                    + counter_bits(counter as u64)
                    + counter_bits(count as u64)
            }
            Message::Token {
                walk, completed, ..
            } => id + counter_bits(walk as u64) + counter_bits(completed),
            Message::BfsProbe { level, .. } => id + counter_bits(level as u64),
            Message::SampleUp { length, count, .. } => {
                id + counter_bits(length as u64) + counter_bits(count)
            }
            Message::SampleRequest { completed, .. } => id + counter_bits(completed),
            Message::CountPair { key, count, weight } => {
                counter_bits(key as u64) + counter_bits(count) + counter_bits(weight)
            }
            Message::PositionNotify { index } => counter_bits(index),
            Message::CoverMark { .. } => 1,
            // The key is a counter that may exceed the ID range (walk
            // indices) or be a node ID (edge records); charge the wider.
            Message::UpcastPair { key, .. } | Message::DowncastPair { key, .. } => {
                counter_bits(key as u64).max(id) + id
            }
        }
    }

    /// Queue priority: the paper's scheduling rule delivers the message with
    /// the minimum counter first.
    pub fn priority(&self) -> u64 {
        match *self {
            Message::CouponBatch { counter, .. } => counter as u64,
            Message::Token { completed, .. } => completed,
            Message::BfsProbe { level, .. } => level as u64,
            Message::SampleRequest { completed, .. } => completed,
            Message::PositionNotify { index } => index,
            _ => 0,
        }
    }

    /// Tie-break key after priority: the owner ID where one exists.
    pub fn owner_key(&self) -> u64 {
        match *self {
            Message::CouponBatch { owner, .. } => owner as u64,
            Message::Token { source, .. } => source as u64,
            _ => 0,
        }
    }

    /// Batch multiplicity (coupons carried); 1 for everything else.
    pub fn multiplicity(&self) -> u32 {
        match *self {
            Message::CouponBatch { count, .. } => count,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counter_widths() {
        assert_eq!(counter_bits(0), 1);
        assert_eq!(counter_bits(1), 1);
        assert_eq!(counter_bits(2), 2);
        assert_eq!(counter_bits(255), 8);
        assert_eq!(counter_bits(256), 9);
    }

    #[test]
    fn coupon_fits_default_budget() {
        // n = 8 gives B = 8 * 3 = 24 bits.
        let m = Message::CouponBatch {
            owner: 7,
            desired: 9,
            counter: 9,
            count: 1,
        };
        assert!(m.bits(8) <= 24);
    }

    #[test]
    fn pair_is_two_ids_when_key_small() {
        let m = Message::DowncastPair { key: 3, node: 9 };
        assert_eq!(m.bits(16), 8);
    }

    #[test]
    fn pair_key_can_exceed_id_range() {
        let m = Message::UpcastPair { key: 4000, node: 9 };
        assert_eq!(m.bits(16), 12 + 4);
    }

    #[test]
    fn priorities_follow_counters() {
        let m = Message::CouponBatch {
            owner: 2,
            desired: 5,
            counter: 3,
            count: 1,
        };
        assert_eq!(m.priority(), 3);
        assert_eq!(m.owner_key(), 2);
        let t = Message::Token {
            source: 1,
            walk: 0,
            completed: 17,
        };
        assert_eq!(t.priority(), 17);
    }
}
