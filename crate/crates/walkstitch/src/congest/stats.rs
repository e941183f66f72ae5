//! Round and message accounting: the measured complexity of a protocol run.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::message::MessageKind;

/// One delivered message, for audit and congestion analytics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub round: u64,
    pub from: u32,
    pub to: u32,
    pub kind: MessageKind,
    /// Scheduling priority of the message (coupon counter, token length, ...).
    pub priority: u64,
    /// Coupons carried for coupon batches; 1 otherwise.
    pub count: u32,
}

/// Per-run complexity measurements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub rounds_total: u64,
    pub messages_total: u64,
    /// Maximum number of messages queued on any directed edge in any round.
    pub max_edge_load: u64,
    /// Rounds attributed to each protocol phase; values sum to `rounds_total`.
    pub per_phase: BTreeMap<String, u64>,
    /// Maximum directed-edge queue length observed in each round (1-based
    /// round r is at index r-1).
    pub per_round_max_load: Vec<u32>,
    /// Full delivery log when the run was configured to record it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deliveries: Option<Vec<Delivery>>,
}

impl RoundStats {
    /// Folds another run's stats into this one, keeping phase attribution
    /// and shifting the other run's round indices past this run's rounds.
    pub fn absorb(&mut self, mut other: RoundStats) {
        let base = self.rounds_total;
        self.rounds_total += other.rounds_total;
        self.messages_total += other.messages_total;
        self.max_edge_load = self.max_edge_load.max(other.max_edge_load);
        for (phase, rounds) in other.per_phase {
            *self.per_phase.entry(phase).or_insert(0) += rounds;
        }
        self.per_round_max_load.append(&mut other.per_round_max_load);
        if let Some(mut log) = other.deliveries {
            for d in &mut log {
                d.round += base;
            }
            self.deliveries.get_or_insert_with(Vec::new).append(&mut log);
        }
    }

    /// Dumps the delivery log as CSV: `round,from,to,kind,priority,count`.
    pub fn deliveries_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "round,from,to,kind,priority,count")?;
        if let Some(log) = &self.deliveries {
            for d in log {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    d.round,
                    d.from,
                    d.to,
                    d.kind.as_str(),
                    d.priority,
                    d.count
                )?;
            }
        }
        Ok(())
    }
}

/// Per-round maximum directed-edge queue load, keyed by round number.
pub fn edge_load_histogram(stats: &RoundStats) -> BTreeMap<u64, u64> {
    stats
        .per_round_max_load
        .iter()
        .enumerate()
        .map(|(i, &load)| (i as u64 + 1, load as u64))
        .collect()
}

/// Coupon traffic per (iteration, undirected edge), extracted from the
/// delivery log: the number of coupons whose hop counter moved to
/// `iteration` across that edge, in either direction.
pub fn coupon_edge_loads(stats: &RoundStats) -> BTreeMap<(u64, (u32, u32)), u64> {
    let mut loads = BTreeMap::new();
    let Some(log) = &stats.deliveries else {
        return loads;
    };
    for d in log {
        if d.kind == MessageKind::CouponBatch {
            let edge = (d.from.min(d.to), d.from.max(d.to));
            *loads.entry((d.priority, edge)).or_insert(0) += d.count as u64;
        }
    }
    loads
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_of_empty_run_is_empty() {
        let stats = RoundStats::default();
        assert!(edge_load_histogram(&stats).is_empty());
    }

    #[test]
    fn absorb_accumulates_and_shifts() {
        let mut a = RoundStats {
            rounds_total: 3,
            messages_total: 5,
            max_edge_load: 2,
            per_phase: BTreeMap::from([("phase1".to_string(), 3)]),
            per_round_max_load: vec![2, 1, 1],
            deliveries: Some(vec![]),
        };
        let b = RoundStats {
            rounds_total: 2,
            messages_total: 1,
            max_edge_load: 4,
            per_phase: BTreeMap::from([("stitch".to_string(), 2)]),
            per_round_max_load: vec![4, 0],
            deliveries: Some(vec![Delivery {
                round: 1,
                from: 0,
                to: 1,
                kind: MessageKind::Token,
                priority: 0,
                count: 1,
            }]),
        };
        a.absorb(b);
        assert_eq!(a.rounds_total, 5);
        assert_eq!(a.messages_total, 6);
        assert_eq!(a.max_edge_load, 4);
        assert_eq!(a.per_phase.values().sum::<u64>(), 5);
        assert_eq!(a.per_round_max_load.len(), 5);
        assert_eq!(a.deliveries.as_ref().unwrap()[0].round, 4);
    }
}
