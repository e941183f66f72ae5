//! Walk assembly: Phase-1 coupon preparation, then stitching sampled short
//! walks end-to-end until at most 2*lambda - 1 steps remain, walked naively.
//!
//! The stitching loop holds while the completed length is at most
//! `ell - 2*lambda`. Each stitch samples one unused coupon of the current
//! token holder uniformly (regenerating coupons on demand when exhausted),
//! rides the token to the sampled coupon's holder along the sampling tree,
//! and deletes the coupon. Short-walk lengths are uniform on
//! `[lambda, 2*lambda - 1]` and the walks are independent, so the
//! destination is distributed exactly as the endpoint of an ell-step walk.

use std::collections::HashMap;

use crate::congest::{run_protocol, Protocol, RoundStats, SimConfig};
use crate::graph::{bfs_tree, Graph, NodeId};
use crate::util::SeedSeq;

use super::coupon::Placement;
use super::naive::{run_tokens, TokenSpec};
use super::phase1::{Phase1Protocol, StepSampler};
use super::sample::{coupon_view, SampleMode, SampleProtocol};
use super::send_more::send_more_into;
use super::params::WalkParams;
use super::{WalkError, WalkOutcome};

/// One stitched short walk inside a long walk: it covers indices
/// `base .. base + length`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StitchedSegment {
    pub owner: u32,
    pub seq: u32,
    pub base: u64,
    pub length: u32,
}

/// Everything needed to regenerate a completed walk's positions.
#[derive(Debug, Clone)]
pub struct WalkRecord {
    pub source: NodeId,
    pub ell: u64,
    pub destination: NodeId,
    pub connectors: Vec<NodeId>,
    pub stitched: Vec<StitchedSegment>,
    /// The naive tail: its first node sits at `start_index`.
    pub tail: Option<TailRecord>,
    /// Hop sequences of the stitched coupons; present only when the walk
    /// ran with tracing.
    pub traces: Option<HashMap<(u32, u32), Vec<NodeId>>>,
}

#[derive(Debug, Clone)]
pub struct TailRecord {
    pub start_index: u64,
    pub path: Vec<NodeId>,
}

struct WalkDriver<'g> {
    g: &'g Graph,
    base: SimConfig,
    seeds: SeedSeq,
}

impl<'g> WalkDriver<'g> {
    fn new(g: &'g Graph, cfg: &SimConfig) -> Self {
        WalkDriver {
            g,
            base: cfg.clone(),
            seeds: SeedSeq::new(cfg.seed),
        }
    }

    fn run<P: Protocol>(
        &mut self,
        stats: &mut RoundStats,
        phase: &str,
        proto: &mut P,
    ) -> Result<(), WalkError> {
        let cfg = self.base.with_seed(self.seeds.next_seed());
        stats.absorb(run_protocol(self.g, &cfg, phase, proto)?);
        Ok(())
    }
}

/// Stitch one long walk from `source` out of `placement`, then walk the
/// remainder naively. Returns the pieces for the outcome and record.
#[allow(clippy::too_many_arguments)]
fn stitch_one_walk(
    driver: &mut WalkDriver<'_>,
    stats: &mut RoundStats,
    placement: &mut Placement,
    sampler: &StepSampler,
    smc_quotas: &[u64],
    p: &WalkParams,
    source: NodeId,
    trace: bool,
) -> Result<WalkRecord, WalkError> {
    let g = driver.g;
    let mut completed = 0u64;
    let mut cur = source;
    let mut connectors = vec![source];
    let mut stitched: Vec<StitchedSegment> = Vec::new();

    if p.stitching_enabled() {
        while completed + 2 * p.lambda <= p.ell {
            let depth = bfs_tree(g, cur).depth.max(1) as u64;
            let mut sampled = {
                let view = coupon_view(g, cur, placement);
                let mut proto = SampleProtocol::new(
                    g,
                    cur,
                    depth,
                    &view,
                    SampleMode::RouteToken { source, completed },
                );
                driver.run(stats, "stitch", &mut proto)?;
                proto.resolve()
            };
            if sampled.is_none() {
                // All coupons of cur are gone: distribute fresh ones, then
                // sample again.
                let smc_stats = send_more_into(
                    g,
                    cur,
                    smc_quotas[cur],
                    p.lambda,
                    sampler,
                    placement,
                    &driver.base.with_seed(driver.seeds.next_seed()),
                )?;
                stats.absorb(smc_stats);
                let view = coupon_view(g, cur, placement);
                let mut proto = SampleProtocol::new(
                    g,
                    cur,
                    depth,
                    &view,
                    SampleMode::RouteToken { source, completed },
                );
                driver.run(stats, "stitch", &mut proto)?;
                sampled = proto.resolve();
            }
            let c = sampled.expect("fresh coupons were just distributed");
            placement.delete(c.holder, (c.owner, c.seq));
            stitched.push(StitchedSegment {
                owner: c.owner,
                seq: c.seq,
                base: completed,
                length: c.length,
            });
            completed += c.length as u64;
            cur = c.holder;
            connectors.push(cur);
        }
    }

    // Walk naively until ell steps are completed (< 2*lambda steps).
    let mut tail = None;
    let destination = if completed < p.ell {
        let run = run_tokens(
            g,
            vec![TokenSpec {
                walk: 0,
                source,
                start: cur,
                start_completed: completed,
                target: p.ell,
            }],
            sampler,
            trace,
            &driver.base.with_seed(driver.seeds.next_seed()),
            "naive",
        )?;
        stats.absorb(run.stats);
        if let Some(trails) = run.trails {
            tail = Some(TailRecord {
                start_index: completed,
                path: trails.into_iter().next().unwrap(),
            });
        }
        run.destinations[0]
    } else {
        cur
    };

    let traces = if trace {
        let all = placement.traces.as_ref().expect("tracing placement");
        let mut kept = HashMap::new();
        for seg in &stitched {
            let path = all
                .get(&(seg.owner, seg.seq))
                .expect("stitched coupon has a trace")
                .clone();
            kept.insert((seg.owner, seg.seq), path);
        }
        Some(kept)
    } else {
        None
    };

    Ok(WalkRecord {
        source,
        ell: p.ell,
        destination,
        connectors,
        stitched,
        tail,
        traces,
    })
}

fn empty_walk(source: NodeId) -> (WalkOutcome, WalkRecord) {
    (
        WalkOutcome {
            source,
            destination: source,
            connectors: vec![source],
            positions: None,
            visit_counts: None,
            stats: RoundStats::default(),
        },
        WalkRecord {
            source,
            ell: 0,
            destination: source,
            connectors: vec![source],
            stitched: Vec::new(),
            tail: None,
            traces: Some(HashMap::new()),
        },
    )
}

fn run_walk(
    g: &Graph,
    s: NodeId,
    p: &WalkParams,
    cfg: &SimConfig,
    sampler: &StepSampler,
    phase1_quotas: &[u64],
    smc_quotas: &[u64],
    trace: bool,
) -> Result<(WalkOutcome, WalkRecord), WalkError> {
    assert!(s < g.n());
    p.validate(g)?;
    if p.ell == 0 {
        return Ok(empty_walk(s));
    }
    let mut driver = WalkDriver::new(g, cfg);
    let mut stats = RoundStats::default();
    let mut placement = if p.stitching_enabled() {
        let mut proto = Phase1Protocol::new(
            g,
            p.lambda,
            phase1_quotas,
            sampler,
            Placement::new(g.n(), trace),
        );
        driver.run(&mut stats, "phase1", &mut proto)?;
        proto.placement
    } else {
        Placement::new(g.n(), trace)
    };
    let record = stitch_one_walk(
        &mut driver,
        &mut stats,
        &mut placement,
        sampler,
        smc_quotas,
        p,
        s,
        trace,
    )?;
    let outcome = WalkOutcome {
        source: s,
        destination: record.destination,
        connectors: record.connectors.clone(),
        positions: None,
        visit_counts: None,
        stats,
    };
    Ok((outcome, record))
}

/// Performs one random walk of length `p.ell` from `s`; the destination is
/// distributed exactly as the endpoint of an ell-step simple random walk.
///
/// Requires `p.ell <= m^2`; longer walks route to [`super::fallback_collect`].
pub fn single_random_walk(
    g: &Graph,
    s: NodeId,
    p: &WalkParams,
    cfg: &SimConfig,
) -> Result<WalkOutcome, WalkError> {
    let quotas = simple_quotas(g, p.eta);
    let smc = vec![p.eta; g.n()];
    let (outcome, _) = run_walk(g, s, p, cfg, &StepSampler::Simple, &quotas, &smc, false)?;
    Ok(outcome)
}

/// Like [`single_random_walk`], but retains short-walk traces so the walk
/// can be regenerated (`k`-RW-pos).
pub fn single_random_walk_recorded(
    g: &Graph,
    s: NodeId,
    p: &WalkParams,
    cfg: &SimConfig,
) -> Result<(WalkOutcome, WalkRecord), WalkError> {
    let quotas = simple_quotas(g, p.eta);
    let smc = vec![p.eta; g.n()];
    run_walk(g, s, p, cfg, &StepSampler::Simple, &quotas, &smc, true)
}

fn simple_quotas(g: &Graph, eta: u64) -> Vec<u64> {
    (0..g.n()).map(|v| eta * g.degree(v) as u64).collect()
}

/// Walk whose steps follow the Metropolis-Hastings chain targeting `pi`
/// (normalized here) with laziness `alpha`. Phase 1 prepares
/// `ceil(eta * pi(x) / (alpha * min_y pi(y)/deg(y)))` coupons at each node.
pub fn mh_random_walk(
    g: &Graph,
    s: NodeId,
    pi: &[f64],
    alpha: f64,
    p: &WalkParams,
    cfg: &SimConfig,
) -> Result<WalkOutcome, WalkError> {
    if pi.len() != g.n() || pi.iter().any(|&w| !(w > 0.0)) {
        return Err(WalkError::InvalidParams(
            "target weights must be positive, one per node".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(WalkError::InvalidParams(format!(
            "alpha {alpha} not in (0, 1)"
        )));
    }
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.iter().map(|w| w / total).collect();
    let sampler = StepSampler::metropolis_hastings(g, &pi, alpha);
    let min_ratio = (0..g.n())
        .map(|v| pi[v] / g.degree(v) as f64)
        .fold(f64::INFINITY, f64::min);
    let quotas: Vec<u64> = (0..g.n())
        .map(|v| (p.eta as f64 * pi[v] / (alpha * min_ratio)).ceil() as u64)
        .collect();
    let (outcome, _) = run_walk(g, s, p, cfg, &sampler, &quotas, &quotas, false)?;
    Ok(outcome)
}

/// k walks of length `p.ell` from `sources`. With the stitching parameters
/// in range, one Phase 1 feeds sequential stitching per source and no
/// coupon is reused across walks, so the walks are independent. When
/// lambda leaves no room for a stitch the walks run naively and
/// concurrently.
///
/// Returns per-walk outcomes (whose stats cover that walk's own stitching
/// rounds) and the aggregate stats of the whole run including Phase 1.
pub fn many_random_walks(
    g: &Graph,
    sources: &[NodeId],
    p: &WalkParams,
    cfg: &SimConfig,
) -> Result<(Vec<WalkOutcome>, RoundStats), WalkError> {
    let (outcomes, _, stats) = many_walks_inner(g, sources, p, cfg, false)?;
    Ok((outcomes, stats))
}

/// [`many_random_walks`] with traces retained for regeneration.
pub fn many_random_walks_recorded(
    g: &Graph,
    sources: &[NodeId],
    p: &WalkParams,
    cfg: &SimConfig,
) -> Result<(Vec<WalkOutcome>, Vec<WalkRecord>, RoundStats), WalkError> {
    many_walks_inner(g, sources, p, cfg, true)
}

fn many_walks_inner(
    g: &Graph,
    sources: &[NodeId],
    p: &WalkParams,
    cfg: &SimConfig,
    trace: bool,
) -> Result<(Vec<WalkOutcome>, Vec<WalkRecord>, RoundStats), WalkError> {
    if sources.is_empty() {
        return Err(WalkError::InvalidParams("no sources".into()));
    }
    let k = sources.len();
    if p.ell == 0 {
        let pairs: Vec<_> = sources.iter().map(|&s| empty_walk(s)).collect();
        let (outcomes, records) = pairs.into_iter().unzip();
        return Ok((outcomes, records, RoundStats::default()));
    }

    if !p.stitching_enabled() {
        // Naive and concurrent: min-counter scheduling interleaves tokens.
        let naive_params = WalkParams {
            lambda: p.ell,
            ..*p
        };
        naive_params.validate(g)?;
        let sampler = StepSampler::Simple;
        let specs: Vec<TokenSpec> = sources
            .iter()
            .enumerate()
            .map(|(i, &s)| TokenSpec {
                walk: i as u32,
                source: s,
                start: s,
                start_completed: 0,
                target: p.ell,
            })
            .collect();
        let run = run_tokens(g, specs, &sampler, trace, cfg, "naive")?;
        let mut outcomes = Vec::with_capacity(k);
        let mut records = Vec::with_capacity(k);
        for (i, &s) in sources.iter().enumerate() {
            let destination = run.destinations[i];
            outcomes.push(WalkOutcome {
                source: s,
                destination,
                connectors: vec![s],
                positions: None,
                visit_counts: None,
                stats: RoundStats::default(),
            });
            records.push(WalkRecord {
                source: s,
                ell: p.ell,
                destination,
                connectors: vec![s],
                stitched: Vec::new(),
                tail: run.trails.as_ref().map(|t| TailRecord {
                    start_index: 0,
                    path: t[i].clone(),
                }),
                traces: trace.then(HashMap::new),
            });
        }
        return Ok((outcomes, records, run.stats));
    }

    p.validate(g)?;
    let mut driver = WalkDriver::new(g, cfg);
    let mut aggregate = RoundStats::default();
    let sampler = StepSampler::Simple;
    let quotas = simple_quotas(g, p.eta);
    let smc = vec![p.eta; g.n()];
    let mut placement = {
        let mut proto = Phase1Protocol::new(
            g,
            p.lambda,
            &quotas,
            &sampler,
            Placement::new(g.n(), trace),
        );
        driver.run(&mut aggregate, "phase1", &mut proto)?;
        proto.placement
    };

    let mut outcomes = Vec::with_capacity(k);
    let mut records = Vec::with_capacity(k);
    for &s in sources {
        let mut walk_stats = RoundStats::default();
        let record = stitch_one_walk(
            &mut driver,
            &mut walk_stats,
            &mut placement,
            &sampler,
            &smc,
            p,
            s,
            trace,
        )?;
        outcomes.push(WalkOutcome {
            source: s,
            destination: record.destination,
            connectors: record.connectors.clone(),
            positions: None,
            visit_counts: None,
            stats: walk_stats.clone(),
        });
        aggregate.absorb(walk_stats);
        records.push(record);
    }
    Ok((outcomes, records, aggregate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn zero_length_walk_is_free() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::new(0, 1, 1);
        let cfg = SimConfig::for_graph(&g, 1);
        let out = single_random_walk(&g, 5, &p, &cfg).unwrap();
        assert_eq!(out.destination, 5);
        assert_eq!(out.stats.rounds_total, 0);
    }

    #[test]
    fn stitched_walk_structure() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams::new(12, 3, 2);
        let cfg = SimConfig::for_graph(&g, 42);
        let (out, record) = single_random_walk_recorded(&g, 0, &p, &cfg).unwrap();
        assert!(!record.stitched.is_empty(), "lambda 3 on ell 12 stitches");
        // Stitched segments tile a prefix: base of each equals the running
        // total, every length is in [lambda, 2*lambda - 1].
        let mut base = 0u64;
        for seg in &record.stitched {
            assert_eq!(seg.base, base);
            assert!((3..=5).contains(&seg.length));
            base += seg.length as u64;
        }
        assert!(base > 12 - 2 * 3, "loop exits only past ell - 2*lambda");
        // Connectors are the stitch endpoints.
        assert_eq!(record.connectors.len(), record.stitched.len() + 1);
        assert_eq!(out.destination, record.destination);
        // Tail covers the remainder.
        let tail = record.tail.as_ref().unwrap();
        assert_eq!(tail.start_index, base);
        assert_eq!(tail.path.len() as u64, 12 - base + 1);
    }

    #[test]
    fn walk_is_deterministic() {
        let g = generate(GraphKind::Grid, 16, 0).unwrap();
        let p = WalkParams::new(20, 3, 1);
        let cfg = SimConfig::for_graph(&g, 7);
        let a = single_random_walk(&g, 0, &p, &cfg).unwrap();
        let b = single_random_walk(&g, 0, &p, &cfg).unwrap();
        assert_eq!(a.destination, b.destination);
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.connectors, b.connectors);
    }

    #[test]
    fn exhaustion_triggers_coupon_regeneration() {
        // eta = 1 on a tiny cycle with a long walk exhausts the source's
        // coupons quickly; the walk must still complete.
        let g = generate(GraphKind::Cycle, 4, 0).unwrap();
        let p = WalkParams::new(16, 2, 1);
        let cfg = SimConfig::for_graph(&g, 3);
        let out = single_random_walk(&g, 0, &p, &cfg).unwrap();
        assert!(out.stats.per_phase.contains_key("stitch"));
        assert!(out.destination < 4);
    }

    #[test]
    fn many_naive_mode_runs_concurrently() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        // Default many-walk lambda is far beyond ell at this scale.
        let p = WalkParams::for_many(&g, 8, 3);
        assert!(!p.stitching_enabled());
        let cfg = SimConfig::for_graph(&g, 5);
        let (outcomes, stats) = many_random_walks(&g, &[0, 0, 0], &p, &cfg).unwrap();
        assert_eq!(outcomes.len(), 3);
        assert!(stats.rounds_total >= 8);
        assert!(stats.rounds_total < 8 + 3 * 8);
    }

    #[test]
    fn many_stitched_share_one_phase1() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        let p = WalkParams {
            ell: 10,
            lambda: 2,
            eta: 2,
            k: 2,
        };
        let cfg = SimConfig::for_graph(&g, 9);
        let (outcomes, stats) = many_random_walks(&g, &[0, 4], &p, &cfg).unwrap();
        assert_eq!(outcomes.len(), 2);
        assert_eq!(stats.per_phase.get("phase1").copied().iter().len(), 1);
        assert!(stats.per_phase["phase1"] > 0);
        for o in &outcomes {
            assert!(!o.stats.per_phase.contains_key("phase1"));
        }
    }

    #[test]
    fn mh_symmetric_one_step() {
        // pi proportional to degree, alpha 1/2 on a cycle: one step is
        // 1/4 to each neighbor, 1/2 stay.
        let g = generate(GraphKind::Cycle, 6, 0).unwrap();
        let pi: Vec<f64> = (0..6).map(|v| g.degree(v) as f64).collect();
        let p = WalkParams::new(1, 1, 1);
        let mut counts = [0u64; 6];
        for seed in 0..4000 {
            let cfg = SimConfig::for_graph(&g, seed);
            let out = mh_random_walk(&g, 0, &pi, 0.5, &p, &cfg).unwrap();
            counts[out.destination] += 1;
        }
        let freq = |v: usize| counts[v] as f64 / 4000.0;
        assert!((freq(0) - 0.5).abs() < 0.03);
        assert!((freq(1) - 0.25).abs() < 0.03);
        assert!((freq(5) - 0.25).abs() < 0.03);
    }
}
