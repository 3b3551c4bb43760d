//! Experiment metrics and the parameter-sweep driver.
//!
//! The message gain of run B against baseline A is `100*B/A - 100` percent:
//! negative when B needs fewer messages. Sweeps evaluate the analytic
//! routers over a grid of graph sizes, densities, and subscriber counts and
//! emit plot-ready CSV.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{route_naive_ring, route_on_tree, route_td, RingcastEvaluator};
use crate::pubsub::Tick;
use crate::ring::{build_ring, ShortcutExpansion};
use crate::sim::TraceLedger;
use crate::topology::{build_tree, central_node, generate_er, select_links, LinkSelection, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("gain is undefined for a zero baseline count")]
    UndefinedGain,
    #[error("sweep grid is empty")]
    EmptyGrid,
}

/// `100*B/A - 100`, the relative message overhead of B against A in percent.
pub fn gain(b: u64, a: u64) -> Result<f64, MetricsError> {
    if a == 0 {
        return Err(MetricsError::UndefinedGain);
    }
    Ok(100.0 * b as f64 / a as f64 - 100.0)
}

/// Gain rendered with two decimals, as reported in the tables.
pub fn gain_str(b: u64, a: u64) -> Result<String, MetricsError> {
    Ok(format!("{:.2}", gain(b, a)?))
}

pub fn median_of(mut xs: Vec<f64>) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

fn quartile(sorted: &[f64], f: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * f).round() as usize;
    sorted[idx]
}

/// Hop-count distribution over all deliveries in a ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct HopHistogram {
    /// Count per hop distance, dense from 1 to the maximum observed.
    pub bins: Vec<(u32, u64)>,
    pub mean: f64,
    pub total: u64,
}

pub fn hop_histogram(ledger: &TraceLedger) -> HopHistogram {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut sum = 0u64;
    for p in ledger.publications() {
        for &(_, _, hops) in &p.deliveries {
            *counts.entry(hops).or_default() += 1;
            total += 1;
            sum += hops as u64;
        }
    }
    let max = counts.keys().max().copied().unwrap_or(0);
    let bins = (1..=max).map(|h| (h, counts.get(&h).copied().unwrap_or(0))).collect();
    let mean = if total == 0 { 0.0 } else { sum as f64 / total as f64 };
    HopHistogram { bins, mean, total }
}

impl HopHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hops,count\n");
        for (h, c) in &self.bins {
            out.push_str(&format!("{h},{c}\n"));
        }
        out
    }
}

/// Delivery ratio for one time window, publications attributed to the window
/// they were issued in.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRatio {
    pub start: Tick,
    pub end: Tick,
    pub expected: u64,
    pub delivered: u64,
    /// Percent, absent when the window saw no expected deliveries.
    pub ratio: Option<f64>,
    /// Epoch labels that fall inside the window.
    pub epochs: Vec<String>,
}

pub fn delivery_ratio(ledger: &TraceLedger, window: Tick) -> Vec<WindowRatio> {
    assert!(window > 0, "window must be positive");
    let horizon = ledger.final_time();
    let mut out = Vec::new();
    let mut start = 0;
    while start < horizon {
        let end = (start + window).min(horizon);
        let mut expected = 0u64;
        let mut delivered = 0u64;
        for p in ledger.publications() {
            if p.time >= start && p.time < end {
                expected += p.expected.len() as u64;
                let got = p.delivered_nodes();
                delivered += p.expected.intersection(&got).count() as u64;
            }
        }
        let epochs = ledger
            .epochs()
            .iter()
            .filter(|(t, _)| *t >= start && *t < end)
            .map(|(_, l)| l.to_string())
            .collect();
        let ratio = if expected > 0 { Some(100.0 * delivered as f64 / expected as f64) } else { None };
        out.push(WindowRatio { start, end, expected, delivered, ratio, epochs });
        start = end;
    }
    out
}

pub fn delivery_ratio_csv(windows: &[WindowRatio]) -> String {
    let mut out = String::from("start,end,expected,delivered,ratio_pct,epochs\n");
    for w in windows {
        let ratio = w.ratio.map(|r| format!("{r:.2}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            w.start,
            w.end,
            w.expected,
            w.delivered,
            ratio,
            w.epochs.join(";")
        ));
    }
    out
}

/// Grid of sweep cells: every combination of size, density, subscriber count
/// and seed becomes one instance.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub nodes: Vec<usize>,
    pub edge_probs: Vec<f64>,
    pub subscriber_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub degree_cap: Option<usize>,
    /// Publishers sampled per instance (capped by the node count).
    pub publishers_per_instance: usize,
}

/// One routed publication inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub p: f64,
    pub s: usize,
    pub seed: u64,
    pub publisher: NodeId,
    pub ringcast_tx: u64,
    pub td_tx: u64,
    pub ts_tx: u64,
    pub shen_tx: u64,
    pub ring_tx: u64,
    pub ringcast_mean_hops: f64,
    pub shen_mean_hops: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Cells that could not be generated, with the reason.
    pub skipped: Vec<String>,
}

/// Runs the grid. Cells execute in parallel; the report is ordered by cell
/// key, so output is reproducible byte-for-byte.
pub fn sweep(grid: &SweepGrid) -> Result<SweepReport, MetricsError> {
    if grid.nodes.is_empty()
        || grid.edge_probs.is_empty()
        || grid.subscriber_counts.is_empty()
        || grid.seeds.is_empty()
    {
        return Err(MetricsError::EmptyGrid);
    }
    let mut cells = Vec::new();
    for &n in &grid.nodes {
        for &p in &grid.edge_probs {
            for &s in &grid.subscriber_counts {
                for &seed in &grid.seeds {
                    cells.push((n, p, s, seed));
                }
            }
        }
    }
    let results: Vec<Result<Vec<SweepRow>, String>> = cells
        .par_iter()
        .map(|&(n, p, s, seed)| run_cell(grid, n, p, s, seed))
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(mut cell_rows) => rows.append(&mut cell_rows),
            Err(note) => skipped.push(note),
        }
    }
    Ok(SweepReport { rows, skipped })
}

fn run_cell(
    grid: &SweepGrid,
    n: usize,
    p: f64,
    s: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, String> {
    let key = format!("n={n} p={p} s={s} seed={seed}");
    if s > n {
        return Err(format!("{key}: more subscribers than nodes"));
    }
    let g = generate_er(n, p, seed).map_err(|e| format!("{key}: {e}"))?;
    let sel = match grid.degree_cap {
        Some(cap) => select_links(&g, cap, seed ^ 0xA5A5).map_err(|e| format!("{key}: {e}"))?,
        None => LinkSelection::all(&g),
    };
    let effective =
        crate::topology::Graph::new(g.node_count(), sel.kept_edges()).expect("kept graph connected");
    let root = central_node(&effective);
    let tree = build_tree(&sel, root);
    let ring = std::sync::Arc::new(build_ring(&tree, &sel, ShortcutExpansion::AllPairs));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517C_C1B7_2722_0A95);
    let mut ids: Vec<NodeId> = (0..n).collect();
    ids.shuffle(&mut rng);
    let subscribers: BTreeSet<NodeId> = ids.iter().copied().take(s).collect();
    let mut publishers: Vec<NodeId> = (0..n).collect();
    publishers.shuffle(&mut rng);
    publishers.truncate(grid.publishers_per_instance.max(1).min(n));
    publishers.sort_unstable();

    let mut eval = RingcastEvaluator::new(ring.clone(), &subscribers);
    let mut rows = Vec::new();
    for publisher in publishers {
        let routed = eval.route(publisher);
        let td = route_td(&effective, publisher, &subscribers);
        let ts = route_on_tree(&tree, publisher, &subscribers);
        let shen = ts.clone();
        let naive = route_naive_ring(&ring, publisher, &subscribers);
        let mean = |hops: &BTreeMap<NodeId, u32>| {
            if hops.is_empty() {
                0.0
            } else {
                hops.values().map(|&h| h as f64).sum::<f64>() / hops.len() as f64
            }
        };
        rows.push(SweepRow {
            n,
            p,
            s,
            seed,
            publisher,
            ringcast_tx: routed.transmissions,
            td_tx: td.transmissions,
            ts_tx: ts.transmissions,
            shen_tx: shen.transmissions,
            ring_tx: naive.transmissions,
            ringcast_mean_hops: mean(&routed.hops),
            shen_mean_hops: mean(&shen.hops),
        });
    }
    Ok(rows)
}

impl SweepReport {
    pub fn cells_csv(&self) -> String {
        let mut out = String::from(
            "n,p,s,seed,publisher,ringcast_tx,td_tx,ts_tx,shen_tx,ring_tx,gain_vs_td,gain_vs_ts,gain_vs_shen,gain_vs_ring\n",
        );
        for r in &self.rows {
            let g = |b: u64, a: u64| {
                gain(b, a).map(|v| format!("{v:.2}")).unwrap_or_default()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.p,
                r.s,
                r.seed,
                r.publisher,
                r.ringcast_tx,
                r.td_tx,
                r.ts_tx,
                r.shen_tx,
                r.ring_tx,
                g(r.ringcast_tx, r.td_tx),
                g(r.ringcast_tx, r.ts_tx),
                g(r.ringcast_tx, r.shen_tx),
                g(r.ringcast_tx, r.ring_tx),
            ));
        }
        out
    }

    /// Gains of the ring protocol against the per-source trees, grouped into
    /// `(n, p, s)` cells with mean and quartiles.
    pub fn aggregate_csv(&self) -> String {
        let mut groups: BTreeMap<(usize, u64, usize), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            if let Ok(g) = gain(r.ringcast_tx, r.td_tx) {
                groups.entry((r.n, (r.p * 1_000_000.0) as u64, r.s)).or_default().push(g);
            }
        }
        let mut out = String::from("n,p,s,count,gain_td_mean,gain_td_q1,gain_td_median,gain_td_q3\n");
        for ((n, p_micro, s), mut gains) in groups {
            gains.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = gains.iter().sum::<f64>() / gains.len() as f64;
            out.push_str(&format!(
                "{},{},{},{},{:.2},{:.2},{:.2},{:.2}\n",
                n,
                p_micro as f64 / 1_000_000.0,
                s,
                gains.len(),
                mean,
                quartile(&gains, 0.25),
                quartile(&gains, 0.5),
                quartile(&gains, 0.75),
            ));
        }
        out
    }

    pub fn mean_gain_vs_td(&self) -> Option<f64> {
        let gains: Vec<f64> =
            self.rows.iter().filter_map(|r| gain(r.ringcast_tx, r.td_tx).ok()).collect();
        if gains.is_empty() {
            None
        } else {
            Some(gains.iter().sum::<f64>() / gains.len() as f64)
        }
    }

    /// Median gain against the per-source trees for one density.
    pub fn median_gain_vs_td_at(&self, p: f64) -> Option<f64> {
        let gains: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| (r.p - p).abs() < 1e-9)
            .filter_map(|r| gain(r.ringcast_tx, r.td_tx).ok())
            .collect();
        if gains.is_empty() {
            None
        } else {
            Some(median_of(gains))
        }
    }

    /// Median gain against the naive full-ring traversal for one density.
    pub fn median_gain_vs_ring_at(&self, p: f64) -> Option<f64> {
        let gains: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| (r.p - p).abs() < 1e-9)
            .filter_map(|r| gain(r.ringcast_tx, r.ring_tx).ok())
            .collect();
        if gains.is_empty() {
            None
        } else {
            Some(median_of(gains))
        }
    }
}
