//! Command-line driver: generate topologies, dump rings, run scenarios,
//! sweep parameter grids, and turn ledgers into report CSVs.
//!
//! Exit codes: 0 on success, 2 on validation errors, 3 when topology
//! generation fails, 1 on I/O trouble.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ringcast::baselines::{route_naive_ring, route_on_tree, route_td};
use ringcast::metrics::{self, SweepGrid};
use ringcast::ring::{build_ring, ShortcutExpansion};
use ringcast::sim::{
    AppAction, AppEvent, Engine, RootPolicy, Scenario, SimError, TopologySource, TraceLedger,
};
use ringcast::topology::{
    build_tree, central_node, generate_er, select_links, Graph, LinkSelection, TopologyError,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_GENERATION: u8 = 3;

#[derive(Parser)]
#[command(name = "ringcast", version, about = "Pub/sub routing lab on virtual ring overlays")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a connected random topology and print or save it.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long = "edge-prob")]
        edge_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the virtual ring for a topology and print its dump.
    Ring {
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long = "edge-prob")]
        edge_prob: Option<f64>,
        /// Load the topology from a graph file instead of generating one.
        #[arg(long, conflicts_with_all = ["nodes", "edge_prob"])]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "degree-cap")]
        degree_cap: Option<usize>,
        /// Root node id; defaults to the graph center.
        #[arg(long)]
        root: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario (from file or assembled from flags) and write the
    /// trace ledger plus the per-publication summary.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long = "edge-prob")]
        edge_prob: Option<f64>,
        /// Number of subscriber nodes for the assembled scenario.
        #[arg(long)]
        subscribers: Option<usize>,
        #[arg(long, default_value_t = 1)]
        channels: u8,
        #[arg(long, default_value_t = 0.0)]
        loss: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        duration: Option<u64>,
        #[arg(long = "delta-s")]
        delta_s: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the analytic routers over a parameter grid.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        nodes: Vec<usize>,
        #[arg(long = "edge-prob", value_delimiter = ',', required = true)]
        edge_prob: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        subscribers: Vec<usize>,
        /// Number of seeds per cell (0..N).
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long = "degree-cap")]
        degree_cap: Option<usize>,
        #[arg(long, default_value_t = 5)]
        publishers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive report CSVs (histogram, delivery ratio, summary, gains) from a
    /// ledger file.
    Report {
        #[arg(long)]
        ledger: PathBuf,
        /// Window length for the delivery-ratio series.
        #[arg(long, default_value_t = 100)]
        window: u64,
        /// Scenario the ledger came from; required for --baseline gains.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<Baseline>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Baseline {
    Ring,
    Td,
    Ts,
    Shen,
}

enum CliError {
    Validation(String),
    Generation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Generation(_) => EXIT_GENERATION,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Generation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::GenerationFailed { .. } | TopologyError::SelectionFailed { .. } => {
                CliError::Generation(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Topology(inner) => inner.into(),
            SimError::Validation(_) | SimError::ChurnInvalid { .. } => {
                CliError::Validation(e.to_string())
            }
            SimError::TopologyFile { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Gen { nodes, edge_prob, seed, out } => {
            let g = generate_er(nodes, edge_prob, seed)?;
            emit(out.as_deref(), "graph.txt", &g.to_text())
        }
        Cmd::Ring { nodes, edge_prob, graph, seed, degree_cap, root, out } => {
            let g = match (graph, nodes, edge_prob) {
                (Some(path), _, _) => {
                    let text = std::fs::read_to_string(&path)?;
                    Graph::from_text(&text)?
                }
                (None, Some(n), Some(p)) => generate_er(n, p, seed)?,
                _ => {
                    return Err(CliError::Validation(
                        "provide --graph or both --nodes and --edge-prob".into(),
                    ))
                }
            };
            let sel = match degree_cap {
                Some(cap) => select_links(&g, cap, seed)?,
                None => LinkSelection::all(&g),
            };
            let root = match root {
                Some(r) if r < g.node_count() => r,
                Some(r) => {
                    return Err(CliError::Validation(format!("root {r} out of range")));
                }
                None => central_node(&g),
            };
            let tree = build_tree(&sel, root);
            let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
            emit(out.as_deref(), "ring.txt", &ring.to_dump())
        }
        Cmd::Run { scenario, nodes, edge_prob, subscribers, channels, loss, seed, duration, delta_s, out } => {
            let sc = match scenario {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    Scenario::from_json(&text)
                        .map_err(|e| CliError::Validation(format!("scenario: {e}")))?
                }
                None => {
                    let (Some(n), Some(p), Some(s)) = (nodes, edge_prob, subscribers) else {
                        return Err(CliError::Validation(
                            "provide --scenario or --nodes, --edge-prob and --subscribers".into(),
                        ));
                    };
                    assemble_scenario(n, p, s, channels, loss, seed, duration, delta_s)?
                }
            };
            let ledger = ringcast::sim::run(&sc)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("scenario.json"), sc.to_json())?;
            std::fs::write(out.join("ledger.jsonl"), ledger.to_jsonl())?;
            std::fs::write(out.join("summary.csv"), ledger.summary_csv())?;
            println!(
                "run complete: {} publications, {} transmissions, ledger in {}",
                ledger.publications().len(),
                ledger.pub_tx_total(),
                out.display()
            );
            Ok(())
        }
        Cmd::Sweep { nodes, edge_prob, subscribers, seeds, degree_cap, publishers, out } => {
            let grid = SweepGrid {
                nodes,
                edge_probs: edge_prob,
                subscriber_counts: subscribers,
                seeds: (0..seeds).collect(),
                degree_cap,
                publishers_per_instance: publishers,
            };
            let report =
                metrics::sweep(&grid).map_err(|e| CliError::Validation(e.to_string()))?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("cells.csv"), report.cells_csv())?;
            std::fs::write(out.join("aggregate.csv"), report.aggregate_csv())?;
            if !report.skipped.is_empty() {
                std::fs::write(out.join("skipped.txt"), report.skipped.join("\n") + "\n")?;
            }
            println!(
                "sweep complete: {} rows, {} skipped cells, CSV in {}",
                report.rows.len(),
                report.skipped.len(),
                out.display()
            );
            Ok(())
        }
        Cmd::Report { ledger, window, scenario, baseline, out } => {
            let text = std::fs::read_to_string(&ledger)?;
            let ledger = TraceLedger::from_jsonl(&text)
                .map_err(|e| CliError::Validation(format!("ledger: {e}")))?;
            if window == 0 {
                return Err(CliError::Validation("window must be positive".into()));
            }
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("histogram.csv"), metrics::hop_histogram(&ledger).to_csv())?;
            let ratios = metrics::delivery_ratio(&ledger, window);
            std::fs::write(out.join("delivery_ratio.csv"), metrics::delivery_ratio_csv(&ratios))?;
            std::fs::write(out.join("summary.csv"), ledger.summary_csv())?;
            if let Some(baseline) = baseline {
                let Some(path) = scenario else {
                    return Err(CliError::Validation(
                        "--baseline needs --scenario to rebuild the topology".into(),
                    ));
                };
                let text = std::fs::read_to_string(&path)?;
                let sc = Scenario::from_json(&text)
                    .map_err(|e| CliError::Validation(format!("scenario: {e}")))?;
                let gains = baseline_gains(&sc, &ledger, baseline)?;
                std::fs::write(out.join("gain.csv"), gains)?;
            }
            println!("report written to {}", out.display());
            Ok(())
        }
    }
}

fn emit(out: Option<&Path>, name: &str, content: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Standard scenario from flags: the chosen subscribers all subscribe at the
/// start, one non-subscriber publishes periodically after the tables have had
/// time to settle.
#[allow(clippy::too_many_arguments)]
fn assemble_scenario(
    n: usize,
    p: f64,
    s: usize,
    channels: u8,
    loss: f64,
    seed: u64,
    duration: Option<u64>,
    delta_s: Option<u64>,
) -> Result<Scenario, CliError> {
    if s >= n {
        return Err(CliError::Validation(format!(
            "need at least one non-subscriber: s={s} with n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00C1_1E57);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let subscribers: BTreeSet<usize> = ids.iter().copied().take(s).collect();
    let publisher = (0..n).find(|v| !subscribers.contains(v)).expect("non-subscriber exists");
    let l = 2 * (n - 1) as u64;
    let start = 2 * n as u64 + 10;
    let gap = l.max(20);
    let duration = duration.unwrap_or(start + 20 * gap);
    let mut apps: Vec<AppEvent> = subscribers
        .iter()
        .map(|&v| AppEvent { time: 0, node: v, action: AppAction::Subscribe { channel: 0 } })
        .collect();
    let mut t = start;
    while t < duration {
        apps.push(AppEvent { time: t, node: publisher, action: AppAction::Publish { channel: 0, size: 8 } });
        t += gap;
    }
    Ok(Scenario {
        topology: TopologySource::Generate { nodes: n, edge_prob: p },
        degree_cap: None,
        root: RootPolicy::Central,
        channels,
        apps,
        faults: vec![],
        loss,
        per_hop_delay: 1,
        delta_s,
        t_clean: None,
        t_wback: None,
        rebuild_latency: 0,
        duration,
        seed,
        forwarding_bound: Default::default(),
        shortcut_expansion: Default::default(),
    })
}

/// Per-publication gain of the simulated run against an analytically routed
/// baseline on the same topology and subscriber placement.
fn baseline_gains(
    sc: &Scenario,
    ledger: &TraceLedger,
    baseline: Baseline,
) -> Result<String, CliError> {
    let engine = Engine::new(sc.clone())?;
    let ring = engine.ring().clone();
    let tree = engine.tree();
    let graph = match &sc.topology {
        TopologySource::Generate { nodes, edge_prob } => generate_er(*nodes, *edge_prob, sc.seed)?,
        TopologySource::File { path } => {
            let text = std::fs::read_to_string(path)?;
            Graph::from_text(&text)?
        }
        TopologySource::Edges { nodes, edges } => Graph::new(*nodes, edges.iter().copied())?,
    };
    let mut out = String::from("pub_id,channel,publisher,ringcast_tx,baseline_tx,gain_pct\n");
    for p in ledger.publications() {
        // Ground truth at publish time: the snapshot recorded in the ledger.
        let subs: BTreeSet<usize> = p.expected.iter().copied().collect();
        let a = match baseline {
            Baseline::Ring => route_naive_ring(&ring, p.origin, &subs).transmissions,
            Baseline::Td => route_td(&graph, p.origin, &subs).transmissions,
            Baseline::Ts | Baseline::Shen => route_on_tree(tree, p.origin, &subs).transmissions,
        };
        let b = p.tx_count();
        let gain = metrics::gain(b, a).map(|g| format!("{g:.2}")).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{},{}\n", p.pub_id, p.channel, p.origin, b, a, gain));
    }
    Ok(out)
}
