use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hbmbfs::report::{mean_gteps, write_csv, ModeRun};
use hbmbfs::{
    parse_edge_list, read_graph, select_roots, write_graph, CompareReport, RootRun, RunManifest, RunReport,
};
use hbmbfs_core::perf::{sweep, PerfParams};
use hbmbfs_core::{run_simulation, Graph, ModePolicy, RmatConfig, SimConfig, VertexId};
use serde::Serialize;

/// Model of a bitmap BFS accelerator on multi-channel HBM.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an RMAT graph and write it as a binary graph file.
    GenRmat {
        #[arg(long)]
        scale: u32,
        /// Undirected edges per vertex before doubling.
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = 0.57)]
        a: f64,
        #[arg(long, default_value_t = 0.19)]
        b: f64,
        #[arg(long, default_value_t = 0.19)]
        c: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Keep generator labels instead of applying the seeded permutation.
        #[arg(long)]
        no_permute: bool,
        /// Drop duplicate edges.
        #[arg(long)]
        dedup: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a text edge list to a binary graph file.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        /// Treat each line as an undirected edge and store both directions.
        #[arg(long)]
        undirected: bool,
        #[arg(long)]
        dedup: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate BFS from one or more roots.
    Run {
        #[command(flatten)]
        common: RunArgs,
        /// JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// CSV path: one row per iteration plus a summary row per root.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sweep the analytic performance model.
    Model {
        #[arg(long, value_enum, default_value_t = SweepAxis::Pe)]
        sweep: SweepAxis,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        pes: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        len_nl: Vec<f64>,
        /// JSON file with model parameters; missing keys take defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the same roots under several scheduling modes.
    Compare {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "hybrid,push,pull")]
        modes: Vec<ModeName>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepAxis {
    /// PEs per processing group.
    Pe,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeName {
    Hybrid,
    Push,
    Pull,
}

impl ModeName {
    fn name(self) -> &'static str {
        match self {
            Self::Hybrid => "hybrid",
            Self::Push => "push",
            Self::Pull => "pull",
        }
    }

    fn policy(self) -> ModePolicy {
        match self {
            Self::Hybrid => ModePolicy::hybrid(),
            Self::Push => ModePolicy::push_only(),
            Self::Pull => ModePolicy::pull_only(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    /// JSON simulator config; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "roots_file")]
    root: Option<VertexId>,
    /// Whitespace-separated root ids; `#` starts a comment line.
    #[arg(long)]
    roots_file: Option<PathBuf>,
    /// Roots to draw when none are given.
    #[arg(long, default_value_t = 64)]
    num_roots: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn save_graph(g: &Graph, out: &Path) -> Result<()> {
    write_graph(create(out)?, g).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} vertices, {} edges to {}", g.num_vertices(), g.num_edges(), out.display());
    Ok(())
}

fn parse_roots(text: &str) -> Result<Vec<VertexId>> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|w| w.parse().with_context(|| format!("bad root id {w:?}")))
        .collect()
}

struct Prepared {
    graph: Graph,
    config: SimConfig,
    roots: Vec<VertexId>,
    seed: Option<u64>,
}

fn prepare(args: &RunArgs) -> Result<Prepared> {
    let config: SimConfig = match &args.config {
        Some(p) => serde_json::from_reader(open(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SimConfig::default(),
    };
    config.validate().context("invalid config")?;
    let graph = read_graph(open(&args.graph)?).with_context(|| format!("reading {}", args.graph.display()))?;
    let (roots, seed) = match (args.root, &args.roots_file) {
        (Some(r), _) => (vec![r], None),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            (parse_roots(&text)?, None)
        }
        (None, None) => (select_roots(&graph, args.num_roots, args.seed), Some(args.seed)),
    };
    ensure!(!roots.is_empty(), "no roots: the graph has no vertex with outgoing edges");
    let n = graph.num_vertices();
    if let Some(&bad) = roots.iter().find(|&&r| r as usize >= n) {
        bail!("root {bad} out of range for {n} vertices");
    }
    Ok(Prepared {
        graph,
        config,
        roots,
        seed,
    })
}

/// Simulates every root, spreading roots over worker threads. Results keep
/// root order.
fn simulate(cfg: &SimConfig, g: &Graph, roots: &[VertexId], threads: Option<usize>) -> Result<Vec<RootRun>> {
    let workers = threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, roots.len().max(1));
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; roots.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&root) = roots.get(i) else { break };
                let run = run_simulation(cfg, g, root).map(|r| RootRun::new(root, &r));
                results.lock().unwrap()[i] = Some(run);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .zip(roots)
        .map(|(r, root)| r.expect("every root simulated").with_context(|| format!("simulating root {root}")))
        .collect()
}

fn manifest(args: &RunArgs, roots: &[VertexId], seed: Option<u64>, outputs: &[&Option<PathBuf>]) -> RunManifest {
    RunManifest {
        command: std::env::args().collect::<Vec<_>>().join(" "),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        graph_path: args.graph.display().to_string(),
        config_path: args.config.as_ref().map(|p| p.display().to_string()),
        roots: roots.to_vec(),
        seed,
        outputs: outputs.iter().filter_map(|o| o.as_ref()).map(|p| p.display().to_string()).collect(),
    }
}

fn run(common: &RunArgs, report: &Option<PathBuf>, csv_out: &Option<PathBuf>) -> Result<()> {
    let p = prepare(common)?;
    let runs = simulate(&p.config, &p.graph, &p.roots, common.threads)?;
    for r in &runs {
        let rep = &r.report;
        println!(
            "root {:>10}: {:8.3} GTEPS  {:>3} iterations  {:>10} cycles  {:>10} reached  {:7.2} GB/s",
            r.root,
            rep.gteps,
            rep.per_iteration.len(),
            rep.total_cycles,
            r.reached,
            rep.aggregated_bandwidth_gbps
        );
    }
    let mean = mean_gteps(&runs);
    println!("mean over {} roots: {mean:.3} GTEPS", runs.len());
    if let Some(path) = csv_out {
        write_csv(create(path)?, &runs).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = report {
        let out = RunReport {
            manifest: manifest(common, &p.roots, p.seed, &[report, csv_out]),
            config: p.config,
            runs,
            mean_gteps: mean,
        };
        write_json(path, &out)?;
    }
    Ok(())
}

fn compare(common: &RunArgs, modes: &[ModeName], report: &Option<PathBuf>) -> Result<()> {
    ensure!(!modes.is_empty(), "no modes given");
    let p = prepare(common)?;
    let mut results = Vec::new();
    for &m in modes {
        let cfg = SimConfig {
            mode_policy: m.policy(),
            ..p.config.clone()
        };
        let runs = simulate(&cfg, &p.graph, &p.roots, common.threads)?;
        let edges_examined = runs
            .iter()
            .flat_map(|r| &r.report.per_iteration)
            .map(|i| i.stats.edges_examined)
            .sum();
        let mean = mean_gteps(&runs);
        println!("{:>6}: {mean:8.3} GTEPS mean, {edges_examined} edges examined", m.name());
        results.push(ModeRun {
            name: m.name().to_string(),
            policy: m.policy(),
            runs,
            mean_gteps: mean,
            edges_examined,
        });
    }
    let out = CompareReport::new(manifest(common, &p.roots, p.seed, &[report]), p.config, results);
    for r in &out.ratios {
        println!("{}/{}: {:.3}x", r.numerator, r.denominator, r.gteps_ratio);
    }
    println!("levels identical across modes: {}", out.levels_identical);
    if let Some(path) = report {
        write_json(path, &out)?;
    }
    ensure!(out.levels_identical, "modes disagree on BFS levels");
    Ok(())
}

fn model(pes: &[u32], lens: &[f64], params: &Option<PathBuf>, out: &Option<PathBuf>) -> Result<()> {
    let base: PerfParams = match params {
        Some(p) => serde_json::from_reader(open(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => PerfParams::default(),
    };
    let s = sweep(&base, pes, lens).context("invalid model parameters")?;
    for (len, n_pe) in &s.argmax {
        println!("len_nl {len}: best n_pe {n_pe}");
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(create(path)?);
        for row in &s.rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenRmat {
            scale,
            degree,
            a,
            b,
            c,
            seed,
            no_permute,
            dedup,
            out,
        } => {
            let cfg = RmatConfig {
                scale,
                avg_degree: degree,
                a,
                b,
                c,
                seed,
                permute_labels: !no_permute,
            };
            let mut list = cfg.generate().context("invalid RMAT parameters")?.to_directed()?;
            if dedup {
                list.dedup();
            }
            save_graph(&Graph::build(&list)?, &out)
        }
        Command::Convert {
            input,
            undirected,
            dedup,
            out,
        } => {
            let mut list =
                parse_edge_list(open(&input)?, !undirected).with_context(|| format!("parsing {}", input.display()))?;
            if undirected {
                list = list.to_directed()?;
            }
            if dedup {
                list.dedup();
            }
            save_graph(&Graph::build(&list)?, &out)
        }
        Command::Run { common, report, csv } => run(&common, &report, &csv),
        Command::Model {
            sweep: SweepAxis::Pe,
            pes,
            len_nl,
            params,
            out,
        } => model(&pes, &len_nl, &params, &out),
        Command::Compare { common, modes, report } => compare(&common, &modes, &report),
    }
}
