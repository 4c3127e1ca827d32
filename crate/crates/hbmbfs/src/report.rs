//! JSON and CSV run reports.

use std::io::Write;

use hbmbfs_core::sim::MessageCounters;
use hbmbfs_core::{Level, ModePolicy, SimConfig, SimReport, SimRun, VertexId, UNREACHED};
use serde::{Deserialize, Serialize};

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub graph_path: String,
    pub config_path: Option<String>,
    pub roots: Vec<VertexId>,
    /// Root-selection seed; `None` when roots were given explicitly.
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRun {
    pub root: VertexId,
    pub reached: u64,
    /// FNV-1a over the level array; equal checksums mean equal BFS results.
    pub levels_checksum: u64,
    pub report: SimReport,
    pub counters: MessageCounters,
}

impl RootRun {
    pub fn new(root: VertexId, run: &SimRun) -> Self {
        Self {
            root,
            reached: run.levels.iter().filter(|&&l| l != UNREACHED).count() as u64,
            levels_checksum: levels_checksum(&run.levels),
            report: run.report.clone(),
            counters: run.counters,
        }
    }
}

pub fn levels_checksum(levels: &[Level]) -> u64 {
    levels
        .iter()
        .flat_map(|l| l.to_le_bytes())
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn mean_gteps(runs: &[RootRun]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    runs.iter().map(|r| r.report.gteps).sum::<f64>() / runs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub config: SimConfig,
    pub runs: Vec<RootRun>,
    pub mean_gteps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRun {
    pub name: String,
    pub policy: ModePolicy,
    pub runs: Vec<RootRun>,
    pub mean_gteps: f64,
    pub edges_examined: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: String,
    pub denominator: String,
    pub gteps_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub manifest: RunManifest,
    pub config: SimConfig,
    pub modes: Vec<ModeRun>,
    /// Every mode produced the same levels for every root.
    pub levels_identical: bool,
    pub ratios: Vec<Ratio>,
}

impl CompareReport {
    pub fn new(manifest: RunManifest, config: SimConfig, modes: Vec<ModeRun>) -> Self {
        let checksums = |m: &ModeRun| m.runs.iter().map(|r| r.levels_checksum).collect::<Vec<_>>();
        let levels_identical = modes.windows(2).all(|w| checksums(&w[0]) == checksums(&w[1]));
        let mut ratios = Vec::new();
        for (i, a) in modes.iter().enumerate() {
            for b in &modes[i + 1..] {
                ratios.push(Ratio {
                    numerator: a.name.clone(),
                    denominator: b.name.clone(),
                    gteps_ratio: a.mean_gteps / b.mean_gteps,
                });
            }
        }
        Self {
            manifest,
            config,
            modes,
            levels_identical,
            ratios,
        }
    }
}

#[derive(Debug, Default, Serialize)]
struct CsvRow {
    row: &'static str,
    root: VertexId,
    level: Option<Level>,
    mode: Option<&'static str>,
    cycles: Option<u64>,
    bytes_read: Option<u64>,
    bandwidth_gbps: Option<f64>,
    active_or_unvisited_count: Option<u64>,
    edges_examined: Option<u64>,
    vertices_activated: Option<u64>,
    offset_words_read: Option<u64>,
    total_cycles: Option<u64>,
    wall_time_s: Option<f64>,
    traversed_edges: Option<u64>,
    gteps: Option<f64>,
    aggregated_bandwidth_gbps: Option<f64>,
}

/// One `iteration` row per BFS level and one `summary` row per root.
pub fn write_csv(w: impl Write, runs: &[RootRun]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for run in runs {
        for it in &run.report.per_iteration {
            out.serialize(CsvRow {
                row: "iteration",
                root: run.root,
                level: Some(it.level),
                mode: Some(match it.stats.mode {
                    hbmbfs_core::Mode::Push => "push",
                    hbmbfs_core::Mode::Pull => "pull",
                }),
                cycles: Some(it.cycles),
                bytes_read: Some(it.bytes_read),
                bandwidth_gbps: Some(it.bandwidth_gbps),
                active_or_unvisited_count: Some(it.stats.active_or_unvisited_count),
                edges_examined: Some(it.stats.edges_examined),
                vertices_activated: Some(it.stats.vertices_activated),
                offset_words_read: Some(it.stats.offset_words_read),
                ..CsvRow::default()
            })?;
        }
        let r = &run.report;
        out.serialize(CsvRow {
            row: "summary",
            root: run.root,
            bytes_read: Some(r.per_pc_bytes_read.iter().sum()),
            total_cycles: Some(r.total_cycles),
            wall_time_s: Some(r.wall_time_s),
            traversed_edges: Some(r.traversed_edges),
            gteps: Some(r.gteps),
            aggregated_bandwidth_gbps: Some(r.aggregated_bandwidth_gbps),
            ..CsvRow::default()
        })?;
    }
    out.flush()?;
    Ok(())
}
