use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spjoin_core::{Policy, TileJoiner};

mod commands;

/// Spatial joins over R-trees and grid partitions, plus a cycle-level model
/// of a multi-unit join accelerator.
#[derive(Debug, Parser)]
#[command(name = "spjoin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a uniform synthetic dataset as CSV.
    Gen(GenArgs),
    /// Bulk-load an R-tree (STR) and write it in the binary tree format.
    Index(IndexArgs),
    /// Partition two datasets into PBSM tiles and write a tile summary.
    Partition(PartitionArgs),
    /// Run a software spatial join.
    Join(JoinArgs),
    /// Simulate the accelerator on two datasets.
    Sim(SimArgs),
    /// Run benchmark experiments and write a stats CSV.
    Bench(BenchArgs),
    /// Check a tree file or a dataset CSV.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Zero-extent points instead of rectangles.
    #[arg(long)]
    points: bool,
    /// Region as `xmin,ymin,xmax,ymax`.
    #[arg(long, value_parser = parse_floats::<4>)]
    region: Option<[f32; 4]>,
    /// Object size as `w,h`.
    #[arg(long, value_parser = parse_floats::<2>)]
    size: Option<[f32; 2]>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// Dataset CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 16)]
    node_size: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Inputs {
    #[arg(long)]
    r: PathBuf,
    #[arg(long)]
    s: PathBuf,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Uniform grid with this many cells per side.
    #[arg(long, conflicts_with = "tile_size")]
    grid: Option<usize>,
    /// Uniform grid sized for about this many objects per tile.
    #[arg(long)]
    tile_size: Option<usize>,
    /// Hierarchical partitioning bound on sqrt(|R_i| * |S_i|); used when no
    /// uniform grid is requested.
    #[arg(long, default_value_t = 16)]
    max_geomean: u32,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    grid: GridArgs,
    /// Tile summary CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    NestedLoop,
    PlaneSweep,
    SyncDfs,
    SyncBfs,
    Pbsm,
    Pbsm1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JoinerArg {
    NestedLoop,
    PlaneSweep,
}

impl From<JoinerArg> for TileJoiner {
    fn from(j: JoinerArg) -> Self {
        match j {
            JoinerArg::NestedLoop => TileJoiner::NestedLoop,
            JoinerArg::PlaneSweep => TileJoiner::PlaneSweep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Static,
    Dynamic,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Static => Policy::Static,
            PolicyArg::Dynamic => Policy::Dynamic,
        }
    }
}

#[derive(Debug, Args)]
struct JoinArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 16)]
    node_size: usize,
    /// Prebuilt tree files for the sync traversals (skips bulk loading).
    #[arg(long, requires = "tree_s")]
    tree_r: Option<PathBuf>,
    #[arg(long, requires = "tree_r")]
    tree_s: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value = "static")]
    policy: PolicyArg,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value = "plane-sweep")]
    joiner: JoinerArg,
    /// Strip count for pbsm-1d.
    #[arg(long, default_value_t = 64)]
    strips: usize,
    /// Result CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Simulator settings. Applied in order: defaults, `--config`, `--set`,
/// then the dedicated flags.
#[derive(Debug, Args)]
struct SimFlags {
    /// Flat `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One `key=value` setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    units: Option<usize>,
    #[arg(long)]
    mem_latency: Option<u64>,
    #[arg(long)]
    mem_bw: Option<u64>,
    #[arg(long)]
    mem_turnaround: Option<u64>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long)]
    burst_threshold: Option<u64>,
    #[arg(long)]
    clock_hz: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Sync,
    Pbsm,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    mode: SimMode,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 16)]
    node_size: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    sim: SimFlags,
    /// Stats CSV; stdout if omitted.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Result CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Experiment name, or `all`.
    #[arg(long, default_value = "all")]
    experiment: String,
    #[command(flatten)]
    sim: SimFlags,
    /// Stats CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).multiple(true).args(["tree", "dataset"]))]
struct ValidateArgs {
    /// Tree file to check.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Dataset CSV. With `--tree`, every object must appear exactly once.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Minimum entries for non-root nodes.
    #[arg(long, default_value_t = 1)]
    min_fill: usize,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f32; N], String> {
    let v: Vec<f32> = s
        .split(',')
        .map(|p| p.trim().parse::<f32>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected {N} comma-separated numbers"))
}

/// 2 for internal invariant failures, 1 for everything the user can fix.
fn exit_code(e: &anyhow::Error) -> u8 {
    let internal = e.chain().any(|c| {
        c.downcast_ref::<spjoin_core::Error>()
            .is_some_and(|e| e.is_internal())
    });
    if internal {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
