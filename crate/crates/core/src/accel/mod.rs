//! Cycle-level model of a spatial-join accelerator.
//!
//! The machine has `num_join_units` pipelined nested-loop join units, an
//! on-chip scheduler (level-synchronous tree traversal or tile dispatch), a
//! per-unit burst buffer in front of the write path and a task-queue manager
//! that persists the node pairs produced by one traversal level for the next.
//! Memory is one shared read channel and one shared write channel with
//! round-robin arbitration.
//!
//! Timing is event-driven per node pair. A join of an `n_r x n_s` pair costs
//!
//! ```text
//! fetch   = mem_latency + ceil(max(n_r, n_s) * entry_bytes / mem_bw)
//! compute = n_r * n_s + pipeline_depth
//! ```
//!
//! on the unit, plus queuing for the shared channels. After a fetch the read
//! channel stays busy for `mem_turnaround_cycles` more cycles (row
//! precharge/activate before the next random access); the requesting unit
//! does not see this delay, other requesters do.

mod config;
mod engine;
mod sim;

pub use config::SimConfig;
pub use sim::{sim_pbsm, sim_sync_traversal};

use crate::join::JoinResult;

/// Cycles to fetch both nodes of a pair (issued in parallel) on an idle
/// channel.
pub fn fetch_cycles(n_r: u64, n_s: u64, cfg: &SimConfig) -> u64 {
    let bytes = n_r.max(n_s) * cfg.entry_bytes;
    cfg.mem_latency_cycles + bytes.div_ceil(cfg.mem_bw_bytes_per_cycle)
}

/// Uncontended cycles for one join unit to read and join an `n_r x n_s`
/// node pair.
pub fn unit_pair_cycles(n_r: u64, n_s: u64, cfg: &SimConfig) -> u64 {
    fetch_cycles(n_r, n_s, cfg) + n_r * n_s + cfg.pipeline_depth
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub tasks: u64,
    pub predicate_evals: u64,
    pub cycles: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleStats {
    pub total_cycles: u64,
    pub per_level: Vec<LevelStats>,
    /// Read-channel occupancy (fetch plus turnaround).
    pub mem_read_cycles: u64,
    pub mem_write_cycles: u64,
    /// Join-unit cycles spent in the compare pipeline, summed over units.
    pub compute_cycles: u64,
    /// Cycles units spent waiting for a channel grant or a write to drain.
    pub stall_cycles: u64,
    /// Fetch + compute + own write cycles per unit.
    pub unit_busy_cycles: Vec<u64>,
    pub results_emitted: u64,
    pub result_flushes: u64,
    pub task_pairs_written: u64,
    pub task_flushes: u64,
    /// Bytes moved between host and device (tree or tile data in, results
    /// out). Not part of `total_cycles`.
    pub host_transfer_bytes: u64,
}

impl CycleStats {
    pub fn predicate_evals(&self) -> u64 {
        self.per_level.iter().map(|l| l.predicate_evals).sum()
    }

    pub fn tasks(&self) -> u64 {
        self.per_level.iter().map(|l| l.tasks).sum()
    }

    pub fn cycles_per_predicate(&self) -> f64 {
        self.total_cycles as f64 / self.predicate_evals().max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub result: JoinResult,
    pub stats: CycleStats,
    /// `total_cycles / clock_hz`.
    pub latency_seconds: f64,
    /// Host link time for `host_transfer_bytes`, reported separately.
    pub transfer_seconds: f64,
    /// Physical write offset of every result pair, in write order.
    pub result_offsets: Vec<u64>,
}

/// Bytes the result write path stored.
pub fn write_path_bytes(stats: &CycleStats, cfg: &SimConfig) -> u64 {
    stats.results_emitted * cfg.result_pair_bytes
}
