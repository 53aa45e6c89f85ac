use super::engine::{Job, Machine};
use super::{LevelStats, SimConfig, SimOutcome};
use crate::error::{Error, Result};
use crate::join::{nl_indices, pair_operands, JoinResult, NodePairTask, Pair, Tile};
use crate::rtree::{validate, RTree, ValidateOptions};

fn check_tree(tree: &RTree, side: &str) -> Result<()> {
    let report = validate(tree, &ValidateOptions::default());
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::InvalidTree(format!("{side}: {v}"))),
    }
}

fn finish(m: Machine<'_>, results: Vec<Pair>, input_bytes: u64, cfg: &SimConfig) -> Result<SimOutcome> {
    let Machine {
        stats: mut s,
        result_offsets,
        ..
    } = m;
    if result_offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invariant(
            "result write offsets not strictly increasing".into(),
        ));
    }
    if result_offsets.len() != results.len() {
        return Err(Error::Invariant("result without a write offset".into()));
    }
    s.host_transfer_bytes = input_bytes + s.results_emitted * cfg.result_pair_bytes;
    Ok(SimOutcome {
        latency_seconds: s.total_cycles as f64 / cfg.clock_hz as f64,
        transfer_seconds: s.host_transfer_bytes as f64 / cfg.host_link_bytes_per_sec as f64,
        result: JoinResult::from_pairs(results),
        stats: s,
        result_offsets,
    })
}

/// Level-synchronous traversal on the simulated accelerator. Each level is a
/// phase: its tasks are dispatched to the join units, the produced child
/// pairs are written to the task queue, and the next level starts once every
/// write has drained.
pub fn sim_sync_traversal(tree_r: &RTree, tree_s: &RTree, cfg: &SimConfig) -> Result<SimOutcome> {
    cfg.validate()?;
    check_tree(tree_r, "R")?;
    check_tree(tree_s, "S")?;

    let mut m = Machine::new(cfg);
    let mut results = Vec::new();
    let mut tasks = vec![NodePairTask {
        node_r: tree_r.root_index(),
        node_s: tree_s.root_index(),
    }];
    let mut idx = Vec::new();
    while !tasks.is_empty() {
        let mut evals = 0;
        let jobs: Vec<Job> = tasks
            .iter()
            .map(|&t| {
                let ops = pair_operands(tree_r, tree_s, t);
                let (r, s) = (ops.r.as_slice(), ops.s.as_slice());
                idx.clear();
                evals += nl_indices(r, s, &mut idx);
                let ns = s.len() as u64;
                Job {
                    n_r: r.len() as u64,
                    n_s: ns,
                    outputs: idx
                        .iter()
                        .map(|&ij| (ij.0 as u64 * ns + ij.1 as u64, ops.output(ij)))
                        .collect(),
                    to_results: ops.leaf_level,
                }
            })
            .collect();
        let phase = m.run_phase(&jobs);
        m.stats.per_level.push(LevelStats {
            tasks: jobs.len() as u64,
            predicate_evals: evals,
            cycles: phase.cycles,
        });
        results.extend(phase.results);
        tasks = phase
            .tasks
            .into_iter()
            .map(|(node_r, node_s)| NodePairTask { node_r, node_s })
            .collect();
    }
    m.stats.total_cycles = m.now();
    let input = [tree_r, tree_s]
        .iter()
        .map(|t| t.nodes().len() as u64 * (8 + t.node_size() as u64 * cfg.entry_bytes))
        .sum();
    finish(m, results, input, cfg)
}

/// Tile-parallel join on the simulated accelerator: every tile is one job, the
/// reference-point filter runs inside the join unit at no extra cost.
pub fn sim_pbsm(tiles: &[Tile], cfg: &SimConfig) -> Result<SimOutcome> {
    cfg.validate()?;
    let mut m = Machine::new(cfg);
    let mut idx = Vec::new();
    let mut evals = 0;
    let mut input = 0;
    let jobs: Vec<Job> = tiles
        .iter()
        .map(|t| {
            idx.clear();
            evals += nl_indices(&t.r, &t.s, &mut idx);
            input += (t.r.len() + t.s.len()) as u64 * cfg.entry_bytes;
            let ns = t.s.len() as u64;
            let outputs = idx
                .iter()
                .filter(|&&(i, j)| t.owns(&t.r[i as usize].mbr, &t.s[j as usize].mbr))
                .map(|&(i, j)| (i as u64 * ns + j as u64, (t.r[i as usize].id, t.s[j as usize].id)))
                .collect();
            Job {
                n_r: t.r.len() as u64,
                n_s: ns,
                outputs,
                to_results: true,
            }
        })
        .collect();
    let phase = m.run_phase(&jobs);
    m.stats.per_level.push(LevelStats {
        tasks: jobs.len() as u64,
        predicate_evals: evals,
        cycles: phase.cycles,
    });
    m.stats.total_cycles = m.now();
    finish(m, phase.results, input, cfg)
}
