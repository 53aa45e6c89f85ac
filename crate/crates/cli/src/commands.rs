use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use spjoin_core::harness::{
    apply_sim_key, gen_uniform, load_dataset, load_key_values, run_experiment, sim_params, write_dataset,
    write_results, write_stats, DatasetSpec, Experiment, ExperimentConfig, StatsRow,
};
use spjoin_core::join::{
    nested_loop_join, pbsm_1d, pbsm_hierarchical_partition, pbsm_join, pbsm_partition, plane_sweep_join,
    sync_traversal_bfs, sync_traversal_dfs, GridSpec, Tile,
};
use spjoin_core::rtree::{
    read_tree_file, str_bulk_load_with_workers, validate, validate_against, write_tree_file, ValidateOptions,
};
use spjoin_core::{sim_pbsm, sim_sync_traversal, str_bulk_load, Mbr, RTree, SimConfig, SpatialObject};

use crate::*;

pub(crate) fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Index(a) => index(a),
        Command::Partition(a) => partition(a),
        Command::Join(a) => join(a),
        Command::Sim(a) => sim(a),
        Command::Bench(a) => bench(a),
        Command::Validate(a) => check(a),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load(path: &Path) -> Result<Vec<SpatialObject>> {
    load_dataset(path).with_context(|| format!("reading {}", path.display()))
}

fn load_pair(inputs: &Inputs) -> Result<(Vec<SpatialObject>, Vec<SpatialObject>)> {
    Ok((load(&inputs.r)?, load(&inputs.s)?))
}

fn label(inputs: &Inputs) -> String {
    format!("file:{}|{}", inputs.r.display(), inputs.s.display())
}

fn gen(a: GenArgs) -> Result<()> {
    let mut spec = if a.points {
        DatasetSpec::points(a.n, a.seed)
    } else {
        DatasetSpec::uniform(a.n, a.seed)
    };
    if let Some([x0, y0, x1, y1]) = a.region {
        spec = spec.with_region(Mbr::new(x0, y0, x1, y1)?);
    }
    if let Some([w, h]) = a.size {
        if a.points {
            bail!("--size does not apply to --points");
        }
        spec = spec.with_size(w, h);
    }
    let objs = gen_uniform(&spec)?;
    write_dataset(&objs, sink(a.out.as_deref())?)?;
    Ok(())
}

fn index(a: IndexArgs) -> Result<()> {
    let objs = load(&a.input)?;
    let tree = str_bulk_load_with_workers(&objs, a.node_size, a.workers.max(1))?;
    write_tree_file(&tree, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "{} objects, {} nodes, height {}, M={}",
        tree.len(),
        tree.nodes().len(),
        tree.height(),
        tree.node_size()
    );
    Ok(())
}

fn tiles(r: &[SpatialObject], s: &[SpatialObject], g: &GridArgs) -> Result<(Vec<Tile>, String)> {
    if r.is_empty() || s.is_empty() {
        return Ok((Vec::new(), "empty".into()));
    }
    Ok(if let Some(n) = g.grid {
        let grid = GridSpec::covering(r, s, n, n)?;
        (pbsm_partition(r, s, &grid)?, format!("grid={n}x{n}"))
    } else if let Some(k) = g.tile_size {
        let grid = GridSpec::for_tile_size(r, s, k)?;
        let desc = format!("grid={}x{}", grid.cols, grid.rows);
        (pbsm_partition(r, s, &grid)?, desc)
    } else {
        (
            pbsm_hierarchical_partition(r, s, g.max_geomean)?,
            format!("max_geomean={}", g.max_geomean),
        )
    })
}

fn partition(a: PartitionArgs) -> Result<()> {
    let (r, s) = load_pair(&a.inputs)?;
    let (tiles, desc) = tiles(&r, &s, &a.grid)?;
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    w.write_record(["tile", "xmin", "ymin", "xmax", "ymax", "n_r", "n_s", "flagged"])?;
    for (i, t) in tiles.iter().enumerate() {
        let m = t.mbr;
        w.write_record([
            i.to_string(),
            m.xmin.to_string(),
            m.ymin.to_string(),
            m.xmax.to_string(),
            m.ymax.to_string(),
            t.r.len().to_string(),
            t.s.len().to_string(),
            u8::from(t.flagged).to_string(),
        ])?;
    }
    w.flush()?;
    let flagged = tiles.iter().filter(|t| t.flagged).count();
    eprintln!("{desc}: {} tiles, {flagged} flagged", tiles.len());
    Ok(())
}

fn trees(
    inputs: (&[SpatialObject], &[SpatialObject]),
    files: Option<(&Path, &Path)>,
    m: usize,
) -> Result<(RTree, RTree)> {
    match files {
        Some((a, b)) => {
            let read = |p: &Path| read_tree_file(p).with_context(|| format!("reading {}", p.display()));
            Ok((read(a)?, read(b)?))
        }
        None => Ok((str_bulk_load(inputs.0, m)?, str_bulk_load(inputs.1, m)?)),
    }
}

fn join(a: JoinArgs) -> Result<()> {
    let (r, s) = load_pair(&a.inputs)?;
    let workers = a.workers.max(1);
    let files = a.tree_r.as_deref().zip(a.tree_s.as_deref());
    let result = match a.algo {
        Algo::NestedLoop => nested_loop_join(&r, &s),
        Algo::PlaneSweep => plane_sweep_join(&r, &s),
        Algo::SyncDfs | Algo::SyncBfs => {
            if r.is_empty() || s.is_empty() {
                Default::default()
            } else {
                let (tr, ts) = trees((&r, &s), files, a.node_size)?;
                if a.algo == Algo::SyncDfs {
                    sync_traversal_dfs(&tr, &ts)
                } else {
                    sync_traversal_bfs(&tr, &ts, workers, a.policy.into())
                }
            }
        }
        Algo::Pbsm => {
            let (tiles, _) = tiles(&r, &s, &a.grid)?;
            pbsm_join(&tiles, a.joiner.into(), workers, a.policy.into())
        }
        Algo::Pbsm1d => pbsm_1d(&r, &s, a.strips, workers)?,
    };
    write_results(&result, sink(a.out.as_deref())?)?;
    eprintln!("{} pairs", result.len());
    Ok(())
}

fn sim_config(f: &SimFlags) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    let mut apply = |k: &str, v: &str| -> Result<()> {
        if !apply_sim_key(&mut cfg, k, v)? {
            bail!("unknown simulator key `{k}`");
        }
        Ok(())
    };
    if let Some(p) = &f.config {
        for (k, v) in load_key_values(p).with_context(|| format!("reading {}", p.display()))? {
            apply(&k, &v)?;
        }
    }
    for kv in &f.set {
        let (k, v) = split_kv(kv)?;
        apply(k, v)?;
    }
    for (k, v) in flag_settings(f) {
        apply(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn split_kv(kv: &str) -> Result<(&str, &str)> {
    kv.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))
}

fn flag_settings(f: &SimFlags) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let mut put = |k, v: Option<String>| {
        if let Some(v) = v {
            out.push((k, v));
        }
    };
    put("units", f.units.map(|v| v.to_string()));
    put("mem-latency", f.mem_latency.map(|v| v.to_string()));
    put("mem-bw", f.mem_bw.map(|v| v.to_string()));
    put("mem-turnaround", f.mem_turnaround.map(|v| v.to_string()));
    put("policy", f.policy.map(|p| Policy::from(p).to_string()));
    put("burst-threshold", f.burst_threshold.map(|v| v.to_string()));
    put("clock-hz", f.clock_hz.map(|v| v.to_string()));
    out
}

fn sim(a: SimArgs) -> Result<()> {
    let cfg = sim_config(&a.sim)?;
    let (r, s) = load_pair(&a.inputs)?;
    if r.is_empty() || s.is_empty() {
        bail!("both datasets must be non-empty");
    }
    let (algorithm, params, out) = match a.mode {
        SimMode::Sync => {
            let (tr, ts) = trees((&r, &s), None, a.node_size)?;
            let params = format!("M={};{}", a.node_size, sim_params(&cfg));
            ("sim-sync", params, sim_sync_traversal(&tr, &ts, &cfg)?)
        }
        SimMode::Pbsm => {
            let (tiles, desc) = tiles(&r, &s, &a.grid)?;
            let params = format!("{desc};{}", sim_params(&cfg));
            ("sim-pbsm", params, sim_pbsm(&tiles, &cfg)?)
        }
    };
    let st = &out.stats;
    let mut metrics: Vec<(String, f64)> = vec![
        ("cycles".into(), st.total_cycles as f64),
        ("latency_seconds".into(), out.latency_seconds),
        ("transfer_seconds".into(), out.transfer_seconds),
        ("result_count".into(), out.result.len() as f64),
        ("predicate_evals".into(), st.predicate_evals() as f64),
        ("tasks".into(), st.tasks() as f64),
        ("cycles_per_predicate".into(), st.cycles_per_predicate()),
        ("mem_read_cycles".into(), st.mem_read_cycles as f64),
        ("mem_write_cycles".into(), st.mem_write_cycles as f64),
        ("compute_cycles".into(), st.compute_cycles as f64),
        ("stall_cycles".into(), st.stall_cycles as f64),
        ("result_flushes".into(), st.result_flushes as f64),
        ("host_transfer_bytes".into(), st.host_transfer_bytes as f64),
    ];
    for (i, l) in st.per_level.iter().enumerate() {
        metrics.push((format!("level{i}_tasks"), l.tasks as f64));
        metrics.push((format!("level{i}_cycles"), l.cycles as f64));
    }
    let dataset = label(&a.inputs);
    let rows: Vec<StatsRow> = metrics
        .into_iter()
        .map(|(metric, value)| StatsRow {
            experiment: "sim".into(),
            dataset: dataset.clone(),
            algorithm: algorithm.into(),
            params: params.clone(),
            metric,
            value,
            seed: 0,
        })
        .collect();
    write_stats(&rows, sink(a.stats.as_deref())?)?;
    if let Some(p) = &a.out {
        write_results(&out.result, sink(Some(p))?)?;
    }
    eprintln!(
        "{algorithm}: {} cycles, {:.6} s at {} Hz, {} pairs",
        st.total_cycles,
        out.latency_seconds,
        cfg.clock_hz,
        out.result.len()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(p) = &a.sim.config {
        cfg.apply(&load_key_values(p).with_context(|| format!("reading {}", p.display()))?)?;
    }
    for kv in &a.sim.set {
        let (k, v) = split_kv(kv)?;
        cfg.set(k, v)?;
    }
    for (k, v) in flag_settings(&a.sim) {
        cfg.set(k, &v)?;
    }
    let names: Vec<String> = if a.experiment == "all" {
        Experiment::ALL.iter().map(|e| e.name().to_string()).collect()
    } else {
        vec![a.experiment.clone()]
    };
    let mut rows = Vec::new();
    for name in &names {
        eprintln!("running {name}");
        rows.extend(run_experiment(name, &cfg)?.rows);
    }
    write_stats(&rows, sink(a.out.as_deref())?)?;
    Ok(())
}

fn check(a: ValidateArgs) -> Result<()> {
    let objs = a.dataset.as_deref().map(load).transpose()?;
    let Some(path) = a.tree.as_ref() else {
        eprintln!("{} objects, ok", objs.map_or(0, |o| o.len()));
        return Ok(());
    };
    let tree = read_tree_file(path).with_context(|| format!("reading {}", path.display()))?;
    let opts = ValidateOptions { min_fill: a.min_fill };
    let report = match &objs {
        Some(o) => validate_against(&tree, o, &opts),
        None => validate(&tree, &opts),
    };
    if report.is_ok() {
        eprintln!(
            "{}: {} nodes, height {}, ok",
            path.display(),
            tree.nodes().len(),
            tree.height()
        );
        return Ok(());
    }
    for v in report.violations.iter().take(20) {
        eprintln!("  {v}");
    }
    bail!("{}: {} violations", path.display(), report.violations.len())
}
