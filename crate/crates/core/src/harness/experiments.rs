// Experiment drivers. Each writes long-format rows (one metric per row) with
// the full configuration in `params`. Wall-clock metrics are the median of
// three timed runs after one warm-up run.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::dataset::{gen_uniform, DatasetSpec};
use super::io::{load_dataset, write_stats, StatsRow};
use crate::accel::{sim_pbsm, sim_sync_traversal, unit_pair_cycles, SimConfig, SimOutcome};
use crate::error::{Error, Result};
use crate::geometry::{Mbr, SpatialObject};
use crate::join::{
    nested_loop_join, nl_indices, pbsm_1d, pbsm_hierarchical_partition, pbsm_join, pbsm_partition,
    plane_sweep_join, sweep_indices, sync_traversal_bfs, sync_traversal_dfs, Axis, GridSpec, JoinResult,
    TileJoiner,
};
use crate::rtree::{str_bulk_load, str_bulk_load_with_workers};

/// Largest input for which e2e-compare also runs the quadratic reference.
const NESTED_LOOP_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    NodeSizeSweep,
    UnitScalability,
    CyclesPerPredicate,
    TileJoinCompare,
    IndexCost,
    E2eCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::NodeSizeSweep,
        Experiment::UnitScalability,
        Experiment::CyclesPerPredicate,
        Experiment::TileJoinCompare,
        Experiment::IndexCost,
        Experiment::E2eCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::NodeSizeSweep => "node-size-sweep",
            Experiment::UnitScalability => "unit-scalability",
            Experiment::CyclesPerPredicate => "cycles-per-predicate",
            Experiment::TileJoinCompare => "tile-join-compare",
            Experiment::IndexCost => "index-cost",
            Experiment::E2eCompare => "e2e-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<StatsRow>,
}

impl BenchReport {
    /// First row matching `algorithm`, `metric` and a `params` prefix.
    pub fn value(&self, algorithm: &str, params_prefix: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.metric == metric && r.params.starts_with(params_prefix))
            .map(|r| r.value)
    }

    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<()> {
        write_stats(&self.rows, sink)
    }
}

struct Rows<'a> {
    experiment: Experiment,
    dataset: &'a str,
    seed: u64,
    out: Vec<StatsRow>,
}

impl Rows<'_> {
    fn push(&mut self, algorithm: &str, params: &str, metric: &str, value: f64) {
        self.out.push(StatsRow {
            experiment: self.experiment.name().to_string(),
            dataset: self.dataset.to_string(),
            algorithm: algorithm.to_string(),
            params: params.to_string(),
            metric: metric.to_string(),
            value,
            seed: self.seed,
        });
    }

    fn sim(&mut self, algorithm: &str, params: &str, out: &SimOutcome) {
        let st = &out.stats;
        self.push(algorithm, params, "cycles", st.total_cycles as f64);
        self.push(algorithm, params, "latency_seconds", out.latency_seconds);
        self.push(algorithm, params, "predicate_evals", st.predicate_evals() as f64);
        self.push(algorithm, params, "result_count", out.result.len() as f64);
    }
}

/// One warm-up run, then the median of three timed runs. Returns the last
/// run's output.
pub fn median_time<T>(mut f: impl FnMut() -> T) -> (Duration, T) {
    let mut last = f();
    let mut times = [Duration::ZERO; 3];
    for t in &mut times {
        let start = Instant::now();
        last = f();
        *t = start.elapsed();
    }
    times.sort();
    (times[1], last)
}

pub fn sim_params(cfg: &SimConfig) -> String {
    format!(
        "units={};policy={};mem_latency={};mem_bw={};mem_turnaround={};burst_threshold={};clock_hz={}",
        cfg.num_join_units,
        cfg.scheduling_policy,
        cfg.mem_latency_cycles,
        cfg.mem_bw_bytes_per_cycle,
        cfg.mem_turnaround_cycles,
        cfg.burst_threshold_bytes,
        cfg.clock_hz
    )
}

type Datasets = (String, Vec<SpatialObject>, Vec<SpatialObject>);

fn datasets(cfg: &ExperimentConfig, n: usize) -> Result<Datasets> {
    if let (Some(r), Some(s)) = (&cfg.r_path, &cfg.s_path) {
        let label = format!("file:{}|{}", r.display(), s.display());
        return Ok((label, load_dataset(r)?, load_dataset(s)?));
    }
    let r = gen_uniform(&DatasetSpec::uniform(n, cfg.seed))?;
    let s = gen_uniform(&DatasetSpec::uniform(n, cfg.seed.wrapping_add(1)))?;
    Ok((format!("uniform-{n}x{n}"), r, s))
}

pub fn run_experiment(name: &str, cfg: &ExperimentConfig) -> Result<BenchReport> {
    let exp: Experiment = name.parse()?;
    cfg.validate()?;
    let n = if exp == Experiment::IndexCost {
        cfg.index_n
    } else {
        cfg.n
    };
    let (label, r, s) = if exp == Experiment::TileJoinCompare {
        ("synthetic-tiles".to_string(), Vec::new(), Vec::new())
    } else {
        datasets(cfg, n)?
    };
    let mut rows = Rows {
        experiment: exp,
        dataset: &label,
        seed: cfg.seed,
        out: Vec::new(),
    };
    match exp {
        Experiment::NodeSizeSweep => node_size_sweep(cfg, &r, &s, &mut rows)?,
        Experiment::UnitScalability => unit_scalability(cfg, &r, &s, &mut rows)?,
        Experiment::CyclesPerPredicate => cycles_per_predicate(cfg, &r, &s, &mut rows)?,
        Experiment::TileJoinCompare => tile_join_compare(cfg, &mut rows),
        Experiment::IndexCost => index_cost(cfg, &r, &s, &mut rows)?,
        Experiment::E2eCompare => e2e_compare(cfg, &r, &s, &mut rows)?,
    }
    Ok(BenchReport { rows: rows.out })
}

fn node_size_sweep(
    cfg: &ExperimentConfig,
    r: &[SpatialObject],
    s: &[SpatialObject],
    rows: &mut Rows,
) -> Result<()> {
    for &m in &cfg.node_sizes {
        let tr = str_bulk_load_with_workers(r, m, cfg.workers)?;
        let ts = str_bulk_load_with_workers(s, m, cfg.workers)?;
        let (wall, out) = median_time(|| sim_sync_traversal(&tr, &ts, &cfg.sim));
        let out = out?;
        let params = format!("M={m};{}", sim_params(&cfg.sim));
        rows.sim("sim-sync", &params, &out);
        rows.push("sim-sync", &params, "sim_wall_time_ns", wall.as_nanos() as f64);
    }
    Ok(())
}

fn unit_scalability(
    cfg: &ExperimentConfig,
    r: &[SpatialObject],
    s: &[SpatialObject],
    rows: &mut Rows,
) -> Result<()> {
    for &m in &cfg.node_sizes {
        let tr = str_bulk_load_with_workers(r, m, cfg.workers)?;
        let ts = str_bulk_load_with_workers(s, m, cfg.workers)?;
        let mut base = None;
        for &u in &cfg.unit_counts {
            let sim = cfg.sim.clone().with_units(u);
            let out = sim_sync_traversal(&tr, &ts, &sim)?;
            let cycles = out.stats.total_cycles as f64;
            let params = format!("M={m};{}", sim_params(&sim));
            rows.sim("sim-sync", &params, &out);
            let b = *base.get_or_insert(cycles);
            rows.push("sim-sync", &params, "speedup_vs_first", b / cycles);
        }
    }
    let tiles = pbsm_hierarchical_partition(r, s, cfg.max_geomean)?;
    let mut base = None;
    for &u in &cfg.unit_counts {
        let sim = cfg.sim.clone().with_units(u);
        let out = sim_pbsm(&tiles, &sim)?;
        let cycles = out.stats.total_cycles as f64;
        let params = format!("max_geomean={};{}", cfg.max_geomean, sim_params(&sim));
        rows.sim("sim-pbsm", &params, &out);
        let b = *base.get_or_insert(cycles);
        rows.push("sim-pbsm", &params, "speedup_vs_first", b / cycles);
    }
    Ok(())
}

fn cycles_per_predicate(
    cfg: &ExperimentConfig,
    r: &[SpatialObject],
    s: &[SpatialObject],
    rows: &mut Rows,
) -> Result<()> {
    let single = cfg.sim.clone().with_units(1);
    for &m in &cfg.pair_sizes {
        let k = m as u64;
        let params = format!("M={m};{}", sim_params(&single));
        let pair = unit_pair_cycles(k, k, &single);
        rows.push("unit-pair", &params, "cycles", pair as f64);
        rows.push(
            "unit-pair",
            &params,
            "cycles_per_predicate",
            pair as f64 / (k * k) as f64,
        );
        if m >= 4 {
            let tr = str_bulk_load_with_workers(r, m, cfg.workers)?;
            let ts = str_bulk_load_with_workers(s, m, cfg.workers)?;
            let out = sim_sync_traversal(&tr, &ts, &single)?;
            rows.sim("sim-sync", &params, &out);
            rows.push(
                "sim-sync",
                &params,
                "cycles_per_predicate",
                out.stats.cycles_per_predicate(),
            );
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    /// Objects spread over a large area: almost no pair qualifies.
    Low,
    /// Unit squares packed into a 6 x 6 area: a large share of pairs qualify.
    High,
}

impl Cardinality {
    fn side(self) -> f32 {
        match self {
            Cardinality::Low => 10_000.0,
            Cardinality::High => 6.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Cardinality::Low => "low",
            Cardinality::High => "high",
        }
    }
}

/// `count` tiles of `size` unit squares per side.
pub fn synthetic_tiles(
    size: usize,
    card: Cardinality,
    count: usize,
    seed: u64,
) -> Vec<(Vec<SpatialObject>, Vec<SpatialObject>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = card.side();
    let gen = |rng: &mut ChaCha8Rng| -> Vec<SpatialObject> {
        (0..size as u32)
            .map(|id| {
                let x = rng.random_range(0.0..side - 1.0);
                let y = rng.random_range(0.0..side - 1.0);
                SpatialObject {
                    id,
                    mbr: Mbr {
                        xmin: x,
                        ymin: y,
                        xmax: x + 1.0,
                        ymax: y + 1.0,
                    },
                }
            })
            .collect()
    };
    (0..count).map(|_| (gen(&mut rng), gen(&mut rng))).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct TileTiming {
    pub nested_loop_ns: f64,
    pub plane_sweep_ns: f64,
    /// Qualifying pairs per tile, averaged.
    pub results_per_tile: f64,
}

/// Median per-tile latency of the nested-loop and plane-sweep kernels over a
/// batch. Each timed run repeats the batch enough times to cover about 4M
/// predicate evaluations.
pub fn time_tile_joins(tiles: &[(Vec<SpatialObject>, Vec<SpatialObject>)]) -> TileTiming {
    let evals: usize = tiles.iter().map(|(a, b)| a.len() * b.len()).sum();
    let reps = ((1usize << 22) / evals.max(1)).max(1);
    let mut out = Vec::with_capacity(1 << 16);
    let mut run = |nl: bool| {
        let mut hits = 0usize;
        for _ in 0..reps {
            for (a, b) in tiles {
                out.clear();
                if nl {
                    nl_indices(a, b, &mut out);
                } else {
                    sweep_indices(a, b, Axis::X, &mut out);
                }
                hits += std::hint::black_box(out.len());
            }
        }
        hits
    };
    let per_tile = |d: Duration| d.as_nanos() as f64 / (reps * tiles.len()) as f64;
    let (nl, hits) = median_time(|| run(true));
    let (ps, _) = median_time(|| run(false));
    TileTiming {
        nested_loop_ns: per_tile(nl),
        plane_sweep_ns: per_tile(ps),
        results_per_tile: hits as f64 / (reps * tiles.len()) as f64,
    }
}

fn tile_join_compare(cfg: &ExperimentConfig, rows: &mut Rows) {
    for &size in &cfg.tile_sizes {
        for card in [Cardinality::Low, Cardinality::High] {
            let tiles = synthetic_tiles(size, card, cfg.tiles_per_batch, cfg.seed);
            let t = time_tile_joins(&tiles);
            let params = format!(
                "tile_size={size};cardinality={};tiles={}",
                card.name(),
                cfg.tiles_per_batch
            );
            rows.push("nested-loop", &params, "ns_per_tile", t.nested_loop_ns);
            rows.push("plane-sweep", &params, "ns_per_tile", t.plane_sweep_ns);
            rows.push("nested-loop", &params, "results_per_tile", t.results_per_tile);
        }
    }
}

fn index_cost(
    cfg: &ExperimentConfig,
    r: &[SpatialObject],
    s: &[SpatialObject],
    rows: &mut Rows,
) -> Result<()> {
    let m = 16;
    let (str_time, trees) = median_time(|| -> Result<_> { Ok((str_bulk_load(r, m)?, str_bulk_load(s, m)?)) });
    trees?;
    let grid = GridSpec::for_tile_size(r, s, cfg.max_geomean as usize)?;
    let (part_time, tiles) = median_time(|| pbsm_partition(r, s, &grid));
    tiles?;
    let str_ns = str_time.as_nanos() as f64;
    let part_ns = part_time.as_nanos() as f64;
    let n = r.len();
    rows.push("str", &format!("n={n};M={m};workers=1"), "wall_time_ns", str_ns);
    let gp = format!("n={n};grid={}x{};workers=1", grid.cols, grid.rows);
    rows.push("partition", &gp, "wall_time_ns", part_ns);
    rows.push(
        "str/partition",
        &format!("n={n}"),
        "ratio",
        str_ns / part_ns.max(1.0),
    );
    Ok(())
}

fn e2e_compare(
    cfg: &ExperimentConfig,
    r: &[SpatialObject],
    s: &[SpatialObject],
    rows: &mut Rows,
) -> Result<()> {
    let m = 16;
    let w = cfg.workers;
    let mut counts: Vec<(String, usize)> = Vec::new();
    let mut timed = |rows: &mut Rows,
                     name: &str,
                     params: &str,
                     f: &mut dyn FnMut() -> Result<JoinResult>|
     -> Result<()> {
        let (t, res) = median_time(&mut *f);
        let res = res?;
        rows.push(name, params, "wall_time_ns", t.as_nanos() as f64);
        rows.push(name, params, "result_count", res.len() as f64);
        counts.push((name.to_string(), res.len()));
        Ok(())
    };

    if r.len().max(s.len()) <= NESTED_LOOP_LIMIT {
        timed(rows, "nested-loop", "", &mut || Ok(nested_loop_join(r, s)))?;
    }
    timed(rows, "plane-sweep", "", &mut || Ok(plane_sweep_join(r, s)))?;

    let (build, trees) = median_time(|| -> Result<_> {
        Ok((
            str_bulk_load_with_workers(r, m, w)?,
            str_bulk_load_with_workers(s, m, w)?,
        ))
    });
    let (tr, ts) = trees?;
    rows.push(
        "str",
        &format!("M={m};workers={w}"),
        "wall_time_ns",
        build.as_nanos() as f64,
    );
    timed(rows, "sync-dfs", &format!("M={m}"), &mut || {
        Ok(sync_traversal_dfs(&tr, &ts))
    })?;
    let bp = format!("M={m};workers={w};policy={}", cfg.policy);
    timed(rows, "sync-bfs", &bp, &mut || {
        Ok(sync_traversal_bfs(&tr, &ts, w, cfg.policy))
    })?;

    for joiner in [TileJoiner::NestedLoop, TileJoiner::PlaneSweep] {
        let name = format!("pbsm-{joiner}");
        let pp = format!(
            "max_geomean={};workers={w};policy={}",
            cfg.max_geomean, cfg.policy
        );
        timed(rows, &name, &pp, &mut || {
            let tiles = pbsm_hierarchical_partition(r, s, cfg.max_geomean)?;
            Ok(pbsm_join(&tiles, joiner, w, cfg.policy))
        })?;
    }
    let strips = 4 * w;
    timed(
        rows,
        "pbsm-1d",
        &format!("strips={strips};workers={w}"),
        &mut || pbsm_1d(r, s, strips, w),
    )?;

    let sim = &cfg.sim;
    let out = sim_sync_traversal(&tr, &ts, sim)?;
    rows.sim("sim-sync", &format!("M={m};{}", sim_params(sim)), &out);
    counts.push(("sim-sync".into(), out.result.len()));
    let tiles = pbsm_hierarchical_partition(r, s, cfg.max_geomean)?;
    let out = sim_pbsm(&tiles, sim)?;
    rows.sim(
        "sim-pbsm",
        &format!("max_geomean={};{}", cfg.max_geomean, sim_params(sim)),
        &out,
    );
    counts.push(("sim-pbsm".into(), out.result.len()));

    if let Some((name, c)) = counts.iter().find(|(_, c)| *c != counts[0].1) {
        return Err(Error::Invariant(format!(
            "{name} found {c} pairs, {} found {}",
            counts[0].0, counts[0].1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 3000,
            index_n: 5000,
            tiles_per_batch: 8,
            tile_sizes: vec![8, 32],
            workers: 2,
            ..Default::default()
        }
    }

    #[test]
    fn unknown_experiment() {
        let e = run_experiment("fig-99", &small()).unwrap_err();
        assert!(matches!(e, Error::UnknownExperiment(_)));
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }

    #[test]
    fn node_size_sweep_rows() {
        let rep = run_experiment("node-size-sweep", &small()).unwrap();
        let cycles: Vec<_> = rep.rows.iter().filter(|r| r.metric == "cycles").collect();
        assert_eq!(cycles.len(), 4);
        assert!(cycles
            .iter()
            .all(|r| r.seed == 1 && r.params.contains("units=16")));
        let counts: Vec<f64> = rep
            .rows
            .iter()
            .filter(|r| r.metric == "result_count")
            .map(|r| r.value)
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn every_experiment_runs_small() {
        for e in Experiment::ALL {
            let rep = run_experiment(e.name(), &small()).unwrap();
            assert!(!rep.rows.is_empty(), "{e}");
            assert!(rep.rows.iter().all(|r| r.experiment == e.name()));
        }
    }

    #[test]
    fn deterministic_sim_rows() {
        let a = run_experiment("unit-scalability", &small()).unwrap();
        let b = run_experiment("unit-scalability", &small()).unwrap();
        let sim_rows = |r: &BenchReport| -> Vec<StatsRow> {
            r.rows
                .iter()
                .filter(|x| !x.metric.contains("wall"))
                .cloned()
                .collect()
        };
        assert_eq!(sim_rows(&a), sim_rows(&b));
    }

    #[test]
    fn cycles_per_predicate_band() {
        let rep = run_experiment("cycles-per-predicate", &small()).unwrap();
        for m in [8, 16, 32, 64] {
            let v = rep
                .value("unit-pair", &format!("M={m};"), "cycles_per_predicate")
                .unwrap();
            assert!((1.0..=1.35).contains(&v), "M={m}: {v}");
        }
        assert!(rep.value("unit-pair", "M=4;", "cycles_per_predicate").unwrap() > 1.5);
    }

    #[test]
    fn synthetic_tile_cardinality() {
        let hi = synthetic_tiles(64, Cardinality::High, 4, 1);
        let lo = synthetic_tiles(64, Cardinality::Low, 4, 1);
        let count = |t: &[(Vec<SpatialObject>, Vec<SpatialObject>)]| -> usize {
            t.iter().map(|(a, b)| nested_loop_join(a, b).len()).sum()
        };
        assert!(count(&hi) > 4 * 64 * 64 / 10);
        assert!(count(&lo) < 4 * 64);
    }
}
