//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test -p spjoin-core --test acceptance`.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spjoin_core::accel::unit_pair_cycles;
use spjoin_core::harness::{
    gen_uniform, run_experiment, synthetic_tiles, time_tile_joins, Cardinality, DatasetSpec,
    ExperimentConfig, TileTiming,
};
use spjoin_core::join::{
    nested_loop_join, pbsm_1d, pbsm_emit, pbsm_hierarchical_partition, pbsm_join, pbsm_partition,
    plane_sweep_join, sync_traversal_bfs, sync_traversal_dfs, GridSpec,
};
use spjoin_core::rtree::{
    deserialize, serialize, str_bulk_load_with_workers, validate_against, ValidateOptions,
};
use spjoin_core::{
    sim_pbsm, sim_sync_traversal, str_bulk_load, Mbr, Policy, SimConfig, SpatialObject, TileJoiner,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn uniform_pair(n: usize) -> Result<(Vec<SpatialObject>, Vec<SpatialObject>), String> {
    let r = gen_uniform(&DatasetSpec::uniform(n, 1)).map_err(err)?;
    let s = gen_uniform(&DatasetSpec::uniform(n, 2)).map_err(err)?;
    Ok((r, s))
}

/// Random dataset with a per-case mix of region size, object size and
/// coordinate snapping (integer grids make touching boundaries common).
fn random_dataset(rng: &mut ChaCha8Rng, n: usize, side: f32, max_obj: f32, snap: bool) -> Vec<SpatialObject> {
    (0..n as u32)
        .map(|id| {
            let mut w = rng.random_range(0.0..=max_obj);
            let mut h = rng.random_range(0.0..=max_obj);
            let mut x = rng.random_range(0.0..side - w);
            let mut y = rng.random_range(0.0..side - h);
            if snap {
                (x, y, w, h) = (x.floor(), y.floor(), w.floor(), h.floor());
            }
            SpatialObject {
                id,
                mbr: Mbr::new(x, y, x + w, y + h).unwrap(),
            }
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    const CASES: u64 = 104;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut engines_checked = 0usize;
    let mut total_pairs = 0usize;
    for case in 0..CASES {
        let nr = rng.random_range(1..=5000);
        let ns = rng.random_range(1..=5000);
        let side = [50.0, 300.0, 2000.0, 10_000.0][rng.random_range(0..4)];
        // object extent relative to the region keeps the output size bounded
        let max_obj = side * [0.0, 0.004, 0.02, 0.06][rng.random_range(0..4)];
        let snap = case % 3 == 0;
        let r = random_dataset(&mut rng, nr, side, max_obj, snap);
        let s = random_dataset(&mut rng, ns, side, max_obj, snap);
        let oracle = nested_loop_join(&r, &s);
        total_pairs += oracle.len();
        let m = [4, 8, 16, 32, 64][(case % 5) as usize];
        let tr = str_bulk_load(&r, m).map_err(err)?;
        let ts = str_bulk_load(&s, m).map_err(err)?;

        let mut check = |name: String, got: &spjoin_core::JoinResult| -> Result<(), String> {
            engines_checked += 1;
            ensure(*got == oracle, || {
                format!(
                    "case {case} (|R|={nr}, |S|={ns}, M={m}): {name} found {} pairs, oracle {}",
                    got.len(),
                    oracle.len()
                )
            })
        };

        check("plane sweep".into(), &plane_sweep_join(&r, &s))?;
        check("dfs".into(), &sync_traversal_dfs(&tr, &ts))?;
        let w = 1 + (case as usize % 16);
        for workers in [1, w, 16] {
            for policy in [Policy::Static, Policy::Dynamic] {
                check(
                    format!("bfs w={workers} {policy}"),
                    &sync_traversal_bfs(&tr, &ts, workers, policy),
                )?;
            }
        }
        for g in [8, 32, 128] {
            let grid = GridSpec::covering(&r, &s, g, g).map_err(err)?;
            let tiles = pbsm_partition(&r, &s, &grid).map_err(err)?;
            for joiner in [TileJoiner::NestedLoop, TileJoiner::PlaneSweep] {
                check(
                    format!("pbsm {g}x{g} {joiner}"),
                    &pbsm_join(&tiles, joiner, 4, Policy::Dynamic),
                )?;
            }
        }
        let strips = 1 + (case as usize * 7) % 64;
        check(
            format!("pbsm-1d strips={strips}"),
            &pbsm_1d(&r, &s, strips, 3).map_err(err)?,
        )?;

        let tiles = pbsm_hierarchical_partition(&r, &s, 16).map_err(err)?;
        for units in [1, w] {
            let policy = if case % 2 == 0 {
                Policy::Static
            } else {
                Policy::Dynamic
            };
            let cfg = SimConfig::default().with_units(units).with_policy(policy);
            let a = sim_sync_traversal(&tr, &ts, &cfg).map_err(err)?;
            check(format!("sim sync units={units} {policy}"), &a.result)?;
            let b = sim_pbsm(&tiles, &cfg).map_err(err)?;
            check(format!("sim pbsm units={units} {policy}"), &b.result)?;
        }
    }
    Ok(format!(
        "{CASES} dataset pairs, {engines_checked} engine runs, {total_pairs} oracle pairs, 0 mismatches"
    ))
}

fn cycle_calibration() -> Outcome {
    let cfg = SimConfig::default();
    let cpp = |n: u64| unit_pair_cycles(n, n, &cfg) as f64 / (n * n) as f64;
    let (mut lo, mut hi) = (f64::MAX, 0.0f64);
    for n in 8..=64 {
        let c = cpp(n);
        ensure((1.0..=1.35).contains(&c), || {
            format!("size {n}: {c:.3} cycles/predicate")
        })?;
        lo = lo.min(c);
        hi = hi.max(c);
    }
    for n in 1..=4 {
        let c = cpp(n);
        ensure(c >= 1.5, || {
            format!("size {n}: {c:.3} cycles/predicate, expected >= 1.5")
        })?;
    }
    let c32 = unit_pair_cycles(32, 32, &cfg);
    let dev = (c32 as f64 - 1066.0).abs() / 1066.0;
    ensure(dev <= 0.10, || {
        format!("32x32 = {c32} cycles, {:.1}% from 1066", dev * 100.0)
    })?;
    Ok(format!(
        "sizes 8-64 in [{lo:.3}, {hi:.3}], size 4 = {:.3}, 32x32 = {c32} cycles ({:.1}% from 1066)",
        cpp(4),
        dev * 100.0
    ))
}

fn node_size_optimum() -> Outcome {
    let cfg = ExperimentConfig {
        n: 100_000,
        node_sizes: vec![8, 16, 32, 64],
        ..Default::default()
    };
    let rep = run_experiment("node-size-sweep", &cfg).map_err(err)?;
    let cycles: Vec<(usize, f64)> = cfg
        .node_sizes
        .iter()
        .map(|&m| (m, rep.value("sim-sync", &format!("M={m};"), "cycles").unwrap()))
        .collect();
    let best = cycles.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let listing: Vec<String> = cycles.iter().map(|(m, c)| format!("M={m}:{c}")).collect();
    ensure(best == 16, || format!("argmin M={best} ({})", listing.join(" ")))?;
    Ok(format!("16 units, argmin M=16 ({})", listing.join(" ")))
}

fn scalability_ordering() -> Outcome {
    let cfg = ExperimentConfig {
        n: 100_000,
        node_sizes: vec![8, 32],
        unit_counts: vec![1, 4, 16],
        ..Default::default()
    };
    let rep = run_experiment("unit-scalability", &cfg).map_err(err)?;
    let speedup = |m: usize, u: usize| {
        rep.value("sim-sync", &format!("M={m};units={u};"), "speedup_vs_first")
            .unwrap()
    };
    let (s8, s32) = (speedup(8, 16), speedup(32, 16));
    let plateau = speedup(8, 16) / speedup(8, 4);
    ensure(s32 > s8, || format!("speedup(16) M=32 {s32:.2} <= M=8 {s8:.2}"))?;
    ensure(plateau < 1.5, || {
        format!("M=8 speedup(16)/speedup(4) = {plateau:.3}, expected < 1.5")
    })?;
    Ok(format!(
        "speedup(16) M=32 {s32:.2} > M=8 {s8:.2}; M=8 speedup(16)/speedup(4) = {plateau:.3} < 1.5"
    ))
}

fn pbsm_beats_traversal() -> Outcome {
    let (r, s) = uniform_pair(100_000)?;
    let cfg = SimConfig::default().with_units(16);
    let tiles = pbsm_hierarchical_partition(&r, &s, 16).map_err(err)?;
    let pbsm = sim_pbsm(&tiles, &cfg).map_err(err)?;
    let tr = str_bulk_load(&r, 16).map_err(err)?;
    let ts = str_bulk_load(&s, 16).map_err(err)?;
    let sync = sim_sync_traversal(&tr, &ts, &cfg).map_err(err)?;
    ensure(pbsm.result == sync.result, || "simulated engines disagree".into())?;
    let (p, t) = (pbsm.stats.total_cycles, sync.stats.total_cycles);
    ensure(p < t, || format!("pbsm {p} cycles >= traversal {t}"))?;
    Ok(format!(
        "pbsm {p} cycles < traversal {t} cycles ({} tiles)",
        tiles.len()
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn tile_join_crossover() -> Outcome {
    // Each sample is itself a median of three timed runs; nine samples per
    // configuration, interleaved so that machine noise hits all of them.
    const SAMPLES: usize = 9;
    let sizes = [8usize, 16, 32, 128];
    let cards = [Cardinality::Low, Cardinality::High];
    let mut raw: HashMap<(usize, &str), Vec<TileTiming>> = HashMap::new();
    let batches: Vec<_> = sizes
        .iter()
        .flat_map(|&n| cards.iter().map(move |&c| (n, c, synthetic_tiles(n, c, 256, 7))))
        .collect();
    for _ in 0..SAMPLES {
        for (n, c, tiles) in &batches {
            raw.entry((*n, c.name()))
                .or_default()
                .push(time_tile_joins(tiles));
        }
    }
    let med = |n: usize, c: &str| {
        let v = &raw[&(n, c)];
        (
            median(v.iter().map(|t| t.nested_loop_ns).collect()),
            median(v.iter().map(|t| t.plane_sweep_ns).collect()),
            v[0].results_per_tile,
        )
    };
    let mut notes = Vec::new();
    for n in [8, 16, 32] {
        for c in ["low", "high"] {
            let (nl, ps, _) = med(n, c);
            ensure(nl < ps, || {
                format!("size {n} {c}: nested loop {nl:.0} ns >= plane sweep {ps:.0} ns")
            })?;
        }
        let (nl, ps, _) = med(n, "high");
        notes.push(format!("{n}:{nl:.0}/{ps:.0}"));
    }
    let (nl_lo, ps_lo, _) = med(128, "low");
    let (nl_hi, ps_hi, hits) = med(128, "high");
    ensure(ps_hi > ps_lo, || {
        format!("plane sweep 128 high {ps_hi:.0} ns <= low {ps_lo:.0} ns")
    })?;
    let spread = (nl_hi - nl_lo).abs() / nl_lo;
    ensure(spread <= 0.10, || {
        format!(
            "nested loop 128: low {nl_lo:.0} ns, high {nl_hi:.0} ns, {:.1}% apart",
            spread * 100.0
        )
    })?;
    Ok(format!(
        "NL<PS for sizes<=32 (high-card ns NL/PS {}); 128: PS {ps_lo:.0}->{ps_hi:.0} ns, NL {nl_lo:.0}->{nl_hi:.0} ns ({:.1}%, {hits:.0} hits/tile)",
        notes.join(" "),
        spread * 100.0
    ))
}

fn dedup_exactly_once() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut min_frac = 1.0f64;
    let mut pairs = 0usize;
    for case in 0..24u64 {
        let g = [4usize, 8, 16, 32][(case % 4) as usize];
        let side = 1000.0f32;
        let cell = side / g as f32;
        // objects wider than a tile always cross at least one border;
        // snapped cases also put edges exactly on grid lines
        let gen = |rng: &mut ChaCha8Rng, n: u32| -> Vec<SpatialObject> {
            (0..n)
                .map(|id| {
                    let w = rng.random_range(0.3 * cell..1.5 * cell);
                    let h = rng.random_range(0.3 * cell..1.5 * cell);
                    let mut x = rng.random_range(0.0..side - w);
                    let mut y = rng.random_range(0.0..side - h);
                    if case % 2 == 1 {
                        x = (x / cell).round() * cell;
                        y = (y / cell).round() * cell;
                    }
                    let (x1, y1) = ((x + w).min(side), (y + h).min(side));
                    SpatialObject {
                        id,
                        mbr: Mbr::new(x, y, x1, y1).unwrap(),
                    }
                })
                .collect()
        };
        let n = (2 * g * g).max(100) as u32;
        let r = gen(&mut rng, n);
        let s = gen(&mut rng, n);
        let grid = GridSpec::new(Mbr::new(0., 0., side, side).unwrap(), g, g).map_err(err)?;
        let xs = grid.x_edges();
        let ys = grid.y_edges();
        let spans = |o: &SpatialObject| {
            let cells =
                |lo: f32, hi: f32, e: &[f32]| (0..g).filter(|&c| e[c] <= hi && lo <= e[c + 1]).count();
            cells(o.mbr.xmin, o.mbr.xmax, &xs) * cells(o.mbr.ymin, o.mbr.ymax, &ys) > 1
        };
        let crossing = r.iter().chain(&s).filter(|o| spans(o)).count();
        let frac = crossing as f64 / (r.len() + s.len()) as f64;
        min_frac = min_frac.min(frac);
        ensure(frac >= 0.5, || {
            format!("case {case}: only {:.0}% of objects span borders", frac * 100.0)
        })?;

        let oracle = nested_loop_join(&r, &s);
        pairs += oracle.len();
        let uniform = pbsm_partition(&r, &s, &grid).map_err(err)?;
        let hier = pbsm_hierarchical_partition(&r, &s, 8).map_err(err)?;
        for (label, tiles) in [("grid", &uniform), ("hierarchical", &hier)] {
            for joiner in [TileJoiner::NestedLoop, TileJoiner::PlaneSweep] {
                let (emitted, _) = pbsm_emit(tiles, joiner, 4, Policy::Static);
                let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
                for p in &emitted {
                    *counts.entry(*p).or_default() += 1;
                }
                if let Some((p, c)) = counts.iter().find(|(_, &c)| c != 1) {
                    return Err(format!(
                        "case {case} {label} {joiner}: pair {p:?} emitted {c} times"
                    ));
                }
                ensure(
                    counts.len() == oracle.len() && oracle.pairs().iter().all(|p| counts.contains_key(p)),
                    || format!("case {case} {label} {joiner}: emitted set differs from oracle"),
                )?;
            }
        }
    }
    Ok(format!(
        "24 datasets, >= {:.0}% of objects span borders, {pairs} pairs each emitted exactly once",
        min_frac * 100.0
    ))
}

fn rtree_validity() -> Outcome {
    const DATASETS: u64 = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = ValidateOptions::default();
    for case in 0..DATASETS {
        let n = rng.random_range(1..=2000);
        let side = [10.0, 100.0, 10_000.0][rng.random_range(0..3)];
        let max_obj = [0.0, 1.0, 8.0][rng.random_range(0..3)];
        let objs = random_dataset(&mut rng, n, side, max_obj, case % 4 == 0);
        let m = rng.random_range(4..=64);
        let t = str_bulk_load(&objs, m).map_err(err)?;
        let report = validate_against(&t, &objs, &opts);
        ensure(report.is_ok(), || {
            format!("dataset {case} (n={n}, M={m}): {}", report.violations[0])
        })?;
        let mut bytes = Vec::new();
        serialize(&t, &mut bytes).map_err(err)?;
        ensure(deserialize(&bytes).map_err(err)? == t, || {
            format!("dataset {case}: round trip differs")
        })?;
        ensure(str_bulk_load(&objs, m).map_err(err)? == t, || {
            format!("dataset {case}: rebuild differs")
        })?;
        if case % 50 == 0 {
            for w in [2, 4] {
                let tw = str_bulk_load_with_workers(&objs, m, w).map_err(err)?;
                ensure(tw == t, || format!("dataset {case}: {w}-worker build differs"))?;
            }
        }
    }
    Ok(format!(
        "{DATASETS} datasets: 0 violations, serialize round trip identical, rebuilds identical"
    ))
}

fn index_cost() -> Outcome {
    let cfg = ExperimentConfig {
        index_n: 1_000_000,
        ..Default::default()
    };
    let rep = run_experiment("index-cost", &cfg).map_err(err)?;
    let str_ns = rep.value("str", "", "wall_time_ns").unwrap();
    let part_ns = rep.value("partition", "", "wall_time_ns").unwrap();
    let ratio = str_ns / part_ns;
    ensure(ratio >= 3.0, || {
        format!(
            "STR {:.0} ms vs partition {:.0} ms: ratio {ratio:.2} < 3",
            str_ns / 1e6,
            part_ns / 1e6
        )
    })?;
    Ok(format!(
        "10^6 objects per side: STR {:.0} ms, partition {:.0} ms, ratio {ratio:.2} >= 3",
        str_ns / 1e6,
        part_ns / 1e6
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle-equivalence", oracle_equivalence),
        ("cycle-calibration", cycle_calibration),
        ("node-size-optimum", node_size_optimum),
        ("scalability-ordering", scalability_ordering),
        ("pbsm-vs-traversal", pbsm_beats_traversal),
        ("tile-join-crossover", tile_join_crossover),
        ("dedup-exactly-once", dedup_exactly_once),
        ("rtree-validity", rtree_validity),
        ("index-cost", index_cost),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
