use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spjoin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spjoin"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = spjoin(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Two small overlapping datasets in a 300 x 300 region.
fn datasets(dir: &Path) {
    ok(
        dir,
        &[
            "gen",
            "--n",
            "3000",
            "--seed",
            "7",
            "--region",
            "0,0,300,300",
            "--out",
            "a.csv",
        ],
    );
    ok(
        dir,
        &[
            "gen",
            "--n",
            "2500",
            "--seed",
            "8",
            "--region",
            "0,0,300,300",
            "--out",
            "b.csv",
        ],
    );
}

fn stat(csv: &str, metric: &str) -> f64 {
    csv.lines()
        .find_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[4] == metric).then(|| f[5].parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {metric} row"))
}

fn params(csv: &str) -> String {
    csv.lines().nth(1).unwrap().split(',').nth(3).unwrap().to_string()
}

#[test]
fn gen_is_byte_identical() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["gen", "--n", "1000", "--seed", "7", "--out", "a.csv"]);
    ok(d.path(), &["gen", "--n", "1000", "--seed", "7", "--out", "b.csv"]);
    ok(d.path(), &["gen", "--n", "1000", "--seed", "8", "--out", "c.csv"]);
    let a = fs::read(d.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b.csv")).unwrap());
    assert_ne!(a, fs::read(d.path().join("c.csv")).unwrap());
    assert!(a.starts_with(b"id,xmin,ymin,xmax,ymax\n"));
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 1001);
}

#[test]
fn gen_to_stdout_matches_file() {
    let d = TempDir::new().unwrap();
    ok(
        d.path(),
        &["gen", "--n", "50", "--points", "--seed", "3", "--out", "p.csv"],
    );
    let out = ok(d.path(), &["gen", "--n", "50", "--points", "--seed", "3"]);
    assert_eq!(out.stdout, fs::read(d.path().join("p.csv")).unwrap());
}

#[test]
fn all_join_algorithms_write_identical_files() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    let base = [
        "--r",
        "a.csv",
        "--s",
        "b.csv",
        "--node-size",
        "16",
        "--workers",
        "8",
    ];
    let mut files = Vec::new();
    for algo in [
        "sync-bfs",
        "pbsm",
        "nested-loop",
        "plane-sweep",
        "sync-dfs",
        "pbsm1d",
    ] {
        let out = format!("{algo}.csv");
        let mut args = vec!["join", "--algo", algo, "--out", &out];
        args.extend(base);
        ok(d.path(), &args);
        files.push(fs::read_to_string(d.path().join(&out)).unwrap());
    }
    assert!(files[0].lines().count() > 10);
    assert!(files.iter().all(|f| *f == files[0]));
    let rows: Vec<&str> = files[0].lines().skip(1).collect();
    let mut sorted = rows.clone();
    sorted.sort_by_key(|l| {
        let (a, b) = l.split_once(',').unwrap();
        (a.parse::<u32>().unwrap(), b.parse::<u32>().unwrap())
    });
    assert_eq!(rows, sorted);
}

#[test]
fn pbsm_variants_and_prebuilt_trees_agree() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    ok(
        d.path(),
        &["index", "--input", "a.csv", "--node-size", "8", "--out", "a.ssrt"],
    );
    ok(
        d.path(),
        &[
            "index",
            "--input",
            "b.csv",
            "--node-size",
            "8",
            "--workers",
            "3",
            "--out",
            "b.ssrt",
        ],
    );
    let io = ["--r", "a.csv", "--s", "b.csv"];
    let runs: Vec<Vec<&str>> = vec![
        vec!["--algo", "nested-loop"],
        vec![
            "--algo",
            "pbsm",
            "--grid",
            "32",
            "--joiner",
            "nested-loop",
            "--policy",
            "dynamic",
        ],
        vec!["--algo", "pbsm", "--tile-size", "8"],
        vec!["--algo", "pbsm", "--max-geomean", "4", "--workers", "2"],
        vec!["--algo", "sync-dfs", "--tree-r", "a.ssrt", "--tree-s", "b.ssrt"],
    ];
    let outs: Vec<Vec<u8>> = runs
        .iter()
        .map(|extra| {
            let mut args = vec!["join"];
            args.extend(io);
            args.extend(extra);
            ok(d.path(), &args).stdout
        })
        .collect();
    assert!(outs.iter().all(|o| *o == outs[0]));
}

#[test]
fn sim_latency_is_cycles_over_clock() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    for mode in ["pbsm", "sync"] {
        ok(
            d.path(),
            &[
                "sim", "--mode", mode, "--r", "a.csv", "--s", "b.csv", "--stats", "st.csv", "--out",
                "res.csv",
            ],
        );
        let st = fs::read_to_string(d.path().join("st.csv")).unwrap();
        assert!(st.starts_with("experiment,dataset,algorithm,params,metric,value,seed\n"));
        let cycles = stat(&st, "cycles");
        assert!(cycles > 0.0);
        assert_eq!(stat(&st, "latency_seconds"), cycles / 2e8);
        let pairs = fs::read_to_string(d.path().join("res.csv"))
            .unwrap()
            .lines()
            .count()
            - 1;
        assert_eq!(stat(&st, "result_count"), pairs as f64);
    }
    let out = ok(
        d.path(),
        &[
            "sim",
            "--mode",
            "pbsm",
            "--r",
            "a.csv",
            "--s",
            "b.csv",
            "--clock-hz",
            "100000000",
        ],
    );
    let st = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stat(&st, "latency_seconds"), stat(&st, "cycles") / 1e8);
}

#[test]
fn sim_settings_precedence() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    fs::write(
        d.path().join("sim.cfg"),
        "# shared\nunits = 2\nmem_latency = 30\nburst_threshold = 64\n",
    )
    .unwrap();
    let io = ["sim", "--mode", "sync", "--r", "a.csv", "--s", "b.csv"];
    let run = |extra: &[&str]| {
        let mut args = io.to_vec();
        args.extend(extra);
        params(&String::from_utf8(ok(d.path(), &args).stdout).unwrap())
    };
    let p = run(&[
        "--config",
        "sim.cfg",
        "--set",
        "units=4",
        "--mem-latency",
        "12",
        "--policy",
        "dynamic",
    ]);
    assert!(p.contains("units=4;"), "{p}");
    assert!(p.contains("policy=dynamic;"), "{p}");
    assert!(p.contains("mem_latency=12;"), "{p}");
    assert!(p.contains("burst_threshold=64;"), "{p}");
    let p = run(&["--units", "3", "--mem-bw", "32", "--mem-turnaround", "0"]);
    assert!(
        p.contains("units=3;") && p.contains("mem_bw=32;") && p.contains("mem_turnaround=0;"),
        "{p}"
    );
}

#[test]
fn user_errors_exit_one() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    fs::write(
        d.path().join("bad.csv"),
        "id,xmin,ymin,xmax,ymax\n1,0,0,1,1\n2,5,0,1,1\n",
    )
    .unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["join", "--algo", "bogus", "--r", "a.csv", "--s", "b.csv"],
        vec!["join", "--algo", "pbsm", "--r", "missing.csv", "--s", "b.csv"],
        vec!["join", "--algo", "pbsm", "--r", "bad.csv", "--s", "b.csv"],
        vec!["index", "--input", "a.csv", "--node-size", "2", "--out", "x.ssrt"],
        vec![
            "sim", "--mode", "sync", "--r", "a.csv", "--s", "b.csv", "--units", "0",
        ],
        vec![
            "sim", "--mode", "sync", "--r", "a.csv", "--s", "b.csv", "--set", "warp=9",
        ],
        vec!["bench", "--experiment", "no-such-experiment"],
        vec!["bench", "--experiment", "index-cost", "--set", "index_n=0"],
        vec!["validate", "--tree", "a.csv"],
        vec!["frobnicate"],
        vec![],
    ];
    for args in cases {
        let out = spjoin(d.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty(), "{args:?}");
    }
    let out = spjoin(
        d.path(),
        &["join", "--algo", "pbsm", "--r", "bad.csv", "--s", "b.csv"],
    );
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    assert_eq!(spjoin(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn validate_tree_against_dataset() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    ok(d.path(), &["index", "--input", "a.csv", "--out", "a.ssrt"]);
    ok(d.path(), &["validate", "--tree", "a.ssrt"]);
    ok(d.path(), &["validate", "--tree", "a.ssrt", "--dataset", "a.csv"]);
    ok(d.path(), &["validate", "--dataset", "b.csv"]);
    // same ids, different rectangles
    let out = spjoin(d.path(), &["validate", "--tree", "a.ssrt", "--dataset", "b.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("violations"));

    let mut bytes = fs::read(d.path().join("a.ssrt")).unwrap();
    bytes.truncate(bytes.len() - 7);
    fs::write(d.path().join("cut.ssrt"), bytes).unwrap();
    let out = spjoin(d.path(), &["validate", "--tree", "cut.ssrt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("malformed"));
}

#[test]
fn partition_summary_counts() {
    let d = TempDir::new().unwrap();
    datasets(d.path());
    let out = ok(
        d.path(),
        &["partition", "--r", "a.csv", "--s", "b.csv", "--grid", "4"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    let nr: usize = rows.iter().map(|r| r[5].parse::<usize>().unwrap()).sum();
    assert!(nr >= 3000);
    let out = ok(
        d.path(),
        &[
            "partition",
            "--r",
            "a.csv",
            "--s",
            "b.csv",
            "--max-geomean",
            "8",
            "--out",
            "t.csv",
        ],
    );
    assert!(stderr(&out).contains("tiles"));
    assert!(fs::read_to_string(d.path().join("t.csv"))
        .unwrap()
        .starts_with("tile,xmin,ymin,xmax,ymax,n_r,n_s,flagged\n"));
}

#[test]
fn bench_writes_stats_with_config() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("b.cfg"), "n = 3000\npair_sizes = 8,16\n").unwrap();
    ok(
        d.path(),
        &[
            "bench",
            "--experiment",
            "cycles-per-predicate",
            "--config",
            "b.cfg",
            "--units",
            "1",
            "--out",
            "s.csv",
        ],
    );
    let st = fs::read_to_string(d.path().join("s.csv")).unwrap();
    assert!(st.starts_with("experiment,dataset,algorithm,params,metric,value,seed\n"));
    assert!(st.lines().skip(1).all(|l| l.starts_with("cycles-per-predicate,")));
    assert!(st.contains("uniform-3000x3000"));
}
