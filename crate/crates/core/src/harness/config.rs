// Flat `key = value` configuration. Blank lines and `#` comments are
// ignored; keys use dashes or underscores interchangeably.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::accel::SimConfig;
use crate::error::{Error, Result};
use crate::join::Policy;

pub type KeyValues = BTreeMap<String, String>;

fn norm(key: &str) -> String {
    key.trim().replace('_', "-")
}

pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut out = KeyValues::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::ConfigSchema(format!("line {}: expected key=value", i + 1)));
        };
        out.insert(norm(k), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_key_values(path: impl AsRef<Path>) -> Result<KeyValues> {
    parse_key_values(&std::fs::read_to_string(path)?)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::ConfigSchema(format!("{key}: cannot parse `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::ConfigSchema(format!("{key}: empty list")));
    }
    Ok(items)
}

/// Applies one simulator key. Returns `false` if `key` is not a simulator
/// setting.
pub fn apply_sim_key(cfg: &mut SimConfig, key: &str, v: &str) -> Result<bool> {
    match norm(key).as_str() {
        "units" => cfg.num_join_units = parse(key, v)?,
        "mem-latency" => cfg.mem_latency_cycles = parse(key, v)?,
        "mem-bw" => cfg.mem_bw_bytes_per_cycle = parse(key, v)?,
        "mem-turnaround" => cfg.mem_turnaround_cycles = parse(key, v)?,
        "entry-bytes" => cfg.entry_bytes = parse(key, v)?,
        "result-pair-bytes" => cfg.result_pair_bytes = parse(key, v)?,
        "pipeline-depth" => cfg.pipeline_depth = parse(key, v)?,
        "burst-threshold" => cfg.burst_threshold_bytes = parse(key, v)?,
        "clock-hz" => cfg.clock_hz = parse(key, v)?,
        "policy" => cfg.scheduling_policy = parse(key, v)?,
        "read-channels" => cfg.read_channels = parse(key, v)?,
        "write-channels" => cfg.write_channels = parse(key, v)?,
        "host-link-bw" => cfg.host_link_bytes_per_sec = parse(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

/// Settings shared by all experiments. Lists apply to the experiments that
/// sweep them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Objects per generated dataset.
    pub n: usize,
    pub seed: u64,
    /// Load R and S from CSV instead of generating them.
    pub r_path: Option<PathBuf>,
    pub s_path: Option<PathBuf>,
    pub node_sizes: Vec<usize>,
    pub unit_counts: Vec<usize>,
    /// Node sizes for cycles-per-predicate.
    pub pair_sizes: Vec<usize>,
    pub tile_sizes: Vec<usize>,
    pub tiles_per_batch: usize,
    pub max_geomean: u32,
    pub workers: usize,
    pub policy: Policy,
    /// Objects per dataset for index-cost.
    pub index_n: usize,
    pub sim: SimConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100_000,
            seed: 1,
            r_path: None,
            s_path: None,
            node_sizes: vec![8, 16, 32, 64],
            unit_counts: vec![1, 2, 4, 8, 16],
            pair_sizes: vec![4, 8, 16, 32, 64],
            tile_sizes: vec![8, 16, 32, 64, 128],
            tiles_per_batch: 256,
            max_geomean: 16,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            policy: Policy::Static,
            index_n: 1_000_000,
            sim: SimConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        for (k, v) in kv {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let key = norm(key);
        match key.as_str() {
            "n" => self.n = parse(&key, v)?,
            "seed" => self.seed = parse(&key, v)?,
            "r" => self.r_path = Some(PathBuf::from(v)),
            "s" => self.s_path = Some(PathBuf::from(v)),
            "node-sizes" => self.node_sizes = parse_list(&key, v)?,
            "unit-counts" => self.unit_counts = parse_list(&key, v)?,
            "pair-sizes" => self.pair_sizes = parse_list(&key, v)?,
            "tile-sizes" => self.tile_sizes = parse_list(&key, v)?,
            "tiles-per-batch" => self.tiles_per_batch = parse(&key, v)?,
            "max-geomean" => self.max_geomean = parse(&key, v)?,
            "workers" => self.workers = parse(&key, v)?,
            "index-n" => self.index_n = parse(&key, v)?,
            "policy" => {
                self.policy = parse(&key, v)?;
                self.sim.scheduling_policy = self.policy;
            }
            _ => {
                if !apply_sim_key(&mut self.sim, &key, v)? {
                    return Err(Error::ConfigSchema(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigSchema(m.to_string()));
        if self.n == 0 || self.index_n == 0 {
            return bad("dataset sizes must be positive");
        }
        if self.r_path.is_some() != self.s_path.is_some() {
            return bad("set both r and s, or neither");
        }
        if self.node_sizes.iter().any(|&m| m < 4) {
            return bad("node sizes must be at least 4");
        }
        if self.unit_counts.contains(&0) || self.workers == 0 {
            return bad("unit and worker counts must be positive");
        }
        if self.pair_sizes.contains(&0) || self.tile_sizes.contains(&0) || self.tiles_per_batch == 0 {
            return bad("sizes must be positive");
        }
        if self.max_geomean == 0 {
            return bad("max-geomean must be positive");
        }
        self.sim
            .validate()
            .map_err(|e| Error::ConfigSchema(e.to_string()))
    }
}
