//! Datasets, file formats and experiment drivers.

mod config;
mod dataset;
mod experiments;
mod io;

pub use config::{apply_sim_key, load_key_values, parse_key_values, ExperimentConfig, KeyValues};
pub use dataset::{gen_uniform, DatasetKind, DatasetSpec, DEFAULT_REGION};
pub use experiments::{
    median_time, run_experiment, sim_params, synthetic_tiles, time_tile_joins, BenchReport, Cardinality,
    Experiment, TileTiming,
};
pub use io::{
    load_dataset, load_results, read_dataset, read_results, read_stats, store_dataset, store_results,
    write_dataset, write_results, write_stats, StatsRow, DATASET_HEADER, RESULT_HEADER, STATS_HEADER,
};
