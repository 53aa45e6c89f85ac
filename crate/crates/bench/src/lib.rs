//! Shared inputs for the criterion benches.

use spjoin_core::harness::{gen_uniform, DatasetSpec};
use spjoin_core::{Mbr, SpatialObject};

/// Two independent uniform datasets of unit squares in a square region with
/// side `side`.
pub fn uniform_pair(n: usize, side: f32) -> (Vec<SpatialObject>, Vec<SpatialObject>) {
    let region = Mbr::new(0.0, 0.0, side, side).unwrap();
    let gen = |seed| gen_uniform(&DatasetSpec::uniform(n, seed).with_region(region)).unwrap();
    (gen(1), gen(2))
}

/// Region side giving about `per_object` intersecting partners per object
/// for unit squares.
pub fn side_for_density(n: usize, per_object: f64) -> f32 {
    (4.0 * n as f64 / per_object).sqrt() as f32
}
