//! Spatial-join filtering: MBR predicates, STR-packed R-trees, software
//! join engines (nested loop, plane sweep, synchronous traversal, PBSM) and
//! a cycle-level model of a join accelerator built from pipelined
//! nested-loop join units.

pub mod accel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod join;
pub mod rtree;

pub use accel::{sim_pbsm, sim_sync_traversal, CycleStats, SimConfig, SimOutcome};
pub use error::{Error, Result};
pub use geometry::{intersection_reference_point, mbr_intersects, point_in_tile, Mbr, Point, SpatialObject};
pub use join::{JoinResult, JoinStats, Pair, Policy, TileJoiner};
pub use rtree::{str_bulk_load, RTree};
