//! Software spatial-join engines. All of them return the same [`JoinResult`]
//! for the same inputs; `nested_loop_join` is the reference.

mod kernels;
mod pbsm;
mod sync_traversal;
mod workers;

pub use kernels::{nested_loop_join, nested_loop_join_counted, plane_sweep_join, plane_sweep_join_counted};
pub use pbsm::{
    pbsm_1d, pbsm_emit, pbsm_hierarchical_partition, pbsm_hierarchical_partition_from, pbsm_join,
    pbsm_join_counted, pbsm_partition, GridSpec, Tile, TileJoiner, MIN_EXTENT_DIVISOR,
};
pub use sync_traversal::{
    sync_traversal_bfs, sync_traversal_bfs_counted, sync_traversal_dfs, sync_traversal_dfs_counted,
    NodePairTask,
};
pub use workers::Policy;

pub(crate) use kernels::{nl_indices, sweep_indices, Axis};
pub(crate) use sync_traversal::pair_operands;

/// One `(id_r, id_s)` result.
pub type Pair = (u32, u32);

/// Set of qualifying id pairs, kept sorted and de-duplicated so that
/// equality is order-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinResult {
    pairs: Vec<Pair>,
}

impl JoinResult {
    pub fn from_pairs(mut pairs: Vec<Pair>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        JoinResult { pairs }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<Pair> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: &Pair) -> bool {
        self.pairs.binary_search(pair).is_ok()
    }
}

impl FromIterator<Pair> for JoinResult {
    fn from_iter<I: IntoIterator<Item = Pair>>(iter: I) -> Self {
        JoinResult::from_pairs(iter.into_iter().collect())
    }
}

/// Operation counters. Every field merges by addition so per-worker
/// counters can be combined in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinStats {
    /// MBR pair evaluations (nested loop, tree node pairs).
    pub predicate_evals: u64,
    /// Overlap tests performed against an active set by plane sweep.
    pub sweep_tests: u64,
    /// Node pairs joined per traversal level (index 0 = root pair).
    pub tasks_per_level: Vec<u64>,
}

impl JoinStats {
    pub fn merge(&mut self, other: &JoinStats) {
        self.predicate_evals += other.predicate_evals;
        self.sweep_tests += other.sweep_tests;
        if self.tasks_per_level.len() < other.tasks_per_level.len() {
            self.tasks_per_level.resize(other.tasks_per_level.len(), 0);
        }
        for (a, b) in self.tasks_per_level.iter_mut().zip(&other.tasks_per_level) {
            *a += b;
        }
    }

    pub fn total_tasks(&self) -> u64 {
        self.tasks_per_level.iter().sum()
    }
}
