// Synchronous traversal of two R-trees.
//
// A task is a pair of nodes. Joining it compares entries of both nodes:
// leaf/leaf pairs yield object-id results, directory/directory pairs yield
// child-pair tasks, and a leaf paired with a directory is compared as a
// single entry (the leaf's own MBR) against the directory's children, so the
// leaf is carried down unchanged until the other side reaches its leaves.

use super::kernels::nl_indices;
use super::workers::{run_tasks, Policy};
use super::{JoinResult, JoinStats, Pair};
use crate::rtree::{Entry, RTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePairTask {
    pub node_r: u32,
    pub node_s: u32,
}

pub(crate) enum Side<'a> {
    Node(&'a [Entry]),
    Whole(Entry),
}

impl Side<'_> {
    pub(crate) fn as_slice(&self) -> &[Entry] {
        match self {
            Side::Node(e) => e,
            Side::Whole(e) => std::slice::from_ref(e),
        }
    }
}

/// The two entry lists a node-pair task compares. Output `(i, j)` maps to
/// `(r[i].child, s[j].child)`: object ids when `leaf_level`, otherwise the
/// next task's node indices.
pub(crate) struct PairOperands<'a> {
    pub leaf_level: bool,
    pub r: Side<'a>,
    pub s: Side<'a>,
}

impl PairOperands<'_> {
    pub(crate) fn output(&self, (i, j): (u32, u32)) -> Pair {
        (
            self.r.as_slice()[i as usize].child,
            self.s.as_slice()[j as usize].child,
        )
    }
}

fn whole(tree: &RTree, idx: u32) -> Side<'_> {
    match tree.node(idx).mbr() {
        Some(mbr) => Side::Whole(Entry { mbr, child: idx }),
        None => Side::Node(&[]),
    }
}

pub(crate) fn pair_operands<'a>(
    tree_r: &'a RTree,
    tree_s: &'a RTree,
    task: NodePairTask,
) -> PairOperands<'a> {
    let a = tree_r.node(task.node_r);
    let b = tree_s.node(task.node_s);
    match (a.is_leaf, b.is_leaf) {
        (true, true) | (false, false) => PairOperands {
            leaf_level: a.is_leaf,
            r: Side::Node(&a.entries),
            s: Side::Node(&b.entries),
        },
        (true, false) => PairOperands {
            leaf_level: false,
            r: whole(tree_r, task.node_r),
            s: Side::Node(&b.entries),
        },
        (false, true) => PairOperands {
            leaf_level: false,
            r: Side::Node(&a.entries),
            s: whole(tree_s, task.node_s),
        },
    }
}

fn root_task(tree_r: &RTree, tree_s: &RTree) -> NodePairTask {
    NodePairTask {
        node_r: tree_r.root_index(),
        node_s: tree_s.root_index(),
    }
}

#[derive(Default)]
struct Scratch {
    idx: Vec<(u32, u32)>,
    results: Vec<Pair>,
    next: Vec<NodePairTask>,
    evals: u64,
}

fn join_task(tree_r: &RTree, tree_s: &RTree, task: NodePairTask, st: &mut Scratch) {
    let ops = pair_operands(tree_r, tree_s, task);
    st.idx.clear();
    st.evals += nl_indices(ops.r.as_slice(), ops.s.as_slice(), &mut st.idx);
    for &ij in &st.idx {
        let (x, y) = ops.output(ij);
        if ops.leaf_level {
            st.results.push((x, y));
        } else {
            st.next.push(NodePairTask { node_r: x, node_s: y });
        }
    }
}

/// Depth-first synchronous traversal.
pub fn sync_traversal_dfs(tree_r: &RTree, tree_s: &RTree) -> JoinResult {
    sync_traversal_dfs_counted(tree_r, tree_s).0
}

/// DFS with per-depth node-pair counts in `tasks_per_level`.
pub fn sync_traversal_dfs_counted(tree_r: &RTree, tree_s: &RTree) -> (JoinResult, JoinStats) {
    fn recurse(
        tree_r: &RTree,
        tree_s: &RTree,
        task: NodePairTask,
        depth: usize,
        st: &mut Scratch,
        per_depth: &mut Vec<u64>,
    ) {
        if per_depth.len() <= depth {
            per_depth.resize(depth + 1, 0);
        }
        per_depth[depth] += 1;
        let start = st.next.len();
        join_task(tree_r, tree_s, task, st);
        // children are appended after `start`; take them back off so that
        // `next` works as the recursion stack
        let children: Vec<NodePairTask> = st.next.drain(start..).collect();
        for child in children {
            recurse(tree_r, tree_s, child, depth + 1, st, per_depth);
        }
    }

    let mut st = Scratch::default();
    let mut per_depth = Vec::new();
    recurse(
        tree_r,
        tree_s,
        root_task(tree_r, tree_s),
        0,
        &mut st,
        &mut per_depth,
    );
    let stats = JoinStats {
        predicate_evals: st.evals,
        sweep_tests: 0,
        tasks_per_level: per_depth,
    };
    (JoinResult::from_pairs(st.results), stats)
}

/// Level-by-level synchronous traversal; each level's node pairs are
/// spread over `workers` threads.
pub fn sync_traversal_bfs(tree_r: &RTree, tree_s: &RTree, workers: usize, policy: Policy) -> JoinResult {
    sync_traversal_bfs_counted(tree_r, tree_s, workers, policy).0
}

pub fn sync_traversal_bfs_counted(
    tree_r: &RTree,
    tree_s: &RTree,
    workers: usize,
    policy: Policy,
) -> (JoinResult, JoinStats) {
    let mut level = vec![root_task(tree_r, tree_s)];
    let mut results = Vec::new();
    let mut stats = JoinStats::default();
    while !level.is_empty() {
        stats.tasks_per_level.push(level.len() as u64);
        let states = run_tasks(&level, workers, policy, Scratch::default, |st, task| {
            join_task(tree_r, tree_s, *task, st)
        });
        let mut next = Vec::new();
        for st in states {
            stats.predicate_evals += st.evals;
            results.extend(st.results);
            next.extend(st.next);
        }
        level = next;
    }
    (JoinResult::from_pairs(results), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Mbr, SpatialObject};
    use crate::join::nested_loop_join;
    use crate::rtree::str_bulk_load;
    use rand::{Rng, SeedableRng};

    fn squares(n: u32, x0: f32, side: f32, seed: u64) -> Vec<SpatialObject> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x = x0 + rng.random_range(0.0..side);
                let y = rng.random_range(0.0..side);
                SpatialObject {
                    id: i,
                    mbr: Mbr::new(x, y, x + 1., y + 1.).unwrap(),
                }
            })
            .collect()
    }

    #[test]
    fn single_object_trees() {
        let r = [SpatialObject {
            id: 4,
            mbr: Mbr::new(0., 0., 2., 2.).unwrap(),
        }];
        let s = [SpatialObject {
            id: 9,
            mbr: Mbr::new(1., 1., 3., 3.).unwrap(),
        }];
        let (tr, ts) = (str_bulk_load(&r, 16).unwrap(), str_bulk_load(&s, 16).unwrap());
        assert_eq!(sync_traversal_dfs(&tr, &ts).pairs(), &[(4, 9)]);
        assert_eq!(sync_traversal_bfs(&tr, &ts, 2, Policy::Static).pairs(), &[(4, 9)]);
    }

    #[test]
    fn different_heights_match_oracle() {
        let r = squares(10, 0., 300., 1);
        let s = squares(10_000, 0., 300., 2);
        let (tr, ts) = (str_bulk_load(&r, 16).unwrap(), str_bulk_load(&s, 16).unwrap());
        assert!(ts.height() > tr.height());
        let oracle = nested_loop_join(&r, &s);
        assert_eq!(sync_traversal_dfs(&tr, &ts), oracle);
        assert_eq!(sync_traversal_dfs(&ts, &tr).len(), oracle.len());
        for policy in [Policy::Static, Policy::Dynamic] {
            assert_eq!(sync_traversal_bfs(&tr, &ts, 3, policy), oracle);
        }
    }

    #[test]
    fn disjoint_roots() {
        let r = squares(500, -400., 300., 1);
        let s = squares(500, 1000., 300., 2);
        let (tr, ts) = (str_bulk_load(&r, 16).unwrap(), str_bulk_load(&s, 16).unwrap());
        let (res, st) = sync_traversal_dfs_counted(&tr, &ts);
        assert!(res.is_empty());
        assert_eq!(st.tasks_per_level, vec![1]);
        let root_evals = (tr.root().count() * ts.root().count()) as u64;
        assert_eq!(st.predicate_evals, root_evals);
    }

    #[test]
    fn bfs_levels_match_dfs_depths() {
        let r = squares(3000, 0., 500., 3);
        let s = squares(2000, 0., 500., 4);
        let (tr, ts) = (str_bulk_load(&r, 8).unwrap(), str_bulk_load(&s, 8).unwrap());
        let (a, da) = sync_traversal_dfs_counted(&tr, &ts);
        let (b, db) = sync_traversal_bfs_counted(&tr, &ts, 4, Policy::Dynamic);
        assert_eq!(a, b);
        assert_eq!(da, db);
    }
}
