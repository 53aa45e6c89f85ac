use std::collections::HashMap;
use std::fmt;

use super::RTree;
use crate::geometry::{Mbr, SpatialObject};

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Minimum entries for non-root nodes. STR packing may legitimately
    /// leave a single entry in the last node of a level, so the default is 1;
    /// use 2 for trees imported from other systems.
    pub min_fill: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { min_fill: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RootOutOfRange {
        root: u32,
        node_count: usize,
    },
    CountOutOfBounds {
        node: u32,
        count: usize,
        min: usize,
        max: usize,
    },
    ChildOutOfRange {
        node: u32,
        child: u32,
    },
    NodeRevisited {
        node: u32,
    },
    Unreachable {
        node: u32,
    },
    LeafDepth {
        node: u32,
        depth: u32,
        expected: u32,
    },
    NotTight {
        node: u32,
        entry: usize,
        stored: Mbr,
        actual: Option<Mbr>,
    },
    DuplicateObject {
        id: u32,
    },
    MissingObject {
        id: u32,
    },
    WrongMbr {
        id: u32,
        stored: Mbr,
        expected: Mbr,
    },
    UnknownObject {
        id: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            RootOutOfRange { root, node_count } => {
                write!(f, "root index {root} out of range ({node_count} nodes)")
            }
            CountOutOfBounds {
                node,
                count,
                min,
                max,
            } => {
                write!(f, "node {node}: {count} entries, expected {min}..={max}")
            }
            ChildOutOfRange { node, child } => write!(f, "node {node}: child {child} out of range"),
            NodeRevisited { node } => write!(f, "node {node} referenced more than once"),
            Unreachable { node } => write!(f, "node {node} unreachable from root"),
            LeafDepth {
                node,
                depth,
                expected,
            } => {
                write!(f, "leaf {node} at depth {depth}, expected {expected}")
            }
            NotTight {
                node,
                entry,
                stored,
                actual,
            } => write!(
                f,
                "node {node} entry {entry}: stored MBR {stored:?} != child union {actual:?}"
            ),
            DuplicateObject { id } => write!(f, "object {id} appears in more than one leaf slot"),
            MissingObject { id } => write!(f, "object {id} missing from the tree"),
            WrongMbr { id, stored, expected } => {
                write!(f, "object {id}: leaf MBR {stored:?} != source MBR {expected:?}")
            }
            UnknownObject { id } => write!(f, "object {id} not in the source dataset"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural checks: fill bounds, uniform leaf depth, tight parent MBRs
/// and no object id stored twice.
pub fn validate(tree: &RTree, opts: &ValidateOptions) -> ValidationReport {
    check(tree, None, opts)
}

/// [`validate`] plus coverage: every source id appears exactly once, with
/// the source MBR.
pub fn validate_against(tree: &RTree, objects: &[SpatialObject], opts: &ValidateOptions) -> ValidationReport {
    check(tree, Some(objects), opts)
}

fn check(tree: &RTree, source: Option<&[SpatialObject]>, opts: &ValidateOptions) -> ValidationReport {
    let mut v = Vec::new();
    let nodes = tree.nodes();
    let max = tree.node_size();
    let root = tree.root_index();
    if root as usize >= nodes.len() {
        v.push(Violation::RootOutOfRange {
            root,
            node_count: nodes.len(),
        });
        return ValidationReport { violations: v };
    }

    let leaf_depth = tree.height().saturating_sub(1);
    let mut seen = vec![false; nodes.len()];
    let mut ids: HashMap<u32, (u32, Mbr)> = HashMap::new();
    let mut stack = vec![(root, 0u32)];
    seen[root as usize] = true;

    while let Some((idx, depth)) = stack.pop() {
        let node = &nodes[idx as usize];
        let min = if idx == root { 1 } else { opts.min_fill.max(1) };
        if node.count() < min || node.count() > max {
            v.push(Violation::CountOutOfBounds {
                node: idx,
                count: node.count(),
                min,
                max,
            });
        }
        if node.is_leaf {
            if depth != leaf_depth {
                v.push(Violation::LeafDepth {
                    node: idx,
                    depth,
                    expected: leaf_depth,
                });
            }
            for e in &node.entries {
                ids.entry(e.child).or_insert((0, e.mbr)).0 += 1;
            }
            continue;
        }
        for (i, e) in node.entries.iter().enumerate() {
            let Some(child) = nodes.get(e.child as usize) else {
                v.push(Violation::ChildOutOfRange {
                    node: idx,
                    child: e.child,
                });
                continue;
            };
            let actual = child.mbr();
            if actual != Some(e.mbr) {
                v.push(Violation::NotTight {
                    node: idx,
                    entry: i,
                    stored: e.mbr,
                    actual,
                });
            }
            if std::mem::replace(&mut seen[e.child as usize], true) {
                v.push(Violation::NodeRevisited { node: e.child });
                continue;
            }
            stack.push((e.child, depth + 1));
        }
    }

    for (idx, s) in seen.iter().enumerate() {
        if !s {
            v.push(Violation::Unreachable { node: idx as u32 });
        }
    }

    let mut dups: Vec<u32> = ids
        .iter()
        .filter(|(_, &(c, _))| c > 1)
        .map(|(&id, _)| id)
        .collect();
    dups.sort_unstable();
    v.extend(dups.into_iter().map(|id| Violation::DuplicateObject { id }));

    if let Some(objects) = source {
        let mut missing: Vec<u32> = objects
            .iter()
            .filter(|o| !ids.contains_key(&o.id))
            .map(|o| o.id)
            .collect();
        missing.sort_unstable();
        v.extend(missing.into_iter().map(|id| Violation::MissingObject { id }));

        let mut wrong: Vec<(u32, Mbr, Mbr)> = objects
            .iter()
            .filter_map(|o| {
                let &(_, stored) = ids.get(&o.id)?;
                (stored != o.mbr).then_some((o.id, stored, o.mbr))
            })
            .collect();
        wrong.sort_unstable_by_key(|w| w.0);
        v.extend(
            wrong
                .into_iter()
                .map(|(id, stored, expected)| Violation::WrongMbr { id, stored, expected }),
        );

        let known: std::collections::HashSet<u32> = objects.iter().map(|o| o.id).collect();
        let mut unknown: Vec<u32> = ids.keys().filter(|id| !known.contains(id)).copied().collect();
        unknown.sort_unstable();
        v.extend(unknown.into_iter().map(|id| Violation::UnknownObject { id }));
    }

    ValidationReport { violations: v }
}
