//! Static R-tree: flat node array, STR bulk loading, structural validation
//! and a fixed-slot binary layout shared with the accelerator model.

mod bulk;
mod serial;
mod validate;

pub use bulk::{str_bulk_load, str_bulk_load_with_workers};
pub use serial::{deserialize, read_tree_file, serialize, write_tree_file, MAGIC, VERSION};
pub use validate::{validate, validate_against, ValidateOptions, ValidationReport, Violation};

use crate::geometry::Mbr;

/// Bytes a node entry occupies in memory: four f32 coordinates and a u32 ref.
pub const ENTRY_BYTES: usize = 20;

/// `child` is a node index in directory nodes and an object id in leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub mbr: Mbr,
    pub child: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RTreeNode {
    pub is_leaf: bool,
    pub entries: Vec<Entry>,
}

impl RTreeNode {
    pub fn count(&self) -> usize {
        self.entries.len()
    }

    /// Tight bounding box of the node's entries.
    pub fn mbr(&self) -> Option<Mbr> {
        Mbr::union_all(self.entries.iter().map(|e| &e.mbr))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RTree {
    nodes: Vec<RTreeNode>,
    root: u32,
    height: u32,
    node_size: usize,
}

impl RTree {
    /// Assembles a tree from raw parts without checking structure; run
    /// [`validate`] on anything that did not come from [`str_bulk_load`].
    pub fn from_parts(nodes: Vec<RTreeNode>, root: u32, height: u32, node_size: usize) -> Self {
        RTree {
            nodes,
            root,
            height,
            node_size,
        }
    }

    pub fn nodes(&self) -> &[RTreeNode] {
        &self.nodes
    }

    /// Mutable access for tests and repair tools. Edits may break invariants.
    pub fn nodes_mut(&mut self) -> &mut [RTreeNode] {
        &mut self.nodes
    }

    pub fn node(&self, index: u32) -> &RTreeNode {
        &self.nodes[index as usize]
    }

    pub fn root_index(&self) -> u32 {
        self.root
    }

    pub fn root(&self) -> &RTreeNode {
        &self.nodes[self.root as usize]
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Maximum entries per node (`M`).
    pub fn node_size(&self) -> usize {
        self.node_size
    }

    pub fn len(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf)
            .map(|n| n.entries.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ids of every object whose MBR intersects `window`.
    pub fn window_query(&self, window: &Mbr) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(idx) = stack.pop() {
            let node = self.node(idx);
            for e in node.entries.iter().filter(|e| e.mbr.intersects(window)) {
                if node.is_leaf {
                    out.push(e.child);
                } else {
                    stack.push(e.child);
                }
            }
        }
        out
    }
}
