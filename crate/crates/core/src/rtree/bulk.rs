// Sort-Tile-Recursive packing.
//
// Each level sorts its items by center x, cuts them into ceil(sqrt(P))
// vertical slices of ceil(sqrt(P)) * M items (P = ceil(n / M)), sorts each
// slice by center y and packs consecutive runs of M. The level above is built
// the same way from the produced nodes until a single node is left.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::{Entry, RTree, RTreeNode};
use crate::error::{Error, Result};
use crate::geometry::SpatialObject;

pub fn str_bulk_load(objects: &[SpatialObject], node_size: usize) -> Result<RTree> {
    build(objects, node_size, &Sorter::Sequential)
}

/// Same output as [`str_bulk_load`]; sorting runs on `workers` threads.
pub fn str_bulk_load_with_workers(
    objects: &[SpatialObject],
    node_size: usize,
    workers: usize,
) -> Result<RTree> {
    if workers <= 1 {
        return str_bulk_load(objects, node_size);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| build(objects, node_size, &Sorter::Parallel))
}

enum Sorter {
    Sequential,
    Parallel,
}

#[derive(Clone, Copy)]
struct Item {
    cx: f64,
    cy: f64,
    entry: Entry,
}

fn by_x(a: &Item, b: &Item) -> Ordering {
    a.cx.total_cmp(&b.cx)
        .then(a.cy.total_cmp(&b.cy))
        .then(a.entry.child.cmp(&b.entry.child))
}

fn by_y(a: &Item, b: &Item) -> Ordering {
    a.cy.total_cmp(&b.cy)
        .then(a.cx.total_cmp(&b.cx))
        .then(a.entry.child.cmp(&b.entry.child))
}

impl Sorter {
    // Keys are total orders (ids are unique), so unstable sorts are
    // deterministic and both variants give identical output.
    fn sort(&self, items: &mut [Item], cmp: fn(&Item, &Item) -> Ordering) {
        match self {
            Sorter::Sequential => items.sort_unstable_by(cmp),
            Sorter::Parallel => items.par_sort_unstable_by(cmp),
        }
    }
}

fn build(objects: &[SpatialObject], node_size: usize, sorter: &Sorter) -> Result<RTree> {
    if objects.is_empty() {
        return Err(Error::EmptyInput);
    }
    if node_size < 4 {
        return Err(Error::InvalidNodeSize(node_size));
    }

    let mut items: Vec<Item> = objects
        .iter()
        .map(|o| {
            let (cx, cy) = o.mbr.center();
            Item {
                cx,
                cy,
                entry: Entry {
                    mbr: o.mbr,
                    child: o.id,
                },
            }
        })
        .collect();

    let mut nodes: Vec<RTreeNode> = Vec::new();
    let mut is_leaf = true;
    let mut height = 1;
    loop {
        let first = nodes.len();
        pack_level(&mut items, node_size, is_leaf, sorter, &mut nodes);
        let produced = nodes.len() - first;
        if produced == 1 {
            break;
        }
        items = (first..nodes.len())
            .map(|idx| {
                let mbr = nodes[idx].mbr().expect("packed nodes are non-empty");
                let (cx, cy) = mbr.center();
                Item {
                    cx,
                    cy,
                    entry: Entry {
                        mbr,
                        child: idx as u32,
                    },
                }
            })
            .collect();
        is_leaf = false;
        height += 1;
    }

    let root = (nodes.len() - 1) as u32;
    Ok(RTree::from_parts(nodes, root, height, node_size))
}

fn pack_level(
    items: &mut [Item],
    node_size: usize,
    is_leaf: bool,
    sorter: &Sorter,
    out: &mut Vec<RTreeNode>,
) {
    let n = items.len();
    let leaves = n.div_ceil(node_size);
    let slices = (leaves as f64).sqrt().ceil() as usize;
    let slice_len = slices * node_size;

    sorter.sort(items, by_x);
    for slice in items.chunks_mut(slice_len) {
        sorter.sort(slice, by_y);
        for run in slice.chunks(node_size) {
            out.push(RTreeNode {
                is_leaf,
                entries: run.iter().map(|it| it.entry).collect(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mbr;
    use crate::rtree::validate_against;

    fn unit(id: u32, x: f32, y: f32) -> SpatialObject {
        SpatialObject {
            id,
            mbr: Mbr::new(x, y, x + 1., y + 1.).unwrap(),
        }
    }

    #[test]
    fn single_object_is_leaf_root() {
        let t = str_bulk_load(&[unit(3, 0., 0.)], 16).unwrap();
        assert_eq!(t.height(), 1);
        assert!(t.root().is_leaf);
        assert_eq!(t.root().count(), 1);
    }

    #[test]
    fn seventeen_identical_squares() {
        let objs: Vec<_> = (0..17).map(|i| unit(i, 5., 5.)).collect();
        let t = str_bulk_load(&objs, 16).unwrap();
        assert_eq!(t.height(), 2);
        let leaves: Vec<usize> = t
            .nodes()
            .iter()
            .filter(|n| n.is_leaf)
            .map(|n| n.count())
            .collect();
        assert_eq!(leaves, vec![16, 1]);
        assert!(!t.root().is_leaf);
        assert_eq!(t.root().count(), 2);
    }

    #[test]
    fn lattice_packs_full_leaves() {
        let objs: Vec<_> = (0..256)
            .map(|i| unit(i, (i % 16) as f32 * 2., (i / 16) as f32 * 2.))
            .collect();
        let t = str_bulk_load(&objs, 16).unwrap();
        assert_eq!(t.height(), 2);
        let leaves: Vec<_> = t.nodes().iter().filter(|n| n.is_leaf).collect();
        assert_eq!(leaves.len(), 16);
        assert!(leaves.iter().all(|l| l.count() == 16));
        for e in &t.root().entries {
            let child = t.node(e.child);
            assert!(child.entries.iter().all(|c| e.mbr.contains(&c.mbr)));
        }
        assert!(validate_against(&t, &objs, &Default::default()).is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(str_bulk_load(&[], 16), Err(Error::EmptyInput)));
        assert!(matches!(
            str_bulk_load(&[unit(0, 0., 0.)], 3),
            Err(Error::InvalidNodeSize(3))
        ));
    }

    #[test]
    fn input_order_does_not_matter() {
        let objs: Vec<_> = (0..500)
            .map(|i| unit(i, ((i * 37) % 101) as f32, ((i * 53) % 97) as f32))
            .collect();
        let mut rev = objs.clone();
        rev.reverse();
        assert_eq!(str_bulk_load(&objs, 8).unwrap(), str_bulk_load(&rev, 8).unwrap());
        assert_eq!(
            str_bulk_load(&objs, 8).unwrap(),
            str_bulk_load_with_workers(&rev, 8, 4).unwrap()
        );
    }
}
