// Little-endian file layout:
//
//   header  "SSRT" | version u32 | M u32 | height u32 | node_count u32 | root u32
//   node    is_leaf u8 | pad [u8; 3] | count u32 | M slots of
//           (xmin f32, ymin f32, xmax f32, ymax f32, ref u32)
//
// Unused slots are zero-filled so every record has the same size and a node
// can be addressed as `HEADER_BYTES + index * record_bytes(M)`.

use std::io::Write;
use std::path::Path;

use super::{Entry, RTree, RTreeNode, ENTRY_BYTES};
use crate::error::{Error, Result};
use crate::geometry::Mbr;

pub const MAGIC: &[u8; 4] = b"SSRT";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 24;
const NODE_HEADER_BYTES: usize = 8;

fn record_bytes(node_size: usize) -> usize {
    NODE_HEADER_BYTES + node_size * ENTRY_BYTES
}

pub fn serialize<W: Write>(tree: &RTree, mut sink: W) -> Result<()> {
    let m = tree.node_size();
    let mut buf = Vec::with_capacity(HEADER_BYTES + tree.nodes().len() * record_bytes(m));
    buf.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        m as u32,
        tree.height(),
        tree.nodes().len() as u32,
        tree.root_index(),
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for node in tree.nodes() {
        buf.push(node.is_leaf as u8);
        buf.extend_from_slice(&[0; 3]);
        buf.extend_from_slice(&(node.count() as u32).to_le_bytes());
        for e in &node.entries {
            for c in [e.mbr.xmin, e.mbr.ymin, e.mbr.xmax, e.mbr.ymax] {
                buf.extend_from_slice(&c.to_le_bytes());
            }
            buf.extend_from_slice(&e.child.to_le_bytes());
        }
        let unused = m.saturating_sub(node.count());
        buf.resize(buf.len() + unused * ENTRY_BYTES, 0);
    }
    sink.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn malformed(&self, at: usize, reason: impl Into<String>) -> Error {
        Error::Malformed {
            offset: at,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.malformed(self.pos, format!("truncated: need {n} more bytes"))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn deserialize(source: &[u8]) -> Result<RTree> {
    let mut cur = Cursor { data: source, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(cur.malformed(0, "bad magic"));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(cur.malformed(4, format!("unsupported version {version}")));
    }
    let node_size = cur.u32()? as usize;
    if node_size == 0 {
        return Err(cur.malformed(8, "node size 0"));
    }
    let height = cur.u32()?;
    if height == 0 {
        return Err(cur.malformed(12, "height 0"));
    }
    let node_count = cur.u32()? as usize;
    if node_count == 0 {
        return Err(cur.malformed(16, "node count 0"));
    }
    let root = cur.u32()?;
    if root as usize >= node_count {
        return Err(cur.malformed(20, format!("root {root} >= node count {node_count}")));
    }
    let expected = record_bytes(node_size)
        .checked_mul(node_count)
        .and_then(|b| b.checked_add(HEADER_BYTES));
    match expected {
        Some(len) if len == source.len() => {}
        Some(len) if len > source.len() => {
            return Err(cur.malformed(source.len(), format!("truncated: expected {len} bytes")))
        }
        Some(len) => return Err(cur.malformed(len, "trailing bytes after last node")),
        None => return Err(cur.malformed(8, "node size * node count overflows")),
    }

    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let rec_start = cur.pos;
        let flag = cur.take(4)?[0];
        let is_leaf = match flag {
            0 => false,
            1 => true,
            f => return Err(cur.malformed(rec_start, format!("bad leaf flag {f}"))),
        };
        let count = cur.u32()? as usize;
        if count > node_size {
            return Err(cur.malformed(rec_start + 4, format!("count {count} > node size")));
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let at = cur.pos;
            let (xmin, ymin, xmax, ymax) = (cur.f32()?, cur.f32()?, cur.f32()?, cur.f32()?);
            let mbr = Mbr::new(xmin, ymin, xmax, ymax).map_err(|e| cur.malformed(at, e.to_string()))?;
            let child = cur.u32()?;
            if !is_leaf && child as usize >= node_count {
                return Err(cur.malformed(at + 16, format!("child {child} out of range")));
            }
            entries.push(Entry { mbr, child });
        }
        cur.take((node_size - count) * ENTRY_BYTES)?;
        nodes.push(RTreeNode { is_leaf, entries });
    }
    Ok(RTree::from_parts(nodes, root, height, node_size))
}

pub fn write_tree_file(tree: &RTree, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serialize(tree, std::io::BufWriter::new(f))
}

pub fn read_tree_file(path: impl AsRef<Path>) -> Result<RTree> {
    deserialize(&std::fs::read(path)?)
}
