//! Partition-based spatial-merge join.
//!
//! Objects are replicated into every tile their MBR touches (closed
//! boundaries). A candidate pair found inside a tile is kept only if the
//! minimum corner of the pair's intersection lies in that tile under
//! half-open membership, so each pair is reported by exactly one tile.

use super::kernels::{nl_indices, sweep_indices, Axis};
use super::workers::{run_tasks, Policy};
use super::{JoinResult, JoinStats, Pair};
use crate::error::{Error, Result};
use crate::geometry::{intersection_reference_point, point_in_tile, Mbr, SpatialObject};

/// Hierarchical splitting stops once a tile's larger side is at most the
/// region's larger side divided by this.
pub const MIN_EXTENT_DIVISOR: f32 = (1u32 << 14) as f32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub region: Mbr,
    pub cols: usize,
    pub rows: usize,
}

impl GridSpec {
    pub fn new(region: Mbr, cols: usize, rows: usize) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidSpec(format!("grid {cols}x{rows} has no tiles")));
        }
        if !region.is_valid() {
            return Err(Error::InvalidSpec(format!("bad grid region {region:?}")));
        }
        Ok(GridSpec { region, cols, rows })
    }

    /// Grid over the union MBR of both datasets.
    pub fn covering(r: &[SpatialObject], s: &[SpatialObject], cols: usize, rows: usize) -> Result<Self> {
        let region = Mbr::union_all(r.iter().chain(s).map(|o| &o.mbr)).unwrap_or(Mbr::point(0., 0.));
        GridSpec::new(region, cols, rows)
    }

    /// Square grid over the union MBR sized so that a tile holds about
    /// `per_tile` objects (geometric mean of both sides) on uniform data.
    pub fn for_tile_size(r: &[SpatialObject], s: &[SpatialObject], per_tile: usize) -> Result<Self> {
        let geo = ((r.len() as f64) * (s.len() as f64)).sqrt();
        let tiles = (geo / per_tile.max(1) as f64).ceil().max(1.0);
        let side = tiles.sqrt().ceil() as usize;
        GridSpec::covering(r, s, side, side)
    }

    fn edges(lo: f32, hi: f32, n: usize) -> Vec<f32> {
        (0..=n)
            .map(|i| {
                if i == n {
                    hi
                } else {
                    (lo as f64 + (hi as f64 - lo as f64) * i as f64 / n as f64) as f32
                }
            })
            .collect()
    }

    pub fn x_edges(&self) -> Vec<f32> {
        Self::edges(self.region.xmin, self.region.xmax, self.cols)
    }

    pub fn y_edges(&self) -> Vec<f32> {
        Self::edges(self.region.ymin, self.region.ymax, self.rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub mbr: Mbr,
    pub last_col: bool,
    pub last_row: bool,
    pub r: Vec<SpatialObject>,
    pub s: Vec<SpatialObject>,
    /// Set by hierarchical partitioning when the tile still exceeds the
    /// workload bound but cannot be split further.
    pub flagged: bool,
}

impl Tile {
    pub fn geomean(&self) -> f64 {
        ((self.r.len() as f64) * (self.s.len() as f64)).sqrt()
    }

    /// Object pairs a nested loop compares in this tile.
    pub fn workload(&self) -> u64 {
        self.r.len() as u64 * self.s.len() as u64
    }

    pub(crate) fn owns(&self, a: &Mbr, b: &Mbr) -> bool {
        match intersection_reference_point(a, b) {
            Ok(p) => point_in_tile(p, &self.mbr, self.last_col, self.last_row),
            Err(_) => false,
        }
    }
}

/// Grid lines along one axis with an arithmetic first guess for lookups.
struct Cells {
    edges: Vec<f32>,
    origin: f64,
    inv_width: f64,
}

impl Cells {
    fn new(edges: Vec<f32>) -> Self {
        let n = edges.len() - 1;
        let (lo, hi) = (edges[0] as f64, edges[n] as f64);
        let inv_width = if hi > lo { n as f64 / (hi - lo) } else { 0.0 };
        Cells {
            edges,
            origin: lo,
            inv_width,
        }
    }

    fn guess(&self, v: f32) -> usize {
        let n = self.edges.len() - 1;
        // truncation is floor here: negatives clamp to 0 before the cast
        let c = (v as f64 - self.origin) * self.inv_width;
        if c > 0.0 {
            (c as usize).min(n - 1)
        } else {
            0
        }
    }

    /// Index range `[first, last]` of cells whose closed span
    /// `[e[c], e[c+1]]` meets `[lo, hi]`. The guess is corrected against
    /// the stored edges, so rounding in the guess never changes the answer.
    fn range(&self, lo: f32, hi: f32) -> (usize, usize) {
        let e = &self.edges;
        let n = e.len() - 1;
        let mut first = self.guess(lo);
        while first > 0 && e[first] >= lo {
            first -= 1;
        }
        while first < n - 1 && e[first + 1] < lo {
            first += 1;
        }
        let mut last = self.guess(hi);
        while last < n - 1 && e[last + 1] <= hi {
            last += 1;
        }
        while last > 0 && e[last] > hi {
            last -= 1;
        }
        (first, last)
    }
}

/// Reference lookup by binary search.
#[cfg(test)]
fn cell_range(edges: &[f32], lo: f32, hi: f32) -> (usize, usize) {
    let n = edges.len() - 1;
    let first = edges[1..].partition_point(|&e| e < lo);
    let last = edges[..n].partition_point(|&e| e <= hi).saturating_sub(1);
    (first.min(n - 1), last)
}

/// Stable scatter of `objs` into row buckets (an object spanning several
/// rows goes into each). Returns the bucket data and `rows + 1` offsets.
fn bucket_rows(
    objs: &[SpatialObject],
    ys: &Cells,
    grid: &GridSpec,
) -> Result<(Vec<SpatialObject>, Vec<usize>)> {
    let rows = grid.rows;
    let mut start = vec![0usize; rows + 1];
    let mut spans = Vec::with_capacity(objs.len());
    for o in objs {
        if !grid.region.contains(&o.mbr) {
            return Err(Error::RegionMismatch { id: o.id });
        }
        let (r0, r1) = ys.range(o.mbr.ymin, o.mbr.ymax);
        spans.push((r0 as u32, r1 as u32));
        for row in r0..=r1 {
            start[row + 1] += 1;
        }
    }
    for i in 0..rows {
        start[i + 1] += start[i];
    }
    let mut cursor = start.clone();
    let mut data = Vec::with_capacity(start[rows]);
    let spare = &mut data.spare_capacity_mut()[..start[rows]];
    for (o, &(r0, r1)) in objs.iter().zip(&spans) {
        for row in r0 as usize..=r1 as usize {
            spare[cursor[row]].write(*o);
            cursor[row] += 1;
        }
    }
    // SAFETY: every slot in 0..start[rows] was written exactly once: the
    // cursors walk each row's [start[row], start[row + 1]) range in full.
    unsafe { data.set_len(start[rows]) };
    Ok((data, start))
}

/// Uniform-grid partition. Tiles missing either side are dropped.
///
/// Two passes keep memory traffic sequential: objects are first bucketed by
/// grid row, then each row (small enough to stay in cache) is split by
/// column.
pub fn pbsm_partition(r: &[SpatialObject], s: &[SpatialObject], grid: &GridSpec) -> Result<Vec<Tile>> {
    let xs = Cells::new(grid.x_edges());
    let ys = Cells::new(grid.y_edges());
    let cols = grid.cols;
    let (rdata, rstart) = bucket_rows(r, &ys, grid)?;
    let (sdata, sstart) = bucket_rows(s, &ys, grid)?;

    let mut tiles = Vec::new();
    let mut counts = vec![[0usize; 2]; cols];
    let mut slot: Vec<Option<usize>> = vec![None; cols];
    let mut spans: [Vec<(usize, usize)>; 2] = Default::default();
    for row in 0..grid.rows {
        let rrow = &rdata[rstart[row]..rstart[row + 1]];
        let srow = &sdata[sstart[row]..sstart[row + 1]];
        if rrow.is_empty() || srow.is_empty() {
            continue;
        }
        counts.fill([0, 0]);
        for (side, objs) in [rrow, srow].into_iter().enumerate() {
            spans[side].clear();
            for o in objs {
                let (c0, c1) = xs.range(o.mbr.xmin, o.mbr.xmax);
                spans[side].push((c0, c1));
                for c in &mut counts[c0..=c1] {
                    c[side] += 1;
                }
            }
        }
        for col in 0..cols {
            let [a, b] = counts[col];
            slot[col] = (a > 0 && b > 0).then(|| {
                tiles.push(Tile {
                    mbr: Mbr {
                        xmin: xs.edges[col],
                        ymin: ys.edges[row],
                        xmax: xs.edges[col + 1],
                        ymax: ys.edges[row + 1],
                    },
                    last_col: col + 1 == cols,
                    last_row: row + 1 == grid.rows,
                    r: Vec::with_capacity(a),
                    s: Vec::with_capacity(b),
                    flagged: false,
                });
                tiles.len() - 1
            });
        }
        for (side, objs) in [rrow, srow].into_iter().enumerate() {
            for (o, &(c0, c1)) in objs.iter().zip(&spans[side]) {
                for t in slot[c0..=c1].iter().flatten() {
                    let tile = &mut tiles[*t];
                    if side == 0 {
                        tile.r.push(*o);
                    } else {
                        tile.s.push(*o);
                    }
                }
            }
        }
    }
    Ok(tiles)
}

/// Hierarchical partition starting from a grid sized for `max_geomean`
/// objects per tile.
pub fn pbsm_hierarchical_partition(
    r: &[SpatialObject],
    s: &[SpatialObject],
    max_geomean: u32,
) -> Result<Vec<Tile>> {
    if r.is_empty() || s.is_empty() {
        return Ok(Vec::new());
    }
    let grid = GridSpec::for_tile_size(r, s, max_geomean as usize)?;
    pbsm_hierarchical_partition_from(r, s, &grid, max_geomean)
}

/// Partitions on `grid`, then splits every tile with
/// `sqrt(|R_i| * |S_i|) > max_geomean` into quadrants until the bound holds,
/// so a tile needs at most `max_geomean²` comparisons. Tiles that reach the
/// minimum extent, or whose split would not lower the total number of
/// comparisons, are kept with `flagged` set.
pub fn pbsm_hierarchical_partition_from(
    r: &[SpatialObject],
    s: &[SpatialObject],
    grid: &GridSpec,
    max_geomean: u32,
) -> Result<Vec<Tile>> {
    if max_geomean == 0 {
        return Err(Error::InvalidSpec("max_geomean must be >= 1".into()));
    }
    let min_extent = grid.region.width().max(grid.region.height()) / MIN_EXTENT_DIVISOR;
    let mut out = Vec::new();
    for tile in pbsm_partition(r, s, grid)? {
        refine(tile, max_geomean as f64, min_extent, &mut out);
    }
    Ok(out)
}

fn midpoint(lo: f32, hi: f32) -> Option<f32> {
    let m = ((lo as f64 + hi as f64) * 0.5) as f32;
    (lo < m && m < hi).then_some(m)
}

fn refine(mut tile: Tile, bound: f64, min_extent: f32, out: &mut Vec<Tile>) {
    if tile.geomean() <= bound {
        out.push(tile);
        return;
    }
    let t = tile.mbr;
    let xm = midpoint(t.xmin, t.xmax);
    let ym = midpoint(t.ymin, t.ymax);
    if t.width().max(t.height()) <= min_extent || (xm.is_none() && ym.is_none()) {
        tile.flagged = true;
        out.push(tile);
        return;
    }

    // (lo, hi, is_last) spans per axis
    let xspans: Vec<(f32, f32, bool)> = match xm {
        Some(m) => vec![(t.xmin, m, false), (m, t.xmax, tile.last_col)],
        None => vec![(t.xmin, t.xmax, tile.last_col)],
    };
    let yspans: Vec<(f32, f32, bool)> = match ym {
        Some(m) => vec![(t.ymin, m, false), (m, t.ymax, tile.last_row)],
        None => vec![(t.ymin, t.ymax, tile.last_row)],
    };

    let mut children = Vec::with_capacity(4);
    for &(y0, y1, last_row) in &yspans {
        for &(x0, x1, last_col) in &xspans {
            let mbr = Mbr {
                xmin: x0,
                ymin: y0,
                xmax: x1,
                ymax: y1,
            };
            let cr: Vec<_> = tile
                .r
                .iter()
                .filter(|o| o.mbr.intersects(&mbr))
                .copied()
                .collect();
            let cs: Vec<_> = tile
                .s
                .iter()
                .filter(|o| o.mbr.intersects(&mbr))
                .copied()
                .collect();
            if cr.is_empty() || cs.is_empty() {
                continue;
            }
            children.push(Tile {
                mbr,
                last_col,
                last_row,
                r: cr,
                s: cs,
                flagged: false,
            });
        }
    }

    // large objects replicate into every quadrant; once a split no longer
    // lowers the total comparison count, further splits only multiply copies
    let work = |t: &Tile| t.r.len() as u64 * t.s.len() as u64;
    let stuck = children.iter().map(work).sum::<u64>() >= work(&tile);
    if stuck {
        tile.flagged = true;
        out.push(tile);
        return;
    }
    for c in children {
        refine(c, bound, min_extent, out);
    }
}

/// Tile-level join algorithm used inside PBSM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileJoiner {
    NestedLoop,
    PlaneSweep,
}

impl std::str::FromStr for TileJoiner {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "nested-loop" | "nl" => Ok(TileJoiner::NestedLoop),
            "plane-sweep" | "ps" => Ok(TileJoiner::PlaneSweep),
            other => Err(format!("unknown tile joiner `{other}` (nested-loop|plane-sweep)")),
        }
    }
}

impl std::fmt::Display for TileJoiner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TileJoiner::NestedLoop => "nested-loop",
            TileJoiner::PlaneSweep => "plane-sweep",
        })
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    NestedLoop,
    Sweep(Axis),
}

#[derive(Default)]
struct EmitState {
    idx: Vec<(u32, u32)>,
    pairs: Vec<Pair>,
    stats: JoinStats,
}

fn emit_tile(tile: &Tile, kernel: Kernel, st: &mut EmitState) {
    st.idx.clear();
    match kernel {
        Kernel::NestedLoop => st.stats.predicate_evals += nl_indices(&tile.r, &tile.s, &mut st.idx),
        Kernel::Sweep(axis) => st.stats.sweep_tests += sweep_indices(&tile.r, &tile.s, axis, &mut st.idx),
    }
    for &(i, j) in &st.idx {
        let (a, b) = (&tile.r[i as usize], &tile.s[j as usize]);
        if tile.owns(&a.mbr, &b.mbr) {
            st.pairs.push((a.id, b.id));
        }
    }
}

fn emit_with(tiles: &[Tile], kernel: Kernel, workers: usize, policy: Policy) -> (Vec<Pair>, JoinStats) {
    let states = run_tasks(tiles, workers, policy, EmitState::default, |st, t| {
        emit_tile(t, kernel, st)
    });
    let mut pairs = Vec::new();
    let mut stats = JoinStats::default();
    for st in states {
        pairs.extend(st.pairs);
        stats.merge(&st.stats);
    }
    (pairs, stats)
}

fn kernel_for(joiner: TileJoiner) -> Kernel {
    match joiner {
        TileJoiner::NestedLoop => Kernel::NestedLoop,
        TileJoiner::PlaneSweep => Kernel::Sweep(Axis::X),
    }
}

/// Every pair each tile reports, before any set union. With correct
/// reference-point filtering no pair appears twice.
pub fn pbsm_emit(
    tiles: &[Tile],
    joiner: TileJoiner,
    workers: usize,
    policy: Policy,
) -> (Vec<Pair>, JoinStats) {
    emit_with(tiles, kernel_for(joiner), workers, policy)
}

pub fn pbsm_join(tiles: &[Tile], joiner: TileJoiner, workers: usize, policy: Policy) -> JoinResult {
    pbsm_join_counted(tiles, joiner, workers, policy).0
}

pub fn pbsm_join_counted(
    tiles: &[Tile],
    joiner: TileJoiner,
    workers: usize,
    policy: Policy,
) -> (JoinResult, JoinStats) {
    let (pairs, stats) = pbsm_emit(tiles, joiner, workers, policy);
    (JoinResult::from_pairs(pairs), stats)
}

/// One-dimensional PBSM: vertical strips over the union MBR, each joined
/// by sweeping along y.
pub fn pbsm_1d(
    r: &[SpatialObject],
    s: &[SpatialObject],
    strips: usize,
    workers: usize,
) -> Result<JoinResult> {
    if r.is_empty() || s.is_empty() {
        return Ok(JoinResult::default());
    }
    let grid = GridSpec::covering(r, s, strips, 1)?;
    let tiles = pbsm_partition(r, s, &grid)?;
    let (pairs, _) = emit_with(&tiles, Kernel::Sweep(Axis::Y), workers, Policy::Dynamic);
    Ok(JoinResult::from_pairs(pairs))
}
