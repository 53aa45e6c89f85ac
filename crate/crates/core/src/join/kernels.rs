// Tile-level join kernels. Both emit local index pairs `(i, j)` into `r` and
// `s`; callers map them to object ids or node indices.

use super::{JoinResult, JoinStats, Pair};
use crate::geometry::{Mbr, SpatialObject};
use crate::rtree::Entry;

pub(crate) trait HasMbr {
    fn mbr(&self) -> &Mbr;
}

impl HasMbr for SpatialObject {
    #[inline(always)]
    fn mbr(&self) -> &Mbr {
        &self.mbr
    }
}

impl HasMbr for Entry {
    #[inline(always)]
    fn mbr(&self) -> &Mbr {
        &self.mbr
    }
}

/// All-pairs comparison. The inner loop is branch-free (every candidate is
/// written, the cursor advances only on a hit) so its cost does not depend
/// on how many pairs qualify.
pub(crate) fn nl_indices<T: HasMbr>(r: &[T], s: &[T], out: &mut Vec<(u32, u32)>) -> u64 {
    if r.is_empty() || s.is_empty() {
        return 0;
    }
    for (i, a) in r.iter().enumerate() {
        let am = *a.mbr();
        out.reserve(s.len());
        let base = out.len();
        let slots = &mut out.spare_capacity_mut()[..s.len()];
        let mut k = 0;
        for (j, b) in s.iter().enumerate() {
            slots[k].write((i as u32, j as u32));
            k += am.intersects(b.mbr()) as usize;
        }
        // SAFETY: slots[..k] were written above and k <= s.len() <= spare capacity.
        unsafe { out.set_len(base + k) };
    }
    (r.len() * s.len()) as u64
}

#[derive(Clone, Copy)]
struct SweepItem {
    lo: f32,
    hi: f32,
    olo: f32,
    ohi: f32,
    idx: u32,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    X,
    Y,
}

fn sweep_items<T: HasMbr>(objs: &[T], axis: Axis) -> Vec<SweepItem> {
    let mut v: Vec<SweepItem> = objs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let m = o.mbr();
            match axis {
                Axis::X => SweepItem {
                    lo: m.xmin,
                    hi: m.xmax,
                    olo: m.ymin,
                    ohi: m.ymax,
                    idx: i as u32,
                },
                Axis::Y => SweepItem {
                    lo: m.ymin,
                    hi: m.ymax,
                    olo: m.xmin,
                    ohi: m.xmax,
                    idx: i as u32,
                },
            }
        })
        .collect();
    v.sort_unstable_by(|a, b| a.lo.total_cmp(&b.lo).then(a.idx.cmp(&b.idx)));
    v
}

/// Evicts entries that ended before `cur` starts, tests the rest on the other
/// axis and emits hits. Returns the number of overlap tests.
#[inline]
fn sweep_step(
    cur: &SweepItem,
    active: &mut Vec<SweepItem>,
    out: &mut Vec<(u32, u32)>,
    cur_is_r: bool,
) -> u64 {
    let mut tests = 0;
    let mut k = 0;
    while k < active.len() {
        let o = active[k];
        if o.hi < cur.lo {
            active.swap_remove(k);
            continue;
        }
        tests += 1;
        if cur.ohi >= o.olo && o.ohi >= cur.olo {
            out.push(if cur_is_r {
                (cur.idx, o.idx)
            } else {
                (o.idx, cur.idx)
            });
        }
        k += 1;
    }
    tests
}

/// Sort both sides by their low coordinate on `axis` and sweep. Ties go to
/// the R side first.
pub(crate) fn sweep_indices<T: HasMbr>(r: &[T], s: &[T], axis: Axis, out: &mut Vec<(u32, u32)>) -> u64 {
    if r.is_empty() || s.is_empty() {
        return 0;
    }
    let rs = sweep_items(r, axis);
    let ss = sweep_items(s, axis);
    let mut active_r: Vec<SweepItem> = Vec::new();
    let mut active_s: Vec<SweepItem> = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut tests = 0;
    while i < rs.len() || j < ss.len() {
        let take_r = j == ss.len() || (i < rs.len() && rs[i].lo <= ss[j].lo);
        if take_r {
            let cur = rs[i];
            active_r.push(cur);
            tests += sweep_step(&cur, &mut active_s, out, true);
            i += 1;
        } else {
            let cur = ss[j];
            active_s.push(cur);
            tests += sweep_step(&cur, &mut active_r, out, false);
            j += 1;
        }
    }
    tests
}

fn to_ids(r: &[SpatialObject], s: &[SpatialObject], idx: &[(u32, u32)]) -> Vec<Pair> {
    idx.iter()
        .map(|&(i, j)| (r[i as usize].id, s[j as usize].id))
        .collect()
}

/// Reference join: every pair of `r × s` whose MBRs intersect.
pub fn nested_loop_join(r: &[SpatialObject], s: &[SpatialObject]) -> JoinResult {
    nested_loop_join_counted(r, s).0
}

pub fn nested_loop_join_counted(r: &[SpatialObject], s: &[SpatialObject]) -> (JoinResult, JoinStats) {
    let mut idx = Vec::new();
    let evals = nl_indices(r, s, &mut idx);
    let stats = JoinStats {
        predicate_evals: evals,
        ..Default::default()
    };
    (JoinResult::from_pairs(to_ids(r, s, &idx)), stats)
}

/// Sweep-line join along x.
pub fn plane_sweep_join(r: &[SpatialObject], s: &[SpatialObject]) -> JoinResult {
    plane_sweep_join_counted(r, s).0
}

pub fn plane_sweep_join_counted(r: &[SpatialObject], s: &[SpatialObject]) -> (JoinResult, JoinStats) {
    let mut idx = Vec::new();
    let tests = sweep_indices(r, s, Axis::X, &mut idx);
    let stats = JoinStats {
        sweep_tests: tests,
        ..Default::default()
    };
    (JoinResult::from_pairs(to_ids(r, s, &idx)), stats)
}
