//! Minimum bounding rectangles and the predicates every join engine shares.
//!
//! Boundaries are closed: rectangles that only share an edge or a corner
//! intersect. All engines (software and simulated) go through
//! [`Mbr::intersects`], so they agree bit-for-bit on touching inputs.

use crate::error::{Error, Result};

/// Axis-aligned rectangle with `xmin <= xmax`, `ymin <= ymax` and finite
/// coordinates. A point is an `Mbr` with zero width and height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mbr {
    pub xmin: f32,
    pub ymin: f32,
    pub xmax: f32,
    pub ymax: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f32,
    pub y: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialObject {
    pub id: u32,
    pub mbr: Mbr,
}

impl Mbr {
    /// Checked constructor.
    pub fn new(xmin: f32, ymin: f32, xmax: f32, ymax: f32) -> Result<Self> {
        let mbr = Mbr {
            xmin,
            ymin,
            xmax,
            ymax,
        };
        match mbr.check() {
            Some(reason) => Err(Error::InvalidMbr {
                xmin,
                ymin,
                xmax,
                ymax,
                reason,
            }),
            None => Ok(mbr),
        }
    }

    pub fn point(x: f32, y: f32) -> Self {
        Mbr {
            xmin: x,
            ymin: y,
            xmax: x,
            ymax: y,
        }
    }

    fn check(&self) -> Option<&'static str> {
        let coords = [self.xmin, self.ymin, self.xmax, self.ymax];
        if coords.iter().any(|c| !c.is_finite()) {
            Some("coordinates must be finite")
        } else if self.xmin > self.xmax {
            Some("xmin > xmax")
        } else if self.ymin > self.ymax {
            Some("ymin > ymax")
        } else {
            None
        }
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_none()
    }

    /// Closed-boundary intersection: the four comparator outputs ANDed.
    #[inline(always)]
    pub fn intersects(&self, other: &Mbr) -> bool {
        (self.xmax >= other.xmin)
            & (other.xmax >= self.xmin)
            & (self.ymax >= other.ymin)
            & (other.ymax >= self.ymin)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn contains(&self, other: &Mbr) -> bool {
        other.xmin >= self.xmin
            && other.xmax <= self.xmax
            && other.ymin >= self.ymin
            && other.ymax <= self.ymax
    }

    pub fn union(&self, other: &Mbr) -> Mbr {
        Mbr {
            xmin: self.xmin.min(other.xmin),
            ymin: self.ymin.min(other.ymin),
            xmax: self.xmax.max(other.xmax),
            ymax: self.ymax.max(other.ymax),
        }
    }

    /// Tight union over a sequence; `None` when it is empty.
    pub fn union_all<'a>(mbrs: impl IntoIterator<Item = &'a Mbr>) -> Option<Mbr> {
        mbrs.into_iter().fold(None, |acc, m| match acc {
            None => Some(*m),
            Some(a) => Some(a.union(m)),
        })
    }

    pub fn width(&self) -> f32 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f32 {
        self.ymax - self.ymin
    }

    /// Center computed in f64 so that sort keys never lose precision.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.xmin as f64 + self.xmax as f64) * 0.5,
            (self.ymin as f64 + self.ymax as f64) * 0.5,
        )
    }
}

/// Free-function form of [`Mbr::intersects`].
#[inline(always)]
pub fn mbr_intersects(a: &Mbr, b: &Mbr) -> bool {
    a.intersects(b)
}

/// Minimum corner of `a ∩ b`, used to decide which tile owns a pair.
pub fn intersection_reference_point(a: &Mbr, b: &Mbr) -> Result<Point> {
    if !a.intersects(b) {
        return Err(Error::Disjoint);
    }
    Ok(Point {
        x: a.xmin.max(b.xmin),
        y: a.ymin.max(b.ymin),
    })
}

/// Half-open tile membership, closed on the max edge for the last column/row
/// so that every point of a gridded region lands in exactly one tile.
#[inline]
pub fn point_in_tile(p: Point, tile: &Mbr, is_last_col: bool, is_last_row: bool) -> bool {
    let in_x = p.x >= tile.xmin && (p.x < tile.xmax || (is_last_col && p.x <= tile.xmax));
    let in_y = p.y >= tile.ymin && (p.y < tile.ymax || (is_last_row && p.y <= tile.ymax));
    in_x && in_y
}
