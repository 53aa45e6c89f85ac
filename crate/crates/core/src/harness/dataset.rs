use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Mbr, SpatialObject};

/// Objects per PRNG stream. Each chunk draws from its own ChaCha stream, so
/// the output does not depend on how many threads generate it.
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    UniformRect,
    UniformPoint,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    pub region: Mbr,
    pub obj_w: f32,
    pub obj_h: f32,
    pub seed: u64,
}

pub const DEFAULT_REGION: Mbr = Mbr {
    xmin: 0.0,
    ymin: 0.0,
    xmax: 10_000.0,
    ymax: 10_000.0,
};

impl DatasetSpec {
    /// `n` unit squares in the default 10K x 10K region.
    pub fn uniform(n: usize, seed: u64) -> Self {
        DatasetSpec {
            kind: DatasetKind::UniformRect,
            n,
            region: DEFAULT_REGION,
            obj_w: 1.0,
            obj_h: 1.0,
            seed,
        }
    }

    pub fn points(n: usize, seed: u64) -> Self {
        DatasetSpec {
            kind: DatasetKind::UniformPoint,
            obj_w: 0.0,
            obj_h: 0.0,
            ..Self::uniform(n, seed)
        }
    }

    pub fn with_region(mut self, region: Mbr) -> Self {
        self.region = region;
        self
    }

    pub fn with_size(mut self, w: f32, h: f32) -> Self {
        self.obj_w = w;
        self.obj_h = h;
        self
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if !self.region.is_valid() {
            return bad("region is not a valid MBR");
        }
        if !(self.obj_w >= 0.0 && self.obj_h >= 0.0) {
            return bad("object width and height must be non-negative");
        }
        if self.obj_w > self.region.width() || self.obj_h > self.region.height() {
            return bad("objects do not fit in the region");
        }
        Ok(())
    }
}

/// Seeded uniform rectangles (or points when the object size is zero). Ids
/// are `0..n`.
pub fn gen_uniform(spec: &DatasetSpec) -> Result<Vec<SpatialObject>> {
    spec.check()?;
    let (w, h) = match spec.kind {
        DatasetKind::UniformRect => (spec.obj_w, spec.obj_h),
        DatasetKind::UniformPoint => (0.0, 0.0),
        DatasetKind::File(_) => {
            return Err(Error::InvalidSpec(
                "file datasets are loaded, not generated".into(),
            ))
        }
    };
    let r = spec.region;
    let span_x = (r.xmax - w - r.xmin) as f64;
    let span_y = (r.ymax - h - r.ymin) as f64;
    let chunks = spec.n.div_ceil(CHUNK);
    let out: Vec<Vec<SpatialObject>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(c as u64);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(spec.n);
            (lo..hi)
                .map(|id| {
                    let x = (r.xmin as f64 + rng.random::<f64>() * span_x) as f32;
                    let y = (r.ymin as f64 + rng.random::<f64>() * span_y) as f32;
                    SpatialObject {
                        id: id as u32,
                        mbr: Mbr {
                            xmin: x,
                            ymin: y,
                            xmax: (x + w).min(r.xmax),
                            ymax: (y + h).min(r.ymax),
                        },
                    }
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}
