// CSV formats: datasets (`id,xmin,ymin,xmax,ymax`), join results
// (`id_r,id_s`, sorted) and stats rows.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Mbr, SpatialObject};
use crate::join::{JoinResult, Pair};

pub const DATASET_HEADER: [&str; 5] = ["id", "xmin", "ymin", "xmax", "ymax"];
pub const RESULT_HEADER: [&str; 2] = ["id_r", "id_s"];
pub const STATS_HEADER: [&str; 7] = [
    "experiment",
    "dataset",
    "algorithm",
    "params",
    "metric",
    "value",
    "seed",
];

fn check_header(rdr: &mut csv::Reader<impl Read>, expect: &[&str]) -> Result<()> {
    let got = rdr.headers()?;
    if got.iter().map(str::trim).ne(expect.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header `{}`", expect.join(",")),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("bad {name} `{raw}`"),
    })
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).from_reader(source)
}

pub fn read_dataset<R: Read>(source: R) -> Result<Vec<SpatialObject>> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &DATASET_HEADER)?;
    let mut seen: HashMap<u32, u64> = HashMap::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 5 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 5 fields, found {}", rec.len()),
            });
        }
        let id: u32 = field(&rec, 0, "id", line)?;
        let c: [f32; 4] = [
            field(&rec, 1, "xmin", line)?,
            field(&rec, 2, "ymin", line)?,
            field(&rec, 3, "xmax", line)?,
            field(&rec, 4, "ymax", line)?,
        ];
        let mbr = Mbr::new(c[0], c[1], c[2], c[3]).map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        if seen.insert(id, line).is_some() {
            return Err(Error::DuplicateId { line, id });
        }
        out.push(SpatialObject { id, mbr });
    }
    Ok(out)
}

pub fn write_dataset<W: Write>(objs: &[SpatialObject], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(DATASET_HEADER)?;
    for o in objs {
        let m = o.mbr;
        w.write_record([
            o.id.to_string(),
            m.xmin.to_string(),
            m.ymin.to_string(),
            m.xmax.to_string(),
            m.ymax.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<SpatialObject>> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn store_dataset(objs: &[SpatialObject], path: impl AsRef<Path>) -> Result<()> {
    write_dataset(objs, BufWriter::new(File::create(path)?))
}

pub fn write_results<W: Write>(result: &JoinResult, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(RESULT_HEADER)?;
    for &(a, b) in result.pairs() {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(source: R) -> Result<JoinResult> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &RESULT_HEADER)?;
    let mut pairs: Vec<Pair> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        pairs.push((field(&rec, 0, "id_r", line)?, field(&rec, 1, "id_s", line)?));
    }
    Ok(JoinResult::from_pairs(pairs))
}

pub fn store_results(result: &JoinResult, path: impl AsRef<Path>) -> Result<()> {
    write_results(result, BufWriter::new(File::create(path)?))
}

pub fn load_results(path: impl AsRef<Path>) -> Result<JoinResult> {
    read_results(BufReader::new(File::open(path)?))
}

/// One measurement. `params` carries the full configuration of the run so a
/// row can be reproduced on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub experiment: String,
    pub dataset: String,
    pub algorithm: String,
    pub params: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

pub fn write_stats<W: Write>(rows: &[StatsRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(STATS_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.as_str(),
            &r.dataset,
            &r.algorithm,
            &r.params,
            &r.metric,
            &r.value.to_string(),
            &r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats<R: Read>(source: R) -> Result<Vec<StatsRow>> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &STATS_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let text = |i: usize| rec.get(i).unwrap_or("").to_string();
        rows.push(StatsRow {
            experiment: text(0),
            dataset: text(1),
            algorithm: text(2),
            params: text(3),
            metric: text(4),
            value: field(&rec, 5, "value", line)?,
            seed: field(&rec, 6, "seed", line)?,
        });
    }
    Ok(rows)
}
