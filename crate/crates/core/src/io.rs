//! CSV and PGM file formats.
//!
//! * instance tables: header `instance_id,src_1,...,src_m`, one row per instance;
//! * bag assignments: header `instance_id,bag_id`;
//! * bag labels: header `bag_id,label` with labels `1` / `-1`;
//! * per-instance values (fused maps): header `instance_id,value`;
//! * rectangles: header `top,left,bottom,right` (half-open pixel bounds);
//! * grids: a `# rows cols` line, then `rows` comma-separated lines of `cols` values;
//! * previews: plain (P2) PGM, `[-1, 1]` mapped onto `0..=255`.
//!
//! Reals are written with the shortest representation that parses back to
//! the same `f64`.

use std::io::{BufRead, Read, Write};

use thiserror::Error;

use crate::choquet::InputPolicy;
use crate::grid::Grid;
use crate::mil::{BagLabel, BagSet, InstanceTable, MilError};
use crate::synthgen::Rect;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("header must be {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error(transparent)]
    Mil(#[from] MilError),
}

fn parse_err(line: u64, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader)
}

fn record_line(r: &csv::StringRecord) -> u64 {
    r.position().map_or(0, |p| p.line())
}

fn parse_real(field: &str, line: u64) -> Result<f64, IoError> {
    field.parse().map_err(|_| parse_err(line, format!("'{field}' is not a number")))
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), IoError> {
    let found = rdr.headers()?.clone();
    if found.iter().ne(expected.iter().copied()) {
        return Err(IoError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

/// Raw instance rows: ids, source count and row-major values, unvalidated.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRows {
    pub ids: Vec<String>,
    pub m: usize,
    pub data: Vec<f64>,
}

impl InstanceRows {
    pub fn into_table(self, policy: InputPolicy) -> Result<InstanceTable, MilError> {
        InstanceTable::with_policy(self.ids, self.m, self.data, policy)
    }
}

pub fn read_instance_rows<R: Read>(reader: R) -> Result<InstanceRows, IoError> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let m = headers.len().saturating_sub(1);
    let expected: Vec<String> =
        std::iter::once("instance_id".to_string()).chain((1..=m).map(|s| format!("src_{s}"))).collect();
    if m == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(IoError::Header {
            expected: "instance_id,src_1,...,src_m".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            data.push(parse_real(field, line)?);
        }
    }
    Ok(InstanceRows { ids, m, data })
}

pub fn read_instance_table<R: Read>(reader: R, policy: InputPolicy) -> Result<InstanceTable, IoError> {
    Ok(read_instance_rows(reader)?.into_table(policy)?)
}

pub fn write_instance_table<W: Write>(writer: W, table: &InstanceTable) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["instance_id".to_string()];
    header.extend((1..=table.m()).map(|s| format!("src_{s}")));
    w.write_record(&header)?;
    for (i, id) in table.ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(table.row(i).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_values<R: Read>(reader: R) -> Result<(Vec<String>, Vec<f64>), IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["instance_id", "value"])?;
    let (mut ids, mut values) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        values.push(parse_real(&rec[1], record_line(&rec))?);
        ids.push(rec[0].to_string());
    }
    Ok((ids, values))
}

pub fn write_values<W: Write>(writer: W, ids: &[String], values: &[f64]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["instance_id", "value"])?;
    for (id, v) in ids.iter().zip(values) {
        w.write_record([id.as_str(), &v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_pairs<R: Read>(reader: R, header: &[&str]) -> Result<Vec<(String, String, u64)>, IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push((rec[0].to_string(), rec[1].to_string(), record_line(&rec)));
    }
    Ok(out)
}

pub fn read_assignment<R: Read>(reader: R) -> Result<Vec<(String, String)>, IoError> {
    Ok(read_pairs(reader, &["instance_id", "bag_id"])?.into_iter().map(|(a, b, _)| (a, b)).collect())
}

pub fn read_labels<R: Read>(reader: R) -> Result<Vec<(String, BagLabel)>, IoError> {
    read_pairs(reader, &["bag_id", "label"])?
        .into_iter()
        .map(|(bag, label, line)| {
            let label = label.parse().map_err(|e: MilError| parse_err(line, e.to_string()))?;
            Ok((bag, label))
        })
        .collect()
}

/// Writes the assignment in bag order, then instance order within each bag.
pub fn write_assignment<W: Write>(writer: W, bags: &BagSet) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["instance_id", "bag_id"])?;
    for bag in bags.bags() {
        for inst in &bag.instances {
            w.write_record([inst.as_str(), bag.id.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels<W: Write>(writer: W, bags: &BagSet) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bag_id", "label"])?;
    for bag in bags.bags() {
        w.write_record([bag.id.as_str(), &bag.label.as_i8().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rects<R: Read>(reader: R) -> Result<Vec<Rect>, IoError> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["top", "left", "bottom", "right"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let mut v = [0usize; 4];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field.parse().map_err(|_| parse_err(line, format!("'{field}' is not a pixel index")))?;
        }
        let [top, left, bottom, right] = v;
        if top > bottom || left > right {
            return Err(parse_err(line, "rectangle has negative extent"));
        }
        out.push(Rect { top, left, bottom, right });
    }
    Ok(out)
}

pub fn read_grid<R: BufRead>(reader: R) -> Result<Grid, IoError> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let dims: Vec<usize> = header
        .strip_prefix('#')
        .map(|rest| rest.split_whitespace().filter_map(|t| t.parse().ok()).collect())
        .unwrap_or_default();
    let [rows, cols] = dims[..] else {
        return Err(IoError::Header { expected: "# rows cols".into(), found: header });
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i as u64 + 2;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            data.push(parse_real(field.trim(), n)?);
        }
        if data.len() - before != cols {
            return Err(parse_err(n, format!("expected {cols} values, found {}", data.len() - before)));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(parse_err(0, format!("expected {rows} rows, found {seen_rows}")));
    }
    Ok(Grid::new(rows, cols, data).expect("row counts checked"))
}

pub fn write_grid<W: Write>(mut writer: W, grid: &Grid) -> Result<(), IoError> {
    writeln!(writer, "# {} {}", grid.rows(), grid.cols())?;
    for r in 0..grid.rows() {
        let line: Vec<String> = (0..grid.cols()).map(|c| grid.get(r, c).to_string()).collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    Ok(())
}

/// `round((v + 1) / 2 * 255)` after clamping to `[-1, 1]`; NaN maps to 0.
pub fn pgm_level(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    ((v.clamp(-1.0, 1.0) + 1.0) / 2.0 * 255.0).round() as u8
}

pub fn write_pgm<W: Write>(mut writer: W, grid: &Grid) -> Result<(), IoError> {
    writeln!(writer, "P2\n{} {}\n255", grid.cols(), grid.rows())?;
    for r in 0..grid.rows() {
        let line: Vec<String> = (0..grid.cols()).map(|c| pgm_level(grid.get(r, c)).to_string()).collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Stacks co-registered source grids into a pixel instance table with
/// row-major pixel indices as ids.
pub fn grids_to_rows(grids: &[Grid]) -> Result<InstanceRows, IoError> {
    let Some(first) = grids.first() else {
        return Err(parse_err(0, "no source grids"));
    };
    if let Some(bad) = grids.iter().find(|g| g.shape() != first.shape()) {
        return Err(parse_err(0, format!("grid shapes differ: {:?} vs {:?}", first.shape(), bad.shape())));
    }
    let n = first.len();
    let mut data = Vec::with_capacity(n * grids.len());
    for i in 0..n {
        data.extend(grids.iter().map(|g| g.data()[i]));
    }
    Ok(InstanceRows { ids: crate::synthgen::pixel_ids(n), m: grids.len(), data })
}
