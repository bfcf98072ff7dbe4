//! Diagnostic CSV files: one header row with [`DiagRecord::FIELD_NAMES`],
//! floats written with 17 significant digits so they parse back exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagRecord;
use crate::error::{Error, Result};
use crate::integrator::DiagSink;
use crate::model::State;

pub fn header() -> String {
    DiagRecord::FIELD_NAMES.join(",")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_row(r: &DiagRecord) -> String {
    [
        num(r.t),
        num(r.mass_u),
        num(r.mass_v),
        num(r.linf_u),
        num(r.linf_v),
        num(r.min_v),
        num(r.linf_grad_v),
        num(r.y_pq),
        num(r.h_pq),
        r.sing_p.map(num).unwrap_or_default(),
        num(r.dt),
        r.step.to_string(),
    ]
    .join(",")
}

pub fn parse_row(line: &str) -> std::result::Result<DiagRecord, String> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != DiagRecord::FIELD_NAMES.len() {
        return Err(format!(
            "expected {} columns, found {}",
            DiagRecord::FIELD_NAMES.len(),
            cols.len()
        ));
    }
    let f = |i: usize| {
        cols[i]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("column `{}`: {e}", DiagRecord::FIELD_NAMES[i]))
    };
    Ok(DiagRecord {
        t: f(0)?,
        mass_u: f(1)?,
        mass_v: f(2)?,
        linf_u: f(3)?,
        linf_v: f(4)?,
        min_v: f(5)?,
        linf_grad_v: f(6)?,
        y_pq: f(7)?,
        h_pq: f(8)?,
        sing_p: if cols[9].trim().is_empty() { None } else { Some(f(9)?) },
        dt: f(10)?,
        step: cols[11]
            .trim()
            .parse()
            .map_err(|e| format!("column `step`: {e}"))?,
    })
}

/// Streams records to a CSV file as they arrive.
pub struct CsvSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header()).map_err(|e| Error::io(&path, e))?;
        Ok(CsvSink { path, out })
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

impl DiagSink for CsvSink {
    fn accept(&mut self, record: &DiagRecord, _state: &State) -> Result<()> {
        writeln!(self.out, "{}", format_row(record)).map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_csv(records: &[DiagRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut sink = CsvSink::create(path)?;
    for r in records {
        writeln!(sink.out, "{}", format_row(r)).map_err(|e| Error::io(path, e))?;
    }
    sink.finish()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<DiagRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let head = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::format(path, "empty file"))?;
    if head.trim() != header() {
        return Err(Error::format(path, format!("unexpected header `{head}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_row(&line).map_err(|m| Error::format(path, format!("line {}: {m}", i + 2)))?);
    }
    Ok(out)
}
