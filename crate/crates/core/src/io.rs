//! Headerless vector files: one decimal float per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_vector<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

pub fn store_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector(&mut w, v)?;
    w.flush()?;
    Ok(())
}

/// Blank lines are skipped.
pub fn read_vector<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|e| Error::Parse { line: i + 1, msg: format!("`{t}`: {e}") })?;
        out.push(v);
    }
    Ok(out)
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_vector(BufReader::new(File::open(path)?))
}
