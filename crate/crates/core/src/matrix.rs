//! Sparse 0/1 route matrix with row- and column-major index arrays.
//!
//! Rows are links, columns are demands. Values are implicit ones, so only the
//! sparsity pattern is stored, once in each orientation. Both orientations are
//! built at construction time and never change afterwards.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate pattern general";

/// Seed for the power-iteration start vector.
const POWER_SEED: u64 = 0x5eed_0f_a7a;

/// Default number of power iterations used by [`RouteMatrix::stats`] callers.
pub const DEFAULT_POWER_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteMatrix {
    m: usize,
    n: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub nnz: usize,
    /// Average column density `nnz / n`.
    pub s: f64,
    /// Average row density `nnz / m`.
    pub s_tilde: f64,
    /// Largest squared column norm, i.e. the largest column count.
    pub max_col_sq: usize,
    /// `tr(A^T A) = nnz`, an upper bound on the top eigenvalue of `A^T A`.
    pub trace_bound: f64,
    /// Power-iteration estimate of the top eigenvalue of `A^T A`.
    pub sigma_max_est: f64,
}

fn compress(outer: usize, lists: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let mut ptr = Vec::with_capacity(outer + 1);
    let mut idx = Vec::with_capacity(lists.iter().map(Vec::len).sum());
    ptr.push(0);
    for l in lists {
        idx.extend_from_slice(l);
        ptr.push(idx.len());
    }
    (ptr, idx)
}

impl RouteMatrix {
    /// Builds a matrix from `(row, col)` pairs; rejects duplicates and out-of-range ids.
    pub fn from_entries(m: usize, n: usize, entries: &[(usize, usize)]) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("matrix must be nonempty, got {m}x{n}")));
        }
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in entries {
            if i >= m {
                return Err(Error::IndexOutOfRange { what: "row", index: i, bound: m });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { what: "column", index: j, bound: n });
            }
            cols[j].push(i);
        }
        Self::from_columns(m, cols)
    }

    /// Builds a matrix from per-column row lists (unsorted input is accepted).
    pub fn from_columns(m: usize, mut cols: Vec<Vec<usize>>) -> Result<Self> {
        let n = cols.len();
        if m == 0 || n == 0 {
            return Err(Error::invalid(format!("matrix must be nonempty, got {m}x{n}")));
        }
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, c) in cols.iter_mut().enumerate() {
            c.sort_unstable();
            for w in c.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::invalid(format!("duplicate entry ({}, {})", w[0], j)));
                }
            }
            for &i in c.iter() {
                if i >= m {
                    return Err(Error::IndexOutOfRange { what: "row", index: i, bound: m });
                }
                rows[i].push(j);
            }
        }
        // column-major traversal leaves every row list sorted
        let (row_ptr, row_cols) = compress(m, &rows);
        let (col_ptr, col_rows) = compress(n, &cols);
        Ok(RouteMatrix { m, n, row_ptr, row_cols, col_ptr, col_rows })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_columns(n, (0..n).map(|j| vec![j]).collect())
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_rows.len()
    }

    /// Column ids with a one in row `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Row ids with a one in column `k`.
    pub fn col(&self, k: usize) -> &[usize] {
        &self.col_rows[self.col_ptr[k]..self.col_ptr[k + 1]]
    }

    pub fn col_nnz(&self, k: usize) -> usize {
        self.col_ptr[k + 1] - self.col_ptr[k]
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.m];
        self.matvec_into(x, &mut out)?;
        Ok(out)
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::dim("matvec input", self.n, x.len()));
        }
        if out.len() != self.m {
            return Err(Error::dim("matvec output", self.m, out.len()));
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().map(|&j| x[j]).sum();
        }
        Ok(())
    }

    /// `A^T y`.
    pub fn rmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.rmatvec_into(y, &mut out)?;
        Ok(out)
    }

    pub fn rmatvec_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        if y.len() != self.m {
            return Err(Error::dim("rmatvec input", self.m, y.len()));
        }
        if out.len() != self.n {
            return Err(Error::dim("rmatvec output", self.n, out.len()));
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.col(k).iter().map(|&i| y[i]).sum();
        }
        Ok(())
    }

    /// `r <- r + t * A^(k)`, touching only the rows of column `k`.
    pub fn column_axpy(&self, k: usize, t: f64, r: &mut [f64]) -> Result<()> {
        if k >= self.n {
            return Err(Error::IndexOutOfRange { what: "column", index: k, bound: self.n });
        }
        if r.len() != self.m {
            return Err(Error::dim("column_axpy target", self.m, r.len()));
        }
        for &i in self.col(k) {
            r[i] += t;
        }
        Ok(())
    }

    /// `u <- u + t * A_i^T`, touching only the columns of row `i`.
    pub fn row_axpy(&self, i: usize, t: f64, u: &mut [f64]) -> Result<()> {
        if i >= self.m {
            return Err(Error::IndexOutOfRange { what: "row", index: i, bound: self.m });
        }
        if u.len() != self.n {
            return Err(Error::dim("row_axpy target", self.n, u.len()));
        }
        for &j in self.row(i) {
            u[j] += t;
        }
        Ok(())
    }

    /// Exact counts plus a seeded power-iteration estimate of `lambda_max(A^T A)`.
    pub fn stats(&self, power_iters: usize) -> MatrixStats {
        let nnz = self.nnz();
        let max_col_sq = (0..self.n).map(|k| self.col_nnz(k)).max().unwrap_or(0);
        MatrixStats {
            nnz,
            s: nnz as f64 / self.n as f64,
            s_tilde: nnz as f64 / self.m as f64,
            max_col_sq,
            trace_bound: nnz as f64,
            sigma_max_est: self.power_sigma_max(power_iters).min(nnz as f64),
        }
    }

    fn power_sigma_max(&self, iters: usize) -> f64 {
        if self.nnz() == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
        let mut v: Vec<f64> = (0..self.n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let mut av = vec![0.0; self.m];
        let mut est = 0.0;
        for _ in 0..iters.max(1) {
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv == 0.0 {
                return est;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            self.matvec_into(&v, &mut av).expect("sized");
            // Rayleigh quotient of A^T A at the unit vector v
            est = av.iter().map(|x| x * x).sum();
            self.rmatvec_into(&av, &mut v).expect("sized");
        }
        est
    }

    /// Rebuilds the column index from the row index and compares.
    pub fn is_transpose_consistent(&self) -> bool {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for i in 0..self.m {
            for &j in self.row(i) {
                cols[j].push(i);
            }
        }
        let (ptr, idx) = compress(self.n, &cols);
        ptr == self.col_ptr && idx == self.col_rows
    }

    /// Returns a copy with `extra` empty columns appended.
    pub fn with_empty_columns(&self, extra: usize) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..self.n).map(|k| self.col(k).to_vec()).collect();
        cols.extend(std::iter::repeat_with(Vec::new).take(extra));
        Self::from_columns(self.m, cols).expect("valid by construction")
    }

    pub fn store_pattern(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_pattern(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_pattern<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{MM_HEADER}")?;
        writeln!(w, "{} {} {}", self.m, self.n, self.nnz())?;
        for i in 0..self.m {
            for &j in self.row(i) {
                writeln!(w, "{} {}", i + 1, j + 1)?;
            }
        }
        Ok(())
    }

    pub fn load_pattern(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_pattern(BufReader::new(File::open(path)?))
    }

    pub fn read_pattern<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
        let header = header?;
        let norm: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
        let expected: Vec<String> = MM_HEADER.split_whitespace().map(str::to_ascii_lowercase).collect();
        if norm != expected {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `{MM_HEADER}`"),
            });
        }

        let mut size: Option<(usize, usize, usize)> = None;
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (lineno, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("bad integer `{s}`: {e}"),
                })
            };
            match size {
                None => {
                    if fields.len() != 3 {
                        return Err(Error::Parse { line: lineno, msg: "size line needs `m n nnz`".into() });
                    }
                    let (m, n, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                    if m == 0 || n == 0 {
                        return Err(Error::Parse { line: lineno, msg: "m and n must be positive".into() });
                    }
                    size = Some((m, n, nnz));
                    entries.reserve(nnz);
                }
                Some((m, n, nnz)) => {
                    if fields.len() != 2 {
                        return Err(Error::Parse { line: lineno, msg: "entry line needs `i j`".into() });
                    }
                    let (i, j) = (parse(fields[0])?, parse(fields[1])?);
                    if i == 0 || i > m || j == 0 || j > n {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("entry ({i}, {j}) outside {m}x{n}"),
                        });
                    }
                    if entries.len() == nnz {
                        return Err(Error::Parse {
                            line: lineno,
                            msg: format!("more entries than the declared {nnz}"),
                        });
                    }
                    if !seen.insert((i, j)) {
                        return Err(Error::Parse { line: lineno, msg: format!("duplicate entry ({i}, {j})") });
                    }
                    entries.push((i - 1, j - 1));
                }
            }
        }
        let (m, n, nnz) = size.ok_or(Error::Parse { line: 2, msg: "missing size line".into() })?;
        if entries.len() != nnz {
            return Err(Error::Parse {
                line: 2,
                msg: format!("header declares {nnz} entries, found {}", entries.len()),
            });
        }
        Self::from_entries(m, n, &entries)
    }
}
