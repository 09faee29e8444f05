//! Dense matrix containers and the correlation / distance transforms that
//! feed the filtered-graph pipeline.

use std::fs;
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Asymmetry tolerated silently when loading a matrix from disk.
pub const ASYMMETRY_WARN: f64 = 1e-8;
/// Slack allowed on |w| <= 1 before `to_dissimilarity` rejects a value.
pub const CLAMP_TOLERANCE: f64 = 1e-9;
/// Smallest input accepted by the TMFG (the seed clique needs four vertices).
pub const MIN_OBJECTS: usize = 4;

/// Dense symmetric similarity matrix. The diagonal is pinned to 1 and is
/// never read by the graph algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMatrix {
    n: usize,
    w: Vec<f64>,
}

impl SimMatrix {
    /// Builds from row-major data; rejects non-finite or asymmetric input.
    pub fn new(n: usize, mut w: Vec<f64>) -> Result<Self> {
        check_len(n, &w)?;
        check_finite(n, &w)?;
        for i in 0..n {
            for j in (i + 1)..n {
                if w[i * n + j] != w[j * n + i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
            w[i * n + i] = 1.0;
        }
        Ok(Self { n, w })
    }

    /// Builds from row-major data, repairing asymmetry with `(w + wᵀ) / 2`.
    /// Returns the matrix and the largest |w[i][j] - w[j][i]| seen.
    pub fn symmetrized(n: usize, mut w: Vec<f64>) -> Result<(Self, f64)> {
        check_len(n, &w)?;
        check_finite(n, &w)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (w[i * n + j], w[j * n + i]);
                worst = worst.max((a - b).abs());
                let avg = 0.5 * (a + b);
                w[i * n + j] = avg;
                w[j * n + i] = avg;
            }
            w[i * n + i] = 1.0;
        }
        Ok((Self { n, w }, worst))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        Self::new(n, flatten_square(rows)?)
    }

    /// Builds a matrix from a closure evaluated on the strict upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut w = vec![1.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        Self::new(n, w)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// Sum of the off-diagonal entries of row `i`.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// Dense symmetric dissimilarity matrix with zero diagonal and nonnegative
/// entries, used as shortest-path edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct DisMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DisMatrix {
    pub fn new(n: usize, mut d: Vec<f64>) -> Result<Self> {
        check_len(n, &d)?;
        check_finite(n, &d)?;
        for i in 0..n {
            d[i * n + i] = 0.0;
            for j in 0..n {
                let x = d[i * n + j];
                if x < 0.0 {
                    return Err(Error::NegativeWeight { row: i, col: j, value: x });
                }
                if j > i && x != d[j * n + i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { n, d })
    }

    /// Like [`SimMatrix::symmetrized`]; the diagonal is forced to zero.
    pub fn symmetrized(n: usize, mut d: Vec<f64>) -> Result<(Self, f64)> {
        check_len(n, &d)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                worst = worst.max((a - b).abs());
                let avg = 0.5 * (a + b);
                d[i * n + j] = avg;
                d[j * n + i] = avg;
            }
        }
        Ok((Self::new(n, d)?, worst))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.len(), flatten_square(rows)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }
}

/// `n` observed series of common length `L >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    len: usize,
    rows: Vec<Vec<f64>>,
}

impl TimeSeriesSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != len {
                return Err(Error::RaggedRows { row: i, expected: len, found: row.len() });
            }
            if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        if len < 2 {
            return Err(Error::TooSmall { n: len, min: 2 });
        }
        Ok(Self { len, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn series_len(&self) -> usize {
        self.len
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Pearson correlation between every pair of rows. Diagonal is 1.
pub fn pearson_similarity(ts: &TimeSeriesSet) -> Result<SimMatrix> {
    let n = ts.n();
    let centered: Vec<(Vec<f64>, f64)> = ts
        .rows()
        .par_iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let c: Vec<f64> = row.iter().map(|x| x - mean).collect();
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            (c, norm)
        })
        .collect();
    if let Some(row) = centered.iter().position(|(_, norm)| *norm == 0.0) {
        return Err(Error::ZeroVariance { row });
    }

    let w: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (ci, ni) = &centered[i];
            let centered = &centered;
            (0..n).map(move |j| {
                if i == j {
                    return 1.0;
                }
                let (cj, nj) = &centered[j];
                let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                (dot / (ni * nj)).clamp(-1.0, 1.0)
            })
        })
        .collect();
    SimMatrix::new(n, w)
}

/// `d = sqrt(2 (1 - w))`, clamping `w` into [-1, 1] first.
pub fn to_dissimilarity(s: &SimMatrix) -> Result<DisMatrix> {
    let n = s.n();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = s.get(i, j);
            if w.abs() > 1.0 + CLAMP_TOLERANCE {
                return Err(Error::OutOfRange { row: i, col: j, value: w });
            }
            d[i * n + j] = (2.0 * (1.0 - w.clamp(-1.0, 1.0))).sqrt();
        }
    }
    DisMatrix::new(n, d)
}

/// How numeric tables on disk separate their fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    Csv,
    Whitespace,
    /// Comma if the line contains one, whitespace otherwise.
    #[default]
    Auto,
}

/// Parses a numeric table. Blank lines are skipped; `header` drops the
/// first non-blank line.
pub fn parse_table(text: &str, format: TableFormat, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut skipped_header = !header;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !skipped_header {
            skipped_header = true;
            continue;
        }
        let comma = match format {
            TableFormat::Csv => true,
            TableFormat::Whitespace => false,
            TableFormat::Auto => line.contains(','),
        };
        let fields: Vec<&str> =
            if comma { line.split(',').map(str::trim).collect() } else { line.split_whitespace().collect() };
        let row = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse { line: lineno + 1, message: format!("{f:?}: {e}") }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}

fn square_rows(rows: Vec<Vec<f64>>) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    if n < MIN_OBJECTS {
        return Err(Error::TooSmall { n, min: MIN_OBJECTS });
    }
    Ok((n, flatten_square(&rows)?))
}

/// Loads a square similarity matrix, symmetrizing it if needed.
pub fn load_matrix(path: &Path, format: TableFormat, header: bool) -> Result<SimMatrix> {
    let (n, data) = square_rows(parse_table(&read_text(path)?, format, header)?)?;
    let (s, worst) = SimMatrix::symmetrized(n, data)?;
    if worst > ASYMMETRY_WARN {
        warn!("{}: max asymmetry {worst:e}, symmetrized", path.display());
    }
    Ok(s)
}

/// Loads a square dissimilarity matrix, symmetrizing it if needed.
pub fn load_dissimilarity(path: &Path, format: TableFormat, header: bool) -> Result<DisMatrix> {
    let (n, data) = square_rows(parse_table(&read_text(path)?, format, header)?)?;
    let (d, worst) = DisMatrix::symmetrized(n, data)?;
    if worst > ASYMMETRY_WARN {
        warn!("{}: max asymmetry {worst:e}, symmetrized", path.display());
    }
    Ok(d)
}

/// Loads one time series per row.
pub fn load_time_series(path: &Path, format: TableFormat, header: bool) -> Result<TimeSeriesSet> {
    let rows = parse_table(&read_text(path)?, format, header)?;
    if rows.len() < MIN_OBJECTS {
        return Err(Error::TooSmall { n: rows.len(), min: MIN_OBJECTS });
    }
    TimeSeriesSet::new(rows)
}

fn check_len(n: usize, data: &[f64]) -> Result<()> {
    if data.len() != n * n {
        return Err(Error::DimensionMismatch { left: n * n, right: data.len() });
    }
    Ok(())
}

fn check_finite(n: usize, data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(k) => Err(Error::NonFinite { row: k / n, col: k % n }),
        None => Ok(()),
    }
}

fn flatten_square(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut out = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotSquare { rows: n, row: i, cols: row.len() });
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}
