//! Clustering agreement (adjusted Rand index) and TMFG quality ratios.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tmfg::TmfgGraph;

/// Cross-tabulation of two labelings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    /// `(truth cluster, predicted cluster) -> count`.
    pub cells: BTreeMap<(i64, i64), u64>,
    pub truth_sizes: BTreeMap<i64, u64>,
    pub pred_sizes: BTreeMap<i64, u64>,
    pub n: u64,
}

impl Contingency {
    pub fn new(truth: &[i64], pred: &[i64]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch { truth: truth.len(), pred: pred.len() });
        }
        let mut cells = BTreeMap::new();
        let mut truth_sizes = BTreeMap::new();
        let mut pred_sizes = BTreeMap::new();
        for (&t, &p) in truth.iter().zip(pred) {
            *cells.entry((t, p)).or_insert(0) += 1;
            *truth_sizes.entry(t).or_insert(0) += 1;
            *pred_sizes.entry(p).or_insert(0) += 1;
        }
        Ok(Contingency { cells, truth_sizes, pred_sizes, n: truth.len() as u64 })
    }
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Pairwise (cascade) summation.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len if len <= 8 => xs.iter().sum(),
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Adjusted Rand index between a reference labeling and a prediction.
///
/// Returns 1 when the chance-corrected denominator vanishes, which happens
/// only when both labelings are the same trivial partition.
pub fn ari(truth: &[i64], pred: &[i64]) -> Result<f64> {
    let c = Contingency::new(truth, pred)?;
    if c.n < 2 {
        return Err(Error::TooSmall { n: c.n as usize, min: 2 });
    }
    let index = pairwise_sum(&c.cells.values().map(|&x| choose2(x)).collect::<Vec<_>>());
    let a = pairwise_sum(&c.truth_sizes.values().map(|&x| choose2(x)).collect::<Vec<_>>());
    let b = pairwise_sum(&c.pred_sizes.values().map(|&x| choose2(x)).collect::<Vec<_>>());
    let expected = a * b / choose2(c.n);
    let max_index = 0.5 * (a + b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Convenience wrapper for unsigned labels.
pub fn ari_usize(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t: Vec<i64> = truth.iter().map(|&x| x as i64).collect();
    let p: Vec<i64> = pred.iter().map(|&x| x as i64).collect();
    ari(&t, &p)
}

/// Ratio of total edge weight of `g1` to that of `g2`.
pub fn edge_weight_ratio(g1: &TmfgGraph, g2: &TmfgGraph) -> f64 {
    g1.edge_weight_sum() / g2.edge_weight_sum()
}

/// One integer label per non-blank line.
pub fn load_labels(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<i64>().map_err(|e| Error::Parse { line: i + 1, message: format!("{:?}: {e}", l.trim()) })
        })
        .collect()
}

pub fn write_labels<W: Write>(labels: &[usize], mut out: W) -> io::Result<()> {
    for l in labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_match_is_one() {
        let t = [0, 0, 1, 1, 2, 2, 2];
        assert_eq!(ari(&t, &t).unwrap(), 1.0);
        // relabeled prediction
        assert_eq!(ari(&t, &[5, 5, 9, 9, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn trivial_partitions() {
        assert_eq!(ari(&[3, 3, 3, 3], &[7, 7, 7, 7]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 1, 2, 3], &[3, 2, 1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn crossed_two_by_two() {
        // Contingency [[1,1],[1,1]]: index 0, a = b = 2, C(4,2) = 6,
        // expected 4/6, max 2 -> (0 - 2/3) / (2 - 2/3) = -0.5
        let v = ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(ari(&[0, 1], &[0]), Err(Error::LengthMismatch { truth: 2, pred: 1 })));
    }

    #[test]
    fn contingency_marginals() {
        let c = Contingency::new(&[0, 0, 1, 1, 1], &[0, 1, 1, 1, 2]).unwrap();
        assert_eq!(c.n, 5);
        assert_eq!(c.cells.values().sum::<u64>(), 5);
        assert_eq!(c.truth_sizes[&1], 3);
        assert_eq!(c.pred_sizes[&1], 3);
        assert_eq!(c.cells[&(1, 1)], 2);
    }
}
