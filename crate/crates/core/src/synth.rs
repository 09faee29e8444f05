//! Reproducible clustered time series for tests and benchmarks.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::fmt::sig;
use crate::matrix::TimeSeriesSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub clusters: usize,
    /// Observations per series.
    pub len: usize,
    /// Standard deviation of the per-series noise around its cluster's
    /// latent signal (the signal itself has unit variance).
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n: usize, clusters: usize, seed: u64) -> Self {
        SyntheticConfig { n, clusters, len: 100, noise: 1.0, seed }
    }
}

/// Series `i` belongs to cluster `i % clusters` and is that cluster's
/// Gaussian latent signal plus independent Gaussian noise.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<(TimeSeriesSet, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clusters = cfg.clusters.max(1);
    let latent: Vec<Vec<f64>> =
        (0..clusters).map(|_| (0..cfg.len).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let labels: Vec<usize> = (0..cfg.n).map(|i| i % clusters).collect();
    let rows = labels
        .iter()
        .map(|&c| {
            latent[c]
                .iter()
                .map(|&x| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x + cfg.noise * e
                })
                .collect()
        })
        .collect();
    Ok((TimeSeriesSet::new(rows)?, labels))
}

/// Comma-separated, one series per line.
pub fn write_series<W: Write>(ts: &TimeSeriesSet, mut out: W) -> io::Result<()> {
    for row in ts.rows() {
        let line: Vec<String> = row.iter().map(|&x| sig(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
