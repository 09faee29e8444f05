//! End-to-end TMFG + DBHT run with per-phase timing.

use std::time::{Duration, Instant};

use crate::bubble::BubbleTree;
use crate::dbht::{self, Apsp, Assignment};
use crate::error::{Error, Result};
use crate::linkage::{build_hierarchy, Dendrogram};
use crate::matrix::{DisMatrix, SimMatrix};
use crate::tmfg::{build_tmfg_with_tree, PrefixConfig, TmfgGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub prefix: PrefixConfig,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl PipelineConfig {
    pub fn new(prefix: usize) -> Result<Self> {
        Ok(PipelineConfig { prefix: PrefixConfig::new(prefix)?, threads: None })
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

/// Wall-clock time of the four phases.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    /// TMFG construction, including bubble-tree growth.
    pub tmfg: Duration,
    /// Edge directions, converging bubbles and reachability.
    pub bubble_tree: Duration,
    pub apsp: Duration,
    /// Vertex assignment, linkage and heights.
    pub hierarchy: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.tmfg + self.bubble_tree + self.apsp + self.hierarchy
    }

    pub fn phases(&self) -> [(&'static str, Duration); 4] {
        [("tmfg", self.tmfg), ("apsp", self.apsp), ("bubble-tree", self.bubble_tree), ("hierarchy", self.hierarchy)]
    }
}

#[derive(Debug, Clone)]
pub struct DbhtOutput {
    pub graph: TmfgGraph,
    pub tree: BubbleTree,
    pub apsp: Apsp,
    pub assignment: Assignment,
    pub dendrogram: Dendrogram,
    pub timings: PhaseTimings,
}

/// Runs `f` on a pool with `threads` workers, or inline when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Similarity -> TMFG -> directed bubble tree -> assignment -> dendrogram.
pub fn run(s: &SimMatrix, d: &DisMatrix, cfg: &PipelineConfig) -> Result<DbhtOutput> {
    if s.n() != d.n() {
        return Err(Error::DimensionMismatch { left: s.n(), right: d.n() });
    }
    with_threads(cfg.threads, || run_inner(s, d, cfg.prefix))?
}

fn run_inner(s: &SimMatrix, d: &DisMatrix, prefix: PrefixConfig) -> Result<DbhtOutput> {
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let (graph, mut tree) = build_tmfg_with_tree(s, prefix)?;
    timings.tmfg = t.elapsed();

    let t = Instant::now();
    tree.compute_directions(s, &graph);
    let reach = dbht::reachable_converging(&tree);
    timings.bubble_tree = t.elapsed();

    let t = Instant::now();
    let apsp = dbht::apsp(&graph, d)?;
    timings.apsp = t.elapsed();

    let t = Instant::now();
    let groups = dbht::assign_groups(&tree, s, &apsp, &reach)?;
    let assignment = dbht::assign_bubbles(&tree, s, groups);
    let mut dendrogram = build_hierarchy(&assignment, &apsp);
    dendrogram.assign_heights()?;
    timings.hierarchy = t.elapsed();

    Ok(DbhtOutput { graph, tree, apsp, assignment, dendrogram, timings })
}
