//! Prefix-batched TMFG construction.
//!
//! The graph starts from the 4-clique of vertices with the largest row sums.
//! Every live triangular face remembers the remaining vertex that would add
//! the most weight if inserted into it (its *gain entry*). Each round takes
//! the `prefix` best (face, vertex) pairs, drops pairs whose vertex already
//! appears with a better face, inserts the survivors, and refreshes the gain
//! entries of the new faces and of faces whose best vertex was just consumed.
//!
//! With `prefix = 1` this is exactly the sequential greedy TMFG.
//!
//! Ordering is total everywhere: higher gain first, then lower vertex id,
//! then the lexicographically smaller face. Batches are applied in ascending
//! vertex id so face ids (and therefore all downstream output) do not depend
//! on the thread count.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::bubble::BubbleTree;
use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::matrix::{SimMatrix, MIN_OBJECTS};

/// A triangular face, stored with its corners sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face([usize; 3]);

impl Face {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        debug_assert!(v[0] != v[1] && v[1] != v[2], "degenerate face {v:?}");
        Face(v)
    }

    #[inline]
    pub fn corners(&self) -> [usize; 3] {
        self.0
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    /// Gain of inserting `u` into this face: sum of the three new edge weights.
    #[inline]
    pub fn gain(&self, s: &SimMatrix, u: usize) -> f64 {
        let [a, b, c] = self.0;
        s.get(a, u) + s.get(b, u) + s.get(c, u)
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Best remaining vertex for one live face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEntry {
    pub face: Face,
    pub best_vertex: Option<usize>,
    pub gain: f64,
}

/// A (vertex, face) pair chosen for insertion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchItem {
    pub vertex: usize,
    pub face: Face,
    pub gain: f64,
}

/// One applied insertion, in the order it was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub round: usize,
    pub vertex: usize,
    pub face: Face,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl Edge {
    fn new(a: usize, b: usize, w: f64) -> Self {
        Edge { i: a.min(b), j: a.max(b), w }
    }
}

/// Maximum number of insertions per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixConfig {
    prefix: usize,
}

impl PrefixConfig {
    pub fn new(prefix: usize) -> Result<Self> {
        if prefix == 0 {
            return Err(Error::InvalidPrefix);
        }
        Ok(Self { prefix })
    }

    pub fn sequential() -> Self {
        Self { prefix: 1 }
    }

    pub fn prefix(&self) -> usize {
        self.prefix
    }
}

/// A finished TMFG: maximal planar, `3n - 6` edges, `2n - 4` faces.
#[derive(Debug, Clone)]
pub struct TmfgGraph {
    n: usize,
    seed: [usize; 4],
    edges: Vec<Edge>,
    faces: Vec<Face>,
    insertion_log: Vec<Insertion>,
    rounds: usize,
}

impl TmfgGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> [usize; 4] {
        self.seed
    }

    /// Edges in insertion order (seed clique first).
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Live faces at completion, in creation order.
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn insertion_log(&self) -> &[Insertion] {
        &self.insertion_log
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn edge_weight_sum(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// `(i, j)` pairs with `i < j`, sorted.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.edges.iter().map(|e| (e.i, e.j)).collect();
        v.sort_unstable();
        v
    }

    /// Weighted degree of every vertex under the similarity weights.
    pub fn weighted_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for e in &self.edges {
            deg[e.i] += e.w;
            deg[e.j] += e.w;
        }
        deg
    }

    /// Neighbor lists, each sorted by vertex id.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// `i j w` per line, `i < j`, sorted lexicographically.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut edges = self.edges.clone();
        edges.sort_unstable_by_key(|e| (e.i, e.j));
        for e in edges {
            writeln!(out, "{} {} {}", e.i, e.j, sig(e.w))?;
        }
        Ok(())
    }

    /// `round vertex face_corners gain` per line.
    pub fn write_insertion_log<W: Write>(&self, mut out: W) -> io::Result<()> {
        for ins in &self.insertion_log {
            writeln!(out, "{} {} {} {}", ins.round, ins.vertex, ins.face, sig(ins.gain))?;
        }
        Ok(())
    }
}

/// The four vertices with the largest off-diagonal row sums, ascending by id.
/// Ties go to the lower vertex id.
pub fn seed_clique(s: &SimMatrix) -> Result<[usize; 4]> {
    let n = s.n();
    if n < MIN_OBJECTS {
        return Err(Error::TooSmall { n, min: MIN_OBJECTS });
    }
    let sums: Vec<f64> = (0..n).into_par_iter().map(|i| s.row_sum(i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    let mut seed = [order[0], order[1], order[2], order[3]];
    seed.sort_unstable();
    Ok(seed)
}

fn rank(a: &BatchItem, b: &BatchItem) -> Ordering {
    b.gain.total_cmp(&a.gain).then(a.vertex.cmp(&b.vertex)).then(a.face.cmp(&b.face))
}

/// Picks up to `prefix` pairs from the gain table, best first, keeping each
/// vertex and each face at most once.
pub fn select_batch(gains: &[GainEntry], prefix: usize) -> Vec<BatchItem> {
    let candidates: Vec<BatchItem> = gains
        .iter()
        .filter_map(|g| g.best_vertex.map(|vertex| BatchItem { vertex, face: g.face, gain: g.gain }))
        .collect();
    resolve(top_prefix(candidates, prefix))
}

fn top_prefix(mut candidates: Vec<BatchItem>, prefix: usize) -> Vec<BatchItem> {
    let prefix = prefix.max(1);
    if prefix == 1 {
        return candidates.into_par_iter().min_by(rank).into_iter().collect();
    }
    if candidates.len() > prefix {
        candidates.select_nth_unstable_by(prefix - 1, rank);
        candidates.truncate(prefix);
    }
    candidates.par_sort_unstable_by(rank);
    candidates
}

/// Input sorted best-first; keeps the first pair for each vertex and face.
fn resolve(ranked: Vec<BatchItem>) -> Vec<BatchItem> {
    let mut out: Vec<BatchItem> = Vec::with_capacity(ranked.len());
    for item in ranked {
        if out.iter().any(|o| o.vertex == item.vertex || o.face == item.face) {
            continue;
        }
        out.push(item);
    }
    out
}

#[derive(Debug, Clone)]
struct FaceSlot {
    face: Face,
    live: bool,
    best: Option<usize>,
    gain: f64,
}

/// Incremental TMFG state. Drive it with [`TmfgBuilder::step`] or run it to
/// completion with [`build_tmfg`].
pub struct TmfgBuilder<'a> {
    s: &'a SimMatrix,
    prefix: usize,
    seed: [usize; 4],
    slots: Vec<FaceSlot>,
    live: Vec<usize>,
    live_pos: Vec<usize>,
    remaining: Vec<usize>,
    in_remaining: Vec<bool>,
    // faces that recorded this vertex as best when last refreshed (may be stale)
    best_of: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    log: Vec<Insertion>,
    round: usize,
    tree: BubbleTree,
}

const DEAD: usize = usize::MAX;

impl<'a> TmfgBuilder<'a> {
    /// Seeds the graph with the max-row-sum clique and fills the gain table.
    pub fn new(s: &'a SimMatrix, cfg: PrefixConfig) -> Result<Self> {
        let seed = seed_clique(s)?;
        let n = s.n();
        let [a, b, c, d] = seed;
        let mut in_remaining = vec![true; n];
        for v in seed {
            in_remaining[v] = false;
        }
        let remaining: Vec<usize> = (0..n).filter(|&v| in_remaining[v]).collect();
        let mut edges = Vec::with_capacity(3 * n - 6);
        for (x, y) in [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)] {
            edges.push(Edge::new(x, y, s.get(x, y)));
        }
        let mut builder = TmfgBuilder {
            s,
            prefix: cfg.prefix(),
            seed,
            slots: Vec::with_capacity(2 * n),
            live: Vec::with_capacity(2 * n),
            live_pos: Vec::with_capacity(2 * n),
            remaining,
            in_remaining,
            best_of: vec![Vec::new(); n],
            edges,
            log: Vec::with_capacity(n),
            round: 0,
            tree: BubbleTree::new(seed),
        };
        let seeds = [Face::new(a, b, c), Face::new(a, b, d), Face::new(a, c, d), Face::new(b, c, d)];
        let ids: Vec<usize> = seeds.into_iter().map(|f| builder.push_face(f)).collect();
        builder.refresh(&ids);
        Ok(builder)
    }

    pub fn is_done(&self) -> bool {
        self.remaining.is_empty()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn seed(&self) -> [usize; 4] {
        self.seed
    }

    /// Vertices not yet inserted, ascending.
    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    pub fn live_faces(&self) -> Vec<Face> {
        let mut ids = self.live.clone();
        ids.sort_unstable();
        ids.into_iter().map(|id| self.slots[id].face).collect()
    }

    /// Gain table for all live faces, in face-creation order.
    pub fn gains(&self) -> Vec<GainEntry> {
        let mut ids = self.live.clone();
        ids.sort_unstable();
        ids.into_iter()
            .map(|id| {
                let slot = &self.slots[id];
                GainEntry { face: slot.face, best_vertex: slot.best, gain: slot.gain }
            })
            .collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tree(&self) -> &BubbleTree {
        &self.tree
    }

    /// The batch the next round would insert.
    pub fn select_batch(&self) -> Vec<BatchItem> {
        let candidates: Vec<BatchItem> = self
            .live
            .par_iter()
            .filter_map(|&id| {
                let slot = &self.slots[id];
                slot.best.map(|vertex| BatchItem { vertex, face: slot.face, gain: slot.gain })
            })
            .collect();
        resolve(top_prefix(candidates, self.prefix))
    }

    /// Inserts a conflict-free batch: three edges and three faces per pair,
    /// then refreshes every gain entry the batch invalidated.
    pub fn insert_batch(&mut self, mut batch: Vec<BatchItem>) -> Result<()> {
        batch.sort_unstable_by_key(|b| b.vertex);
        let mut face_ids = Vec::with_capacity(batch.len());
        for (k, item) in batch.iter().enumerate() {
            if !self.in_remaining.get(item.vertex).copied().unwrap_or(false)
                || batch[..k].iter().any(|o| o.vertex == item.vertex)
            {
                return Err(Error::StaleFace(item.face.corners()));
            }
            let id = self
                .live
                .iter()
                .copied()
                .find(|&id| self.slots[id].face == item.face)
                .filter(|_| batch[..k].iter().all(|o| o.face != item.face))
                .ok_or(Error::StaleFace(item.face.corners()))?;
            face_ids.push(id);
        }

        for item in &batch {
            self.in_remaining[item.vertex] = false;
        }
        self.remaining.retain(|&v| self.in_remaining[v]);

        let mut dirty = Vec::with_capacity(3 * batch.len());
        for (item, &id) in batch.iter().zip(&face_ids) {
            let v = item.vertex;
            let [a, b, c] = item.face.corners();
            for x in [a, b, c] {
                self.edges.push(Edge::new(v, x, self.s.get(v, x)));
            }
            self.kill_face(id);
            for f in [Face::new(v, a, b), Face::new(v, b, c), Face::new(v, a, c)] {
                dirty.push(self.push_face(f));
            }
            self.tree.update(v, item.face)?;
            self.log.push(Insertion { round: self.round, vertex: v, face: item.face, gain: item.gain });
        }
        for item in &batch {
            let stale = std::mem::take(&mut self.best_of[item.vertex]);
            dirty.extend(
                stale.into_iter().filter(|&id| self.slots[id].live && self.slots[id].best == Some(item.vertex)),
            );
        }
        dirty.sort_unstable();
        dirty.dedup();
        self.refresh(&dirty);
        self.round += 1;
        Ok(())
    }

    /// Runs one round. Returns the applied batch (empty when done).
    pub fn step(&mut self) -> Result<Vec<BatchItem>> {
        if self.is_done() {
            return Ok(Vec::new());
        }
        let batch = self.select_batch();
        self.insert_batch(batch.clone())?;
        Ok(batch)
    }

    pub fn finish(mut self) -> Result<(TmfgGraph, BubbleTree)> {
        while !self.is_done() {
            self.step()?;
        }
        let faces = self.live_faces();
        let graph = TmfgGraph {
            n: self.s.n(),
            seed: self.seed,
            edges: self.edges,
            faces,
            insertion_log: self.log,
            rounds: self.round,
        };
        Ok((graph, self.tree))
    }

    fn push_face(&mut self, face: Face) -> usize {
        let id = self.slots.len();
        self.slots.push(FaceSlot { face, live: true, best: None, gain: f64::NEG_INFINITY });
        self.live_pos.push(self.live.len());
        self.live.push(id);
        id
    }

    fn kill_face(&mut self, id: usize) {
        let pos = self.live_pos[id];
        let last = *self.live.last().expect("live set is nonempty");
        self.live.swap_remove(pos);
        if last != id {
            self.live_pos[last] = pos;
        }
        self.live_pos[id] = DEAD;
        self.slots[id].live = false;
    }

    /// Recomputes the best remaining vertex for each listed face.
    fn refresh(&mut self, ids: &[usize]) {
        let s = self.s;
        let remaining = &self.remaining;
        let slots = &self.slots;
        let results: Vec<(Option<usize>, f64)> =
            ids.par_iter().map(|&id| best_vertex(s, slots[id].face, remaining)).collect();
        for (&id, (best, gain)) in ids.iter().zip(results) {
            let slot = &mut self.slots[id];
            slot.best = best;
            slot.gain = gain;
            if let Some(v) = best {
                self.best_of[v].push(id);
            }
        }
    }
}

/// Argmax of the insertion gain over `candidates` (ascending ids); the lower
/// id wins ties.
pub fn best_vertex(s: &SimMatrix, face: Face, candidates: &[usize]) -> (Option<usize>, f64) {
    let [a, b, c] = face.corners();
    let (ra, rb, rc) = (s.row(a), s.row(b), s.row(c));
    let mut best = None;
    let mut best_gain = f64::NEG_INFINITY;
    for &u in candidates {
        let g = ra[u] + rb[u] + rc[u];
        if best.is_none() || g > best_gain {
            best = Some(u);
            best_gain = g;
        }
    }
    (best, best_gain)
}

/// Builds the full TMFG.
pub fn build_tmfg(s: &SimMatrix, cfg: PrefixConfig) -> Result<TmfgGraph> {
    Ok(build_tmfg_with_tree(s, cfg)?.0)
}

/// Builds the full TMFG together with its (undirected) bubble tree.
pub fn build_tmfg_with_tree(s: &SimMatrix, cfg: PrefixConfig) -> Result<(TmfgGraph, BubbleTree)> {
    TmfgBuilder::new(s, cfg)?.finish()
}
