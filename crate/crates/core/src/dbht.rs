//! Vertex assignment on the directed bubble tree.
//!
//! Converging bubbles (no outgoing edges) seed the groups. A vertex lying in
//! at least one converging bubble joins the one it is most strongly attached
//! to; every other vertex joins the reachable converging bubble whose
//! already-grouped vertices are closest on average in shortest-path terms.
//! Independently, each vertex is placed in the bubble maximizing its
//! normalized attachment. Ties always go to the lower bubble id.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{self, Write};

use rayon::prelude::*;

use crate::bubble::BubbleTree;
use crate::error::{Error, Result};
use crate::matrix::{DisMatrix, SimMatrix};
use crate::tmfg::TmfgGraph;

/// Bubbles with out-degree zero, ascending.
pub fn converging_bubbles(tree: &BubbleTree) -> Vec<usize> {
    (0..tree.len()).filter(|&b| tree.out_degree(b) == 0).collect()
}

/// For each bubble, the converging bubbles reachable along edge directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Reachability {
    per_bubble: Vec<Vec<usize>>,
}

impl Reachability {
    /// Reachable converging bubbles of `b`, ascending.
    pub fn of(&self, b: usize) -> &[usize] {
        &self.per_bubble[b]
    }

    pub fn len(&self) -> usize {
        self.per_bubble.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_bubble.is_empty()
    }
}

/// One BFS per bubble over the directed tree.
pub fn reachable_converging(tree: &BubbleTree) -> Reachability {
    let n = tree.len();
    let out: Vec<Vec<usize>> = (0..n).map(|b| tree.out_neighbors(b)).collect();
    let per_bubble = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            let mut sinks = Vec::new();
            while let Some(b) = queue.pop_front() {
                if out[b].is_empty() {
                    sinks.push(b);
                }
                for &c in &out[b] {
                    if !seen[c] {
                        seen[c] = true;
                        queue.push_back(c);
                    }
                }
            }
            sinks.sort_unstable();
            sinks
        })
        .collect();
    Reachability { per_bubble }
}

/// All-pairs shortest-path lengths on the TMFG.
#[derive(Debug, Clone, PartialEq)]
pub struct Apsp {
    n: usize,
    dist: Vec<f64>,
}

impl Apsp {
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.n + v]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.dist[u * self.n..(u + 1) * self.n]
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // min-heap on distance, then vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from every vertex, edge lengths taken from `dis`. The result is
/// exactly symmetric: entry `(u, v)` with `u > v` is copied from source `v`.
pub fn apsp(graph: &TmfgGraph, dis: &DisMatrix) -> Result<Apsp> {
    let n = graph.n();
    if dis.n() != n {
        return Err(Error::DimensionMismatch { left: n, right: dis.n() });
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        let len = dis.get(e.i, e.j);
        if len.is_nan() || len < 0.0 {
            return Err(Error::NegativeWeight { row: e.i, col: e.j, value: len });
        }
        adj[e.i].push((e.j, len));
        adj[e.j].push((e.i, len));
    }
    let mut dist: Vec<f64> = (0..n).into_par_iter().flat_map_iter(|src| dijkstra(&adj, src)).collect();
    for u in 0..n {
        for v in 0..u {
            dist[u * n + v] = dist[v * n + u];
        }
    }
    Ok(Apsp { n, dist })
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, len) in &adj[u] {
            let nd = d + len;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

/// How a vertex obtained its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupStage {
    /// Member of a converging bubble; score is the attachment χ.
    Attachment,
    /// Not in any converging bubble; score is the mean path length L̄.
    PathLength,
}

/// Group (converging bubble) of every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAssignment {
    pub group: Vec<usize>,
    pub score: Vec<f64>,
    pub stage: Vec<GroupStage>,
    /// `(converging bubble, vertices grouped there by attachment)`, for
    /// every converging bubble, ascending by bubble id.
    pub v0: Vec<(usize, Vec<usize>)>,
}

/// Group and bubble of every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub groups: GroupAssignment,
    pub bubble: Vec<usize>,
    pub bubble_score: Vec<f64>,
}

impl Assignment {
    pub fn n(&self) -> usize {
        self.bubble.len()
    }

    pub fn group(&self, v: usize) -> usize {
        self.groups.group[v]
    }

    /// `vertex group_bubble bubble` per line.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for v in 0..self.n() {
            writeln!(out, "{v} {} {}", self.groups.group[v], self.bubble[v])?;
        }
        Ok(())
    }
}

/// Sum of similarities from `v` to the other vertices of a bubble.
pub fn attachment(s: &SimMatrix, bubble: &[usize; 4], v: usize) -> f64 {
    bubble.iter().filter(|&&u| u != v).map(|&u| s.get(u, v)).sum()
}

/// Sum of the six edge weights inside a bubble.
pub fn bubble_weight(s: &SimMatrix, bubble: &[usize; 4]) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            total += s.get(bubble[i], bubble[j]);
        }
    }
    total
}

/// Groups `(key, vertex)` pairs by key with a sort; keys ascending,
/// vertices ascending within each key.
pub fn group_by_key(mut pairs: Vec<(usize, usize)>) -> Vec<(usize, Vec<usize>)> {
    pairs.par_sort_unstable();
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for (k, v) in pairs {
        match out.last_mut() {
            Some((last, members)) if *last == k => members.push(v),
            _ => out.push((k, vec![v])),
        }
    }
    out
}

/// Assigns every vertex to a converging bubble.
pub fn assign_groups(tree: &BubbleTree, s: &SimMatrix, apsp: &Apsp, reach: &Reachability) -> Result<GroupAssignment> {
    let n = s.n();
    let converging = converging_bubbles(tree);
    let mut is_converging = vec![false; tree.len()];
    for &b in &converging {
        is_converging[b] = true;
    }
    let containing = tree.bubbles_of_vertex(n);

    // Stage 1: strongest attachment among converging bubbles containing v.
    let stage1: Vec<Option<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut best: Option<(usize, f64)> = None;
            for &b in containing[v].iter().filter(|&&b| is_converging[b]) {
                let chi = attachment(s, &tree.node(b).vertices, v);
                if best.is_none_or(|(_, x)| chi > x) {
                    best = Some((b, chi));
                }
            }
            best
        })
        .collect();

    let grouped = group_by_key(stage1.iter().enumerate().filter_map(|(v, g)| g.map(|(b, _)| (b, v))).collect());
    let mut v0_of: Vec<Option<&[usize]>> = vec![None; tree.len()];
    for (b, members) in &grouped {
        v0_of[*b] = Some(members);
    }

    // Stage 2: minimum mean path length to V⁰ of a reachable converging bubble.
    let stage2: Vec<Result<(usize, f64, GroupStage)>> = (0..n)
        .into_par_iter()
        .map(|v| {
            if let Some((b, chi)) = stage1[v] {
                return Ok((b, chi, GroupStage::Attachment));
            }
            let mut targets: Vec<usize> = containing[v].iter().flat_map(|&b| reach.of(b).iter().copied()).collect();
            targets.sort_unstable();
            targets.dedup();
            let row = apsp.row(v);
            let mut best: Option<(usize, f64)> = None;
            for b in targets {
                let Some(members) = v0_of[b] else { continue };
                let mean = members.iter().map(|&u| row[u]).sum::<f64>() / members.len() as f64;
                if best.is_none_or(|(_, x)| mean < x) {
                    best = Some((b, mean));
                }
            }
            best.map(|(b, l)| (b, l, GroupStage::PathLength)).ok_or(Error::Unassignable { vertex: v })
        })
        .collect();

    let mut group = Vec::with_capacity(n);
    let mut score = Vec::with_capacity(n);
    let mut stage = Vec::with_capacity(n);
    for r in stage2 {
        let (b, x, st) = r?;
        group.push(b);
        score.push(x);
        stage.push(st);
    }
    let v0 = converging.iter().map(|&b| (b, v0_of[b].map(<[usize]>::to_vec).unwrap_or_default())).collect();
    Ok(GroupAssignment { group, score, stage, v0 })
}

fn nan_low(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Places every vertex in the bubble containing it that maximizes
/// attachment / bubble weight (six unordered edges).
pub fn assign_bubbles(tree: &BubbleTree, s: &SimMatrix, groups: GroupAssignment) -> Assignment {
    let n = s.n();
    let weights: Vec<f64> = tree.nodes().par_iter().map(|b| bubble_weight(s, &b.vertices)).collect();
    let containing = tree.bubbles_of_vertex(n);
    let (bubble, bubble_score): (Vec<usize>, Vec<f64>) = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut best: Option<(usize, f64)> = None;
            for &b in &containing[v] {
                let score = attachment(s, &tree.node(b).vertices, v) / weights[b];
                if best.is_none_or(|(_, x)| nan_low(score) > nan_low(x)) {
                    best = Some((b, score));
                }
            }
            best.expect("every vertex lies in at least one bubble")
        })
        .unzip();
    Assignment { groups, bubble, bubble_score }
}

/// Vertices sharing both a group and a bubble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    pub group: usize,
    pub bubble: usize,
    /// Ascending.
    pub members: Vec<usize>,
}

/// Partition of the vertices by `(group, bubble)`, ordered by that pair.
pub fn subgroups(a: &Assignment) -> Vec<Subgroup> {
    let mut keyed: Vec<((usize, usize), usize)> = (0..a.n()).map(|v| ((a.groups.group[v], a.bubble[v]), v)).collect();
    keyed.sort_unstable();
    let mut out: Vec<Subgroup> = Vec::new();
    for ((group, bubble), v) in keyed {
        match out.last_mut() {
            Some(sg) if sg.group == group && sg.bubble == bubble => sg.members.push(v),
            _ => out.push(Subgroup { group, bubble, members: vec![v] }),
        }
    }
    out
}
