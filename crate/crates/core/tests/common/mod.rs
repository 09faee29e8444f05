#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdbht::bubble::{BubbleTree, Direction};
use tdbht::matrix::{pearson_similarity, DisMatrix, SimMatrix, TimeSeriesSet};
use tdbht::tmfg::TmfgGraph;

/// Similarity matrix of the seven-vertex worked example. TMFG edges carry
/// 0.8 / 0.4 / 0.2, everything else 0.1.
pub const WORKED_EXAMPLE: [[f64; 7]; 7] = [
    [1.0, 0.8, 0.8, 0.2, 0.4, 0.1, 0.2],
    [0.8, 1.0, 0.8, 0.4, 0.4, 0.4, 0.2],
    [0.8, 0.8, 1.0, 0.4, 0.8, 0.2, 0.1],
    [0.2, 0.4, 0.4, 1.0, 0.1, 0.2, 0.4],
    [0.4, 0.4, 0.8, 0.1, 1.0, 0.1, 0.1],
    [0.1, 0.4, 0.2, 0.2, 0.1, 1.0, 0.1],
    [0.2, 0.2, 0.1, 0.4, 0.1, 0.1, 1.0],
];

pub fn worked_example() -> SimMatrix {
    let rows: Vec<Vec<f64>> = WORKED_EXAMPLE.iter().map(|r| r.to_vec()).collect();
    SimMatrix::from_rows(&rows).unwrap()
}

/// Symmetric matrix with i.i.d. uniform off-diagonal entries in (-1, 1).
pub fn random_sim(n: usize, seed: u64) -> SimMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SimMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
}

/// Pearson similarity of random series with a few shared factors, so the
/// matrix has cluster structure.
pub fn random_pearson(n: usize, seed: u64) -> SimMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = 40;
    let k = rng.gen_range(2..6);
    let factors: Vec<Vec<f64>> = (0..k).map(|_| (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let rows = (0..n)
        .map(|i| {
            let f = &factors[i % k];
            f.iter().map(|x| x + rng.gen_range(-1.0..1.0)).collect()
        })
        .collect();
    pearson_similarity(&TimeSeriesSet::new(rows).unwrap()).unwrap()
}

pub fn dis_of(s: &SimMatrix) -> DisMatrix {
    tdbht::matrix::to_dissimilarity(s).unwrap()
}

/// Straight-line sequential TMFG: seed by row sums, then repeatedly the
/// single best (vertex, face) pair over all live faces and remaining vertices.
pub struct OracleTmfg {
    pub seed: [usize; 4],
    pub inserts: Vec<(usize, [usize; 3])>,
    pub edges: Vec<(usize, usize)>,
    pub faces: Vec<[usize; 3]>,
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

pub fn oracle_tmfg(s: &SimMatrix) -> OracleTmfg {
    let n = s.n();
    let w = |i: usize, j: usize| s.get(i, j);
    let mut sums: Vec<(f64, usize)> =
        (0..n).map(|i| ((0..n).filter(|&j| j != i).map(|j| w(i, j)).sum::<f64>(), i)).collect();
    sums.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut seed = [sums[0].1, sums[1].1, sums[2].1, sums[3].1];
    seed.sort_unstable();

    let mut edges = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            edges.push((seed[i], seed[j]));
        }
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [seed[0], seed[1], seed[2]],
        [seed[0], seed[1], seed[3]],
        [seed[0], seed[2], seed[3]],
        [seed[1], seed[2], seed[3]],
    ];
    let mut remaining: Vec<usize> = (0..n).filter(|v| !seed.contains(v)).collect();
    let mut inserts = Vec::new();
    while !remaining.is_empty() {
        let mut best: Option<(f64, usize, [usize; 3], usize)> = None;
        for (fi, f) in faces.iter().enumerate() {
            for &u in &remaining {
                let g = w(f[0], u) + w(f[1], u) + w(f[2], u);
                let better = match best {
                    None => true,
                    Some((bg, bu, bf, _)) => g > bg || (g == bg && (u < bu || (u == bu && *f < bf))),
                };
                if better {
                    best = Some((g, u, *f, fi));
                }
            }
        }
        let (_, u, f, fi) = best.unwrap();
        faces.swap_remove(fi);
        faces.push(sorted3([f[0], f[1], u]));
        faces.push(sorted3([f[1], f[2], u]));
        faces.push(sorted3([f[0], f[2], u]));
        for c in f {
            edges.push((c.min(u), c.max(u)));
        }
        remaining.retain(|&x| x != u);
        inserts.push((u, f));
    }
    edges.sort_unstable();
    faces.sort_unstable();
    OracleTmfg { seed, inserts, edges, faces }
}

/// Per bubble-tree edge: (direction, inVal, outVal) from a BFS on the graph
/// with the separating triangle removed. The child side is the component of
/// the child bubble's fourth vertex.
pub fn oracle_directions(graph: &TmfgGraph, tree: &BubbleTree, s: &SimMatrix) -> Vec<Option<(Direction, f64, f64)>> {
    let n = graph.n();
    let adj = graph.adjacency();
    tree.nodes()
        .iter()
        .map(|node| {
            let t = node.sep_triangle?.corners();
            let start = node.vertices.iter().copied().find(|v| !t.contains(v)).unwrap();
            // 0 = unvisited, 1 = child side, 2 = the rest
            let mut side = vec![0u8; n];
            for &c in &t {
                side[c] = 3;
            }
            let mut label = 1u8;
            for root in std::iter::once(start).chain(0..n) {
                if side[root] != 0 {
                    continue;
                }
                assert!(label <= 2, "G minus a separating triangle has more than two components");
                side[root] = label;
                let mut queue = VecDeque::from([root]);
                while let Some(x) = queue.pop_front() {
                    for &y in &adj[x] {
                        if side[y] == 0 {
                            side[y] = label;
                            queue.push_back(y);
                        }
                    }
                }
                label += 1;
            }
            assert_eq!(label, 3, "triangle {t:?} does not separate");
            let inside: Vec<bool> = side.iter().map(|&x| x == 1).collect();
            let (mut in_val, mut out_val) = (0.0, 0.0);
            for &c in &t {
                for &y in &adj[c] {
                    if t.contains(&y) {
                        continue;
                    }
                    if inside[y] {
                        in_val += s.get(c, y);
                    } else {
                        out_val += s.get(c, y);
                    }
                }
            }
            let dir = if in_val > out_val { Direction::ToChild } else { Direction::ToParent };
            Some((dir, in_val, out_val))
        })
        .collect()
}

/// All-pairs shortest paths over the TMFG edges weighted by `d`.
pub fn floyd_warshall(graph: &TmfgGraph, d: &DisMatrix) -> Vec<f64> {
    let n = graph.n();
    let mut m = vec![f64::INFINITY; n * n];
    for i in 0..n {
        m[i * n + i] = 0.0;
    }
    for e in graph.edges() {
        let w = d.get(e.i, e.j);
        m[e.i * n + e.j] = m[e.i * n + e.j].min(w);
        m[e.j * n + e.i] = m[e.j * n + e.i].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i * n + k] + m[k * n + j];
                if via < m[i * n + j] {
                    m[i * n + j] = via;
                }
            }
        }
    }
    m
}

/// Naive complete linkage on singletons `0..n`: every step scans every
/// cluster pair, distance = max over members, ties by the pair of minimum
/// leaf ids. Returns scipy-numbered (smaller-min-leaf side, other, distance).
pub fn naive_complete_linkage(n: usize, dist: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize, f64)> {
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|v| (v, vec![v])).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let mut d = f64::NEG_INFINITY;
                for &u in &clusters[i].1 {
                    for &v in &clusters[j].1 {
                        d = d.max(dist(u, v));
                    }
                }
                let mi = *clusters[i].1.iter().min().unwrap();
                let mj = *clusters[j].1.iter().min().unwrap();
                let key = (d, mi.min(mj), mi.max(mj));
                let better = match best {
                    None => true,
                    Some((bd, b1, b2, _, _)) => key.0 < bd || (key.0 == bd && (key.1, key.2) < (b1, b2)),
                };
                if better {
                    best = Some((key.0, key.1, key.2, i, j));
                }
            }
        }
        let (d, _, _, i, j) = best.unwrap();
        let (cj_label, cj) = clusters.remove(j);
        let (ci_label, ci) = clusters.remove(i);
        let (a, b) = if ci.iter().min() < cj.iter().min() { (ci_label, cj_label) } else { (cj_label, ci_label) };
        out.push((a, b, d));
        let mut merged = ci;
        merged.extend(cj);
        clusters.push((n + out.len() - 1, merged));
    }
    out
}

/// Direct evaluation of the ARI formula from a dense contingency table.
pub fn ari_direct(table: &[Vec<u64>]) -> f64 {
    let c2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let n: u64 = table.iter().flatten().sum();
    let index: f64 = table.iter().flatten().map(|&x| c2(x)).sum();
    let a: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols = table[0].len();
    let b: f64 = (0..cols).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let expected = a * b / c2(n);
    let max = (a + b) / 2.0;
    (index - expected) / (max - expected)
}
