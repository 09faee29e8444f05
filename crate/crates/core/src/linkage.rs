//! Three-level complete-linkage hierarchy and dendrogram height assignment.
//!
//! Subgroups are merged internally first (intra-bubble), then subgroup roots
//! within each group (inter-bubble), then group roots (inter-group). Cluster
//! distance is always the largest shortest-path length between members.
//!
//! Raw merge distances from different levels are not comparable, so heights
//! are reassigned afterwards: each group's `n_b - 1` internal nodes get
//! `1/(n_b-1), ..., 1/2, 1` in (level, bubble, distance) order, and each
//! inter-group node gets the number of groups below it.

use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::dbht::{subgroups, Apsp, Assignment};
use crate::error::{Error, Result};
use crate::fmt::sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Intra,
    InterBubble,
    InterGroup,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Intra => "intra",
            Level::InterBubble => "inter_bubble",
            Level::InterGroup => "inter_group",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DendroNode {
    /// Children; `None` for leaves.
    pub children: Option<(usize, usize)>,
    pub merge_distance: f64,
    pub height: f64,
    pub size: usize,
    pub min_leaf: usize,
    /// `None` for leaves.
    pub level: Option<Level>,
    /// Owning converging bubble (leaves, intra and inter-bubble nodes).
    pub group: Option<usize>,
    /// Owning bubble (leaves and intra nodes).
    pub bubble: Option<usize>,
}

/// Binary merge tree with leaves `0..n` and internal nodes `n..2n-1` in
/// creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    nodes: Vec<DendroNode>,
    parent: Vec<Option<usize>>,
}

/// One step of complete linkage over `m` input clusters. Inputs are
/// numbered `0..m`, the k-th merge creates cluster `m + k`. `a` is the side
/// holding the smaller leaf id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

fn pair_key(d: f64, ml_a: usize, ml_b: usize) -> (f64, usize, usize) {
    (d, ml_a.min(ml_b), ml_a.max(ml_b))
}

fn key_cmp(x: (f64, usize, usize), y: (f64, usize, usize)) -> Ordering {
    x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

/// Exact greedy complete linkage: always merges the closest pair, ties
/// broken by the smaller minimum leaf id (then the other side's minimum).
/// `clusters[i]` lists the leaves of input cluster `i`.
pub fn complete_linkage_merges(clusters: &[Vec<usize>], dist: impl Fn(usize, usize) -> f64 + Sync) -> Vec<Merge> {
    let m = clusters.len();
    if m < 2 {
        return Vec::new();
    }
    let dm: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let dist = &dist;
            (0..m).map(move |j| {
                if i == j {
                    return 0.0;
                }
                let mut worst = f64::NEG_INFINITY;
                for &u in &clusters[i] {
                    for &v in &clusters[j] {
                        worst = worst.max(dist(u, v));
                    }
                }
                worst
            })
        })
        .collect();
    let mut dm = dm;
    let mut ml: Vec<usize> = clusters.iter().map(|c| *c.iter().min().expect("nonempty cluster")).collect();
    let mut label: Vec<usize> = (0..m).collect();
    let mut active: Vec<usize> = (0..m).collect();
    let key = |dm: &[f64], ml: &[usize], i: usize, j: usize| pair_key(dm[i * m + j], ml[i], ml[j]);

    let nearest = |dm: &[f64], ml: &[usize], active: &[usize], i: usize| -> usize {
        let mut best = usize::MAX;
        for &j in active {
            if j != i && (best == usize::MAX || key_cmp(key(dm, ml, i, j), key(dm, ml, i, best)) == Ordering::Less) {
                best = j;
            }
        }
        best
    };
    let mut nn: Vec<usize> = (0..m).map(|i| nearest(&dm, &ml, &active, i)).collect();
    let mut merges = Vec::with_capacity(m - 1);

    for step in 0..m - 1 {
        let i = *active
            .iter()
            .min_by(|&&x, &&y| key_cmp(key(&dm, &ml, x, nn[x]), key(&dm, &ml, y, nn[y])))
            .expect("at least two active clusters");
        let j = nn[i];
        let (keep, gone) = if ml[i] < ml[j] { (i, j) } else { (j, i) };
        merges.push(Merge { a: label[keep], b: label[gone], distance: dm[i * m + j] });

        active.retain(|&x| x != gone);
        for &k in &active {
            if k != keep {
                let d = dm[keep * m + k].max(dm[gone * m + k]);
                dm[keep * m + k] = d;
                dm[k * m + keep] = d;
            }
        }
        ml[keep] = ml[keep].min(ml[gone]);
        label[keep] = m + step;

        if active.len() < 2 {
            break;
        }
        nn[keep] = nearest(&dm, &ml, &active, keep);
        for idx in 0..active.len() {
            let k = active[idx];
            if k == keep {
                continue;
            }
            if nn[k] == keep || nn[k] == gone {
                nn[k] = nearest(&dm, &ml, &active, k);
            } else if key_cmp(key(&dm, &ml, k, keep), key(&dm, &ml, k, nn[k])) == Ordering::Less {
                nn[k] = keep;
            }
        }
    }
    merges
}

impl Dendrogram {
    /// `n` unmerged leaves.
    pub fn leaves(n: usize) -> Self {
        let nodes = (0..n)
            .map(|v| DendroNode {
                children: None,
                merge_distance: 0.0,
                height: 0.0,
                size: 1,
                min_leaf: v,
                level: None,
                group: None,
                bubble: None,
            })
            .collect();
        Dendrogram { n, nodes, parent: vec![None; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[DendroNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &DendroNode {
        &self.nodes[id]
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent[id]
    }

    /// The unique parentless node, once fully merged.
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.n
    }

    /// Leaves under `id`, ascending.
    pub fn leaves_under(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].size);
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            match self.nodes[x].children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => out.push(x),
            }
        }
        out.sort_unstable();
        out
    }

    fn push_merge(
        &mut self,
        l: usize,
        r: usize,
        distance: f64,
        level: Level,
        group: Option<usize>,
        bubble: Option<usize>,
    ) -> usize {
        let id = self.nodes.len();
        let (ln, rn) = (&self.nodes[l], &self.nodes[r]);
        let node = DendroNode {
            children: Some((l, r)),
            merge_distance: distance,
            height: distance,
            size: ln.size + rn.size,
            min_leaf: ln.min_leaf.min(rn.min_leaf),
            level: Some(level),
            group,
            bubble,
        };
        self.nodes.push(node);
        self.parent.push(None);
        self.parent[l] = Some(id);
        self.parent[r] = Some(id);
        id
    }

    fn apply_merges(
        &mut self,
        items: &[usize],
        merges: &[Merge],
        level: Level,
        group: Option<usize>,
        bubble: Option<usize>,
    ) -> usize {
        let mut ids: Vec<usize> = items.to_vec();
        for m in merges {
            let id = self.push_merge(ids[m.a], ids[m.b], m.distance, level, group, bubble);
            ids.push(id);
        }
        *ids.last().expect("at least one item")
    }

    /// Complete linkage over existing roots `items`; returns the new root.
    /// A single item is returned unchanged.
    pub fn complete_linkage(
        &mut self,
        items: &[usize],
        dist: impl Fn(usize, usize) -> f64 + Sync,
        level: Level,
        group: Option<usize>,
        bubble: Option<usize>,
    ) -> usize {
        let clusters: Vec<Vec<usize>> = items.iter().map(|&i| self.leaves_under(i)).collect();
        let merges = complete_linkage_merges(&clusters, dist);
        self.apply_merges(items, &merges, level, group, bubble)
    }

    /// Number of vertices in each group, from the leaf tags.
    pub fn group_sizes(&self) -> Vec<(usize, usize)> {
        let mut groups: Vec<usize> = self.nodes[..self.n].iter().filter_map(|x| x.group).collect();
        groups.sort_unstable();
        let mut out: Vec<(usize, usize)> = Vec::new();
        for g in groups {
            match out.last_mut() {
                Some((last, c)) if *last == g => *c += 1,
                _ => out.push((g, 1)),
            }
        }
        out
    }

    /// Replaces merge distances with the level-aware heights.
    pub fn assign_heights(&mut self) -> Result<()> {
        let n = self.n;
        for (g, n_b) in self.group_sizes() {
            let mut members: Vec<usize> = (n..self.nodes.len())
                .filter(|&id| {
                    let x = &self.nodes[id];
                    x.group == Some(g) && matches!(x.level, Some(Level::Intra | Level::InterBubble))
                })
                .collect();
            debug_assert_eq!(members.len(), n_b - 1);
            members.sort_by(|&a, &b| {
                let (x, y) = (&self.nodes[a], &self.nodes[b]);
                x.level
                    .cmp(&y.level)
                    .then(x.bubble.cmp(&y.bubble))
                    .then(x.merge_distance.total_cmp(&y.merge_distance))
                    .then(a.cmp(&b))
            });
            let steps = members.len();
            for (i, id) in members.into_iter().enumerate() {
                self.nodes[id].height = 1.0 / (steps - i) as f64;
            }
        }

        let mut groups_below = vec![0usize; self.nodes.len()];
        for id in n..self.nodes.len() {
            let (l, r) = self.nodes[id].children.expect("internal node");
            if self.nodes[id].level == Some(Level::InterGroup) {
                let count = |c: usize| if self.nodes[c].level == Some(Level::InterGroup) { groups_below[c] } else { 1 };
                groups_below[id] = count(l) + count(r);
                self.nodes[id].height = groups_below[id] as f64;
            }
        }
        self.check_monotone()
    }

    /// Every node's height is at most its parent's.
    pub fn check_monotone(&self) -> Result<()> {
        for (id, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if self.nodes[id].height > self.nodes[p].height {
                    return Err(Error::MonotonicityViolation {
                        child: id,
                        parent: p,
                        child_height: self.nodes[id].height,
                        parent_height: self.nodes[p].height,
                    });
                }
            }
        }
        Ok(())
    }

    /// Flat clustering into exactly `k` clusters by deleting the `k - 1`
    /// highest internal nodes (equal heights: later merges first). Labels
    /// are numbered by each cluster's smallest vertex.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n;
        if k == 0 || k > n || self.nodes.len() != 2 * n - 1 {
            return Err(Error::InvalidCut { k, n });
        }
        let mut internal: Vec<usize> = (n..self.nodes.len()).collect();
        internal.sort_by(|&a, &b| self.nodes[b].height.total_cmp(&self.nodes[a].height).then(b.cmp(&a)));
        let mut removed = vec![false; self.nodes.len()];
        for &id in &internal[..k - 1] {
            removed[id] = true;
        }
        let mut roots = Vec::with_capacity(k);
        let mut stack = vec![self.root()];
        while let Some(x) = stack.pop() {
            match (removed[x], self.nodes[x].children) {
                (true, Some((l, r))) => {
                    stack.push(l);
                    stack.push(r);
                }
                _ => roots.push(x),
            }
        }
        roots.sort_by_key(|&r| self.nodes[r].min_leaf);
        let mut labels = vec![0; n];
        for (c, &r) in roots.iter().enumerate() {
            for v in self.leaves_under(r) {
                labels[v] = c;
            }
        }
        Ok(labels)
    }

    /// `left right height size` for each internal node in creation order.
    pub fn write_linkage<W: Write>(&self, mut out: W) -> io::Result<()> {
        for node in &self.nodes[self.n..] {
            let (l, r) = node.children.expect("internal node");
            writeln!(out, "{l} {r} {} {}", sig(node.height), node.size)?;
        }
        Ok(())
    }

    /// Nested JSON object rooted at the dendrogram root.
    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        enum Step {
            Open(usize),
            Comma,
            Close,
        }
        let mut stack = vec![Step::Open(self.root())];
        while let Some(step) = stack.pop() {
            match step {
                Step::Open(id) => {
                    let node = &self.nodes[id];
                    write!(out, "{{\"id\":{id},\"height\":{},\"size\":{}", sig(node.height), node.size)?;
                    match node.children {
                        Some((l, r)) => {
                            let level = node.level.map_or("leaf", Level::as_str);
                            write!(out, ",\"level\":\"{level}\",\"children\":[")?;
                            stack.push(Step::Close);
                            stack.push(Step::Open(r));
                            stack.push(Step::Comma);
                            stack.push(Step::Open(l));
                        }
                        None => write!(out, "}}")?,
                    }
                }
                Step::Comma => write!(out, ",")?,
                Step::Close => write!(out, "]}}")?,
            }
        }
        writeln!(out)
    }

    /// Newick tree; leaves are vertex ids, branch length is parent height
    /// minus child height.
    pub fn write_newick<W: Write>(&self, mut out: W) -> io::Result<()> {
        enum Step {
            Open(usize),
            Comma,
            Close(usize),
        }
        let branch = |id: usize| match self.parent[id] {
            Some(p) => format!(":{}", sig(self.nodes[p].height - self.nodes[id].height)),
            None => String::new(),
        };
        let mut stack = vec![Step::Open(self.root())];
        while let Some(step) = stack.pop() {
            match step {
                Step::Open(id) => match self.nodes[id].children {
                    Some((l, r)) => {
                        write!(out, "(")?;
                        stack.push(Step::Close(id));
                        stack.push(Step::Open(r));
                        stack.push(Step::Comma);
                        stack.push(Step::Open(l));
                    }
                    None => write!(out, "{id}{}", branch(id))?,
                },
                Step::Comma => write!(out, ",")?,
                Step::Close(id) => write!(out, "){}", branch(id))?,
            }
        }
        writeln!(out, ";")
    }
}

/// Builds the three-level hierarchy (heights still equal merge distances).
pub fn build_hierarchy(assignment: &Assignment, apsp: &Apsp) -> Dendrogram {
    let n = assignment.n();
    let mut d = Dendrogram::leaves(n);
    for v in 0..n {
        d.nodes[v].group = Some(assignment.group(v));
        d.nodes[v].bubble = Some(assignment.bubble[v]);
    }
    let dist = |u: usize, v: usize| apsp.get(u, v);
    let subs = subgroups(assignment);

    let intra: Vec<Vec<Merge>> = subs
        .par_iter()
        .map(|sg| {
            let leaves: Vec<Vec<usize>> = sg.members.iter().map(|&v| vec![v]).collect();
            complete_linkage_merges(&leaves, dist)
        })
        .collect();
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (sg, merges) in subs.iter().zip(&intra) {
        let root = d.apply_merges(&sg.members, merges, Level::Intra, Some(sg.group), Some(sg.bubble));
        match groups.last_mut() {
            Some((g, roots)) if *g == sg.group => roots.push(root),
            _ => groups.push((sg.group, vec![root])),
        }
    }

    let inter: Vec<Vec<Merge>> = groups
        .par_iter()
        .map(|(_, roots)| {
            let clusters: Vec<Vec<usize>> = roots.iter().map(|&r| d.leaves_under(r)).collect();
            complete_linkage_merges(&clusters, dist)
        })
        .collect();
    let group_roots: Vec<usize> = groups
        .iter()
        .zip(&inter)
        .map(|((g, roots), merges)| d.apply_merges(roots, merges, Level::InterBubble, Some(*g), None))
        .collect();

    d.complete_linkage(&group_roots, dist, Level::InterGroup, None, None);
    d
}
