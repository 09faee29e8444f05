//! Rooted bubble tree grown alongside the TMFG, and the linear-work edge
//! direction pass.
//!
//! Every insertion of `v` into face `t` creates the 4-clique bubble
//! `t ∪ {v}` and one tree edge labelled by `t`. All descendants of an edge
//! lie inside its separating triangle, so the interior weight seen from each
//! triangle corner can be accumulated bottom-up in one pass.

use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::SimMatrix;
use crate::tmfg::{Face, TmfgGraph};

/// Orientation of the edge between a node and its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Edge points from the node up to its parent.
    ToParent,
    /// Edge points from the parent down to the node.
    ToChild,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubbleNode {
    pub id: usize,
    /// The 4-clique, ascending.
    pub vertices: [usize; 4],
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Face shared with the parent; `None` for the root.
    pub sep_triangle: Option<Face>,
}

impl BubbleNode {
    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }

    /// The vertex not on the separating triangle.
    pub fn interior_vertex(&self) -> Option<usize> {
        let sep = self.sep_triangle?;
        self.vertices.iter().copied().find(|&v| !sep.contains(v))
    }
}

/// Interior and exterior attachment of one separating triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFlow {
    pub in_val: f64,
    pub out_val: f64,
}

/// Interior weight accumulated at each corner of a node's separating
/// triangle. Empty for the root.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CornerSums(Option<[(usize, f64); 3]>);

impl CornerSums {
    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn get(&self, v: usize) -> Option<f64> {
        self.0?.iter().find(|(k, _)| *k == v).map(|&(_, x)| x)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        match &self.0 {
            Some(e) => e,
            None => &[],
        }
    }

    pub fn total(&self) -> f64 {
        self.entries().iter().map(|&(_, x)| x).sum()
    }
}

#[derive(Debug, Clone)]
pub struct BubbleTree {
    nodes: Vec<BubbleNode>,
    root: usize,
    outer_face: Face,
    face_owner: HashMap<Face, usize>,
    directions: Vec<Option<Direction>>,
    flows: Vec<Option<EdgeFlow>>,
}

impl BubbleTree {
    /// Single-node tree for the seed clique. The outer face is the three
    /// lowest-id seed vertices.
    pub fn new(seed: [usize; 4]) -> Self {
        let mut vertices = seed;
        vertices.sort_unstable();
        let [a, b, c, d] = vertices;
        let face_owner = [Face::new(a, b, c), Face::new(a, b, d), Face::new(a, c, d), Face::new(b, c, d)]
            .into_iter()
            .map(|f| (f, 0))
            .collect();
        BubbleTree {
            nodes: vec![BubbleNode { id: 0, vertices, parent: None, children: Vec::new(), sep_triangle: None }],
            root: 0,
            outer_face: Face::new(a, b, c),
            face_owner,
            directions: Vec::new(),
            flows: Vec::new(),
        }
    }

    /// Records the insertion of `v` into face `t`; returns the new node id.
    ///
    /// Inserting into the outer face makes the new bubble the root and the
    /// outer face becomes `{v, a, b}` with `a < b` the two lowest corners of
    /// `t`. Otherwise the new bubble hangs under the bubble that created `t`.
    pub fn update(&mut self, v: usize, t: Face) -> Result<usize> {
        let owner = self.face_owner.remove(&t).ok_or(Error::UnknownFace(t.corners()))?;
        let id = self.nodes.len();
        let [a, b, c] = t.corners();
        let mut vertices = [a, b, c, v];
        vertices.sort_unstable();
        for f in [Face::new(v, a, b), Face::new(v, b, c), Face::new(v, a, c)] {
            self.face_owner.insert(f, id);
        }
        self.directions.clear();
        self.flows.clear();

        if t == self.outer_face {
            debug_assert_eq!(owner, self.root);
            let old_root = self.root;
            self.nodes[old_root].parent = Some(id);
            self.nodes[old_root].sep_triangle = Some(t);
            self.nodes.push(BubbleNode { id, vertices, parent: None, children: vec![old_root], sep_triangle: None });
            self.root = id;
            self.outer_face = Face::new(v, a, b);
        } else {
            self.nodes[owner].children.push(id);
            self.nodes.push(BubbleNode {
                id,
                vertices,
                parent: Some(owner),
                children: Vec::new(),
                sep_triangle: Some(t),
            });
        }
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[BubbleNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &BubbleNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn outer_face(&self) -> Face {
        self.outer_face
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().filter(|b| b.parent.is_some()).count()
    }

    /// For every vertex, the ids of bubbles containing it (ascending).
    pub fn bubbles_of_vertex(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); n];
        for b in &self.nodes {
            for &v in &b.vertices {
                out[v].push(b.id);
            }
        }
        out
    }

    /// Node ids grouped by depth, root level first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![vec![self.root]];
        loop {
            let next: Vec<usize> =
                levels.last().unwrap().iter().flat_map(|&b| self.nodes[b].children.iter().copied()).collect();
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.levels().len() - 1
    }

    /// Directions, if [`compute_directions`](Self::compute_directions) ran
    /// after the last update. Indexed by node id; `None` for the root.
    pub fn directions(&self) -> Option<&[Option<Direction>]> {
        (!self.directions.is_empty()).then_some(&self.directions[..])
    }

    pub fn direction(&self, id: usize) -> Option<Direction> {
        self.directions.get(id).copied().flatten()
    }

    pub fn flow(&self, id: usize) -> Option<EdgeFlow> {
        self.flows.get(id).copied().flatten()
    }

    /// Overrides all directions; used to build hand-made directed trees.
    pub fn set_directions(&mut self, dirs: Vec<Option<Direction>>) {
        assert_eq!(dirs.len(), self.nodes.len());
        self.directions = dirs;
        self.flows = vec![None; self.nodes.len()];
    }

    /// Targets of the directed edges leaving `id`.
    pub fn out_neighbors(&self, id: usize) -> Vec<usize> {
        let node = &self.nodes[id];
        let mut out = Vec::with_capacity(4);
        if let (Some(p), Some(Direction::ToParent)) = (node.parent, self.direction(id)) {
            out.push(p);
        }
        out.extend(node.children.iter().copied().filter(|&c| self.direction(c) == Some(Direction::ToChild)));
        out
    }

    pub fn out_degree(&self, id: usize) -> usize {
        self.out_neighbors(id).len()
    }

    /// Per-corner interior sums for one node, given its children's sums.
    fn local_corner_sums(&self, id: usize, s: &SimMatrix, child_sums: &[CornerSums]) -> CornerSums {
        let node = &self.nodes[id];
        let Some(sep) = node.sep_triangle else {
            return CornerSums::default();
        };
        let v = node.interior_vertex().expect("non-root node has an interior vertex");
        let mut r = sep.corners().map(|x| (x, s.get(x, v)));
        for &c in &node.children {
            for &(k, val) in child_sums[c].entries() {
                if let Some(slot) = r.iter_mut().find(|(x, _)| *x == k) {
                    slot.1 += val;
                }
            }
        }
        CornerSums(Some(r))
    }

    /// Interior weight at each separating-triangle corner of `id`, computed
    /// over its whole subtree with an explicit post-order walk.
    pub fn corner_sums(&self, id: usize, s: &SimMatrix) -> CornerSums {
        let mut order = Vec::new();
        let mut stack = vec![id];
        while let Some(b) = stack.pop() {
            order.push(b);
            stack.extend(self.nodes[b].children.iter().copied());
        }
        let mut sums = vec![CornerSums::default(); self.nodes.len()];
        for &b in order.iter().rev() {
            sums[b] = self.local_corner_sums(b, s, &sums);
        }
        sums[id]
    }

    /// Directs every tree edge: toward the child iff the weight from the
    /// separating triangle into its interior exceeds the weight to its
    /// exterior. Ties point toward the parent.
    pub fn compute_directions(&mut self, s: &SimMatrix, graph: &TmfgGraph) {
        const PAR_LEVEL: usize = 2048;
        let deg = graph.weighted_degrees();
        let n_nodes = self.nodes.len();
        let mut sums = vec![CornerSums::default(); n_nodes];
        let mut flows = vec![None; n_nodes];
        let mut dirs = vec![None; n_nodes];

        for level in self.levels().iter().rev() {
            let work = |&id: &usize| {
                let r = self.local_corner_sums(id, s, &sums);
                let flow = self.nodes[id].sep_triangle.map(|sep| {
                    let [x, y, z] = sep.corners();
                    let in_val = r.total();
                    let tri = s.get(x, y) + s.get(x, z) + s.get(y, z);
                    let out_val = deg[x] + deg[y] + deg[z] - in_val - 2.0 * tri;
                    EdgeFlow { in_val, out_val }
                });
                (id, r, flow)
            };
            let results: Vec<_> = if level.len() >= PAR_LEVEL {
                level.par_iter().map(work).collect()
            } else {
                level.iter().map(work).collect()
            };
            for (id, r, flow) in results {
                sums[id] = r;
                flows[id] = flow;
                dirs[id] = flow.map(|f| if f.in_val > f.out_val { Direction::ToChild } else { Direction::ToParent });
            }
        }
        self.directions = dirs;
        self.flows = flows;
    }

    /// `id vertices parent sep_triangle direction` per node.
    pub fn write_tree<W: Write>(&self, mut out: W) -> io::Result<()> {
        for b in &self.nodes {
            let [a, c, d, e] = b.vertices;
            let parent = b.parent.map_or("-".to_string(), |p| p.to_string());
            let sep = b.sep_triangle.map_or("-".to_string(), |f| f.to_string());
            let dir = match self.direction(b.id) {
                Some(Direction::ToParent) => "to_parent",
                Some(Direction::ToChild) => "to_child",
                None => "-",
            };
            writeln!(out, "{} {a},{c},{d},{e} {parent} {sep} {dir}", b.id)?;
        }
        Ok(())
    }
}
