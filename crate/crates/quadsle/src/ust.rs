//! Uniform spanning trees of a quad with (ab) and (cd) wired.
//!
//! Wilson's algorithm runs on the contracted graph: (ab) becomes the root A and
//! (cd) the node B. The first pass is the loop-erased walk from B to A, which
//! is the middle branch γ^M. The Peano curves are walks on corners between the
//! tree and the dual forest.

use crate::error::{Error, Result};
use crate::lattice::{Contracted, Face, QuadLattice, NODE_A, NODE_B};
use crate::rng::{stream, Stream};
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

/// Spanning tree containing both wired arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    /// Per primal edge.
    pub in_tree: Vec<bool>,
    /// Per contracted node: the edge toward A (None for A).
    pub parent: Vec<Option<usize>>,
}

/// The branch from X^M ∈ (ab) to Y^M ∈ (cd).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSample {
    /// Primal vertices from X^M to Y^M.
    pub gamma: Vec<usize>,
    pub x_m: usize,
    pub y_m: usize,
}

/// Complement of the tree on the dual graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualForest {
    /// Per dual edge (index into `DualLattice::edges`).
    pub in_forest: Vec<bool>,
    /// Per dual vertex: true when in the component of b*c*.
    pub bc_side: Vec<bool>,
}

/// Corner sequences of η^L (a◇ to d◇) and η^R (b◇ to c◇).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeanoPair {
    pub eta_l: Vec<usize>,
    pub eta_r: Vec<usize>,
}

/// Wilson sampler bound to one quad.
pub struct Sampler<'a> {
    q: &'a QuadLattice,
    g: Contracted,
}

impl<'a> Sampler<'a> {
    pub fn new(q: &'a QuadLattice) -> Self {
        Sampler { q, g: q.contracted() }
    }

    pub fn graph(&self) -> &Contracted {
        &self.g
    }

    /// Random walk from `start` until it hits the current tree; records last exits.
    fn walk(&self, start: usize, rng: &mut Stream, parent: &mut [Option<usize>], in_tree: &mut [bool], mut record: Option<&mut Vec<usize>>) {
        let mut u = start;
        if let Some(r) = record.as_deref_mut() {
            r.push(u);
        }
        while !in_tree[u] {
            let adj = &self.g.adj[u];
            let (v, e) = adj[rng.gen_range(0..adj.len())];
            parent[u] = Some(e);
            u = v;
            if let Some(r) = record.as_deref_mut() {
                r.push(u);
            }
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            let e = parent[u].unwrap();
            u = self.other_node(e, u);
        }
    }

    fn other_node(&self, e: usize, node: usize) -> usize {
        let ed = &self.q.edges[e];
        let (p, r) = (self.g.node_of[ed.u], self.g.node_of[ed.v]);
        if p == node {
            r
        } else {
            p
        }
    }

    fn fresh(&self) -> (Vec<Option<usize>>, Vec<bool>) {
        let mut in_tree = vec![false; self.g.n_nodes];
        in_tree[NODE_A] = true;
        (vec![None; self.g.n_nodes], in_tree)
    }

    /// Full Wilson sample.
    pub fn sample_tree(&self, rng: &mut Stream) -> SpanningTree {
        let (mut parent, mut in_tree) = self.fresh();
        self.walk(NODE_B, rng, &mut parent, &mut in_tree, None);
        for u in 2..self.g.n_nodes {
            if !in_tree[u] {
                self.walk(u, rng, &mut parent, &mut in_tree, None);
            }
        }
        self.assemble(parent)
    }

    /// First pass only: the loop-erased walk from B to A.
    pub fn sample_branch(&self, rng: &mut Stream) -> BranchSample {
        let (mut parent, mut in_tree) = self.fresh();
        self.walk(NODE_B, rng, &mut parent, &mut in_tree, None);
        branch_from_parent(self.q, &self.g, &parent)
    }

    /// First pass with the raw walk (contracted nodes) recorded.
    pub fn sample_branch_recorded(&self, rng: &mut Stream) -> (BranchSample, Vec<usize>) {
        let (mut parent, mut in_tree) = self.fresh();
        let mut rec = Vec::new();
        self.walk(NODE_B, rng, &mut parent, &mut in_tree, Some(&mut rec));
        (branch_from_parent(self.q, &self.g, &parent), rec)
    }

    fn assemble(&self, parent: Vec<Option<usize>>) -> SpanningTree {
        let mut in_tree: Vec<bool> = self.q.edges.iter().map(|e| e.role.is_wired()).collect();
        for e in parent.iter().flatten() {
            in_tree[*e] = true;
        }
        SpanningTree { in_tree, parent }
    }

    pub fn middle_branch(&self, t: &SpanningTree) -> BranchSample {
        branch_from_parent(self.q, &self.g, &t.parent)
    }
}

pub fn wilson_sample(q: &QuadLattice, rng: &mut Stream) -> SpanningTree {
    Sampler::new(q).sample_tree(rng)
}

pub fn middle_branch(q: &QuadLattice, t: &SpanningTree) -> BranchSample {
    branch_from_parent(q, &q.contracted(), &t.parent)
}

fn branch_from_parent(q: &QuadLattice, g: &Contracted, parent: &[Option<usize>]) -> BranchSample {
    let e0 = parent[NODE_B].expect("B has a parent");
    let ed = &q.edges[e0];
    let mut v = if g.node_of[ed.u] == NODE_B { ed.u } else { ed.v };
    let y_m = v;
    let mut path = vec![v];
    let mut node = NODE_B;
    while node != NODE_A {
        let e = parent[node].expect("path reaches A");
        v = q.edges[e].other(v);
        node = g.node_of[v];
        path.push(v);
    }
    path.reverse();
    BranchSample { x_m: path[0], y_m, gamma: path }
}

/// Chronological loop erasure.
pub fn loop_erase(walk: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(walk.len());
    let mut pos = std::collections::HashMap::new();
    for &v in walk {
        if let Some(&i) = pos.get(&v) {
            for w in out.drain(i + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

pub fn dual_forest(q: &QuadLattice, t: &SpanningTree) -> Result<DualForest> {
    let d = q.dual();
    let in_forest: Vec<bool> = d.edges.iter().map(|&(e, _, _)| !t.in_tree[e]).collect();
    let mut adj = vec![Vec::new(); d.n_vertices];
    let mut n_edges = 0;
    for (k, &(_, l, r)) in d.edges.iter().enumerate() {
        if in_forest[k] {
            adj[l].push(r);
            adj[r].push(l);
            n_edges += 1;
        }
    }
    if n_edges + 2 != d.n_vertices {
        return Err(Error::Internal(format!("dual forest has {n_edges} edges on {} vertices", d.n_vertices)));
    }
    let mut label = vec![u8::MAX; d.n_vertices];
    for (root, tag) in [(d.da, 0u8), (d.bc, 1u8)] {
        if label[root] != u8::MAX {
            return Err(Error::Internal("dual arcs share a component".into()));
        }
        label[root] = tag;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if label[y] == u8::MAX {
                    label[y] = tag;
                    queue.push_back(y);
                }
            }
        }
    }
    if label.contains(&u8::MAX) {
        return Err(Error::Internal("dual forest has a third component".into()));
    }
    Ok(DualForest { in_forest, bc_side: label.into_iter().map(|l| l == 1).collect() })
}

fn trace(q: &QuadLattice, in_tree: &[bool], start: usize, end: usize) -> Result<Vec<usize>> {
    let mut path = vec![start];
    let mut k = start;
    let mut e_in: Option<usize> = None;
    loop {
        let c = &q.corners[k];
        let e_out = c.edges.iter().flatten().copied().find(|&e| Some(e) != e_in);
        let Some(e) = e_out else { break };
        let next = q.corner_across(k, e, in_tree[e]).ok_or_else(|| {
            Error::Internal(format!("trace stuck at corner {k} ({c:?}) crossing edge {e} ({:?}), in_tree={}", q.edges[e], in_tree[e]))
        })?;
        path.push(next);
        e_in = Some(e);
        k = next;
        if path.len() > q.corners.len() {
            return Err(Error::Internal(format!("trace from corner {start} does not terminate")));
        }
    }
    if k != end {
        return Err(Error::Internal(format!("trace from corner {start} ended at {k}, expected {end}")));
    }
    Ok(path)
}

pub fn peano_trace(q: &QuadLattice, t: &SpanningTree) -> Result<PeanoPair> {
    let [a, b, c, d] = q.medial_marked;
    Ok(PeanoPair { eta_l: trace(q, &t.in_tree, a, d)?, eta_r: trace(q, &t.in_tree, b, c)? })
}

impl PeanoPair {
    /// Plane points of η^L: a◇, the corner points, d◇.
    pub fn points_l(&self, q: &QuadLattice) -> Vec<C64> {
        points(q, &self.eta_l, 0, 3)
    }

    pub fn points_r(&self, q: &QuadLattice) -> Vec<C64> {
        points(q, &self.eta_r, 1, 2)
    }
}

fn points(q: &QuadLattice, corners: &[usize], from: usize, to: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(corners.len() + 2);
    out.push(q.medial_corner_point(from));
    out.extend(corners.iter().map(|&k| q.corner_pos(k)));
    out.push(q.medial_corner_point(to));
    out
}

/// Boundary coordinates x = Re f(X^M) and y = Re f(Y^M). Each wired-arc vertex
/// owns the interval between the values of Re f on the faces before and after it;
/// a sample is placed uniformly inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointMap {
    intervals: Vec<Option<(f64, f64)>>,
}

impl EndpointMap {
    /// `u` gives Re f on dual vertices (cells, then d*a*, then b*c*).
    pub fn from_dual_field(q: &QuadLattice, u: &[f64]) -> Self {
        let nc = q.n_cells();
        let val = |f: Face| match f {
            Face::Cell(c) => u[c],
            Face::ExtDa => u[nc],
            Face::ExtBc => u[nc + 1],
            Face::ExtWired => f64::NAN,
        };
        let mut intervals = vec![None; q.vertices.len()];
        for (arc, before, after) in [(0usize, 0.0, 1.0), (2usize, 1.0, 0.0)] {
            let vs = q.arc_vertices(arc);
            let es = q.arc_edges(arc);
            let inner = |e: usize| {
                let ed = &q.edges[e];
                if matches!(ed.left, Face::Cell(_)) {
                    val(ed.left)
                } else {
                    val(ed.right)
                }
            };
            for (i, &v) in vs.iter().enumerate() {
                let lo = if i == 0 { before } else { inner(es[i - 1]) };
                let hi = if i == es.len() { after } else { inner(es[i]) };
                intervals[v] = Some((lo.min(hi), lo.max(hi)));
            }
        }
        EndpointMap { intervals }
    }

    /// Exact field for a rectangle: Re f = (x + 1/2)/(N+1) on the rectangle [−1/2, N+1/2]×[0, M].
    pub fn rectangle(q: &QuadLattice) -> Result<Self> {
        let (n, _) = q.rect.ok_or_else(|| Error::Config("quad is not a rectangle".into()))?;
        Ok(Self::from_dual_field(q, &rect_dual_field(q, n)))
    }

    pub fn interval(&self, v: usize) -> Option<(f64, f64)> {
        self.intervals[v]
    }

    pub fn coords(&self, b: &BranchSample, rng: &mut Stream) -> (f64, f64) {
        let place = |v: usize, r: &mut Stream| {
            let (lo, hi) = self.intervals[v].expect("wired-arc vertex");
            lo + (hi - lo) * r.gen::<f64>()
        };
        let x = place(b.x_m, rng);
        let y = place(b.y_m, rng);
        (x, y)
    }
}

/// Re f at dual vertices of an N×M rectangle quad.
pub fn rect_dual_field(q: &QuadLattice, n: usize) -> Vec<f64> {
    let mut u: Vec<f64> = q.cells.iter().map(|&(i, _)| (i as f64 + 1.0) / (n as f64 + 1.0)).collect();
    u.push(0.0);
    u.push(1.0);
    u
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EndpointSample {
    pub sample_id: u64,
    pub x: f64,
    pub y: f64,
    pub branch_len: usize,
    /// Corner count of η^L when the full tree was sampled.
    pub eta_len: Option<usize>,
}

/// `n` independent endpoint samples; sample i uses stream i of `seed`.
pub fn endpoint_batch(q: &QuadLattice, map: &EndpointMap, n: usize, seed: u64, full_tree: bool) -> Result<Vec<EndpointSample>> {
    let s = Sampler::new(q);
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let (b, eta_len) = if full_tree {
                let t = s.sample_tree(&mut rng);
                let p = peano_trace(q, &t)?;
                (s.middle_branch(&t), Some(p.eta_l.len()))
            } else {
                (s.sample_branch(&mut rng), None)
            };
            let (x, y) = map.coords(&b, &mut rng);
            Ok(EndpointSample { sample_id: i, x, y, branch_len: b.gamma.len(), eta_len })
        })
        .collect()
}

/// Hit counts of "cell on the right of η^L" (its dual component contains b*c*) for each probe cell.
pub fn crossing_counts(q: &QuadLattice, probes: &[usize], n: usize, seed: u64) -> Result<Vec<u64>> {
    let s = Sampler::new(q);
    let per: Vec<Vec<bool>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let t = s.sample_tree(&mut rng);
            let f = dual_forest(q, &t)?;
            Ok(probes.iter().map(|&c| f.bc_side[c]).collect())
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; probes.len()];
    for row in per {
        for (c, hit) in counts.iter_mut().zip(row) {
            *c += u64::from(hit);
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_rect_quad, Face};
    use crate::testutil::enumerate_trees;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashMap;

    /// Loop erasure by repeatedly removing the first closed loop.
    fn loop_erase_rescan(walk: &[usize]) -> Vec<usize> {
        let mut w = walk.to_vec();
        'outer: loop {
            for j in 0..w.len() {
                if let Some(i) = w[..j].iter().position(|&x| x == w[j]) {
                    w.drain(i..j);
                    continue 'outer;
                }
            }
            return w;
        }
    }

    #[test]
    fn loop_erase_examples() {
        assert_eq!(loop_erase(&[1, 2, 3]), vec![1, 2, 3]);
        assert_eq!(loop_erase(&[0, 1, 0, 2]), vec![0, 2]);
        assert_eq!(loop_erase(&[5]), vec![5]);
    }

    #[test]
    fn loop_erase_matches_rescan_on_long_walk() {
        let mut rng = stream(11, 0);
        let mut walk = vec![(0i32, 0i32)];
        for _ in 0..10_000 {
            let (x, y) = *walk.last().unwrap();
            let (dx, dy) = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.gen_range(0..4)];
            walk.push(((x + dx).rem_euclid(12), (y + dy).rem_euclid(12)));
        }
        let ids: Vec<usize> = walk.iter().map(|&(x, y)| (y * 12 + x) as usize).collect();
        let a = loop_erase(&ids);
        assert_eq!(a, loop_erase_rescan(&ids));
        assert_eq!(a.first(), ids.first());
        assert_eq!(a.last(), ids.last());
    }

    proptest! {
        #[test]
        fn loop_erase_simple(walk in proptest::collection::vec(0usize..6, 1..60)) {
            let out = loop_erase(&walk);
            let mut seen = std::collections::HashSet::new();
            prop_assert!(out.iter().all(|v| seen.insert(*v)));
            prop_assert_eq!(out.first(), walk.first());
            prop_assert_eq!(out.last(), walk.last());
            prop_assert_eq!(out, loop_erase_rescan(&walk));
        }
    }

    fn check_tree(q: &QuadLattice, t: &SpanningTree) {
        let g = q.contracted();
        for (e, ed) in q.edges.iter().enumerate() {
            if ed.role.is_wired() {
                assert!(t.in_tree[e]);
            }
        }
        // acyclic and spanning on the contracted graph: union-find
        let mut parent: Vec<usize> = (0..g.n_nodes).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        let mut n = 0;
        for (e, ed) in q.edges.iter().enumerate() {
            if t.in_tree[e] && !ed.role.is_wired() {
                let (a, b) = (find(&mut parent, g.node_of[ed.u]), find(&mut parent, g.node_of[ed.v]));
                assert_ne!(a, b, "cycle");
                parent[a] = b;
                n += 1;
            }
        }
        assert_eq!(n, g.n_nodes - 1);
    }

    #[test]
    fn wilson_tree_invariants() {
        let q = build_rect_quad(7, 5, 1.0).unwrap();
        let s = Sampler::new(&q);
        for i in 0..50 {
            let t = s.sample_tree(&mut stream(3, i));
            check_tree(&q, &t);
            let b = s.middle_branch(&t);
            let (ab, cd) = (q.arc_vertices(0), q.arc_vertices(2));
            assert!(ab.contains(&b.x_m) && cd.contains(&b.y_m));
            for v in &b.gamma[1..b.gamma.len() - 1] {
                assert!(!ab.contains(v) && !cd.contains(v));
            }
            // removing any path edge separates the arcs
            for w in b.gamma.windows(2) {
                let e = q.edge_between(w[0], w[1]).unwrap();
                assert!(t.in_tree[e]);
                let mut cut = t.clone();
                cut.in_tree[e] = false;
                assert!(!connects_arcs(&q, &cut.in_tree));
            }
            let f = dual_forest(&q, &t).unwrap();
            let d = q.dual();
            assert!(!f.bc_side[d.da] && f.bc_side[d.bc]);
        }
    }

    fn connects_arcs(q: &QuadLattice, in_tree: &[bool]) -> bool {
        let g = q.contracted();
        let mut seen = vec![false; g.n_nodes];
        let mut stack = vec![NODE_A];
        seen[NODE_A] = true;
        while let Some(x) = stack.pop() {
            for &(y, e) in &g.adj[x] {
                if in_tree[e] && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen[NODE_B]
    }

    #[test]
    fn first_pass_is_loop_erased_walk() {
        let q = build_rect_quad(9, 6, 1.0).unwrap();
        let s = Sampler::new(&q);
        for i in 0..30 {
            let (b, walk) = s.sample_branch_recorded(&mut stream(5, i));
            let erased = loop_erase(&walk);
            let nodes: Vec<usize> = b.gamma.iter().rev().map(|&v| s.graph().node_of[v]).collect();
            assert_eq!(erased, nodes);
            // same stream gives the same branch through the full sampler
            let t = s.sample_tree(&mut stream(5, i));
            assert_eq!(s.middle_branch(&t), b);
        }
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_trees(&build_rect_quad(2, 2, 1.0).unwrap()).len(), 45);
        assert_eq!(enumerate_trees(&build_rect_quad(2, 3, 1.0).unwrap()).len(), 576);
    }

    #[test]
    fn wilson_uniform_on_two_by_two() {
        let q = build_rect_quad(2, 2, 1.0).unwrap();
        let trees = enumerate_trees(&q);
        let index: HashMap<Vec<bool>, usize> = trees.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let s = Sampler::new(&q);
        let n = 100_000u64;
        let mut counts = vec![0u64; trees.len()];
        for i in 0..n {
            let t = s.sample_tree(&mut stream(21, i));
            counts[index[&t.in_tree]] += 1;
        }
        let e = n as f64 / trees.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 44 degrees of freedom, 1% critical value
        assert!(chi2 < 68.7, "chi2 = {chi2}");
    }

    #[test]
    fn peano_hand_traced_two_by_two() {
        let q = build_rect_quad(2, 2, 1.0).unwrap();
        let v = |x: i32, y: i32| q.vertex_at(x, y).unwrap();
        let mut in_tree: Vec<bool> = q.edges.iter().map(|e| e.role.is_wired()).collect();
        for (p, r) in [((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (2, 1)), ((2, 1), (2, 2))] {
            in_tree[q.edge_between(v(p.0, p.1), v(r.0, r.1)).unwrap()] = true;
        }
        let t = SpanningTree { in_tree, parent: Vec::new() };
        let p = peano_trace(&q, &t).unwrap();
        let cell = |i: i32, j: i32| Face::Cell(q.cell_at(i, j).unwrap());
        let expected = [
            ((0, 0), Face::ExtDa),
            ((0, 1), Face::ExtDa),
            ((0, 1), cell(0, 1)),
            ((1, 1), cell(0, 1)),
            ((1, 1), cell(1, 1)),
            ((2, 1), cell(1, 1)),
            ((2, 2), cell(1, 1)),
            ((1, 2), cell(1, 1)),
            ((1, 2), cell(0, 1)),
            ((0, 2), cell(0, 1)),
            ((0, 2), Face::ExtDa),
        ];
        let got: Vec<((i32, i32), Face)> = p.eta_l.iter().map(|&k| (q.vertices[q.corners[k].vertex], q.corners[k].face)).collect();
        assert_eq!(got, expected);
        assert_eq!(p.eta_l.len() + p.eta_r.len(), q.corners.len());
    }

    #[test]
    fn peano_pair_properties() {
        let q = build_rect_quad(8, 6, 1.0).unwrap();
        let s = Sampler::new(&q);
        for i in 0..40 {
            let t = s.sample_tree(&mut stream(9, i));
            let p = peano_trace(&q, &t).unwrap();
            // every corner used exactly once by the pair
            let mut used = vec![0; q.corners.len()];
            for &k in p.eta_l.iter().chain(&p.eta_r) {
                used[k] += 1;
            }
            assert!(used.iter().all(|&u| u == 1));
            // no step crosses a tree edge or a dual-forest edge
            for w in p.eta_l.windows(2).chain(p.eta_r.windows(2)) {
                let (c0, c1) = (&q.corners[w[0]], &q.corners[w[1]]);
                if c0.face == c1.face {
                    let e = q.edge_between(c0.vertex, c1.vertex).unwrap();
                    assert!(t.in_tree[e], "crossed a dual-forest edge");
                } else {
                    assert_eq!(c0.vertex, c1.vertex);
                    let e = c0.edges.iter().flatten().find(|e| c1.edges.contains(&Some(**e))).unwrap();
                    assert!(!t.in_tree[*e], "crossed a tree edge");
                }
            }
            // primal vertices touched by both curves are the branch
            let touched = |c: &[usize]| c.iter().map(|&k| q.corners[k].vertex).collect::<std::collections::HashSet<_>>();
            let both: std::collections::HashSet<usize> = touched(&p.eta_l).intersection(&touched(&p.eta_r)).copied().collect();
            let branch: std::collections::HashSet<usize> = s.middle_branch(&t).gamma.into_iter().collect();
            assert_eq!(both, branch);
            // faces on η^L are on the d*a* side
            let f = dual_forest(&q, &t).unwrap();
            for &k in &p.eta_l {
                if let Face::Cell(c) = q.corners[k].face {
                    assert!(!f.bc_side[c]);
                }
            }
        }
    }

    #[test]
    fn endpoint_batch_deterministic_and_in_range() {
        let q = build_rect_quad(10, 10, 0.1).unwrap();
        let map = EndpointMap::rectangle(&q).unwrap();
        let a = endpoint_batch(&q, &map, 200, 4, false).unwrap();
        let b = endpoint_batch(&q, &map, 200, 4, false).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.x > 0.0 && s.x < 1.0 && s.y > 0.0 && s.y < 1.0));
        let c = endpoint_batch(&q, &map, 20, 4, true).unwrap();
        assert!(c.iter().all(|s| s.eta_len.is_some()));
    }

    #[test]
    fn endpoint_intervals_tile_the_arc() {
        let q = build_rect_quad(5, 3, 1.0).unwrap();
        let map = EndpointMap::rectangle(&q).unwrap();
        for (k, v) in q.arc_vertices(0).into_iter().enumerate() {
            let (lo, hi) = map.interval(v).unwrap();
            assert!((lo - k as f64 / 6.0).abs() < 1e-15 && (hi - (k + 1) as f64 / 6.0).abs() < 1e-15);
        }
        for v in q.arc_vertices(2) {
            let (lo, hi) = map.interval(v).unwrap();
            let x = q.vertices[v].0 as f64;
            assert!((lo - x / 6.0).abs() < 1e-15 && (hi - (x + 1.0) / 6.0).abs() < 1e-15);
        }
    }
}
