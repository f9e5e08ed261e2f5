//! Discrete quads on the square lattice.
//!
//! A quad is a simply connected union of unit cells with four marked boundary
//! vertices a, b, c, d in counterclockwise order. The boundary arcs (ab) and
//! (cd) are wired; (bc) and (da) are free. On the dual side every cell is a
//! dual vertex and the exterior along each free arc is a single dual vertex
//! (the dual-wired arcs b*c* and d*a*). Wired boundary edges have no dual.
//!
//! Corners are pairs (primal vertex, adjacent face). They are the medial
//! edges: each cell has four, and each exterior free-arc face has one per arc
//! vertex. The Peano curves are walks on corners.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::collections::VecDeque;

/// Role of a primal edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum ArcRole {
    WiredAb,
    FreeBc,
    WiredCd,
    FreeDa,
    Interior,
}

impl ArcRole {
    pub fn is_wired(self) -> bool {
        matches!(self, ArcRole::WiredAb | ArcRole::WiredCd)
    }
}

/// A face next to a primal edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Cell(usize),
    /// Exterior along the free arc (da); dual vertex d*a*.
    ExtDa,
    /// Exterior along the free arc (bc); dual vertex b*c*.
    ExtBc,
    /// Exterior along a wired arc; not a dual vertex.
    ExtWired,
}

/// Primal edge oriented in the +x or +y direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub role: ArcRole,
    pub left: Face,
    pub right: Face,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn other_face(&self, f: Face) -> Face {
        if f == self.left {
            self.right
        } else {
            self.left
        }
    }
}

/// Corner of the medial lattice: a primal vertex together with one face at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub vertex: usize,
    pub face: Face,
    /// The two edges bounding the corner; `None` marks the exterior gap at a◇, b◇, c◇, d◇.
    pub edges: [Option<usize>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadLattice {
    pub delta: f64,
    /// Mask size in cells.
    pub width: usize,
    pub height: usize,
    pub cells: Vec<(i32, i32)>,
    pub vertices: Vec<(i32, i32)>,
    pub edges: Vec<Edge>,
    /// Per vertex: incident edges in the order E, N, W, S.
    pub vertex_edges: Vec<[Option<usize>; 4]>,
    /// Vertex ids of a, b, c, d.
    pub marked: [usize; 4],
    /// Boundary vertices counterclockwise starting at a.
    pub boundary: Vec<usize>,
    /// Positions of a, b, c, d in `boundary`.
    pub marked_pos: [usize; 4],
    pub corners: Vec<Corner>,
    /// Corner ids of a◇, b◇, c◇, d◇.
    pub medial_marked: [usize; 4],
    /// Rectangle dimensions (N, M) when built as a rectangle.
    pub rect: Option<(usize, usize)>,
    cell_grid: Vec<Option<usize>>,
    vertex_grid: Vec<Option<usize>>,
    /// Per edge: [corner at u on left, at v on left, at u on right, at v on right].
    edge_corners: Vec<[Option<usize>; 4]>,
}

/// Dual graph: cells, then d*a*, then b*c*.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLattice {
    pub n_vertices: usize,
    pub da: usize,
    pub bc: usize,
    /// (primal edge id, dual endpoints).
    pub edges: Vec<(usize, usize, usize)>,
    /// Dual edge ids incident to d*a* and b*c*.
    pub da_arc: Vec<usize>,
    pub bc_arc: Vec<usize>,
}

/// Graph obtained by contracting (ab) to A = 0 and (cd) to B = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Contracted {
    pub n_nodes: usize,
    /// Primal vertex → node.
    pub node_of: Vec<usize>,
    /// Node → representative primal vertex (None for A, B).
    pub vertex_of: Vec<Option<usize>>,
    /// Adjacency: (neighbor node, primal edge id). Wired-arc edges are omitted.
    pub adj: Vec<Vec<(usize, usize)>>,
}

pub const NODE_A: usize = 0;
pub const NODE_B: usize = 1;

const DIRS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

impl QuadLattice {
    pub fn cell_at(&self, i: i32, j: i32) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.width as i32 || j >= self.height as i32 {
            return None;
        }
        self.cell_grid[j as usize * self.width + i as usize]
    }

    pub fn vertex_at(&self, x: i32, y: i32) -> Option<usize> {
        if x < 0 || y < 0 || x > self.width as i32 || y > self.height as i32 {
            return None;
        }
        self.vertex_grid[y as usize * (self.width + 1) + x as usize]
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Position of a vertex in the plane (lattice units times δ).
    pub fn vertex_pos(&self, v: usize) -> C64 {
        let (x, y) = self.vertices[v];
        C64::new(x as f64, y as f64) * self.delta
    }

    pub fn cell_center(&self, c: usize) -> C64 {
        let (i, j) = self.cells[c];
        C64::new(i as f64 + 0.5, j as f64 + 0.5) * self.delta
    }

    pub fn edge_midpoint(&self, e: usize) -> C64 {
        let ed = &self.edges[e];
        (self.vertex_pos(ed.u) + self.vertex_pos(ed.v)) * 0.5
    }

    /// Outward unit normal of a boundary edge.
    fn outward_normal(&self, e: usize) -> C64 {
        let ed = &self.edges[e];
        let horiz = self.vertices[ed.v].1 == self.vertices[ed.u].1;
        let left_out = !matches!(ed.left, Face::Cell(_));
        match (horiz, left_out) {
            (true, true) => C64::new(0.0, 1.0),
            (true, false) => C64::new(0.0, -1.0),
            (false, true) => C64::new(-1.0, 0.0),
            (false, false) => C64::new(1.0, 0.0),
        }
    }

    /// Plane position of a corner, halfway between its vertex and face.
    pub fn corner_pos(&self, k: usize) -> C64 {
        let c = &self.corners[k];
        let v = self.vertex_pos(c.vertex);
        match c.face {
            Face::Cell(f) => (v + self.cell_center(f)) * 0.5,
            _ => {
                let mut n = C64::new(0.0, 0.0);
                let mut cnt = 0.0;
                for e in c.edges.iter().flatten() {
                    n += self.outward_normal(*e);
                    cnt += 1.0;
                }
                v + n / cnt * (0.25 * self.delta)
            }
        }
    }

    /// Corner of the medial quad: a◇ = a + n/2 with n the outward normal of the adjacent free edge.
    pub fn medial_corner_point(&self, which: usize) -> C64 {
        let k = self.medial_marked[which];
        let c = &self.corners[k];
        let e = c.edges.iter().flatten().next().copied().unwrap();
        self.vertex_pos(c.vertex) + self.outward_normal(e) * (0.5 * self.delta)
    }

    /// Edges of the boundary arc starting at marked point `from` (0=a,…,3=d), in walk order.
    pub fn arc_edges(&self, from: usize) -> Vec<usize> {
        let n = self.boundary.len();
        let start = self.marked_pos[from];
        let end = if from == 3 { n } else { self.marked_pos[from + 1] };
        (start..end)
            .map(|i| {
                let (p, q) = (self.boundary[i], self.boundary[(i + 1) % n]);
                self.edge_between(p, q).expect("boundary edge")
            })
            .collect()
    }

    /// Vertices of the arc from marked point `from` to the next one, inclusive.
    pub fn arc_vertices(&self, from: usize) -> Vec<usize> {
        let n = self.boundary.len();
        let start = self.marked_pos[from];
        let end = if from == 3 { n } else { self.marked_pos[from + 1] };
        (start..=end).map(|i| self.boundary[i % n]).collect()
    }

    pub fn edge_between(&self, p: usize, q: usize) -> Option<usize> {
        self.vertex_edges[p].iter().flatten().copied().find(|&e| self.edges[e].other(p) == q)
    }

    /// Corner at vertex `v` on the given side of edge `e`.
    pub fn corner_of(&self, e: usize, v: usize, left: bool) -> Option<usize> {
        let ed = &self.edges[e];
        let at_u = v == ed.u;
        let idx = match (left, at_u) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        self.edge_corners[e][idx]
    }

    /// Corner reached from corner `k` across edge `e` (which must bound `k`).
    pub fn corner_across(&self, k: usize, e: usize, e_in_tree: bool) -> Option<usize> {
        let c = &self.corners[k];
        let ed = &self.edges[e];
        let on_left = ed.left == c.face;
        if e_in_tree {
            self.corner_of(e, ed.other(c.vertex), on_left)
        } else {
            self.corner_of(e, c.vertex, !on_left)
        }
    }

    pub fn dual(&self) -> DualLattice {
        dual_of(self)
    }

    pub fn contracted(&self) -> Contracted {
        let nv = self.vertices.len();
        let mut node_of = vec![usize::MAX; nv];
        for &e in &self.arc_edges(0) {
            node_of[self.edges[e].u] = NODE_A;
            node_of[self.edges[e].v] = NODE_A;
        }
        for &e in &self.arc_edges(2) {
            node_of[self.edges[e].u] = NODE_B;
            node_of[self.edges[e].v] = NODE_B;
        }
        let mut vertex_of = vec![None, None];
        for (v, slot) in node_of.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = vertex_of.len();
                vertex_of.push(Some(v));
            }
        }
        let n_nodes = vertex_of.len();
        let mut adj = vec![Vec::new(); n_nodes];
        for (e, ed) in self.edges.iter().enumerate() {
            if ed.role.is_wired() {
                continue;
            }
            let (p, q) = (node_of[ed.u], node_of[ed.v]);
            adj[p].push((q, e));
            adj[q].push((p, e));
        }
        Contracted { n_nodes, node_of, vertex_of, adj }
    }

    /// Same domain with marked points (a, b, c, d) replaced by `marked` (vertex coordinates).
    pub fn with_marked(&self, marked: [(i32, i32); 4]) -> Result<QuadLattice> {
        let mask = self.mask();
        build_mask_quad(&mask, marked, self.delta)
    }

    pub fn mask(&self) -> Mask {
        Mask { width: self.width, height: self.height, cells: self.cell_grid.iter().map(|c| c.is_some()).collect() }
    }

    pub fn marked_coords(&self) -> [(i32, i32); 4] {
        self.marked.map(|v| self.vertices[v])
    }

    /// Mirror image x ↦ W − x relabeled (d, c, b, a) so that the order stays counterclockwise.
    pub fn reversed(&self) -> Result<QuadLattice> {
        let w = self.width;
        let m = self.mask();
        let mut cells = vec![false; m.cells.len()];
        for j in 0..m.height {
            for i in 0..w {
                cells[j * w + (w - 1 - i)] = m.cells[j * w + i];
            }
        }
        let mirrored = Mask { width: w, height: m.height, cells };
        let mk = self.marked_coords();
        let fl = |p: (i32, i32)| (w as i32 - p.0, p.1);
        let mut q = build_mask_quad(&mirrored, [fl(mk[3]), fl(mk[2]), fl(mk[1]), fl(mk[0])], self.delta)?;
        q.rect = self.rect;
        Ok(q)
    }

    /// The four marked points in the order (b, c, d, a): wired and free roles swap.
    pub fn rotated(&self) -> Result<QuadLattice> {
        let mk = self.marked_coords();
        self.with_marked([mk[1], mk[2], mk[3], mk[0]])
    }

    /// Continuum rectangle approximated by a rectangular quad, in lattice units:
    /// [−1/2, N+1/2] × [0, M], modulus M/(N+1).
    pub fn rect_modulus(&self) -> Option<f64> {
        self.rect.map(|(n, m)| m as f64 / (n as f64 + 1.0))
    }

    /// Medial boundary points: a◇, wired-edge midpoints, free-arc exterior points, …
    pub fn medial_walk(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for arc in 0..4 {
            out.push(self.medial_corner_point(arc));
            if arc % 2 == 0 {
                for e in self.arc_edges(arc) {
                    out.push(self.edge_midpoint(e));
                }
            } else {
                let vs = self.arc_vertices(arc);
                let es = self.arc_edges(arc);
                for i in 1..vs.len() - 1 {
                    let n = self.outward_normal(es[i - 1]) + self.outward_normal(es[i]);
                    out.push(self.vertex_pos(vs[i]) + n * (0.25 * self.delta));
                }
            }
        }
        out
    }
}

/// Boolean cell mask; row-major with row 0 at the bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn full(width: usize, height: usize) -> Self {
        Mask { width, height, cells: vec![true; width * height] }
    }

    pub fn get(&self, i: i32, j: i32) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height && self.cells[j as usize * self.width + i as usize]
    }

    /// Parses the text format: a header `a=x,y b=x,y c=x,y d=x,y` followed by
    /// rows of `#` (cell) and `.` (no cell), top row first. Blank lines and
    /// lines starting with `;` are ignored.
    pub fn parse(text: &str) -> Result<(Mask, [(i32, i32); 4])> {
        let mut lines = text.lines().map(str::trim_end).filter(|l| !l.trim().is_empty() && !l.starts_with(';'));
        let header = lines.next().ok_or_else(|| Error::Config("empty mask file".into()))?;
        let mut marked = [None; 4];
        for tok in header.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(|| Error::Config(format!("bad header token {tok:?}")))?;
            let idx = match key {
                "a" => 0,
                "b" => 1,
                "c" => 2,
                "d" => 3,
                _ => return Err(Error::Config(format!("unknown marked point {key:?}"))),
            };
            let (x, y) = val.split_once(',').ok_or_else(|| Error::Config(format!("bad coordinate {val:?}")))?;
            let p = (
                x.trim().parse::<i32>().map_err(|e| Error::Config(format!("{val:?}: {e}")))?,
                y.trim().parse::<i32>().map_err(|e| Error::Config(format!("{val:?}: {e}")))?,
            );
            marked[idx] = Some(p);
        }
        let marked = [0, 1, 2, 3].map(|i| marked[i]);
        if marked.iter().any(Option::is_none) {
            return Err(Error::Config("header must give a, b, c and d".into()));
        }
        let marked = marked.map(Option::unwrap);
        let rows: Vec<&str> = lines.collect();
        if rows.is_empty() {
            return Err(Error::Config("mask has no rows".into()));
        }
        let width = rows[0].len();
        let height = rows.len();
        let mut cells = vec![false; width * height];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Config(format!("row {r} has length {} != {width}", row.len())));
            }
            let j = height - 1 - r;
            for (i, ch) in row.chars().enumerate() {
                cells[j * width + i] = match ch {
                    '#' => true,
                    '.' => false,
                    _ => return Err(Error::Config(format!("unexpected character {ch:?}"))),
                };
            }
        }
        Ok((Mask { width, height, cells }, marked))
    }

    pub fn to_text(&self, marked: [(i32, i32); 4]) -> String {
        let mut s = format!(
            "a={},{} b={},{} c={},{} d={},{}\n",
            marked[0].0, marked[0].1, marked[1].0, marked[1].1, marked[2].0, marked[2].1, marked[3].0, marked[3].1
        );
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                s.push(if self.cells[j * self.width + i] { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}

/// [0,N]×[0,M] with a=(0,0), b=(N,0), c=(N,M), d=(0,M).
pub fn build_rect_quad(n: usize, m: usize, delta: f64) -> Result<QuadLattice> {
    if n < 2 || m < 2 {
        return Err(Error::Config(format!("rectangle {n}×{m} needs N, M ≥ 2")));
    }
    let (ni, mi) = (n as i32, m as i32);
    let mut q = build_mask_quad(&Mask::full(n, m), [(0, 0), (ni, 0), (ni, mi), (0, mi)], delta)?;
    q.rect = Some((n, m));
    Ok(q)
}

pub fn build_mask_quad(mask: &Mask, marked: [(i32, i32); 4], delta: f64) -> Result<QuadLattice> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("mesh {delta} must be positive")));
    }
    let (w, h) = (mask.width, mask.height);
    if mask.cells.len() != w * h {
        return Err(Error::Config("mask size mismatch".into()));
    }
    check_topology(mask)?;

    let mut cells = Vec::new();
    let mut cell_grid = vec![None; w * h];
    for j in 0..h {
        for i in 0..w {
            if mask.cells[j * w + i] {
                cell_grid[j * w + i] = Some(cells.len());
                cells.push((i as i32, j as i32));
            }
        }
    }
    let cell_at = |i: i32, j: i32| -> Option<usize> {
        if mask.get(i, j) {
            cell_grid[j as usize * w + i as usize]
        } else {
            None
        }
    };

    let mut vertices = Vec::new();
    let mut vertex_grid = vec![None; (w + 1) * (h + 1)];
    for y in 0..=h as i32 {
        for x in 0..=w as i32 {
            let touches = mask.get(x - 1, y - 1) || mask.get(x, y - 1) || mask.get(x - 1, y) || mask.get(x, y);
            if touches {
                vertex_grid[y as usize * (w + 1) + x as usize] = Some(vertices.len());
                vertices.push((x, y));
            }
        }
    }
    let vid = |x: i32, y: i32| vertex_grid[y as usize * (w + 1) + x as usize];

    // edges with left/right cells; roles are filled in after the boundary walk
    let mut edges: Vec<Edge> = Vec::new();
    let mut vertex_edges = vec![[None; 4]; vertices.len()];
    let placeholder = |c: Option<usize>| c.map(Face::Cell).unwrap_or(Face::ExtWired);
    for (vi, &(x, y)) in vertices.iter().enumerate() {
        // +x edge: left = cell above (x, y), right = cell below (x, y−1)
        let (above, below) = (cell_at(x, y), cell_at(x, y - 1));
        if above.is_some() || below.is_some() {
            let u2 = vid(x + 1, y).expect("edge endpoint");
            let e = edges.len();
            edges.push(Edge { u: vi, v: u2, role: ArcRole::Interior, left: placeholder(above), right: placeholder(below) });
            vertex_edges[vi][0] = Some(e);
            vertex_edges[u2][2] = Some(e);
        }
        // +y edge: left = cell (x−1, y), right = cell (x, y)
        let (lc, rc) = (cell_at(x - 1, y), cell_at(x, y));
        if lc.is_some() || rc.is_some() {
            let u2 = vid(x, y + 1).expect("edge endpoint");
            let e = edges.len();
            edges.push(Edge { u: vi, v: u2, role: ArcRole::Interior, left: placeholder(lc), right: placeholder(rc) });
            vertex_edges[vi][1] = Some(e);
            vertex_edges[u2][3] = Some(e);
        }
    }

    // counterclockwise boundary successor: interior on the left
    let mut succ = vec![usize::MAX; vertices.len()];
    for ed in &edges {
        let lc = matches!(ed.left, Face::Cell(_));
        let rc = matches!(ed.right, Face::Cell(_));
        if lc && rc {
            continue;
        }
        let (from, to) = if lc { (ed.u, ed.v) } else { (ed.v, ed.u) };
        if succ[from] != usize::MAX {
            return Err(Error::Topology(format!("boundary pinches at vertex {:?}", vertices[from])));
        }
        succ[from] = to;
    }
    let marked_ids = marked.map(|(x, y)| {
        if x < 0 || y < 0 || x > w as i32 || y > h as i32 {
            None
        } else {
            vid(x, y)
        }
    });
    for (k, id) in marked_ids.iter().enumerate() {
        match id {
            Some(v) if succ[*v] != usize::MAX => {}
            _ => return Err(Error::Topology(format!("marked point {:?} is not a boundary vertex", marked[k]))),
        }
    }
    let marked_ids = marked_ids.map(Option::unwrap);
    for i in 0..4 {
        for j in 0..i {
            if marked_ids[i] == marked_ids[j] {
                return Err(Error::Order("marked points must be distinct".into()));
            }
        }
    }
    let n_boundary = succ.iter().filter(|&&s| s != usize::MAX).count();
    let mut boundary = vec![marked_ids[0]];
    let mut cur = succ[marked_ids[0]];
    while cur != marked_ids[0] {
        boundary.push(cur);
        cur = succ[cur];
        if boundary.len() > n_boundary {
            return Err(Error::Topology("boundary walk does not close".into()));
        }
    }
    if boundary.len() != n_boundary {
        return Err(Error::Topology("boundary is not a single cycle".into()));
    }
    let pos_of = |v: usize| boundary.iter().position(|&b| b == v).unwrap();
    let marked_pos = marked_ids.map(pos_of);
    if !(marked_pos[0] < marked_pos[1] && marked_pos[1] < marked_pos[2] && marked_pos[2] < marked_pos[3]) {
        return Err(Error::Order("marked points are not in counterclockwise order".into()));
    }

    let mut q = QuadLattice {
        delta,
        width: w,
        height: h,
        cells,
        vertices,
        edges,
        vertex_edges,
        marked: marked_ids,
        boundary,
        marked_pos,
        corners: Vec::new(),
        medial_marked: [0; 4],
        rect: None,
        cell_grid,
        vertex_grid,
        edge_corners: Vec::new(),
    };
    let roles = [ArcRole::WiredAb, ArcRole::FreeBc, ArcRole::WiredCd, ArcRole::FreeDa];
    let ext = [Face::ExtWired, Face::ExtBc, Face::ExtWired, Face::ExtDa];
    for arc in 0..4 {
        for e in q.arc_edges(arc) {
            let ed = &mut q.edges[e];
            ed.role = roles[arc];
            if !matches!(ed.left, Face::Cell(_)) {
                ed.left = ext[arc];
            } else {
                ed.right = ext[arc];
            }
        }
    }
    build_corners(&mut q);
    Ok(q)
}

fn check_topology(mask: &Mask) -> Result<()> {
    let (w, h) = (mask.width as i32, mask.height as i32);
    let total = mask.cells.iter().filter(|&&c| c).count();
    if total == 0 {
        return Err(Error::Topology("empty mask".into()));
    }
    let start = mask.cells.iter().position(|&c| c).unwrap();
    let start = ((start % mask.width) as i32, (start / mask.width) as i32);
    let mut seen = vec![false; mask.cells.len()];
    let mut queue = VecDeque::from([start]);
    seen[(start.1 * w + start.0) as usize] = true;
    let mut count = 0;
    while let Some((i, j)) = queue.pop_front() {
        count += 1;
        for (dx, dy) in DIRS {
            let (a, b) = (i + dx, j + dy);
            if mask.get(a, b) && !seen[(b * w + a) as usize] {
                seen[(b * w + a) as usize] = true;
                queue.push_back((a, b));
            }
        }
    }
    if count != total {
        return Err(Error::Topology("mask is not connected".into()));
    }
    // complement flood from outside the padded box
    let (pw, ph) = (w + 2, h + 2);
    let mut out = vec![false; (pw * ph) as usize];
    let mut queue = VecDeque::from([(-1, -1)]);
    out[0] = true;
    let mut outside = 0;
    while let Some((i, j)) = queue.pop_front() {
        outside += 1;
        for (dx, dy) in DIRS {
            let (a, b) = (i + dx, j + dy);
            if a < -1 || b < -1 || a > w || b > h || mask.get(a, b) {
                continue;
            }
            let k = ((b + 1) * pw + (a + 1)) as usize;
            if !out[k] {
                out[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    if outside as usize + total != (pw * ph) as usize {
        return Err(Error::Topology("mask has a hole".into()));
    }
    // diagonal pinch vertices
    for y in 0..=h {
        for x in 0..=w {
            let q = [mask.get(x - 1, y - 1), mask.get(x, y - 1), mask.get(x, y), mask.get(x - 1, y)];
            if (q[0] && q[2] && !q[1] && !q[3]) || (q[1] && q[3] && !q[0] && !q[2]) {
                return Err(Error::Topology(format!("cells touch diagonally at vertex ({x}, {y})")));
            }
        }
    }
    Ok(())
}

fn build_corners(q: &mut QuadLattice) {
    let mut corners = Vec::new();
    // cell corners: bottom-left, bottom-right, top-right, top-left
    for (ci, &(i, j)) in q.cells.iter().enumerate() {
        let bl = q.vertex_at(i, j).unwrap();
        let br = q.vertex_at(i + 1, j).unwrap();
        let tr = q.vertex_at(i + 1, j + 1).unwrap();
        let tl = q.vertex_at(i, j + 1).unwrap();
        let bottom = q.vertex_edges[bl][0].unwrap();
        let left = q.vertex_edges[bl][1].unwrap();
        let right = q.vertex_edges[br][1].unwrap();
        let top = q.vertex_edges[tl][0].unwrap();
        let f = Face::Cell(ci);
        corners.push(Corner { vertex: bl, face: f, edges: [Some(bottom), Some(left)] });
        corners.push(Corner { vertex: br, face: f, edges: [Some(bottom), Some(right)] });
        corners.push(Corner { vertex: tr, face: f, edges: [Some(right), Some(top)] });
        corners.push(Corner { vertex: tl, face: f, edges: [Some(top), Some(left)] });
    }
    // free-arc corners in walk order; the first and last carry the exterior gap
    let mut medial_marked = [0; 4];
    for (arc, face) in [(1usize, Face::ExtBc), (3usize, Face::ExtDa)] {
        let vs = q.arc_vertices(arc);
        let es = q.arc_edges(arc);
        for (k, &v) in vs.iter().enumerate() {
            let prev = if k > 0 { Some(es[k - 1]) } else { None };
            let next = if k < es.len() { Some(es[k]) } else { None };
            if k == 0 {
                medial_marked[arc] = corners.len();
            }
            if k == vs.len() - 1 {
                medial_marked[(arc + 1) % 4] = corners.len();
            }
            corners.push(Corner { vertex: v, face, edges: [prev, next] });
        }
    }
    let mut edge_corners = vec![[None; 4]; q.edges.len()];
    for (k, c) in corners.iter().enumerate() {
        for e in c.edges.iter().flatten() {
            let ed = &q.edges[*e];
            let left = ed.left == c.face;
            debug_assert!(left || ed.right == c.face);
            let at_u = ed.u == c.vertex;
            let idx = match (left, at_u) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            edge_corners[*e][idx] = Some(k);
        }
    }
    q.corners = corners;
    q.medial_marked = medial_marked;
    q.edge_corners = edge_corners;
}

pub fn dual_of(q: &QuadLattice) -> DualLattice {
    let nc = q.n_cells();
    let (da, bc) = (nc, nc + 1);
    let id = |f: Face| match f {
        Face::Cell(c) => Some(c),
        Face::ExtDa => Some(da),
        Face::ExtBc => Some(bc),
        Face::ExtWired => None,
    };
    let mut edges = Vec::new();
    let mut da_arc = Vec::new();
    let mut bc_arc = Vec::new();
    for (e, ed) in q.edges.iter().enumerate() {
        if let (Some(l), Some(r)) = (id(ed.left), id(ed.right)) {
            if l == da || r == da {
                da_arc.push(edges.len());
            }
            if l == bc || r == bc {
                bc_arc.push(edges.len());
            }
            edges.push((e, l, r));
        }
    }
    DualLattice { n_vertices: nc + 2, da, bc, edges, da_arc, bc_arc }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_hexomino() -> (Mask, [(i32, i32); 4]) {
        Mask::parse("a=0,0 b=2,0 c=1,4 d=0,4\n#.\n#.\n##\n##\n").unwrap()
    }

    #[test]
    fn two_by_two_counts() {
        let q = build_rect_quad(2, 2, 1.0).unwrap();
        assert_eq!(q.vertices.len(), 9);
        assert_eq!(q.edges.len(), 12);
        let count = |r: ArcRole| q.edges.iter().filter(|e| e.role == r).count();
        assert_eq!(count(ArcRole::WiredAb), 2);
        assert_eq!(count(ArcRole::FreeBc), 2);
        assert_eq!(count(ArcRole::WiredCd), 2);
        assert_eq!(count(ArcRole::FreeDa), 2);
        assert_eq!(count(ArcRole::Interior), 4);
        assert_eq!(q.corners.len(), 4 * 4 + 3 + 3);
        let d = q.dual();
        // 4 cells + 2 exterior, dual edges cross 4 interior + 4 free edges
        assert_eq!(d.n_vertices, 6);
        assert_eq!(d.edges.len(), 8);
        assert_eq!(d.da_arc.len(), 2);
        assert_eq!(d.bc_arc.len(), 2);
    }

    #[test]
    fn euler_relation_and_arc_partition() {
        for q in [build_rect_quad(5, 3, 1.0).unwrap(), { let (m, mk) = l_hexomino(); build_mask_quad(&m, mk, 1.0).unwrap() }] {
            let (v, e, f) = (q.vertices.len() as i64, q.edges.len() as i64, q.n_cells() as i64 + 1);
            assert_eq!(v - e + f, 2);
            let boundary_edges: usize = (0..4).map(|a| q.arc_edges(a).len()).sum();
            assert_eq!(boundary_edges, q.boundary.len());
            let non_interior = q.edges.iter().filter(|e| e.role != ArcRole::Interior).count();
            assert_eq!(non_interior, boundary_edges);
            // every interior edge crossed by exactly one dual edge
            let d = q.dual();
            for (e, ed) in q.edges.iter().enumerate() {
                let n = d.edges.iter().filter(|(pe, _, _)| *pe == e).count();
                assert_eq!(n, usize::from(!ed.role.is_wired()));
            }
        }
    }

    #[test]
    fn rectangle_mask_matches_builder() {
        let q = build_rect_quad(4, 3, 0.5).unwrap();
        let (m, mk) = Mask::parse("a=0,0 b=4,0 c=4,3 d=0,3\n####\n####\n####\n").unwrap();
        let mut p = build_mask_quad(&m, mk, 0.5).unwrap();
        p.rect = Some((4, 3));
        assert_eq!(p, q);
        let text = q.mask().to_text(q.marked_coords());
        assert_eq!(Mask::parse(&text).unwrap(), (m, mk));
    }

    #[test]
    fn l_shape_validates() {
        let (m, mk) = l_hexomino();
        let q = build_mask_quad(&m, mk, 1.0).unwrap();
        assert_eq!(q.n_cells(), 6);
        // perimeter of the L hexomino
        assert_eq!(q.boundary.len(), 12);
        let walk = q.medial_walk();
        assert_eq!(walk.len(), q.boundary.len() + 4 - 2);
        assert!(simple_closed(&walk));
    }

    fn simple_closed(p: &[C64]) -> bool {
        let n = p.len();
        let seg = |i: usize| (p[i], p[(i + 1) % n]);
        let cross = |o: C64, a: C64, b: C64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let ((a, b), (c, d)) = (seg(i), seg(j));
                let d1 = cross(a, b, c);
                let d2 = cross(a, b, d);
                let d3 = cross(c, d, a);
                let d4 = cross(c, d, b);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rectangle_medial_walk() {
        let q = build_rect_quad(3, 2, 1.0).unwrap();
        let walk = q.medial_walk();
        assert!(simple_closed(&walk));
        assert_eq!(walk[0], C64::new(-0.5, 0.0));
        assert_eq!(q.medial_corner_point(1), C64::new(3.5, 0.0));
        assert_eq!(q.medial_corner_point(2), C64::new(3.5, 2.0));
        assert_eq!(q.medial_corner_point(3), C64::new(-0.5, 2.0));
        let pos: Vec<usize> = (0..4).map(|k| walk.iter().position(|&p| p == q.medial_corner_point(k)).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejections() {
        let (m, _) = Mask::parse("a=0,0 b=1,0 c=1,1 d=0,1\n###\n#.#\n###\n").unwrap();
        assert!(matches!(build_mask_quad(&m, [(0, 0), (3, 0), (3, 3), (0, 3)], 1.0), Err(Error::Topology(_))));
        let (m, _) = Mask::parse("a=0,0 b=1,0 c=1,1 d=0,1\n#.\n.#\n").unwrap();
        assert!(matches!(build_mask_quad(&m, [(0, 0), (2, 0), (2, 2), (0, 2)], 1.0), Err(Error::Topology(_))));
        let (m, _) = Mask::parse("a=0,0 b=1,0 c=1,1 d=0,1\n#.#\n###\n").unwrap();
        assert!(build_mask_quad(&m, [(0, 0), (3, 0), (3, 2), (0, 2)], 1.0).is_ok());
        let (m, _) = Mask::parse("a=0,0 b=1,0 c=1,1 d=0,1\n#.#\n").unwrap();
        assert!(matches!(build_mask_quad(&m, [(0, 0), (1, 0), (1, 1), (0, 1)], 1.0), Err(Error::Topology(_))));
        let q = Mask::full(3, 3);
        assert!(matches!(build_mask_quad(&q, [(0, 0), (3, 3), (3, 0), (0, 3)], 1.0), Err(Error::Order(_))));
        assert!(matches!(build_mask_quad(&q, [(0, 0), (1, 1), (3, 3), (0, 3)], 1.0), Err(Error::Topology(_))));
        assert!(matches!(build_rect_quad(1, 4, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn corner_bookkeeping() {
        let q = build_rect_quad(3, 2, 1.0).unwrap();
        // every corner appears in edge_corners for each of its edges
        for (k, c) in q.corners.iter().enumerate() {
            for e in c.edges.iter().flatten() {
                let ed = &q.edges[*e];
                assert_eq!(q.corner_of(*e, c.vertex, ed.left == c.face), Some(k));
            }
        }
        let a = &q.corners[q.medial_marked[0]];
        assert_eq!(a.vertex, q.marked[0]);
        assert_eq!(a.face, Face::ExtDa);
        let c = &q.corners[q.medial_marked[2]];
        assert_eq!(c.vertex, q.marked[2]);
        assert_eq!(c.face, Face::ExtBc);
    }

    #[test]
    fn contracted_graph() {
        let q = build_rect_quad(2, 2, 1.0).unwrap();
        let g = q.contracted();
        assert_eq!(g.n_nodes, 5);
        assert_eq!(g.adj[NODE_A].len(), 3);
        assert_eq!(g.adj[NODE_B].len(), 3);
        let deg: usize = g.adj.iter().map(Vec::len).sum();
        assert_eq!(deg, 2 * 8);
    }

    #[test]
    fn reversed_and_rotated() {
        let q = build_rect_quad(4, 3, 1.0).unwrap();
        let r = q.reversed().unwrap();
        assert_eq!(r.marked_coords(), [(4, 3), (0, 3), (0, 0), (4, 0)]);
        let t = q.rotated().unwrap();
        assert_eq!(t.marked_coords(), [(4, 0), (4, 3), (0, 3), (0, 0)]);
        assert_eq!(t.arc_edges(0).len(), 3);
    }

    #[test]
    fn large_rectangle_builds_quickly() {
        let t = std::time::Instant::now();
        let q = build_rect_quad(64, 64, 1.0 / 64.0).unwrap();
        assert_eq!(q.vertices.len(), 65 * 65);
        assert!(t.elapsed().as_millis() < 200);
    }
}
