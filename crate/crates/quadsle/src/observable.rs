//! Discrete harmonic fields and the holomorphic observable f_δ = u + i·(|SF₂|/|ST|)·v.
//!
//! u lives on dual vertices: 0 on d*a*, 1 on b*c*, reflecting next to the wired
//! arcs. v lives on primal vertices: 0 on (ab), 1 on (cd), reflecting on the free
//! arcs. Reflection is the degree-deficient average over neighbors in the quad.

use crate::error::{Error, Result};
use crate::lattice::{Face, QuadLattice, NODE_A, NODE_B};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Domain {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
    pub domain: Domain,
}

impl GridField {
    /// Rows (x, y, value) in lattice coordinates; dual exterior vertices are skipped.
    pub fn to_csv(&self, q: &QuadLattice) -> String {
        let mut s = String::from("x,y,value\n");
        match self.domain {
            Domain::Primal => {
                for (v, &(x, y)) in q.vertices.iter().enumerate() {
                    s.push_str(&format!("{x},{y},{}\n", self.values[v]));
                }
            }
            Domain::Dual => {
                for (c, &(i, j)) in q.cells.iter().enumerate() {
                    s.push_str(&format!("{},{},{}\n", i as f64 + 0.5, j as f64 + 0.5, self.values[c]));
                }
            }
        }
        s
    }
}

/// Solves x_i = mean of x over neighbors of i at non-Dirichlet vertices.
/// `adj` may contain repeated neighbors (multi-edges); self-loops are ignored.
pub fn harmonic_solve(adj: &[Vec<usize>], dirichlet: &[Option<f64>]) -> Result<Vec<f64>> {
    let n = adj.len();
    if dirichlet.iter().all(Option::is_none) {
        return Err(Error::Config("harmonic problem has no Dirichlet vertex".into()));
    }
    let free: Vec<usize> = (0..n).filter(|&i| dirichlet[i].is_none()).collect();
    let mut idx = vec![usize::MAX; n];
    for (k, &i) in free.iter().enumerate() {
        idx[i] = k;
    }
    let deg: Vec<f64> = free.iter().map(|&i| adj[i].iter().filter(|&&j| j != i).count() as f64).collect();
    let mut rhs = vec![0.0; free.len()];
    for (k, &i) in free.iter().enumerate() {
        for &j in &adj[i] {
            if let Some(g) = dirichlet[j] {
                rhs[k] += g;
            }
        }
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        for (k, &i) in free.iter().enumerate() {
            let mut s = deg[k] * x[k];
            for &j in &adj[i] {
                if j != i && idx[j] != usize::MAX {
                    s -= x[idx[j]];
                }
            }
            y[k] = s;
        }
    };
    // Jacobi-preconditioned conjugate gradients
    let m = free.len();
    let mut x = vec![0.0; m];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&deg).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iter = 20 * m + 100;
    let mut converged = m == 0;
    for _ in 0..max_iter {
        if r.iter().zip(&deg).all(|(a, d)| (a / d).abs() <= 1e-13) {
            converged = true;
            break;
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Config("harmonic system is singular: a component has no Dirichlet vertex".into()));
        }
        let alpha = rz / pap;
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..m {
            z[k] = r[k] / deg[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    if !converged {
        return Err(Error::Convergence("harmonic solve did not reach tolerance".into()));
    }
    let mut out: Vec<f64> = dirichlet.iter().map(|d| d.unwrap_or(0.0)).collect();
    for (k, &i) in free.iter().enumerate() {
        out[i] = x[k];
    }
    Ok(out)
}

/// Max over free vertices of |x_i − mean of neighbors|.
pub fn harmonic_residual(adj: &[Vec<usize>], dirichlet: &[Option<f64>], x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..adj.len() {
        if dirichlet[i].is_some() {
            continue;
        }
        let nb: Vec<usize> = adj[i].iter().copied().filter(|&j| j != i).collect();
        let mean = nb.iter().map(|&j| x[j]).sum::<f64>() / nb.len() as f64;
        worst = worst.max((x[i] - mean).abs());
    }
    worst
}

/// Primal adjacency over all lattice edges.
pub fn primal_adjacency(q: &QuadLattice) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); q.vertices.len()];
    for ed in &q.edges {
        adj[ed.u].push(ed.v);
        adj[ed.v].push(ed.u);
    }
    adj
}

/// Dual adjacency: cells, then d*a*, then b*c*.
pub fn dual_adjacency(q: &QuadLattice) -> Vec<Vec<usize>> {
    let d = q.dual();
    let mut adj = vec![Vec::new(); d.n_vertices];
    for &(_, l, r) in &d.edges {
        adj[l].push(r);
        adj[r].push(l);
    }
    adj
}

pub fn solve_u(q: &QuadLattice) -> Result<GridField> {
    let adj = dual_adjacency(q);
    let nc = q.n_cells();
    let mut dir = vec![None; nc + 2];
    dir[nc] = Some(0.0);
    dir[nc + 1] = Some(1.0);
    Ok(GridField { values: harmonic_solve(&adj, &dir)?, domain: Domain::Dual })
}

fn v_dirichlet(q: &QuadLattice) -> Vec<Option<f64>> {
    let mut dir = vec![None; q.vertices.len()];
    for v in q.arc_vertices(0) {
        dir[v] = Some(0.0);
    }
    for v in q.arc_vertices(2) {
        dir[v] = Some(1.0);
    }
    dir
}

pub fn solve_v(q: &QuadLattice) -> Result<GridField> {
    let adj = primal_adjacency(q);
    Ok(GridField { values: harmonic_solve(&adj, &v_dirichlet(q))?, domain: Domain::Primal })
}

/// Spanning-tree and 2-forest counts of a two-terminal graph.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RatioResult {
    /// |SF₂| / |ST|.
    pub ratio: f64,
    pub log_trees: f64,
    pub log_two_forests: f64,
}

/// Kirchhoff counts for the graph on `n` nodes with terminals `a`, `b`:
/// |ST| = det(L without a), |SF₂| = det(L without a, b).
/// The minor without a and b is factored as a banded LDLᵀ in the given node order;
/// the remaining factor is the Schur complement at b.
pub fn two_terminal_ratio(n: usize, edges: &[(usize, usize)], a: usize, b: usize) -> Result<RatioResult> {
    if a == b || a >= n || b >= n {
        return Err(Error::Config("terminals must be distinct nodes".into()));
    }
    let mut idx = vec![usize::MAX; n];
    let mut m = 0;
    for i in 0..n {
        if i != a && i != b {
            idx[i] = m;
            m += 1;
        }
    }
    let mut bw = 0;
    for &(p, r) in edges {
        if p != r && idx[p] != usize::MAX && idx[r] != usize::MAX {
            bw = bw.max(idx[p].abs_diff(idx[r]));
        }
    }
    let w = bw + 1;
    // band[i*w + k] holds entry (i, i − bw + k)
    let mut band = vec![0.0; m * w];
    let mut lb = vec![0.0; m];
    let mut lbb = 0.0;
    for &(p, r) in edges {
        if p == r {
            continue;
        }
        for (s, t) in [(p, r), (r, p)] {
            if s == b {
                lbb += 1.0;
            }
            if idx[s] != usize::MAX {
                let i = idx[s];
                band[i * w + bw] += 1.0;
                if t == b {
                    lb[i] -= 1.0;
                } else if idx[t] != usize::MAX && idx[t] < i {
                    band[i * w + bw - (i - idx[t])] -= 1.0;
                }
            }
        }
    }
    // LDLᵀ in place: band holds L below the diagonal and D on it
    for i in 0..m {
        let j0 = i.saturating_sub(bw);
        for j in j0..i {
            let mut s = band[i * w + bw - (i - j)];
            let k0 = j0.max(j.saturating_sub(bw));
            for k in k0..j {
                s -= band[i * w + bw - (i - k)] * band[j * w + bw - (j - k)] * band[k * w + bw];
            }
            band[i * w + bw - (i - j)] = s / band[j * w + bw];
        }
        let mut d = band[i * w + bw];
        for k in j0..i {
            let l = band[i * w + bw - (i - k)];
            d -= l * l * band[k * w + bw];
        }
        if !(d > 0.0) {
            return Err(Error::Singularity("Laplacian minor is singular: graph is disconnected".into()));
        }
        band[i * w + bw] = d;
    }
    // y = L⁻¹ lb, then lbᵀ L_I⁻¹ lb = Σ y_i² / D_i
    let mut y = lb;
    for i in 0..m {
        let j0 = i.saturating_sub(bw);
        let mut s = y[i];
        for k in j0..i {
            s -= band[i * w + bw - (i - k)] * y[k];
        }
        y[i] = s;
    }
    let quad: f64 = (0..m).map(|i| y[i] * y[i] / band[i * w + bw]).sum();
    let schur = lbb - quad;
    if !(schur > 0.0) {
        return Err(Error::Singularity("terminals are not connected".into()));
    }
    let log_two_forests: f64 = (0..m).map(|i| band[i * w + bw].ln()).sum();
    Ok(RatioResult { ratio: 1.0 / schur, log_trees: log_two_forests + schur.ln(), log_two_forests })
}

/// |SF₂|/|ST| for the quad with (ab) and (cd) contracted.
pub fn count_ratio(q: &QuadLattice) -> Result<RatioResult> {
    let g = q.contracted();
    let edges: Vec<(usize, usize)> =
        q.edges.iter().filter(|e| !e.role.is_wired()).map(|e| (g.node_of[e.u], g.node_of[e.v])).collect();
    two_terminal_ratio(g.n_nodes, &edges, NODE_A, NODE_B)
}

/// The same counts on the dual graph with terminals d*a* and b*c*.
pub fn dual_count_ratio(q: &QuadLattice) -> Result<RatioResult> {
    let d = q.dual();
    let edges: Vec<(usize, usize)> = d.edges.iter().map(|&(_, l, r)| (l, r)).collect();
    two_terminal_ratio(d.n_vertices, &edges, d.da, d.bc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub u: GridField,
    pub v: GridField,
    pub ratio: f64,
}

pub fn observable_field(q: &QuadLattice) -> Result<Observable> {
    Ok(Observable { u: solve_u(q)?, v: solve_v(q)?, ratio: count_ratio(q)?.ratio })
}

impl Observable {
    fn at_face(&self, q: &QuadLattice, f: Face) -> Option<C64> {
        let nc = q.n_cells();
        match f {
            Face::Cell(c) => Some(C64::new(self.u.values[c], 0.0)),
            Face::ExtDa => Some(C64::new(self.u.values[nc], 0.0)),
            Face::ExtBc => Some(C64::new(self.u.values[nc + 1], 0.0)),
            Face::ExtWired => None,
        }
    }

    fn at_vertex(&self, v: usize) -> C64 {
        C64::new(0.0, self.ratio * self.v.values[v])
    }

    /// Max over medial vertices of |(f(n) − f(s)) − i(f(e) − f(w))|; wired edges have no dual side and are skipped.
    pub fn holomorphicity_residual(&self, q: &QuadLattice) -> f64 {
        let i = C64::new(0.0, 1.0);
        let mut worst: f64 = 0.0;
        for ed in &q.edges {
            let (Some(fl), Some(fr)) = (self.at_face(q, ed.left), self.at_face(q, ed.right)) else { continue };
            let (fu, fv) = (self.at_vertex(ed.u), self.at_vertex(ed.v));
            let horizontal = q.vertices[ed.u].1 == q.vertices[ed.v].1;
            let r = if horizontal { (fl - fr) - i * (fv - fu) } else { (fv - fu) - i * (fr - fl) };
            worst = worst.max(r.norm());
        }
        worst
    }

    /// f_δ at a plane point: u of the cell containing z plus i·ratio·(bilinear v).
    pub fn eval(&self, q: &QuadLattice, z: C64) -> Result<C64> {
        let (x, y) = (z.re / q.delta, z.im / q.delta);
        let (i, j) = (x.floor() as i32, y.floor() as i32);
        let c = q.cell_at(i, j).ok_or_else(|| Error::Domain(format!("point {z} is outside the quad")))?;
        let (tx, ty) = (x - i as f64, y - j as f64);
        let vv = |a: i32, b: i32| self.v.values[q.vertex_at(a, b).unwrap()];
        let v = (1.0 - tx) * (1.0 - ty) * vv(i, j) + tx * (1.0 - ty) * vv(i + 1, j) + (1.0 - tx) * ty * vv(i, j + 1) + tx * ty * vv(i + 1, j + 1);
        Ok(C64::new(self.u.values[c], self.ratio * v))
    }
}

/// Max |f_δ(z) − f(z)| over probes, where f maps the rectangle [0, Nδ]×[0, Mδ]
/// onto [0,1]×[0,M/N] with corners a, b, c, d to 0, 1, 1+iK, iK (an affine map).
pub fn observable_vs_rectmap(q: &QuadLattice, obs: &Observable, probes: &[C64]) -> Result<f64> {
    let (n, _) = q.rect.ok_or_else(|| Error::Config("continuum comparison needs a rectangle quad".into()))?;
    let scale = n as f64 * q.delta;
    let mut worst: f64 = 0.0;
    for &z in probes {
        worst = worst.max((obs.eval(q, z)? - z / scale).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_mask_quad, build_rect_quad, Mask};
    use crate::rng::stream;
    use crate::testutil::{enumerate_trees, enumerate_two_forests};
    use crate::ust::{dual_forest, SpanningTree};
    use proptest::prelude::*;
    use rand::Rng;

    fn l_shape(k: usize) -> QuadLattice {
        let mut cells = vec![false; 4 * k * k];
        for j in 0..2 * k {
            for i in 0..2 * k {
                cells[j * 2 * k + i] = j < k || i < k;
            }
        }
        let (k2, ki) = (2 * k as i32, k as i32);
        build_mask_quad(&Mask { width: 2 * k, height: 2 * k, cells }, [(0, 0), (k2, 0), (ki, k2), (0, k2)], 1.0).unwrap()
    }

    #[test]
    fn constant_dirichlet_gives_constant() {
        let q = build_rect_quad(6, 4, 1.0).unwrap();
        let adj = primal_adjacency(&q);
        let mut dir = vec![None; adj.len()];
        for v in q.arc_vertices(0).into_iter().chain(q.arc_vertices(2)) {
            dir[v] = Some(1.0);
        }
        let x = harmonic_solve(&adj, &dir).unwrap();
        assert!(x.iter().all(|&t| (t - 1.0).abs() < 1e-12));
        assert!(matches!(harmonic_solve(&adj, &vec![None; adj.len()]), Err(Error::Config(_))));
    }

    #[test]
    fn rectangle_fields_are_linear() {
        let (n, m) = (7, 5);
        let q = build_rect_quad(n, m, 1.0).unwrap();
        let obs = observable_field(&q).unwrap();
        for (v, &(_, y)) in q.vertices.iter().enumerate() {
            assert!((obs.v.values[v] - y as f64 / m as f64).abs() < 1e-12);
        }
        for (c, &(i, _)) in q.cells.iter().enumerate() {
            assert!((obs.u.values[c] - (i as f64 + 1.0) / (n as f64 + 1.0)).abs() < 1e-12);
        }
        assert!((obs.ratio - m as f64 / (n as f64 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn solver_residual_small() {
        let q = l_shape(8);
        let adj = primal_adjacency(&q);
        let dir = v_dirichlet(&q);
        let x = harmonic_solve(&adj, &dir).unwrap();
        assert!(harmonic_residual(&adj, &dir, &x) <= 1e-10);
        // maximum principle
        assert!(x.iter().all(|&t| (-1e-14..=1.0 + 1e-14).contains(&t)));
    }

    #[test]
    fn harmonic_matches_reflected_walk() {
        let q = build_rect_quad(16, 16, 1.0).unwrap();
        let adj = primal_adjacency(&q);
        let dir = v_dirichlet(&q);
        let x = harmonic_solve(&adj, &dir).unwrap();
        let probes = [(1, 1), (8, 8), (15, 3), (0, 12), (5, 14)];
        let walks = 100_000;
        for (pi, &(px, py)) in probes.iter().enumerate() {
            let start = q.vertex_at(px, py).unwrap();
            let mut rng = stream(77, pi as u64);
            let mut hits = 0u64;
            for _ in 0..walks {
                let mut v = start;
                while dir[v].is_none() {
                    v = adj[v][rng.gen_range(0..adj[v].len())];
                }
                hits += u64::from(dir[v] == Some(1.0));
            }
            let p = hits as f64 / walks as f64;
            let sigma = (x[start] * (1.0 - x[start]) / walks as f64).sqrt();
            assert!((p - x[start]).abs() <= 3.0 * sigma, "probe {pi}: {p} vs {}", x[start]);
        }
    }

    #[test]
    fn single_edge_ratio_is_one() {
        let r = two_terminal_ratio(2, &[(0, 1)], 0, 1).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.log_trees, 0.0);
    }

    #[test]
    fn count_ratio_matches_enumeration() {
        for (n, m, trees, forests) in [(2, 2, 45, 30), (2, 3, 576, 576), (3, 2, 224, 112)] {
            let q = build_rect_quad(n, m, 1.0).unwrap();
            assert_eq!(enumerate_trees(&q).len(), trees);
            assert_eq!(enumerate_two_forests(&q).len(), forests);
            let r = count_ratio(&q).unwrap();
            assert!((r.ratio - forests as f64 / trees as f64).abs() < 1e-12);
            assert!((r.log_trees - (trees as f64).ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn ratio_is_effective_resistance() {
        // flux of v out of (ab) is the conductance ST/SF₂
        let q = l_shape(6);
        let v = solve_v(&q).unwrap();
        let ab = q.arc_vertices(0);
        let mut flux = 0.0;
        for ed in &q.edges {
            let (iu, iv) = (ab.contains(&ed.u), ab.contains(&ed.v));
            if iu != iv {
                flux += if iu { v.values[ed.v] } else { v.values[ed.u] };
            }
        }
        let r = count_ratio(&q).unwrap();
        assert!((flux * r.ratio - 1.0).abs() < 1e-10, "{flux} vs {}", r.ratio);
    }

    #[test]
    fn ratio_symmetries() {
        for q in [build_rect_quad(9, 6, 1.0).unwrap(), l_shape(5)] {
            let r = count_ratio(&q).unwrap().ratio;
            let mk = q.marked_coords();
            let swapped = q.with_marked([mk[2], mk[3], mk[0], mk[1]]).unwrap();
            assert!((count_ratio(&swapped).unwrap().ratio - r).abs() < 1e-12);
            let dual = dual_count_ratio(&q).unwrap().ratio;
            assert!((r * dual - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn relabelled_ratio_product_tends_to_one() {
        let mut prev = 0.0;
        for n in [8, 16, 32, 64] {
            let q = build_rect_quad(n, n, 1.0).unwrap();
            let p = count_ratio(&q).unwrap().ratio * count_ratio(&q.rotated().unwrap()).unwrap().ratio;
            let expected = (n as f64 / (n as f64 + 1.0)).powi(2);
            assert!((p - expected).abs() < 1e-9);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn square_ratio_converges_to_one() {
        let q = build_rect_quad(64, 64, 1.0 / 64.0).unwrap();
        assert!((count_ratio(&q).unwrap().ratio - 1.0).abs() < 0.05);
    }

    #[test]
    fn holomorphicity_exact() {
        for q in [build_rect_quad(12, 7, 1.0).unwrap(), l_shape(6)] {
            let obs = observable_field(&q).unwrap();
            assert!(obs.holomorphicity_residual(&q) < 1e-10, "{}", obs.holomorphicity_residual(&q));
        }
    }

    #[test]
    fn boundary_data() {
        let q = l_shape(4);
        let obs = observable_field(&q).unwrap();
        let nc = q.n_cells();
        assert_eq!(obs.u.values[nc], 0.0);
        assert_eq!(obs.u.values[nc + 1], 1.0);
        for v in q.arc_vertices(0) {
            assert_eq!(obs.at_vertex(v).im, 0.0);
        }
        for v in q.arc_vertices(2) {
            assert_eq!(obs.at_vertex(v).im, obs.ratio);
        }
    }

    #[test]
    fn u_is_right_of_peano_probability() {
        for (n, m) in [(2, 2), (3, 2)] {
            let q = build_rect_quad(n, m, 1.0).unwrap();
            let trees = enumerate_trees(&q);
            let mut right = vec![0usize; q.n_cells()];
            for t in &trees {
                let f = dual_forest(&q, &SpanningTree { in_tree: t.clone(), parent: Vec::new() }).unwrap();
                for c in 0..q.n_cells() {
                    right[c] += usize::from(f.bc_side[c]);
                }
            }
            let u = solve_u(&q).unwrap();
            for c in 0..q.n_cells() {
                assert!((u.values[c] - right[c] as f64 / trees.len() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn v_is_two_forest_probability() {
        let q = l_shape(1);
        let forests = enumerate_two_forests(&q);
        let g = q.contracted();
        let v = solve_v(&q).unwrap();
        for x in 0..q.vertices.len() {
            if g.node_of[x] <= NODE_B {
                continue;
            }
            let hits = forests.iter().filter(|f| connected(&q, f, g.node_of[x], NODE_B)).count();
            assert!((v.values[x] - hits as f64 / forests.len() as f64).abs() < 1e-12);
        }
    }

    fn connected(q: &QuadLattice, f: &[bool], s: usize, t: usize) -> bool {
        let g = q.contracted();
        let mut seen = vec![false; g.n_nodes];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(x) = stack.pop() {
            for &(y, e) in &g.adj[x] {
                if f[e] && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen[t]
    }

    #[test]
    fn continuum_deviation_decreases() {
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32, 64] {
            let q = build_rect_quad(n, n, 1.0 / n as f64).unwrap();
            let obs = observable_field(&q).unwrap();
            let probes: Vec<C64> = [0.25, 0.5, 0.75].iter().flat_map(|&x| [0.25, 0.5, 0.75].map(|y| C64::new(x + 1e-9, y + 1e-9))).collect();
            let dev = observable_vs_rectmap(&q, &obs, &probes).unwrap();
            if n == 32 {
                assert!(observable_vs_rectmap(&q, &obs, &[C64::new(0.5, 0.5)]).unwrap() <= 0.05);
            }
            assert!(dev <= prev * 1.1);
            prev = dev;
        }
        let q = build_rect_quad(64, 128, 1.0 / 64.0).unwrap();
        assert!((count_ratio(&q).unwrap().ratio - 2.0).abs() < 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn holomorphic_on_random_rectangles(n in 2usize..14, m in 2usize..14) {
            let q = build_rect_quad(n, m, 1.0).unwrap();
            let obs = observable_field(&q).unwrap();
            prop_assert!(obs.holomorphicity_residual(&q) < 1e-9);
            let r = obs.ratio;
            let d = dual_count_ratio(&q).unwrap().ratio;
            prop_assert!((r * d - 1.0).abs() < 1e-9);
        }

        #[test]
        fn u_within_bounds(k in 1usize..6) {
            let q = l_shape(k);
            let u = solve_u(&q).unwrap();
            prop_assert!(u.values.iter().all(|&t| (-1e-14..=1.0 + 1e-14).contains(&t)));
        }
    }
}
