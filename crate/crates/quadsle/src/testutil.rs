//! Independent numerical oracles shared by unit tests.

use crate::lattice::{QuadLattice, NODE_A, NODE_B};

pub fn central_diff(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    p[x] = r;
    r
}

/// Subsets of the non-wired edges of size `k` that are acyclic on the contracted graph.
fn acyclic_subsets(q: &QuadLattice, k: usize, mut keep: impl FnMut(&mut [usize]) -> bool) -> Vec<Vec<bool>> {
    let g = q.contracted();
    let free: Vec<usize> = (0..q.edges.len()).filter(|&e| !q.edges[e].role.is_wired()).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << free.len()) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut p: Vec<usize> = (0..g.n_nodes).collect();
        let mut ok = true;
        for (i, &e) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let ed = &q.edges[e];
                let (a, b) = (find(&mut p, g.node_of[ed.u]), find(&mut p, g.node_of[ed.v]));
                if a == b {
                    ok = false;
                    break;
                }
                p[a] = b;
            }
        }
        if ok && keep(&mut p) {
            let mut t: Vec<bool> = q.edges.iter().map(|e| e.role.is_wired()).collect();
            for (i, &e) in free.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    t[e] = true;
                }
            }
            out.push(t);
        }
    }
    out
}

/// All spanning trees containing both wired arcs, as edge indicator vectors.
pub fn enumerate_trees(q: &QuadLattice) -> Vec<Vec<bool>> {
    let n = q.contracted().n_nodes;
    acyclic_subsets(q, n - 1, |_| true)
}

/// All spanning 2-forests with (ab) and (cd) in different components.
pub fn enumerate_two_forests(q: &QuadLattice) -> Vec<Vec<bool>> {
    let n = q.contracted().n_nodes;
    acyclic_subsets(q, n - 2, |p| find(p, NODE_A) != find(p, NODE_B))
}
