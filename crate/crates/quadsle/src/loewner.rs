//! Forward Loewner integrators, the vertical-slit zipper and martingale observables.
//!
//! All drivers live in the upper half-plane with the chordal normalization
//! ∂ₜgₜ(z) = 2/(gₜ(z) − Wₜ); time is half-plane capacity.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conformal::{normal_deriv_f, PoissonParams, RectMap};
use crate::error::{Error, Result};
use crate::lattice::QuadLattice;
use crate::rng::Stream;
use crate::specialfn::{elliptic_k, elliptic_k_incomplete, KappaNu};
use crate::ust::PeanoPair;

pub type Curve = Vec<C64>;

/// Distance in driver coordinates at which a force point counts as swallowed.
pub const SWALLOW_TOL: f64 = 1e-6;

const MAX_STEPS: usize = 100_000_000;
/// Reflecting floor for (V²−W)/(V³−W) in hSLE with ν ≥ 0.
const X2_FLOOR: f64 = 1e-12;
const NOISE_CAP: f64 = 0.2;
/// Continuation threshold and reflection floor for SLE_κ(ρ) gaps. The branch
/// hitting point is located to roughly the square root of this.
pub const SLE_RHO_TOL: f64 = 1e-12;

/// Driving function sampled on a strictly increasing capacity grid, together
/// with the force-point trajectories V^i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    /// `force[i][k]` is the position of force point i at `times[k]`.
    pub force: Vec<Vec<f64>>,
    /// `gaps[i][k]` = V^i − W at full relative precision; empty when unknown.
    #[serde(default)]
    pub gaps: Vec<Vec<f64>>,
    /// Exact (Δt, ΔW) of each integrator step; empty when unknown. Late in a
    /// long run Δt can fall below the resolution of `times`.
    #[serde(default)]
    pub steps: Vec<(f64, f64)>,
    /// Index at which a swallow or the continuation threshold was reached.
    pub swallow: Option<usize>,
    pub threshold_hit: bool,
}

impl DrivingPath {
    /// Driver without force points; times must increase strictly from 0.
    pub fn from_samples(times: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if times.len() != w.len() || times.is_empty() {
            return Err(Error::Config("times and values must be nonempty and of equal length".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Config("times must increase strictly from 0".into()));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("non-finite driver value".into()));
        }
        Ok(DrivingPath { times, w, force: Vec::new(), gaps: Vec::new(), steps: Vec::new(), swallow: None, threshold_hit: false })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Total half-plane capacity.
    pub fn capacity(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// First index with time ≥ t.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t).min(self.len() - 1)
    }

    /// Prefix up to and including index k.
    pub fn truncated(&self, k: usize) -> DrivingPath {
        let k = k.min(self.len() - 1);
        DrivingPath {
            times: self.times[..=k].to_vec(),
            w: self.w[..=k].to_vec(),
            force: self.force.iter().map(|f| f[..=k].to_vec()).collect(),
            gaps: self.gaps.iter().map(|f| f[..=k].to_vec()).collect(),
            steps: self.steps.get(..k).map_or(Vec::new(), |s| s.to_vec()),
            swallow: self.swallow.filter(|&s| s <= k),
            threshold_hit: self.threshold_hit && self.swallow.is_some_and(|s| s <= k),
        }
    }

    /// (λW, λ²t).
    pub fn scaled(&self, lambda: f64) -> DrivingPath {
        DrivingPath {
            times: self.times.iter().map(|t| lambda * lambda * t).collect(),
            w: self.w.iter().map(|w| lambda * w).collect(),
            force: self.force.iter().map(|f| f.iter().map(|v| lambda * v).collect()).collect(),
            gaps: self.gaps.iter().map(|f| f.iter().map(|v| lambda * v).collect()).collect(),
            steps: self.steps.iter().map(|&(h, dw)| (lambda * lambda * h, lambda * dw)).collect(),
            swallow: self.swallow,
            threshold_hit: self.threshold_hit,
        }
    }

    /// Runs `other` after `self`, shifting its driver so the two join continuously.
    pub fn concat(&self, other: &DrivingPath) -> DrivingPath {
        let (t0, w0) = (self.capacity(), *self.w.last().unwrap());
        let dw = w0 - other.w[0];
        let mut times = self.times.clone();
        let mut w = self.w.clone();
        times.extend(other.times[1..].iter().map(|t| t + t0));
        w.extend(other.w[1..].iter().map(|x| x + dw));
        DrivingPath { times, w, force: Vec::new(), gaps: Vec::new(), steps: Vec::new(), swallow: None, threshold_hit: false }
    }

    /// (Δt, ΔW) from index j to j + 1.
    pub fn step(&self, j: usize) -> (f64, f64) {
        match self.steps.get(j) {
            Some(&s) => s,
            None => (self.times[j + 1] - self.times[j], self.w[j + 1] - self.w[j]),
        }
    }

    /// V^i − W at index k.
    pub fn gap(&self, i: usize, k: usize) -> f64 {
        match self.gaps.get(i) {
            Some(g) => g[k],
            None => self.force[i][k] - self.w[k],
        }
    }

    /// CSV with columns t, W, V1, V2, …
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,W");
        for i in 0..self.force.len() {
            s.push_str(&format!(",V{}", i + 1));
        }
        s.push('\n');
        for k in 0..self.len() {
            s.push_str(&format!("{:.12e},{:.12e}", self.times[k], self.w[k]));
            for f in &self.force {
                s.push_str(&format!(",{:.12e}", f[k]));
            }
            s.push('\n');
        }
        s
    }
}

enum Control {
    Continue,
    Swallow,
    Threshold,
}

/// Euler–Maruyama for dW = √κ dB + drift dt, dV = 2/(V−W) dt. The state is
/// carried as W and the gaps s_i = V^i − W, each advanced in log|s| with the
/// Itô correction, so gaps keep their sign and near-collisions do not cancel.
/// Steps shrink so that |drift|·dt ≤ 0.1·gap and √(κ dt) ≤ 0.2·gap. With
/// `relative`, the cap `dt` grows as (gap/gap₀)² once every gap exceeds its
/// initial minimum gap₀, so large excursions cost a bounded number of steps.
fn integrate<R: Rng>(
    kappa: f64,
    w0: f64,
    v0: Vec<f64>,
    t_max: f64,
    dt: f64,
    relative: bool,
    rng: &mut R,
    mut drift: impl FnMut(&[f64], bool) -> Result<f64>,
    mut control: impl FnMut(&mut [f64]) -> Control,
    pin_after_swallow: Option<&[bool]>,
) -> Result<DrivingPath> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::Config(format!("dt = {dt} and t_max = {t_max} must be positive")));
    }
    let nf = v0.len();
    let mut path = DrivingPath {
        times: vec![0.0],
        w: vec![w0],
        force: v0.iter().map(|&v| vec![v]).collect(),
        gaps: v0.iter().map(|&v| vec![v - w0]).collect(),
        steps: Vec::new(),
        swallow: None,
        threshold_hit: false,
    };
    let mut s: Vec<f64> = v0.iter().map(|v| v - w0).collect();
    let (mut t, mut w) = (0.0, w0);
    let mut swallowed = false;
    let pinned: Vec<bool> = pin_after_swallow.map_or(vec![false; nf], |p| p.to_vec());
    let sk = kappa.sqrt();
    let gap0 = s.iter().map(|x| x.abs()).filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    for _ in 0..MAX_STEPS {
        if t >= t_max * (1.0 - 1e-14) {
            return Ok(path);
        }
        let d = drift(&s, swallowed)?;
        let gap = s
            .iter()
            .enumerate()
            .filter(|(i, _)| !(swallowed && pinned[*i]))
            .map(|(_, x)| x.abs())
            .fold(f64::INFINITY, f64::min);
        let cap = if relative && gap.is_finite() && gap > gap0 { dt * (gap / gap0).powi(2) } else { dt };
        let mut h = cap.min(t_max - t);
        if gap.is_finite() {
            h = h.min((NOISE_CAP * gap).powi(2) / kappa);
            if d != 0.0 {
                h = h.min(0.5 * NOISE_CAP * gap / d.abs());
            }
        }
        let xi: f64 = rng.sample(StandardNormal);
        let dw = d * h + sk * h.sqrt() * xi;
        for (i, x) in s.iter_mut().enumerate() {
            if swallowed && pinned[i] {
                *x = 0.0;
            } else if x.is_finite() {
                let u = *x;
                *x = u * ((2.0 * h / u - dw) / u - 0.5 * kappa * h / (u * u)).exp();
            }
        }
        w += dw;
        t += h;
        if !w.is_finite() || s.iter().any(|x| x.is_nan()) {
            return Err(Error::Integration { t, msg: "non-finite state".into() });
        }
        if !swallowed {
            match control(&mut s) {
                Control::Continue => {}
                Control::Swallow => {
                    push_state(&mut path, t, w, h, dw, &s);
                    path.swallow = Some(path.len() - 1);
                    if pin_after_swallow.is_none() {
                        return Ok(path);
                    }
                    swallowed = true;
                    continue;
                }
                Control::Threshold => {
                    path.swallow = Some(path.len());
                    path.threshold_hit = true;
                    push_state(&mut path, t, w, h, dw, &s);
                    return Ok(path);
                }
            }
        }
        push_state(&mut path, t, w, h, dw, &s);
    }
    Err(Error::Integration { t, msg: format!("exceeded {MAX_STEPS} steps") })
}

fn push_state(path: &mut DrivingPath, t: f64, w: f64, h: f64, dw: f64, s: &[f64]) {
    path.steps.push((h, dw));
    path.times.push(t);
    path.w.push(w);
    for (f, x) in path.force.iter_mut().zip(s) {
        f.push(w + x);
    }
    for (g, x) in path.gaps.iter_mut().zip(s) {
        g.push(*x);
    }
}

// ---------------------------------------------------------------------------
// Θ and hypergeometric SLE

/// Θ(x, y, w) = 2/(w−x) − 2/(w−y) − 8(y−x)/(y−w)²·F′/F(z̃), z̃ = (x−w)/(y−w),
/// F = ₂F₁(1/2, 1/2, 1; ·). Used with w < x ≤ y.
pub fn theta_drift(x: f64, y: f64, w: f64) -> Result<f64> {
    if x == y {
        return Ok(0.0);
    }
    if x == w || y == w {
        return Err(Error::Domain(format!("Θ({x}, {y}, {w}) needs pairwise distinct arguments")));
    }
    let zt = (x - w) / (y - w);
    if !(0.0..1.0).contains(&zt) {
        return Err(Error::Domain(format!("Θ({x}, {y}, {w}): (x−w)/(y−w) = {zt} outside [0,1)")));
    }
    let kn = KappaNu { kappa: 8.0, nu: 0.0 };
    let ratio = kn.f_deriv(zt)? / kn.f(zt)?;
    Ok(2.0 / (w - x) - 2.0 / (w - y) - 8.0 * (y - x) / ((y - w) * (y - w)) * ratio)
}

/// Parameters of hSLE_κ(ν) in H from x1 to x4 with marked points (x2, x3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsleParams {
    pub kappa: f64,
    pub nu: f64,
    /// x1 < x2 < x3 < x4; x4 may be +∞.
    pub x: [f64; 4],
}

impl HsleParams {
    pub fn new(kappa: f64, nu: f64, x: [f64; 4]) -> Result<Self> {
        if !(kappa >= 8.0) || !kappa.is_finite() {
            return Err(Error::Parameter(format!("kappa = {kappa} must be ≥ 8")));
        }
        if !(nu > -2.0) || !nu.is_finite() {
            return Err(Error::Parameter(format!("nu = {nu} must exceed −2")));
        }
        if !(x[0] < x[1] && x[1] < x[2] && x[2] < x[3]) || !x[2].is_finite() || !x[0].is_finite() {
            return Err(Error::Order(format!("need x1<x2<x3<x4, got {x:?}")));
        }
        Ok(HsleParams { kappa, nu, x })
    }

    fn kn(&self) -> KappaNu {
        KappaNu { kappa: self.kappa, nu: self.nu }
    }

    /// Cross-ratio z = (x2−x1)(x4−x3)/((x3−x1)(x4−x2)).
    pub fn cross_ratio(x1: f64, x2: f64, x3: f64, x4: f64) -> f64 {
        if x4.is_infinite() {
            (x2 - x1) / (x3 - x1)
        } else {
            (x2 - x1) * (x4 - x3) / ((x3 - x1) * (x4 - x2))
        }
    }

    /// κ ∂₁ log 𝒵(w, v2, v3, v4)
    /// = κ[2h/(v4−w) + (a + zF′(z)/F(z))(1/(v3−w) − 1/(v2−w))].
    pub fn drift(&self, w: f64, v2: f64, v3: f64, v4: f64) -> Result<f64> {
        self.drift_gaps(v2 - w, v3 - w, v4 - w)
    }

    /// The drift in terms of the gaps s_i = v_i − w.
    pub fn drift_gaps(&self, s2: f64, s3: f64, s4: f64) -> Result<f64> {
        let kn = self.kn();
        let (z, lead) = if s4.is_infinite() {
            (s2 / s3, 0.0)
        } else {
            (s2 * (s4 - s3) / (s3 * (s4 - s2)), 2.0 * kn.h() / s4)
        };
        let fz = kn.f(z)?;
        let dz = kn.f_deriv(z)?;
        Ok(self.kappa * (lead + (kn.a() + z * dz / fz) * (1.0 / s3 - 1.0 / s2)))
    }
}

/// Simulates the hSLE driver up to capacity `t_max`. Force points are
/// (V², V³) and V⁴ when x4 is finite. Once V³ is swallowed the process
/// continues as SLE_κ towards x4. For ν ≥ 0 the ratio (V²−W)/(V³−W) is
/// reflected at 1e-12.
pub fn simulate_hsle(p: &HsleParams, t_max: f64, dt: f64, rng: &mut Stream) -> Result<DrivingPath> {
    let mut v0 = vec![p.x[1], p.x[2]];
    if p.x[3].is_finite() {
        v0.push(p.x[3]);
    }
    let kappa = p.kappa;
    integrate(
        kappa,
        p.x[0],
        v0,
        t_max,
        dt,
        false,
        rng,
        |s, swallowed| {
            let s4 = s.get(2).copied().unwrap_or(f64::INFINITY);
            if swallowed {
                // SLE_κ towards a finite target is SLE_κ(κ−6) with the force point at the target
                return Ok(if s4.is_finite() { -(kappa - 6.0) / s4 } else { 0.0 });
            }
            if p.nu < 0.0 && s[0] < X2_FLOOR * s[1] {
                return Err(Error::Integration { t: f64::NAN, msg: "x2 swallowed before x3".into() });
            }
            p.drift_gaps(s[0], s[1], s4)
        },
        |s| {
            // x2 and x3 merge when the curve closes off [x2, x3] from the right
            if s[1] < SWALLOW_TOL || s[1] - s[0] <= X2_FLOOR * s[1] {
                return Control::Swallow;
            }
            // ν ≥ 0: V² − W is at least critical Bessel and never reaches 0
            if p.nu >= 0.0 {
                s[0] = s[0].max(X2_FLOOR * s[1]);
            }
            Control::Continue
        },
        Some(&[true, true, false]),
    )
}

// ---------------------------------------------------------------------------
// SLE_κ(ρ)

/// A force point and its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcePoint {
    pub y: f64,
    pub rho: f64,
}

/// SLE_κ(ρ^L; ρ^R) started from w0. Left points are listed from the nearest
/// (largest) outwards, right points from the nearest (smallest) outwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleRhoParams {
    pub kappa: f64,
    pub w0: f64,
    pub left: Vec<ForcePoint>,
    pub right: Vec<ForcePoint>,
}

impl SleRhoParams {
    pub fn new(kappa: f64, w0: f64, left: Vec<ForcePoint>, right: Vec<ForcePoint>) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() || !w0.is_finite() {
            return Err(Error::Parameter(format!("kappa = {kappa}, w0 = {w0}")));
        }
        let mut prev = w0;
        for f in &left {
            if !(f.y < prev) || !f.rho.is_finite() {
                return Err(Error::Order("left force points must decrease strictly from w0".into()));
            }
            prev = f.y;
        }
        prev = w0;
        for f in &right {
            if !(f.y > prev) || !f.rho.is_finite() {
                return Err(Error::Order("right force points must increase strictly from w0".into()));
            }
            prev = f.y;
        }
        Ok(SleRhoParams { kappa, w0, left, right })
    }

    fn points(&self) -> impl Iterator<Item = &ForcePoint> {
        self.left.iter().chain(self.right.iter())
    }

    /// Σ ρ_i/(W − V^i); infinite force points contribute nothing.
    pub fn drift(&self, w: f64, v: &[f64]) -> f64 {
        let s: Vec<f64> = v.iter().map(|x| x - w).collect();
        self.drift_gaps(&s)
    }

    fn drift_gaps(&self, s: &[f64]) -> f64 {
        self.points().zip(s).filter(|(_, x)| x.is_finite()).map(|(f, x)| -f.rho / x).sum()
    }
}

/// Integrates SLE_κ(ρ) until `t_max` or the continuation threshold. A force
/// cluster that meets W with total weight > −2 is reflected. `dt` caps steps
/// at the initial scale and grows with it.
pub fn simulate_sle_rho(p: &SleRhoParams, t_max: f64, dt: f64, rng: &mut Stream) -> Result<DrivingPath> {
    let nl = p.left.len();
    let rho: Vec<f64> = p.points().map(|f| f.rho).collect();
    let v0: Vec<f64> = p.points().map(|f| f.y).collect();
    integrate(
        p.kappa,
        p.w0,
        v0,
        t_max,
        dt,
        true,
        rng,
        |s, _| Ok(p.drift_gaps(s)),
        |s| {
            for (range, sign) in [(0..nl, -1.0), (nl..s.len(), 1.0)] {
                let mut cluster = 0.0;
                let mut hit = false;
                for i in range.clone() {
                    if sign * s[i] < SLE_RHO_TOL {
                        cluster += rho[i];
                        hit = true;
                    }
                }
                if hit && cluster <= -2.0 {
                    return Control::Threshold;
                }
                if hit {
                    for x in s[range].iter_mut() {
                        if sign * *x < SLE_RHO_TOL {
                            *x = sign * x.abs().max(SLE_RHO_TOL);
                        }
                    }
                }
            }
            Control::Continue
        },
        None,
    )
}

// ---------------------------------------------------------------------------
// SLE₂(−1,−1;−1,−1) and its hitting point

/// Branch from w0 ∈ (a, b) in H with d = ∞: SLE₂(−1,−1;−1,−1) with force
/// points (d, a; b, c), run until it hits (c, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchParams {
    pub a: f64,
    pub w0: f64,
    pub b: f64,
    pub c: f64,
    /// Bookkeeping target on (c, ∞); the driver does not depend on it.
    pub target: f64,
}

impl BranchParams {
    pub fn new(a: f64, w0: f64, b: f64, c: f64, target: f64) -> Result<Self> {
        if !(a < w0 && w0 < b && b < c && c < target) {
            return Err(Error::Order(format!("need a<w0<b<c<target, got {a}, {w0}, {b}, {c}, {target}")));
        }
        Ok(BranchParams { a, w0, b, c, target })
    }

    /// The force point at d = ∞ exerts no drift and is omitted.
    pub fn sle_rho(&self) -> SleRhoParams {
        SleRhoParams {
            kappa: 2.0,
            w0: self.w0,
            left: vec![ForcePoint { y: self.a, rho: -1.0 }],
            right: vec![ForcePoint { y: self.b, rho: -1.0 }, ForcePoint { y: self.c, rho: -1.0 }],
        }
    }
}

/// Simulated branch with the point where it reaches (c, ∞).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchHit {
    pub path: DrivingPath,
    pub hit: f64,
}

/// Runs the branch until V^c − W < tolerance and locates the hitting point by
/// flowing W + 4(V^c − W) backwards through the recorded Loewner chain.
pub fn simulate_branch(p: &BranchParams, dt: f64, rng: &mut Stream) -> Result<BranchHit> {
    let path = simulate_sle_rho(&p.sle_rho(), f64::INFINITY, dt, rng)?;
    if !path.threshold_hit {
        return Err(Error::Internal("branch stopped before reaching (c, ∞)".into()));
    }
    let k = path.len() - 1;
    let gap = path.gap(2, k);
    let hit = backward_flow_gap(&path, k, 4.0 * gap, 2.0);
    Ok(BranchHit { path, hit })
}

/// Preimage of the gap `v` under one integrator step
/// u ↦ u·exp((2h/u − ΔW)/u − κh/(2u²)), on the branch where the step is
/// increasing. Returns 0 when `v` lies below that branch (the point was swallowed).
fn invert_gap_step(v: f64, h: f64, dw: f64, kappa: f64) -> f64 {
    let (sgn, b, dw) = if v < 0.0 { (-1.0, -v, -dw) } else { (1.0, v, dw) };
    if b == 0.0 {
        return 0.0;
    }
    let c = 2.0 - 0.5 * kappa;
    let lb = b.ln();
    let phi = |a: f64| a.ln() + c * h / (a * a) - dw / a - lb;
    let dphi = |a: f64| 1.0 / a - 2.0 * c * h / (a * a * a) + dw / (a * a);
    let disc = dw * dw + 8.0 * c * h;
    let root = if disc >= 0.0 { 0.5 * (-dw + disc.sqrt()) } else { 0.0 };
    let mut lo = root.max(b * 1e-300);
    if phi(lo) >= 0.0 {
        return 0.0;
    }
    let mut hi = 2.0 * b.max(lo);
    while phi(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut a = (b - 2.0 * h / b + dw).clamp(lo, hi);
    for _ in 0..100 {
        let f = phi(a);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let step = f / dphi(a);
        let next = a - step;
        let inside = next >= lo && next <= hi && step.is_finite();
        if inside && step.abs() <= 1e-15 * a {
            a = next;
            break;
        }
        a = if inside { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * a {
            break;
        }
    }
    sgn * a
}

/// Real preimage of x under the discrete map g_{t_k}, inverting each
/// integrator step of a driver simulated with parameter `kappa`.
pub fn backward_flow(path: &DrivingPath, k: usize, x: f64, kappa: f64) -> f64 {
    backward_flow_gap(path, k, x - path.w[k], kappa)
}

/// As [`backward_flow`] for the point W_k + r, carried relative to W so that
/// r far below the resolution of W survives.
pub fn backward_flow_gap(path: &DrivingPath, k: usize, r: f64, kappa: f64) -> f64 {
    let mut r = r;
    for j in (0..k).rev() {
        let (h, dw) = path.step(j);
        r = invert_gap_step(r, h, dw, kappa);
    }
    path.w[0] + r
}

// ---------------------------------------------------------------------------
// Curves and the zipper

fn slit_sqrt(zeta: C64, reference: C64) -> C64 {
    let s = zeta.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re * reference.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Inverse of the vertical-slit map of capacity h with base u.
fn slit_inverse(z: C64, u: f64, h: f64) -> C64 {
    let d = z - u;
    if d == C64::new(0.0, 0.0) {
        return C64::new(u, 2.0 * h.sqrt());
    }
    u + slit_sqrt(d * d - 4.0 * h, d)
}

/// Vertical-slit map removing the slit [u, u + iy].
fn slit_forward(z: C64, u: f64, y: f64) -> C64 {
    let d = z - u;
    u + slit_sqrt(d * d + y * y, d)
}

/// Curve points at `n_grid + 1` evenly spaced step indices, each obtained by
/// composing the inverse vertical-slit maps of all earlier steps.
pub fn trace_from_driver(d: &DrivingPath, n_grid: usize) -> Curve {
    let n = d.len() - 1;
    if n == 0 || n_grid == 0 {
        return vec![C64::new(d.w[0], 0.0)];
    }
    let m = n_grid.min(n);
    let mut out = vec![C64::new(d.w[0], 0.0)];
    for g in 1..=m {
        let k = (g * n + m / 2) / m;
        let mut z = C64::new(d.w[k], 0.0);
        for j in (1..=k).rev() {
            z = slit_inverse(z, d.w[j], d.times[j] - d.times[j - 1]);
        }
        out.push(z);
    }
    out
}

/// Driver of a curve by sequential vertical-slit welding (zipper).
pub fn extract_driver(curve: &[C64]) -> Result<DrivingPath> {
    if curve.is_empty() {
        return Err(Error::Geometry("empty curve".into()));
    }
    let scale = curve.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if curve[0].im.abs() > 1e-12 * scale {
        return Err(Error::Geometry(format!("curve starts off the real axis at {}", curve[0])));
    }
    if let Some(k) = curve.iter().position(|z| z.im < -1e-12 * scale) {
        return Err(Error::Geometry(format!("point {k} lies below the real axis")));
    }
    let mut pts: Vec<C64> = curve[1..].to_vec();
    let mut times = vec![0.0];
    let mut w = vec![curve[0].re];
    let mut t = 0.0;
    for k in 0..pts.len() {
        let p = pts[k];
        if p.im < -1e-9 * scale {
            return Err(Error::Geometry(format!("point {} leaves the half-plane (image {p})", k + 1)));
        }
        let y = p.im.max(0.0);
        if !(t + y * y / 4.0 > t) {
            continue;
        }
        let u = p.re;
        for q in pts[k + 1..].iter_mut() {
            *q = slit_forward(*q, u, y);
        }
        t += y * y / 4.0;
        times.push(t);
        w.push(u);
    }
    DrivingPath::from_samples(times, w)
}

// ---------------------------------------------------------------------------
// Observables

/// M_t(z) = 𝒦(S_t, U_t)/𝒦(U_t) with S_t = arcsin √((g_t(z)−W)/(V²−W)) and
/// U_t = (V²−W)/(V³−W), along an hSLE driver with x4 = ∞. The series stops
/// when the probe or V³ is swallowed.
pub fn hsle_observable_series(d: &DrivingPath, z: C64) -> Result<Vec<(f64, C64)>> {
    if d.force.len() != 2 {
        return Err(Error::Domain("expected an hSLE driver with force points (V², V³) and x4 = ∞".into()));
    }
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("probe {z} not in the upper half-plane")));
    }
    let end = d.swallow.unwrap_or(d.len() - 1);
    let mut g = z;
    let mut out = Vec::with_capacity(end + 1);
    for k in 0..=end {
        if k > 0 {
            let (h, _) = d.step(k - 1);
            g += 2.0 * h / (g - d.w[k - 1]);
        }
        let w = d.w[k];
        let (sx, sy) = (d.gap(0, k), d.gap(1, k));
        if (g - w).norm() < SWALLOW_TOL || !(g.im > 0.0) || sy < SWALLOW_TOL {
            break;
        }
        let u = sx / sy;
        let s = ((g - w) / sx).sqrt().asin();
        let s = C64::new(s.re.clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2), s.im.max(0.0));
        out.push((d.times[k], elliptic_k_incomplete(s, u)? / elliptic_k(u)?));
    }
    Ok(out)
}

/// M_t of the SLE_κ(ρ) Radon–Nikodym density along a driver simulated with
/// `p`'s force points present (one side only). g_t(y_i) and log g_t′(y_i) are
/// advanced by Euler steps of their ODEs alongside W.
pub fn sle_rho_radon_nikodym(d: &DrivingPath, p: &SleRhoParams) -> Result<Vec<f64>> {
    if !p.left.is_empty() && !p.right.is_empty() {
        return Err(Error::Domain("force points must lie on one side".into()));
    }
    let fp: Vec<ForcePoint> = p.points().copied().collect();
    if d.force.len() != fp.len() {
        return Err(Error::Domain("driver was not simulated with these force points".into()));
    }
    let kappa = p.kappa;
    let end = d.swallow.unwrap_or(d.len());
    let mut g: Vec<f64> = fp.iter().map(|f| f.y).collect();
    let mut logd = vec![0.0; fp.len()];
    let mut out = Vec::with_capacity(d.len());
    for k in 0..d.len() {
        if k >= end {
            return Err(Error::Domain(format!("evaluation past the swallowing time t = {}", d.times[k])));
        }
        if k > 0 {
            let (h, _) = d.step(k - 1);
            for (gi, l) in g.iter_mut().zip(logd.iter_mut()) {
                let gap = *gi - d.w[k - 1];
                *l -= 2.0 * h / (gap * gap);
                *gi += 2.0 * h / gap;
            }
        }
        let mut lm = 0.0;
        for (i, f) in fp.iter().enumerate() {
            let gap = (g[i] - d.w[k]).abs();
            if !(gap > 0.0) {
                return Err(Error::Domain(format!("force point {i} reached the driver")));
            }
            lm += f.rho * (f.rho + 4.0 - kappa) / (4.0 * kappa) * logd[i] + f.rho / kappa * gap.ln();
            for (j, q) in fp.iter().enumerate().skip(i + 1) {
                lm += f.rho * q.rho / (2.0 * kappa) * (g[j] - g[i]).abs().ln();
            }
        }
        out.push(lm.exp());
    }
    Ok(out)
}

/// g_t′(x)·F(g_t(x); g_t(a), W_t, g_t(b), g_t(c)) along a branch driver
/// (force trajectories a, b, c), for x > c.
pub fn branch_observable_series(d: &DrivingPath, x: f64) -> Result<Vec<(f64, f64)>> {
    if d.force.len() != 3 {
        return Err(Error::Domain("expected force trajectories (a, b, c)".into()));
    }
    if !(x > d.force[2][0]) {
        return Err(Error::Domain(format!("x = {x} must exceed c")));
    }
    let end = d.swallow.unwrap_or(d.len() - 1);
    let (mut g, mut logd) = (x, 0.0);
    let mut out = Vec::with_capacity(end + 1);
    for k in 0..=end {
        if k > 0 {
            let (h, _) = d.step(k - 1);
            let gap = g - d.w[k - 1];
            logd += (1.0 - 2.0 * h / (gap * gap)).ln();
            g += 2.0 * h / gap;
        }
        let pp = PoissonParams { a: d.force[0][k], w: d.w[k], b: d.force[1][k], c: d.force[2][k] };
        if !(pp.a < pp.w && pp.w < pp.b && pp.b < pp.c && pp.c < g) {
            break;
        }
        out.push((d.times[k], logd.exp() * normal_deriv_f(g, &pp)?));
    }
    Ok(out)
}

/// Value of a series at the last sample time ≤ t.
pub fn series_at<T: Copy>(s: &[(f64, T)], t: f64) -> Option<T> {
    let i = s.partition_point(|(u, _)| *u <= t);
    if i == 0 || i == s.len() && s[i - 1].0 < t - 1e-12 * t.abs().max(1.0) {
        None
    } else {
        Some(s[i - 1].1)
    }
}

// ---------------------------------------------------------------------------
// Peano curves

/// Rectangle quads: the medial rectangle [−δ/2, (N+½)δ]×[0, Mδ] mapped onto H
/// with a◇, b◇, c◇, d◇ ↦ 0, 1, x3, ∞.
pub fn medial_to_half_plane(q: &QuadLattice) -> Result<(RectMap, impl Fn(C64) -> C64 + '_)> {
    let (n, _) = q.rect.ok_or_else(|| Error::Config("conformal map available for rectangle quads only".into()))?;
    let k = q.rect_modulus().unwrap();
    let rm = RectMap::with_modulus(k)?;
    let width = (n as f64 + 1.0) * q.delta;
    let f = move |z: C64| {
        let w = (z + 0.5 * q.delta) / width;
        rm.inverse(w)
    };
    Ok((rm, f))
}

/// η^L in H up to its first corner on (cd), keeping every `stride`-th point.
pub fn peano_curve_in_h(q: &QuadLattice, pair: &PeanoPair, stride: usize) -> Result<Curve> {
    let (_, f) = medial_to_half_plane(q)?;
    let top = q.rect.unwrap().1 as i32;
    let stop = pair
        .eta_l
        .iter()
        .position(|&k| q.vertices[q.corners[k].vertex].1 == top)
        .ok_or_else(|| Error::Internal("η^L never reaches (cd)".into()))?;
    let stride = stride.max(1);
    let mut out = vec![C64::new(0.0, 0.0)];
    for (i, &k) in pair.eta_l[..=stop].iter().enumerate() {
        if (i + 1) % stride == 0 || i == stop {
            let z = f(q.corner_pos(k));
            out.push(C64::new(z.re, z.im.max(0.0)));
        }
    }
    Ok(out)
}
