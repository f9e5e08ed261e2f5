//! Rectangle map of a half-plane quad, the reflected Poisson kernel of the
//! rectangle, the endpoint density ρ_K and the Poisson-kernel PDE check.

use crate::error::{Error, Result};
use crate::specialfn::{elliptic_f_sin2, elliptic_k, jacobi_sn};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Conformal map of (H; x1, x2, x3, x4) onto (0,1)×(0,K) sending the marked
/// points to 0, 1, 1+iK, iK. `x4` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectMap {
    pub x: [f64; 4],
    /// Parameter of the elliptic integral after sending x4 to ∞.
    pub m: f64,
    /// Conformal modulus K.
    pub modulus: f64,
    kk: f64,
    t1: f64,
    span: f64,
}

impl RectMap {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Result<Self> {
        let ordered = x1 < x2 && x2 < x3 && x3 < x4 && x1.is_finite() && x3.is_finite();
        if !ordered {
            return Err(Error::Domain(format!("marked points not increasing: {x1}, {x2}, {x3}, {x4}")));
        }
        let x = [x1, x2, x3, x4];
        let t = |v: f64| mobius(v, x4);
        let (t1, t2, t3) = (t(x1), t(x2), t(x3));
        let span = t2 - t1;
        let m = span / (t3 - t1);
        let kk = elliptic_k(m)?;
        let modulus = elliptic_k(1.0 - m)? / kk;
        Ok(RectMap { x, m, modulus, kk, t1, span })
    }

    /// Rectangle map (0, 1, 1/m, ∞) with the given modulus.
    pub fn with_modulus(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("modulus {k} must be positive")));
        }
        // K(m) = 𝒦(1−m)/𝒦(m) decreases from ∞ to 0 on (0,1); bisect in logit(m).
        let modk = |m: f64| elliptic_k(1.0 - m).unwrap() / elliptic_k(m).unwrap();
        let (mut lo, mut hi) = (-60.0f64, 60.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let m = 1.0 / (1.0 + (-mid).exp());
            if modk(m) > k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m = 1.0 / (1.0 + (-0.5 * (lo + hi)).exp());
        RectMap::new(0.0, 1.0, 1.0 / m, f64::INFINITY)
    }

    fn zeta(&self, z: C64) -> C64 {
        let tz = if self.x[3].is_infinite() { z } else { -1.0 / (z - self.x[3]) };
        (tz - self.t1) / self.span
    }

    fn dzeta(&self, z: C64) -> C64 {
        let d = if self.x[3].is_infinite() {
            C64::new(1.0, 0.0)
        } else {
            let q = z - self.x[3];
            1.0 / (q * q)
        };
        d / self.span
    }

    /// f(z) for z in the closed upper half-plane.
    pub fn eval(&self, z: C64) -> C64 {
        if z.im < 0.0 {
            return C64::new(f64::NAN, f64::NAN);
        }
        for (i, &xi) in self.x.iter().enumerate() {
            if z.im == 0.0 && z.re == xi {
                return self.corner(i);
            }
        }
        let mut zeta = self.zeta(z);
        if z.im == 0.0 {
            zeta.im = 0.0;
        } else {
            zeta.im = zeta.im.max(0.0);
        }
        elliptic_f_sin2(zeta, self.m) / self.kk
    }

    fn corner(&self, i: usize) -> C64 {
        match i {
            0 => C64::new(0.0, 0.0),
            1 => C64::new(1.0, 0.0),
            2 => C64::new(1.0, self.modulus),
            _ => C64::new(0.0, self.modulus),
        }
    }

    /// f'(z); on the real axis the boundary value from above.
    pub fn deriv(&self, z: C64) -> C64 {
        let zeta = self.zeta(z);
        let one = C64::new(1.0, 0.0);
        let (s0, s1, s2) = if z.im == 0.0 {
            let r = zeta.re;
            (C64::new(r, 0.0).sqrt(), C64::new(1.0 - r, -0.0).sqrt(), C64::new(1.0 - self.m * r, -0.0).sqrt())
        } else {
            (zeta.sqrt(), (one - zeta).sqrt(), (one - self.m * zeta).sqrt())
        };
        self.dzeta(z) / (2.0 * self.kk * s0 * s1 * s2)
    }

    /// Inverse map from the closed rectangle to the closed half-plane.
    pub fn inverse(&self, w: C64) -> C64 {
        let s = jacobi_sn(w * self.kk, self.m);
        let tz = self.t1 + self.span * s * s;
        if self.x[3].is_infinite() {
            tz
        } else {
            self.x[3] - 1.0 / tz
        }
    }
}

fn mobius(v: f64, x4: f64) -> f64 {
    if x4.is_infinite() {
        v
    } else {
        -1.0 / (v - x4)
    }
}

/// Conformal modulus of (H; x1, x2, x3, x4).
pub fn modulus(x1: f64, x2: f64, x3: f64, x4: f64) -> Result<f64> {
    Ok(RectMap::new(x1, x2, x3, x4)?.modulus)
}

/// Parameters a < w < b < c of the half-plane Poisson kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    pub a: f64,
    pub w: f64,
    pub b: f64,
    pub c: f64,
}

impl PoissonParams {
    pub fn new(a: f64, w: f64, b: f64, c: f64) -> Result<Self> {
        if !(a < w && w < b && b < c) || !(a.is_finite() && c.is_finite()) {
            return Err(Error::Domain(format!("need a<w<b<c, got {a}, {w}, {b}, {c}")));
        }
        Ok(PoissonParams { a, w, b, c })
    }

    pub fn rect_map(&self) -> Result<RectMap> {
        RectMap::new(self.a, self.b, self.c, f64::INFINITY)
    }
}

/// Pole of the rectangle Poisson kernel on a horizontal edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgePoint {
    /// r = y on the bottom edge.
    Bottom(f64),
    /// r = y + iK on the top edge.
    Top(f64),
}

/// Number of reflections kept on each side.
pub fn series_cutoff(k: f64) -> i64 {
    (40.0 * k / PI + 5.0).ceil() as i64
}

/// Poisson kernel of (0,1)×(0,K), zero on the horizontal edges away from r,
/// reflecting on the vertical edges, normalized to be nonnegative.
pub fn poisson_kernel(z: C64, r: EdgePoint, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("K = {k} must be positive")));
    }
    let (rc, sign) = match r {
        EdgePoint::Bottom(y) => (C64::new(y, 0.0), -1.0),
        EdgePoint::Top(y) => (C64::new(y, k), 1.0),
    };
    if (z - rc).norm() == 0.0 {
        return Err(Error::Singularity("z equals the pole".into()));
    }
    let n = series_cutoff(k);
    let s = PI / k;
    let one = C64::new(1.0, 0.0);
    let mut acc = 0.0;
    for j in -n..=n {
        let shift = 2.0 * j as f64;
        let e1 = ((shift - rc + z) * s).exp();
        let e2 = ((shift - rc - z.conj()) * s).exp();
        acc += (one / (e1 - one)).im + (one / (e2 - one)).im;
    }
    Ok(sign * acc)
}

/// ρ_K(x, y): joint density of the rescaled branch endpoints.
pub fn rho_density(x: f64, y: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) || !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("rho_density({x}, {y}, {k})")));
    }
    Ok(rho_unchecked(x, y, k))
}

pub(crate) fn rho_unchecked(x: f64, y: f64, k: f64) -> f64 {
    let n = series_cutoff(k);
    let s = PI / (2.0 * k);
    let sech2 = |t: f64| {
        let c = t.cosh();
        1.0 / (c * c)
    };
    let mut acc = 0.0;
    for j in -n..=n {
        let sh = 2.0 * j as f64;
        acc += sech2(s * (x - y - sh)) + sech2(s * (x + y - sh));
    }
    PI / (4.0 * k) * acc
}

/// ∫₀^y ρ_K(x, t) dt in closed form.
pub fn rho_cdf(x: f64, y: f64, k: f64) -> f64 {
    let n = series_cutoff(k);
    let s = PI / (2.0 * k);
    let mut acc = 0.0;
    for j in -n..=n {
        let sh = 2.0 * j as f64;
        acc += (s * (x + y - sh)).tanh() - (s * (x - y - sh)).tanh();
    }
    0.5 * acc
}

/// Inverse conditional CDF: y with ∫₀^y ρ_K(x, t) dt = u.
pub fn rho_sample(x: f64, k: f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut y = u.clamp(0.0, 1.0);
    for _ in 0..100 {
        let g = rho_cdf(x, y, k) - u;
        if g < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if g.abs() < 1e-14 || hi - lo < 1e-15 {
            break;
        }
        // safeguarded Newton step
        let step = y - g / rho_unchecked(x, y, k);
        y = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    y
}

/// P(z; a, w, b, c) = P_K(f(z), f(w)) with f the rectangle map of (a, b, c, ∞).
pub fn poisson_half_plane(z: C64, p: &PoissonParams) -> Result<f64> {
    let rm = p.rect_map()?;
    let fz = rm.eval(z);
    let fw = rm.eval(C64::new(p.w, 0.0)).re;
    poisson_kernel(fz, EdgePoint::Bottom(fw), rm.modulus)
}

/// F(x; a, w, b, c) = |f'(x)| ρ_K(f(w), Re f(x)) for x > c.
pub fn normal_deriv_f(x: f64, p: &PoissonParams) -> Result<f64> {
    if !(x > p.c) {
        return Err(Error::Domain(format!("x = {x} must exceed c = {}", p.c)));
    }
    let rm = p.rect_map()?;
    let fw = rm.eval(C64::new(p.w, 0.0)).re;
    let fx = rm.eval(C64::new(x, 0.0)).re.clamp(0.0, 1.0);
    let d = rm.deriv(C64::new(x, 0.0)).norm();
    Ok(d * rho_unchecked(fw, fx, rm.modulus))
}

/// Terms of the generator applied to P, by central differences.
#[derive(Debug, Clone, Copy)]
pub struct PdeTerms {
    pub da: f64,
    pub db: f64,
    pub dc: f64,
    pub dw: f64,
    pub dww: f64,
    pub dx: f64,
    pub dy: f64,
}

impl PdeTerms {
    pub fn compute(p: &PoissonParams, z: C64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Step(format!("h = {h} must be positive")));
        }
        let gap = (p.w - p.a).min(p.b - p.w).min(p.c - p.b);
        if z.im <= 4.0 * h || gap <= 4.0 * h {
            return Err(Error::Step(format!("step {h} too large for z = {z} and gap {gap}")));
        }
        let ev = |q: PoissonParams, zz: C64| poisson_half_plane(zz, &q);
        let d1 = |plus: PoissonParams, minus: PoissonParams| -> Result<f64> {
            Ok((ev(plus, z)? - ev(minus, z)?) / (2.0 * h))
        };
        let sh = |da: f64, dw: f64, db: f64, dc: f64| PoissonParams { a: p.a + da, w: p.w + dw, b: p.b + db, c: p.c + dc };
        let p0 = ev(*p, z)?;
        Ok(PdeTerms {
            da: d1(sh(h, 0.0, 0.0, 0.0), sh(-h, 0.0, 0.0, 0.0))?,
            db: d1(sh(0.0, 0.0, h, 0.0), sh(0.0, 0.0, -h, 0.0))?,
            dc: d1(sh(0.0, 0.0, 0.0, h), sh(0.0, 0.0, 0.0, -h))?,
            dw: d1(sh(0.0, h, 0.0, 0.0), sh(0.0, -h, 0.0, 0.0))?,
            dww: (ev(sh(0.0, h, 0.0, 0.0), z)? - 2.0 * p0 + ev(sh(0.0, -h, 0.0, 0.0), z)?) / (h * h),
            dx: (ev(*p, z + h)? - ev(*p, z - h)?) / (2.0 * h),
            dy: (ev(*p, z + C64::new(0.0, h))? - ev(*p, z - C64::new(0.0, h))?) / (2.0 * h),
        })
    }

    /// Coefficient-weighted terms in the order (a, b, c, w, ww, x, y).
    pub fn weighted(&self, p: &PoissonParams, z: C64) -> [f64; 7] {
        let PoissonParams { a, w, b, c } = *p;
        let drift = 1.0 / (a - w) + 1.0 / (b - w) + 1.0 / (c - w);
        let q = 2.0 / (z - w);
        [
            2.0 / (a - w) * self.da,
            2.0 / (b - w) * self.db,
            2.0 / (c - w) * self.dc,
            drift * self.dw,
            self.dww,
            q.re * self.dx,
            q.im * self.dy,
        ]
    }
}

/// |𝒟P(z; a, w, b, c)| by central differences with step h.
pub fn pde_residual(p: &PoissonParams, z: C64, h: f64) -> Result<f64> {
    let t = PdeTerms::compute(p, z, h)?;
    Ok(t.weighted(p, z).iter().sum::<f64>().abs())
}

/// Σ 1/(x_i − w) over the three finite marked points (equals 2f''(w)/f'(w)).
pub fn drift_coefficient(p: &PoissonParams) -> f64 {
    1.0 / (p.a - p.w) + 1.0 / (p.b - p.w) + 1.0 / (p.c - p.w)
}
