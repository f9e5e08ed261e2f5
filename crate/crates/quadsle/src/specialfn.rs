//! Special functions: Gamma and digamma, the Gauss hypergeometric function
//! on [0,1), complete and incomplete elliptic integrals of the first kind,
//! the Carlson form R_F and Jacobi elliptic functions.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const SERIES_REL_TOL: f64 = 1e-17;
const SERIES_MAX_TERMS: usize = 1_000_000;
/// Distance below which C−A−B is treated as an integer.
const INTEGER_GAP: f64 = 1e-8;

/// Parameters (A, B, C) of ₂F₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HypParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = HypParams { a, b, c };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::Parameter("non-finite hypergeometric parameter".into()));
        }
        if is_nonpositive_integer(self.c) {
            return Err(Error::Parameter(format!("C = {} is a nonpositive integer", self.c)));
        }
        Ok(())
    }

    fn shifted(&self) -> HypParams {
        HypParams { a: self.a + 1.0, b: self.b + 1.0, c: self.c + 1.0 }
    }
}

/// (κ, ν) of the hypergeometric SLE family.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KappaNu {
    pub kappa: f64,
    pub nu: f64,
}

impl KappaNu {
    pub fn new(kappa: f64, nu: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() || !nu.is_finite() {
            return Err(Error::Parameter(format!("invalid (kappa, nu) = ({kappa}, {nu})")));
        }
        Ok(KappaNu { kappa, nu })
    }

    /// A = (2ν+4)/κ, B = 1−4/κ, C = (2ν+8)/κ.
    pub fn hyp_params(&self) -> HypParams {
        HypParams {
            a: (2.0 * self.nu + 4.0) / self.kappa,
            b: 1.0 - 4.0 / self.kappa,
            c: (2.0 * self.nu + 8.0) / self.kappa,
        }
    }

    /// h = (6−κ)/(2κ).
    pub fn h(&self) -> f64 {
        (6.0 - self.kappa) / (2.0 * self.kappa)
    }

    /// a = (ν+2)/κ.
    pub fn a(&self) -> f64 {
        (self.nu + 2.0) / self.kappa
    }

    /// b = (ν+2)(ν+6−κ)/(4κ).
    pub fn b(&self) -> f64 {
        (self.nu + 2.0) * (self.nu + 6.0 - self.kappa) / (4.0 * self.kappa)
    }

    pub fn f(&self, z: f64) -> Result<f64> {
        gauss_2f1(self.hyp_params(), z)
    }

    pub fn f_deriv(&self, z: f64) -> Result<f64> {
        gauss_2f1_deriv(self.hyp_params(), z)
    }
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Γ(x) for real x (Lanczos approximation; reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// 1/Γ(x), zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// ψ(x) = Γ'(x)/Γ(x).
pub fn digamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        // reflection
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let r = 1.0 / (y * y);
    // asymptotic series with Bernoulli numbers
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    acc + y.ln() - 0.5 / y - tail
}

/// Σ (a)_n (b)_n / ((c)_n n!) z^n for |z| < 1.
fn series_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() < SERIES_REL_TOL * sum.abs() {
            return Ok(sum);
        }
        if !sum.is_finite() {
            break;
        }
    }
    Err(Error::Convergence(format!("2F1({a},{b};{c};{z}) series")))
}

/// ₂F₁(A,B,C;z) for z ∈ [0,1).
///
/// Power series for z ≤ 1/2. Above that the expansion in 1−z is used:
/// the two-term connection formula when C−A−B is not an integer and the
/// logarithmic (digamma) expansion when it is.
pub fn gauss_2f1(p: HypParams, z: f64) -> Result<f64> {
    p.validate()?;
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("z = {z} outside [0,1)")));
    }
    if z >= 1.0 {
        return Err(Error::Domain(format!("z = {z} outside [0,1)")));
    }
    let HypParams { a, b, c } = p;
    if z <= 0.5 || is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return series_2f1(a, b, c, z);
    }
    let s = c - a - b;
    let m = s.round();
    if (s - m).abs() < INTEGER_GAP {
        if m >= 0.0 {
            log_connection(a, b, m as usize, z).map(|v| v * gamma(c))
        } else {
            // Euler transform lands on c' − a' − b' = −m > 0.
            let k = (-m) as usize;
            let (a2, b2) = (c - a, c - b);
            let g = log_connection(a2, b2, k, z)? * gamma(c);
            Ok((1.0 - z).powf(m) * g)
        }
    } else {
        let w = 1.0 - z;
        let t1 = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b);
        let t2 = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b);
        let mut v = 0.0;
        if t1 != 0.0 {
            v += t1 * series_2f1(a, b, 1.0 - s, w)?;
        }
        if t2 != 0.0 {
            v += t2 * w.powf(s) * series_2f1(c - a, c - b, 1.0 + s, w)?;
        }
        Ok(v)
    }
}

/// Regularized ₂F₁(a,b;a+b+m;z)/Γ(a+b+m) via the logarithmic expansion in 1−z.
fn log_connection(a: f64, b: f64, m: usize, z: f64) -> Result<f64> {
    let w = 1.0 - z;
    let mf = m as f64;
    // finite part
    let mut finite = 0.0;
    if m > 0 {
        let pref = rgamma(a + mf) * rgamma(b + mf);
        if pref != 0.0 {
            let mut poch = 1.0; // (a)_k (b)_k / k!
            let mut zpow = 1.0; // (z−1)^k
            for k in 0..m {
                let kf = k as f64;
                finite += poch * factorial(m - k - 1) * zpow;
                poch *= (a + kf) * (b + kf) / (kf + 1.0);
                zpow *= -w;
            }
            finite *= pref;
        }
    }
    let pref = rgamma(a) * rgamma(b);
    if pref == 0.0 {
        return Ok(finite);
    }
    let lw = w.ln();
    let mut psi_k1 = digamma(1.0);
    let mut psi_km1 = digamma(mf + 1.0);
    let mut psi_a = digamma(a + mf);
    let mut psi_b = digamma(b + mf);
    let mut coef = 1.0 / factorial(m); // (a+m)_k (b+m)_k / (k! (k+m)!)
    let mut wk = 1.0;
    let mut sum = 0.0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        let term = coef * wk * (lw - psi_k1 - psi_km1 + psi_a + psi_b);
        sum += term;
        if k > 2 && (term.abs() < SERIES_REL_TOL * sum.abs() || term == 0.0) {
            let zm = (-w).powi(m as i32);
            return Ok(finite - zm * pref * sum);
        }
        coef *= (a + mf + kf) * (b + mf + kf) / ((kf + 1.0) * (kf + mf + 1.0));
        wk *= w;
        psi_k1 += 1.0 / (kf + 1.0);
        psi_km1 += 1.0 / (kf + mf + 1.0);
        psi_a += 1.0 / (a + mf + kf);
        psi_b += 1.0 / (b + mf + kf);
    }
    Err(Error::Convergence("logarithmic connection series".into()))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// F'(z) = (AB/C)·₂F₁(A+1,B+1,C+1;z).
pub fn gauss_2f1_deriv(p: HypParams, z: f64) -> Result<f64> {
    p.validate()?;
    let pre = p.a * p.b / p.c;
    if pre == 0.0 {
        if !(0.0..1.0).contains(&z) {
            return Err(Error::Domain(format!("z = {z} outside [0,1)")));
        }
        return Ok(0.0);
    }
    Ok(pre * gauss_2f1(p.shifted(), z)?)
}

/// ₂F₁(A,B,C;1) = Γ(C)Γ(C−A−B)/(Γ(C−A)Γ(C−B)), requires C > A+B.
pub fn gauss_2f1_at_one(p: HypParams) -> Result<f64> {
    p.validate()?;
    let s = p.c - p.a - p.b;
    if !(s > 0.0) {
        return Err(Error::Domain("value at 1 requires C > A+B".into()));
    }
    Ok(gamma(p.c) * gamma(s) * rgamma(p.c - p.a) * rgamma(p.c - p.b))
}

/// Limit of (1−z)^{1−8/κ}F(z) (κ>8) or F(z)/log(1/(1−z)) (κ=8) as z→1.
pub fn hsle_asymptotic_const(kn: KappaNu) -> Result<f64> {
    let KappaNu { kappa, nu } = kn;
    if kappa < 8.0 {
        return Err(Error::Domain(format!("kappa = {kappa} < 8")));
    }
    if !(nu > -2.0) {
        return Err(Error::Domain(format!("nu = {nu} <= -2")));
    }
    if kappa == 8.0 {
        let v = (nu + 2.0) * gamma(2.0 + nu / 4.0) / ((nu + 4.0) * gamma(1.5 + nu / 4.0));
        Ok(v / PI.sqrt())
    } else {
        Ok(gamma((2.0 * nu + 8.0) / kappa) * gamma(1.0 - 8.0 / kappa)
            / (gamma((2.0 * nu + 4.0) / kappa) * gamma(1.0 - 4.0 / kappa)))
    }
}

/// Complete elliptic integral 𝒦(m) = ∫₀^{π/2} dθ/√(1−m sin²θ) by the AGM.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(m < 1.0) || m.is_nan() {
        return Err(Error::Domain(format!("m = {m} outside [0,1)")));
    }
    let mut a = 1.0;
    let mut g = (1.0 - m).sqrt();
    for _ in 0..64 {
        if (a - g).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + g);
        g = (a * g).sqrt();
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// Carlson symmetric integral R_F(x,y,z) with principal square roots.
pub fn carlson_rf(x: C64, y: C64, z: C64) -> C64 {
    let (mut x, mut y, mut z) = (x, y, z);
    let a0 = (x + y + z) / 3.0;
    let q = (3.0 * 1e-16f64).powf(-1.0 / 6.0)
        * (a0 - x).norm().max((a0 - y).norm()).max((a0 - z).norm());
    let mut a = a0;
    let mut pow4 = 1.0;
    for _ in 0..100 {
        if pow4 * q < a.norm() {
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sy * sz + sz * sx;
        a = (a + lam) * 0.25;
        x = (x + lam) * 0.25;
        y = (y + lam) * 0.25;
        z = (z + lam) * 0.25;
        pow4 *= 0.25;
    }
    let xx = (a - x) / a;
    let yy = (a - y) / a;
    let zz = -xx - yy;
    let e2 = xx * yy - zz * zz;
    let e3 = xx * yy * zz;
    (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - e2 * e3 * (3.0 / 44.0)) / a.sqrt()
}

/// Incomplete integral 𝒦(φ, m) for complex φ with Im φ ≥ 0 in the strip |Re φ| ≤ π/2.
pub fn elliptic_k_incomplete(phi: C64, m: f64) -> Result<C64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!("m = {m} outside (0,1)")));
    }
    if phi.im < 0.0 {
        return Err(Error::Domain("Im phi < 0".into()));
    }
    if phi.re.abs() > PI / 2.0 + 1e-15 {
        return Err(Error::Domain("Re phi outside [-pi/2, pi/2]".into()));
    }
    if phi == C64::new(0.0, 0.0) {
        return Ok(C64::new(0.0, 0.0));
    }
    let s = phi.sin();
    let c = phi.cos();
    let one = C64::new(1.0, 0.0);
    Ok(s * carlson_rf(c * c, one - m * s * s, one))
}

/// 𝒦(arcsin √ζ, m) for ζ in the closed upper half-plane.
///
/// This is the Schwarz–Christoffel integral onto the rectangle with corners
/// 0, 𝒦(m), 𝒦(m)+i𝒦(1−m), i𝒦(1−m); on the real axis past 1 the boundary values
/// are taken from above.
pub fn elliptic_f_sin2(zeta: C64, m: f64) -> C64 {
    let one = C64::new(1.0, 0.0);
    if zeta.im > 0.0 || zeta.re <= 1.0 {
        let zeta = C64::new(zeta.re, zeta.im.max(0.0));
        if zeta.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if zeta.im == 0.0 && zeta.re < 0.0 {
            let r = -zeta.re;
            let v = r.sqrt() * carlson_rf(C64::new(1.0 + r, 0.0), C64::new(1.0 + m * r, 0.0), one).re;
            return C64::new(0.0, v);
        }
        if zeta.im == 0.0 {
            let x = zeta.re;
            let v = x.sqrt() * carlson_rf(C64::new(1.0 - x, 0.0), C64::new(1.0 - m * x, 0.0), one).re;
            return C64::new(v, 0.0);
        }
        return zeta.sqrt() * carlson_rf(one - zeta, one - m * zeta, one);
    }
    let x = zeta.re;
    let k = elliptic_k(m).unwrap_or(f64::NAN);
    let m1 = 1.0 - m;
    let kp = elliptic_k(m1).unwrap_or(f64::NAN);
    if x * m <= 1.0 {
        // right edge: 𝒦(m) + i F(arcsin u | 1−m), u² = (x−1)/((1−m) x)
        let u2 = ((x - 1.0) / (m1 * x)).min(1.0);
        let v = real_f_sin2(u2, m1);
        C64::new(k, v)
    } else {
        // top edge: F(arcsin(1/√(m x)) | m) + i 𝒦(1−m)
        let u2 = 1.0 / (m * x);
        C64::new(real_f_sin2(u2, m), kp)
    }
}

fn real_f_sin2(s2: f64, m: f64) -> f64 {
    if s2 <= 0.0 {
        return 0.0;
    }
    if s2 >= 1.0 {
        return elliptic_k(m).unwrap_or(f64::INFINITY);
    }
    let one = C64::new(1.0, 0.0);
    s2.sqrt() * carlson_rf(C64::new(1.0 - s2, 0.0), C64::new(1.0 - m * s2, 0.0), one).re
}

/// Jacobi (sn, cn, dn)(u | m) for real u and m ∈ [0,1].
pub fn jacobi_sncndn(u: f64, m: f64) -> (f64, f64, f64) {
    let mut emc = 1.0 - m;
    if emc == 0.0 {
        let ch = u.cosh();
        return (u.tanh(), 1.0 / ch, 1.0 / ch);
    }
    let mut em = [0.0f64; 16];
    let mut en = [0.0f64; 16];
    let mut a = 1.0;
    let mut dn = 1.0;
    let mut c = 1.0;
    let mut l = 0;
    for i in 0..16 {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= 1e-12 * a {
            break;
        }
        emc *= a;
        a = c;
    }
    let uu = u * c;
    let mut sn = uu.sin();
    let mut cn = uu.cos();
    if sn != 0.0 {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..=l).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let a = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    (sn, cn, dn)
}

/// sn(u | m) for complex u by the addition formula.
pub fn jacobi_sn(u: C64, m: f64) -> C64 {
    let (s, c, d) = jacobi_sncndn(u.re, m);
    let (s1, c1, d1) = jacobi_sncndn(u.im, 1.0 - m);
    let den = c1 * c1 + m * s * s * s1 * s1;
    C64::new(s * d1, c * d * s1 * c1) / den
}
