//! Goodness-of-fit tests, Monte Carlo summaries and quadratic-variation slopes.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Significance level used by every verdict in the crate.
pub const ALPHA: f64 = 0.01;

/// Outcome of a statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    /// `None` when the test is not applicable (e.g. a single merged bin).
    pub p_value: Option<f64>,
    pub dof: Option<usize>,
    pub n: usize,
    pub alpha: f64,
    pub passed: bool,
    pub note: Option<String>,
}

impl TestReport {
    fn from_p(name: &str, statistic: f64, p: f64, dof: Option<usize>, n: usize) -> Self {
        let p = p.clamp(0.0, 1.0);
        TestReport {
            name: name.to_string(),
            statistic,
            p_value: Some(p),
            dof,
            n,
            alpha: ALPHA,
            passed: p > ALPHA,
            note: None,
        }
    }

    fn not_applicable(name: &str, n: usize, note: &str) -> Self {
        TestReport {
            name: name.to_string(),
            statistic: 0.0,
            p_value: None,
            dof: Some(0),
            n,
            alpha: ALPHA,
            passed: true,
            note: Some(note.to_string()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Asymptotic Kolmogorov distribution tail Q(λ) = 2 Σ (−1)^{j−1} exp(−2j²λ²).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        acc += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0,1).
pub fn ks_uniform(samples: &[f64]) -> Result<TestReport> {
    let n = samples.len();
    if n < 50 {
        return Err(Error::SampleSize { need: 50, got: n });
    }
    let mut s = samples.to_vec();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    s.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let x = x.clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / nf - x).max(x - i as f64 / nf);
    }
    let sq = nf.sqrt();
    let p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
    Ok(TestReport::from_p("ks_uniform", d, p, None, n))
}

/// Groups consecutive cells until each group's expected count reaches `min_expected`;
/// a short tail joins the last group.
fn merge_groups(expected: &[f64], min_expected: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    let mut acc = 0.0;
    for (i, &e) in expected.iter().enumerate() {
        cur.push(i);
        acc += e;
        if acc >= min_expected {
            groups.push(std::mem::take(&mut cur));
            acc = 0.0;
        }
    }
    if !cur.is_empty() {
        match groups.last_mut() {
            Some(g) => g.extend(cur),
            None => groups.push(cur),
        }
    }
    groups
}

/// Pearson χ² of observed counts against cell probabilities, merging sparse cells.
pub fn chi2_counts(name: &str, observed: &[u64], probs: &[f64]) -> Result<TestReport> {
    if observed.len() != probs.len() {
        return Err(Error::Config("observed/probability length mismatch".into()));
    }
    let n: u64 = observed.iter().sum();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Calibration(format!("cell probabilities sum to {total}")));
    }
    let nf = n as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p / total * nf).collect();
    let groups = merge_groups(&expected, 5.0);
    if groups.len() < 2 {
        return Ok(TestReport::not_applicable(name, n as usize, "single bin after merging"));
    }
    let mut stat = 0.0;
    for g in &groups {
        let o: f64 = g.iter().map(|&i| observed[i] as f64).sum();
        let e: f64 = g.iter().map(|&i| expected[i]).sum();
        stat += (o - e) * (o - e) / e;
    }
    let dof = groups.len() - 1;
    let p = chi2_sf(stat, dof);
    let mut r = TestReport::from_p(name, stat, p, Some(dof), n as usize);
    r.note = Some(format!("{} merged bins", groups.len()));
    Ok(r)
}

/// Upper tail of the χ² distribution.
pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    let d = ChiSquared::new(dof as f64).expect("dof > 0");
    d.sf(stat)
}

/// Per-bin masses of a density on [0,1]² by tensor Gauss–Legendre quadrature.
pub fn bin_masses_2d(density: &dyn Fn(f64, f64) -> f64, bins: (usize, usize), order: usize) -> Vec<f64> {
    let (nx, ny) = bins;
    let (gx, gw) = gauss_legendre(order);
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (x0, y0) = (i as f64 * hx, j as f64 * hy);
            let mut acc = 0.0;
            for (p, wp) in gx.iter().zip(&gw) {
                let x = x0 + 0.5 * hx * (p + 1.0);
                for (q, wq) in gx.iter().zip(&gw) {
                    let y = y0 + 0.5 * hy * (q + 1.0);
                    acc += wp * wq * density(x, y);
                }
            }
            out[j * nx + i] = acc * 0.25 * hx * hy;
        }
    }
    out
}

fn bin_index(v: f64, n: usize) -> usize {
    ((v.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1)
}

fn bin_counts_2d(samples: &[(f64, f64)], bins: (usize, usize)) -> Vec<u64> {
    let mut c = vec![0u64; bins.0 * bins.1];
    for &(x, y) in samples {
        c[bin_index(y, bins.1) * bins.0 + bin_index(x, bins.0)] += 1;
    }
    c
}

/// Binned Pearson χ² of points in [0,1]² against a density.
pub fn chi2_against_density(
    samples: &[(f64, f64)],
    density: &dyn Fn(f64, f64) -> f64,
    bins: (usize, usize),
) -> Result<TestReport> {
    if bins.0 == 0 || bins.1 == 0 {
        return Err(Error::Config("empty binning".into()));
    }
    let masses = bin_masses_2d(density, bins, 8);
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Calibration(format!("density integrates to {total}")));
    }
    let probs: Vec<f64> = masses.iter().map(|m| m / total).collect();
    chi2_counts("chi2_against_density", &bin_counts_2d(samples, bins), &probs)
}

/// Binned χ² of samples in [0,1] against a CDF on [0,1].
pub fn chi2_against_cdf(samples: &[f64], cdf: &dyn Fn(f64) -> f64, bins: usize) -> Result<TestReport> {
    if bins == 0 {
        return Err(Error::Config("empty binning".into()));
    }
    let (f0, f1) = (cdf(0.0), cdf(1.0));
    if f0.abs() > 1e-6 || (f1 - 1.0).abs() > 1e-6 {
        return Err(Error::Calibration(format!("cdf runs from {f0} to {f1}")));
    }
    let probs: Vec<f64> =
        (0..bins).map(|i| cdf((i + 1) as f64 / bins as f64) - cdf(i as f64 / bins as f64)).collect();
    let mut counts = vec![0u64; bins];
    for &s in samples {
        counts[bin_index(s, bins)] += 1;
    }
    let total: f64 = probs.iter().sum();
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    chi2_counts("chi2_against_cdf", &counts, &probs)
}

/// Two-sample χ² homogeneity test on a common binning of [0,1]².
pub fn chi2_two_sample(a: &[(f64, f64)], b: &[(f64, f64)], bins: (usize, usize)) -> Result<TestReport> {
    let name = "chi2_two_sample";
    let (ca, cb) = (bin_counts_2d(a, bins), bin_counts_2d(b, bins));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    if a.is_empty() || b.is_empty() {
        return Err(Error::SampleSize { need: 1, got: 0 });
    }
    let pooled: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) as f64).collect();
    let min_pooled = 5.0 * (na + nb) / na.min(nb);
    let groups = merge_groups(&pooled, min_pooled);
    if groups.len() < 2 {
        return Ok(TestReport::not_applicable(name, a.len() + b.len(), "single bin after merging"));
    }
    let mut stat = 0.0;
    for g in &groups {
        let oa: f64 = g.iter().map(|&i| ca[i] as f64).sum();
        let ob: f64 = g.iter().map(|&i| cb[i] as f64).sum();
        let t = oa + ob;
        let ea = t * na / (na + nb);
        let eb = t * nb / (na + nb);
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let dof = groups.len() - 1;
    let mut r = TestReport::from_p(name, stat, chi2_sf(stat, dof), Some(dof), a.len() + b.len());
    r.note = Some(format!("{} merged bins", groups.len()));
    Ok(r)
}

/// Realized quadratic variation regressed on time through the origin.
pub fn qv_slope(times: &[f64], w: &[f64]) -> Result<f64> {
    if times.len() != w.len() {
        return Err(Error::Config("times/values length mismatch".into()));
    }
    if times.len() < 101 {
        return Err(Error::SampleSize { need: 101, got: times.len() });
    }
    let (mut q, mut stq, mut stt) = (0.0, 0.0, 0.0);
    for k in 1..times.len() {
        let dw = w[k] - w[k - 1];
        q += dw * dw;
        let t = times[k] - times[0];
        stq += t * q;
        stt += t * t;
    }
    if !(stt > 0.0) || !q.is_finite() {
        return Err(Error::Estimation("degenerate time grid".into()));
    }
    if q == 0.0 {
        return Err(Error::Estimation("zero quadratic variation".into()));
    }
    Ok(stq / stt)
}

/// Sample mean and half-width of the two-sided 95% Student-t interval.
pub fn mc_mean_ci(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 30 {
        return Err(Error::SampleSize { need: 30, got: n });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimation("non-finite value".into()));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).expect("dof > 0").inverse_cdf(0.975);
    Ok((mean, t * (var / nf).sqrt()))
}

/// Mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let nf = values.len() as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
    (mean, (var / nf).sqrt())
}
