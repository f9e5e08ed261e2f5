//! End-to-end experiments: each samples or simulates, then reduces to a
//! serializable summary. The command-line tool and the acceptance suite both
//! drive these.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::{pde_residual, rho_cdf, rho_density, PoissonParams, RectMap};
use crate::lattice::QuadLattice;
use crate::loewner::{
    extract_driver, hsle_observable_series, peano_curve_in_h, simulate_branch, simulate_hsle, simulate_sle_rho,
    sle_rho_radon_nikodym, branch_observable_series, BranchParams, DrivingPath, ForcePoint, HsleParams,
    SleRhoParams,
};
use crate::observable::{count_ratio, observable_field, solve_u};
use crate::rng::stream;
use crate::stats::{chi2_against_cdf, chi2_against_density, chi2_two_sample, ks_uniform, mean_se, qv_slope, TestReport};
use crate::ust::{crossing_counts, endpoint_batch, peano_trace, EndpointMap, EndpointSample, Sampler};
use crate::{Error, Result};

/// Modulus used for ρ_K: M/(N+1) on rectangles, the discrete ratio otherwise.
pub fn lattice_modulus(q: &QuadLattice) -> Result<f64> {
    match q.rect_modulus() {
        Some(k) => Ok(k),
        None => Ok(count_ratio(q)?.ratio),
    }
}

/// Boundary coordinates from the exact rectangle field when a sits at the
/// origin, otherwise from the discrete harmonic u.
pub fn endpoint_map(q: &QuadLattice) -> Result<EndpointMap> {
    if q.rect.is_some() && q.marked_coords()[0] == (0, 0) {
        EndpointMap::rectangle(q)
    } else {
        Ok(EndpointMap::from_dual_field(q, &solve_u(q)?.values))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointRun {
    pub k: f64,
    pub samples: Vec<EndpointSample>,
    pub ks: TestReport,
    pub chi2: TestReport,
}

impl EndpointRun {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.x, s.y)).collect()
    }
}

pub fn endpoints(q: &QuadLattice, n: usize, seed: u64, bins: usize, full_tree: bool) -> Result<EndpointRun> {
    let k = lattice_modulus(q)?;
    let map = endpoint_map(q)?;
    let samples = endpoint_batch(q, &map, n, seed, full_tree)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let ks = ks_uniform(&xs)?;
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.x, s.y)).collect();
    let density = |x: f64, y: f64| rho_density(x, y, k).unwrap_or(f64::NAN);
    let chi2 = chi2_against_density(&pts, &density, (bins, bins))?;
    Ok(EndpointRun { k, samples, ks, chi2 })
}

/// Endpoints of the relabeled quad (d, c, b, a) against the (1−x, 1−y) image
/// of the original sample.
pub fn reversal(q: &QuadLattice, n: usize, seed: u64, bins: usize) -> Result<TestReport> {
    let r = q.reversed()?;
    let orig = endpoint_batch(q, &endpoint_map(q)?, n, seed, false)?;
    let rev = endpoint_batch(&r, &endpoint_map(&r)?, n, seed.wrapping_add(1), false)?;
    let a: Vec<(f64, f64)> = orig.iter().map(|s| (1.0 - s.x, 1.0 - s.y)).collect();
    let b: Vec<(f64, f64)> = rev.iter().map(|s| (s.x, s.y)).collect();
    chi2_two_sample(&a, &b, (bins, bins))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRow {
    pub cell: (i32, i32),
    pub z: C64,
    pub hits: u64,
    pub n: usize,
    pub p_hat: f64,
    pub sigma: f64,
    pub re_f: f64,
    pub z_score: f64,
}

/// Monte Carlo P[cell right of η^L] against the discrete (= continuum, on
/// rectangles) Re f at each probe cell.
pub fn crossing(q: &QuadLattice, probes: &[(i32, i32)], n: usize, seed: u64) -> Result<Vec<ProbeRow>> {
    let cells: Vec<usize> = probes
        .iter()
        .map(|&(i, j)| q.cell_at(i, j).ok_or_else(|| Error::Config(format!("probe ({i},{j}) is not a cell"))))
        .collect::<Result<_>>()?;
    let u = solve_u(q)?;
    let counts = crossing_counts(q, &cells, n, seed)?;
    Ok(probes
        .iter()
        .zip(&cells)
        .zip(&counts)
        .map(|((&cell, &c), &hits)| {
            let p_hat = hits as f64 / n as f64;
            let sigma = (p_hat * (1.0 - p_hat) / n as f64).sqrt();
            let re_f = u.values[c];
            let z_score = if sigma > 0.0 { (p_hat - re_f) / sigma } else { f64::INFINITY };
            ProbeRow { cell, z: q.cell_center(c), hits, n, p_hat, sigma, re_f, z_score }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct QvRun {
    pub slopes: Vec<f64>,
    pub mean: f64,
    pub se: f64,
    pub skipped: usize,
}

fn summarize_qv(per: Vec<Option<f64>>) -> Result<QvRun> {
    let skipped = per.iter().filter(|s| s.is_none()).count();
    let slopes: Vec<f64> = per.into_iter().flatten().collect();
    if slopes.len() < 2 {
        return Err(Error::SampleSize { need: 2, got: slopes.len() });
    }
    let (mean, se) = mean_se(&slopes);
    Ok(QvRun { slopes, mean, se, skipped })
}

/// QV slope of a driver over [0, T/2], T its final capacity; None when the
/// window holds too few samples.
fn half_window_slope(d: &DrivingPath, t_end: f64) -> Option<f64> {
    let k = d.index_at(0.5 * t_end);
    qv_slope(&d.times[..=k], &d.w[..=k]).ok()
}

/// Loewner driver of η^L in H up to its first contact with (cd).
pub fn peano_driver(q: &QuadLattice, sampler: &Sampler, seed: u64, index: u64) -> Result<DrivingPath> {
    let t = sampler.sample_tree(&mut stream(seed, index));
    let pair = peano_trace(q, &t)?;
    extract_driver(&peano_curve_in_h(q, &pair, 1)?)
}

pub fn peano_qv(q: &QuadLattice, curves: usize, seed: u64) -> Result<QvRun> {
    let s = Sampler::new(q);
    let per = (0..curves as u64)
        .into_par_iter()
        .map(|i| {
            let d = peano_driver(q, &s, seed, i)?;
            Ok(half_window_slope(&d, d.capacity()))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize_qv(per)
}

/// hSLE₈ from 0 to ∞ with marked points (x, y); window [0, min(T_y, t_max)/2].
pub fn hsle_qv(x: f64, y: f64, paths: usize, seed: u64, t_max: f64, dt: f64) -> Result<QvRun> {
    let p = HsleParams::new(8.0, 0.0, [0.0, x, y, f64::INFINITY])?;
    let per = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let d = simulate_hsle(&p, t_max, dt, &mut stream(seed, i))?;
            let t_end = d.swallow.map_or(d.capacity(), |k| d.times[k]);
            Ok(half_window_slope(&d, t_end))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize_qv(per)
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleRow {
    pub name: String,
    pub t: f64,
    pub initial: f64,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub passed: bool,
}

fn rows(name: &str, initial: f64, checkpoints: &[f64], values: &[Vec<f64>], sigmas: f64) -> Vec<MartingaleRow> {
    checkpoints
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
            let (mean, se) = mean_se(&col);
            let passed = (mean - initial).abs() <= sigmas * se;
            MartingaleRow { name: name.into(), t, initial, mean, se, n: col.len(), passed }
        })
        .collect()
}

/// Value of a stopped series at each checkpoint: the last sample at or before t.
fn stopped_at<T: Copy>(s: &[(f64, T)], checkpoints: &[f64]) -> Vec<T> {
    checkpoints
        .iter()
        .map(|&t| {
            let i = s.partition_point(|(u, _)| *u <= t + 1e-12);
            s[i.max(1) - 1].1
        })
        .collect()
}

/// SLE_κ(ρ) density process evaluated along plain SLE_κ drivers.
pub fn rn_martingale(kappa: f64, y: f64, rho: f64, checkpoints: &[f64], paths: usize, seed: u64, dt: f64) -> Result<Vec<MartingaleRow>> {
    let base = SleRhoParams::new(kappa, 0.0, vec![], vec![ForcePoint { y, rho: 0.0 }])?;
    let weighted = SleRhoParams::new(kappa, 0.0, vec![], vec![ForcePoint { y, rho }])?;
    let t_max = checkpoints.iter().cloned().fold(0.0, f64::max);
    let vals = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let d = simulate_sle_rho(&base, t_max, dt, &mut stream(seed, i))?;
            let m = sle_rho_radon_nikodym(&d, &weighted)?;
            let s: Vec<(f64, f64)> = d.times.iter().cloned().zip(m).collect();
            Ok(stopped_at(&s, checkpoints))
        })
        .collect::<Result<Vec<_>>>()?;
    let m0 = y.powf(rho / kappa);
    Ok(rows("radon_nikodym", m0, checkpoints, &vals, 3.0))
}

/// Rectangle-map observable along hSLE₈(0, x, y, ∞) drivers, real and imaginary parts,
/// stopped when U_t = (X−W)/(Y−W) first drops to `u_min`.
///
/// Im M grows like log(1/U_t) and U_t is a critical Bessel ratio, so without
/// this localization the imaginary part is only a local martingale.
pub fn hsle_observable_martingale(
    x: f64,
    y: f64,
    z: C64,
    u_min: f64,
    checkpoints: &[f64],
    paths: usize,
    seed: u64,
    dt: f64,
) -> Result<Vec<MartingaleRow>> {
    let p = HsleParams::new(8.0, 0.0, [0.0, x, y, f64::INFINITY])?;
    let t_max = checkpoints.iter().cloned().fold(0.0, f64::max);
    let vals = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let d = simulate_hsle(&p, t_max, dt, &mut stream(seed, i))?;
            let mut series = hsle_observable_series(&d, z)?;
            if let Some(k) = (0..series.len()).find(|&k| d.gap(0, k) <= u_min * d.gap(1, k)) {
                series.truncate(k + 1);
            }
            Ok(stopped_at(&series, checkpoints))
        })
        .collect::<Result<Vec<_>>>()?;
    let m0 = RectMap::new(0.0, x, y, f64::INFINITY)?.eval(z);
    let re: Vec<Vec<f64>> = vals.iter().map(|v| v.iter().map(|c| c.re).collect()).collect();
    let im: Vec<Vec<f64>> = vals.iter().map(|v| v.iter().map(|c| c.im).collect()).collect();
    let mut out = rows("hsle_observable_re", m0.re, checkpoints, &re, 3.0);
    out.extend(rows("hsle_observable_im", m0.im, checkpoints, &im, 3.0));
    Ok(out)
}

/// g′(x)·F(g(x); …) along SLE₂(−1,−1;−1,−1) branch drivers.
pub fn branch_observable_martingale(p: &BranchParams, x: f64, checkpoints: &[f64], paths: usize, seed: u64, dt: f64) -> Result<Vec<MartingaleRow>> {
    let t_max = checkpoints.iter().cloned().fold(0.0, f64::max);
    let sp = p.sle_rho();
    let vals = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let d = simulate_sle_rho(&sp, t_max, dt, &mut stream(seed, i))?;
            Ok(stopped_at(&branch_observable_series(&d, x)?, checkpoints))
        })
        .collect::<Result<Vec<_>>>()?;
    let m0 = crate::conformal::normal_deriv_f(x, &PoissonParams::new(p.a, p.w0, p.b, p.c)?)?;
    Ok(rows("branch_observable", m0, checkpoints, &vals, 3.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchRun {
    pub x_m: f64,
    pub w0: f64,
    pub k: f64,
    pub hits: Vec<f64>,
    pub chi2: TestReport,
}

/// Hitting positions y = Re f(hit) of branches started at f⁻¹(x_m) in H with
/// (a, b, c, d) = (0, 1, 2, ∞), against ρ_K(x_m, ·).
pub fn branch_hits(x_m: f64, n: usize, seed: u64, dt: f64, bins: usize) -> Result<BranchRun> {
    let rm = RectMap::new(0.0, 1.0, 2.0, f64::INFINITY)?;
    let k = rm.modulus;
    let w0 = rm.inverse(C64::new(x_m, 0.0)).re;
    let p = BranchParams::new(0.0, w0, 1.0, 2.0, 3.0)?;
    let hits = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let h = simulate_branch(&p, dt, &mut stream(seed, i))?;
            Ok(rm.eval(C64::new(h.hit, 0.0)).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let cdf = |y: f64| rho_cdf(x_m, y, k) / rho_cdf(x_m, 1.0, k);
    let chi2 = chi2_against_cdf(&hits, &cdf, bins)?;
    Ok(BranchRun { x_m, w0, k, hits, chi2 })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableRun {
    pub holomorphicity_residual: f64,
    pub ratio: f64,
    pub lattice_modulus: f64,
    pub geometric_modulus: f64,
}

pub fn observable_check(q: &QuadLattice) -> Result<ObservableRun> {
    let (n, m) = q.rect.ok_or_else(|| Error::Config("observable check needs a rectangle quad".into()))?;
    let obs = observable_field(q)?;
    Ok(ObservableRun {
        holomorphicity_residual: obs.holomorphicity_residual(q),
        ratio: obs.ratio,
        lattice_modulus: lattice_modulus(q)?,
        geometric_modulus: m as f64 / n as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeRow {
    pub z: C64,
    pub residuals: Vec<f64>,
    /// log₂ ratios of consecutive residuals when the steps halve.
    pub orders: Vec<f64>,
}

pub fn pde_table(p: &PoissonParams, points: &[C64], steps: &[f64]) -> Result<Vec<PdeRow>> {
    points
        .iter()
        .map(|&z| {
            let residuals = steps.iter().map(|&h| pde_residual(p, z, h)).collect::<Result<Vec<f64>>>()?;
            let orders = residuals
                .windows(2)
                .zip(steps.windows(2))
                .map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln())
                .collect();
            Ok(PdeRow { z, residuals, orders })
        })
        .collect()
}
