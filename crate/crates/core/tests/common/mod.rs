//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn power_iteration(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    v /= v.norm();
    let mut lam = 0.0;
    for _ in 0..iters {
        let w = m * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        lam = v.dot(&w);
        v = w / nw;
    }
    lam
}

/// Proximal gradient (ISTA) for (1/T)‖y − μ − Xβ‖² + λ‖β‖₁ with the
/// intercept handled by centering.
pub fn prox_grad_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, iters: usize) -> (f64, DVector<f64>) {
    let t = x.nrows() as f64;
    let xm = DVector::from_fn(x.ncols(), |j, _| x.column(j).mean());
    let ym = y.mean();
    let mut xc = x.clone();
    for j in 0..x.ncols() {
        xc.column_mut(j).add_scalar_mut(-xm[j]);
    }
    let yc = y.add_scalar(-ym);
    let lip = 2.0 / t * power_iteration(&(xc.transpose() * &xc), 500) * 1.01;
    let step = 1.0 / lip;
    let mut b = DVector::zeros(x.ncols());
    for _ in 0..iters {
        let grad = -2.0 / t * xc.transpose() * (&yc - &xc * &b);
        let z = &b - step * grad;
        b = z.map(|v| {
            let th = step * lambda;
            if v > th {
                v - th
            } else if v < -th {
                v + th
            } else {
                0.0
            }
        });
    }
    (ym - xm.dot(&b), b)
}

/// x_j at each bin edge k·Δ, k = 0..n_bins, summed directly over all earlier events.
pub fn brute_force_covariates(times: &[f64], rate: f64, bin_width: f64, n_bins: usize) -> Vec<f64> {
    (0..n_bins)
        .map(|k| {
            let edge = k as f64 * bin_width;
            times
                .iter()
                .filter(|&&s| s < edge)
                .map(|&s| (-rate * (edge - s)).exp())
                .sum()
        })
        .collect()
}

/// Kolmogorov–Smirnov statistic of `sample` against Exp(rate).
pub fn ks_exponential(sample: &[f64], rate: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Fully observed network (q = 0) with unit-rate exponential kernels.
pub fn observed_network(theta: DMatrix<f64>, mu: Vec<f64>) -> hawkes_trim::NetworkSpec {
    let p = theta.nrows();
    hawkes_trim::NetworkSpec {
        p,
        q: 0,
        mu,
        theta,
        delta: DMatrix::zeros(p, 0),
        hidden_block: DMatrix::zeros(0, p),
        kernel: vec![hawkes_trim::TransitionKernel::default(); p],
    }
}
