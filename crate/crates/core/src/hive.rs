//! Hidden-loading subspace estimation for the HIVE baseline: eigengap choice
//! of the latent dimension and heteroPCA.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEstimate {
    pub q_hat: usize,
    /// λ_k − λ_{k+1} for k = 1..p−1, eigenvalues in descending order.
    pub eigengaps: Vec<f64>,
    /// Set when several gaps tie for the maximum.
    pub low_confidence: bool,
}

/// Latent dimension from the largest drop between consecutive eigenvalues
/// of the residual covariance; ties go to the smallest k.
pub fn estimate_q(resid_cov: &DMatrix<f64>) -> Result<QEstimate> {
    let p = resid_cov.nrows();
    if resid_cov.ncols() != p {
        return Err(Error::Dimension("covariance matrix is not square".into()));
    }
    if p < 2 {
        return Err(Error::Config(format!("need at least 2 components to choose q, got {p}")));
    }
    let (vals, _) = sym_eigen_desc(resid_cov);
    let gaps: Vec<f64> = (0..p - 1).map(|k| vals[k] - vals[k + 1]).collect();
    let best = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = vals[0].abs().max(f64::MIN_POSITIVE);
    let tie_tol = 1e-9 * scale;
    let q_hat = gaps.iter().position(|g| *g >= best - tie_tol).unwrap_or(0) + 1;
    let ties = gaps.iter().filter(|g| **g >= best - tie_tol).count();
    Ok(QEstimate {
        q_hat,
        eigengaps: gaps,
        low_confidence: ties > 1,
    })
}

fn top_q(m: &DMatrix<f64>, q: usize) -> (DVector<f64>, DMatrix<f64>) {
    let (vals, vecs) = sym_eigen_desc(m);
    (vals.rows(0, q).into_owned(), vecs.columns(0, q).into_owned())
}

/// heteroPCA: top-`q` eigenbasis of `sigma` after iteratively re-imputing
/// its diagonal from the rank-`q` reconstruction. Starts from `sigma` with
/// its diagonal set to zero; stops early once successive diagonals agree to
/// 1e−8 in max norm.
pub fn hetero_pca(sigma: &DMatrix<f64>, q: usize, iters: usize) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if sigma.ncols() != p {
        return Err(Error::Dimension("covariance matrix is not square".into()));
    }
    if q == 0 || q >= p {
        return Err(Error::Config(format!("heteroPCA needs 1 <= q < p, got q = {q}, p = {p}")));
    }
    let mut current = sigma.clone();
    current.fill_diagonal(0.0);
    for _ in 0..iters {
        let (vals, vecs) = top_q(&current, q);
        let mut diag_change = 0.0_f64;
        for i in 0..p {
            let d: f64 = (0..q).map(|k| vals[k] * vecs[(i, k)] * vecs[(i, k)]).sum();
            diag_change = diag_change.max((d - current[(i, i)]).abs());
            current[(i, i)] = d;
        }
        if diag_change < 1e-8 {
            break;
        }
    }
    Ok(top_q(&current, q).1)
}

/// Orthogonal projector onto the column span of an orthonormal basis.
pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Projector onto the span of arbitrary (not necessarily orthonormal)
/// columns, via an SVD with relative rank cut 1e−12.
pub fn span_projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(p, p);
    }
    let Some((u, s, _)) = crate::linalg::thin_svd(m) else {
        return DMatrix::from_element(p, p, f64::NAN);
    };
    let smax = s.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > 1e-12 * smax).collect();
    let basis = u.select_columns(&keep);
    projector(&basis)
}

/// Intermediate products of a HIVE fit.
#[derive(Debug, Clone)]
pub struct HiveState {
    pub residuals: DMatrix<f64>,
    pub resid_cov: DMatrix<f64>,
    pub eigengaps: Vec<f64>,
    pub q_hat: usize,
    pub p_delta: DMatrix<f64>,
    pub p_delta_perp: DMatrix<f64>,
}

/// sin θ distance ‖(I − P_B) A‖₂ between the spans of two orthonormal bases.
pub fn sin_theta(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let p = a.nrows();
    let resid = (DMatrix::identity(p, p) - projector(b)) * a;
    crate::linalg::spectral_norm(&resid)
}
