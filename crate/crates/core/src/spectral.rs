//! Spectral map F = U·diag(d̃/d)·Uᵀ built from the SVD of the design, with
//! the trim rule d̃_k = min(τ, d_k), τ = median singular value.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin SVD with singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub d: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn compute_svd(x: &DMatrix<f64>) -> Result<Svd> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to SVD"));
    }
    let (n, p) = x.shape();
    let r = n.min(p);
    if r == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(n, 0),
            d: DVector::zeros(0),
            v: DMatrix::zeros(p, 0),
        });
    }
    let Some((u, s, v)) = crate::linalg::thin_svd(x) else {
        return Err(Error::Data("SVD did not converge".into()));
    };
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Ok(Svd {
        u: DMatrix::from_fn(n, r, |i, k| u[(i, order[k])]),
        d: DVector::from_iterator(r, order.iter().map(|&k| s[k].max(0.0))),
        v: DMatrix::from_fn(p, r, |j, k| v[(j, order[k])]),
    })
}

/// Median with the mean of the two central values for even length.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Clone)]
pub struct SpectralTransform {
    pub u: DMatrix<f64>,
    pub d: DVector<f64>,
    pub d_tilde: DVector<f64>,
    pub tau_trim: f64,
    pub v: DMatrix<f64>,
}

/// Trim transform of `x`; `tau` defaults to the median singular value.
pub fn trim_transform(x: &DMatrix<f64>, tau: Option<f64>) -> Result<SpectralTransform> {
    let svd = compute_svd(x)?;
    trim_from_svd(svd, tau)
}

pub fn trim_from_svd(svd: Svd, tau: Option<f64>) -> Result<SpectralTransform> {
    let tau = tau.unwrap_or_else(|| median(svd.d.as_slice()));
    if !(tau > 0.0) {
        return Err(Error::Config(format!("trim threshold must be positive, got {tau}")));
    }
    let d_tilde = svd.d.map(|d| d.min(tau));
    Ok(SpectralTransform {
        u: svd.u,
        d: svd.d,
        d_tilde,
        tau_trim: tau,
        v: svd.v,
    })
}

impl SpectralTransform {
    /// d̃_k / d_k, taken as 0 where d_k = 0.
    pub fn ratios(&self) -> DVector<f64> {
        self.d
            .zip_map(&self.d_tilde, |d, dt| if d > 0.0 { dt / d } else { 0.0 })
    }

    /// Λ_max(F).
    pub fn f_norm(&self) -> f64 {
        self.ratios().iter().copied().fold(0.0, f64::max)
    }

    /// Dense n_bins × n_bins matrix F. Only sensible for small designs.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (k, r) in self.ratios().iter().enumerate() {
            scaled.column_mut(k).scale_mut(*r);
        }
        scaled * self.u.transpose()
    }

    /// F·m without forming F.
    pub fn filter(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.u.nrows() {
            return Err(Error::Dimension(format!(
                "matrix has {} rows, transform expects {}",
                m.nrows(),
                self.u.nrows()
            )));
        }
        let mut coef = self.u.transpose() * m;
        for (k, r) in self.ratios().iter().enumerate() {
            coef.row_mut(k).scale_mut(*r);
        }
        Ok(&self.u * coef)
    }

    /// (F·X, F·Y).
    pub fn apply(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if x.ncols() != self.v.nrows() {
            return Err(Error::Dimension(format!(
                "X has {} columns, transform expects {}",
                x.ncols(),
                self.v.nrows()
            )));
        }
        Ok((self.filter(x)?, self.filter(y)?))
    }

    /// CSV of `index,d,d_tilde`.
    pub fn write_spectrum_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["index", "d", "d_tilde"])?;
        for k in 0..self.d.len() {
            wtr.write_record([
                k.to_string(),
                self.d[k].to_string(),
                self.d_tilde[k].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<spectrum csv>", e))?;
        Ok(())
    }
}
