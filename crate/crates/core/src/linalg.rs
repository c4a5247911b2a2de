//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the matching
/// eigenvectors.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    // symmetrize to absorb rounding asymmetry from products like AᵀA
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Thin SVD `x = U·diag(s)·Vᵀ`, singular values as returned by faer
/// (descending). `None` if the iteration fails to converge.
pub fn thin_svd(x: &DMatrix<f64>) -> Option<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (n, p) = x.shape();
    let r = n.min(p);
    let m = faer::Mat::<f64>::from_fn(n, p, |i, j| x[(i, j)]);
    let svd = m.thin_svd().ok()?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    Some((
        DMatrix::from_fn(n, r, |i, k| u[(i, k)]),
        DVector::from_fn(r, |k, _| s[k]),
        DMatrix::from_fn(p, r, |j, k| v[(j, k)]),
    ))
}

/// Largest singular value.
pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    thin_svd(x).map_or(f64::NAN, |(_, s, _)| s.iter().copied().fold(0.0, f64::max))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen_desc(m).0[0]
}

/// Per-column mean and (population) standard deviation.
pub fn column_moments(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.nrows().max(1) as f64;
    let mut means = DVector::zeros(x.ncols());
    let mut sds = DVector::zeros(x.ncols());
    for (j, col) in x.column_iter().enumerate() {
        let m = col.sum() / n;
        let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        means[j] = m;
        sds[j] = v.sqrt();
    }
    (means, sds)
}

/// Serde adapter storing a `DMatrix` as a list of rows.
pub(crate) mod rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(
            nrows,
            ncols,
            rows.into_iter().flatten(),
        ))
    }
}

/// Like [`rows`], but keeps the column count for matrices with zero rows.
pub(crate) mod shaped {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Shaped {
        nrows: usize,
        ncols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        Shaped {
            nrows: m.nrows(),
            ncols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let s = Shaped::deserialize(d)?;
        if s.data.len() != s.nrows * s.ncols {
            return Err(serde::de::Error::custom("matrix data length does not match shape"));
        }
        Ok(DMatrix::from_row_slice(s.nrows, s.ncols, &s.data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = sym_eigen_desc(&m);
        assert_eq!(vals.as_slice(), &[5.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_of_constant_column() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 2.0, 1.0, 4.0]);
        let (m, s) = column_moments(&x);
        assert_eq!(m[0], 1.0);
        assert_eq!(s[0], 0.0);
        assert!((m[1] - 2.0).abs() < 1e-15);
        assert!((s[1] - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
