//! Binned regression representation of event data: outcomes Y (counts per
//! unit time), integrated covariates X evaluated strictly before each bin,
//! and the simulation-only confounding diagnostic.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::TransitionKernel;
use crate::sim::EventData;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub n_bins: usize,
    pub bin_width: f64,
    /// n_bins × p, row t = integrated observed process at the left edge of bin t.
    pub x: DMatrix<f64>,
    /// n_bins × p, event counts per bin divided by the bin width.
    pub y: DMatrix<f64>,
    /// n_bins × q hidden covariates, kept only for oracle diagnostics.
    pub z: Option<DMatrix<f64>>,
    pub observed_ids: Vec<usize>,
    /// Per observed column, the bin-average of the pre-bin kernel history
    /// relative to its left-edge value: (1 − e^{−rΔ}) / (rΔ) for the
    /// exponential kernel.
    pub column_gain: Vec<f64>,
}

/// Index of the bin `[kΔ, (k+1)Δ)` containing `s`, using the same edge
/// arithmetic (`k as f64 * Δ`) as the covariate recursion.
fn bin_of(s: f64, width: f64, n_bins: usize) -> usize {
    let mut k = (s / width).floor() as usize;
    while k > 0 && k as f64 * width > s {
        k -= 1;
    }
    while ((k + 1) as f64) * width <= s {
        k += 1;
    }
    k.min(n_bins - 1)
}

fn n_bins_for(horizon: f64, width: f64) -> usize {
    let ratio = horizon / width;
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-9 * ratio.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Fills `out` (length n_bins) with x(kΔ−) for k = 0..n_bins using the
/// exact decay recursion over bins.
fn integrate_column(times: &[f64], kernel: &TransitionKernel, width: f64, out: &mut [f64]) {
    let n_bins = out.len();
    let decay = kernel.decay(width);
    let mut idx = 0;
    let mut state = 0.0;
    for (t, slot) in out.iter_mut().enumerate() {
        *slot = state;
        let right = (t + 1) as f64 * width;
        state *= decay;
        // times are sorted, so their bins are nondecreasing
        while idx < times.len() && bin_of(times[idx], width, n_bins) == t {
            state += kernel.value(right - times[idx]);
            idx += 1;
        }
    }
}

fn bin_counts(times: &[f64], width: f64, out: &mut [f64]) {
    let n_bins = out.len();
    for &s in times {
        out[bin_of(s, width, n_bins)] += 1.0;
    }
    for v in out.iter_mut() {
        *v /= width;
    }
}

fn integrated_matrix(
    ev: &EventData,
    ids: &[usize],
    kernels: &[TransitionKernel],
    width: f64,
    n_bins: usize,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n_bins, ids.len());
    for (col, &id) in ids.iter().enumerate() {
        integrate_column(
            &ev.events[id],
            &kernels[id],
            width,
            m.column_mut(col).as_mut_slice(),
        );
    }
    m
}

/// Builds the binned design. `kernels` holds one kernel per component of
/// `ev` (observed and hidden). Hidden components are all those not listed in
/// `ev.observed_ids`; their covariates are retained in `z` when
/// `keep_hidden` is set.
pub fn build_design(
    ev: &EventData,
    kernels: &[TransitionKernel],
    bin_width: f64,
    keep_hidden: bool,
) -> Result<RegressionData> {
    ev.validate()?;
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::Config(format!("bin width must be positive, got {bin_width}")));
    }
    if bin_width >= ev.horizon {
        return Err(Error::Config(format!(
            "bin width {bin_width} is not smaller than the horizon {}",
            ev.horizon
        )));
    }
    if ev.horizon / bin_width < 10.0 {
        return Err(Error::Config(format!(
            "horizon / bin width = {} gives fewer than 10 bins",
            ev.horizon / bin_width
        )));
    }
    if kernels.len() != ev.n_components {
        return Err(Error::Dimension(format!(
            "{} kernels for {} components",
            kernels.len(),
            ev.n_components
        )));
    }
    for k in kernels {
        k.validate()?;
    }
    let n_bins = n_bins_for(ev.horizon, bin_width);
    let observed = ev.observed_ids.clone();
    let hidden: Vec<usize> = (0..ev.n_components)
        .filter(|c| !observed.contains(c))
        .collect();

    let x = integrated_matrix(ev, &observed, kernels, bin_width, n_bins);
    let mut y = DMatrix::zeros(n_bins, observed.len());
    for (col, &id) in observed.iter().enumerate() {
        bin_counts(&ev.events[id], bin_width, y.column_mut(col).as_mut_slice());
    }
    let z = keep_hidden.then(|| integrated_matrix(ev, &hidden, kernels, bin_width, n_bins));
    let column_gain = observed
        .iter()
        .map(|&id| {
            let k = &kernels[id];
            let rd = k.rate * bin_width;
            (1.0 - k.decay(bin_width)) / rd
        })
        .collect();

    Ok(RegressionData {
        n_bins,
        bin_width,
        x,
        y,
        z,
        observed_ids: observed,
        column_gain,
    })
}

impl RegressionData {
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Checks shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let p = self.observed_ids.len();
        if self.x.shape() != (self.n_bins, p) || self.y.shape() != (self.n_bins, p) {
            return Err(Error::Dimension(format!(
                "design shapes X {:?}, Y {:?} do not match n_bins = {}, p = {p}",
                self.x.shape(),
                self.y.shape(),
                self.n_bins
            )));
        }
        if self.column_gain.len() != p {
            return Err(Error::Dimension("column_gain length differs from p".into()));
        }
        if let Some(z) = &self.z {
            if z.nrows() != self.n_bins {
                return Err(Error::Dimension("Z row count differs from n_bins".into()));
            }
        }
        if !(self.x.iter().all(|v| v.is_finite()) && self.y.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("design matrix"));
        }
        Ok(())
    }

    /// Keeps the given observed columns (positions into `observed_ids`).
    pub fn select_columns(&self, cols: &[usize]) -> RegressionData {
        RegressionData {
            n_bins: self.n_bins,
            bin_width: self.bin_width,
            x: self.x.select_columns(cols),
            y: self.y.select_columns(cols),
            z: self.z.clone(),
            observed_ids: cols.iter().map(|&c| self.observed_ids[c]).collect(),
            column_gain: cols.iter().map(|&c| self.column_gain[c]).collect(),
        }
    }
}

const MAGIC: &[u8; 4] = b"HTRD";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ContainerHeader {
    n_bins: usize,
    p: usize,
    q: Option<usize>,
    bin_width: f64,
    observed_ids: Vec<usize>,
    column_gain: Vec<f64>,
}

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R, nrows: usize, ncols: usize) -> std::io::Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(nrows, ncols);
    let mut buf = [0u8; 8];
    for i in 0..nrows {
        for j in 0..ncols {
            r.read_exact(&mut buf)?;
            m[(i, j)] = f64::from_le_bytes(buf);
        }
    }
    Ok(m)
}

impl RegressionData {
    /// Binary container: magic `HTRD`, u32 version, u64 header length, JSON
    /// header, then X, Y and (if present) Z as row-major little-endian f64.
    pub fn write_container<W: Write>(&self, mut w: W) -> Result<()> {
        let header = ContainerHeader {
            n_bins: self.n_bins,
            p: self.p(),
            q: self.z.as_ref().map(|z| z.ncols()),
            bin_width: self.bin_width,
            observed_ids: self.observed_ids.clone(),
            column_gain: self.column_gain.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        let io = |e| Error::io("<design container>", e);
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&json).map_err(io)?;
        write_matrix(&mut w, &self.x).map_err(io)?;
        write_matrix(&mut w, &self.y).map_err(io)?;
        if let Some(z) = &self.z {
            write_matrix(&mut w, z).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_container<R: Read>(mut r: R) -> Result<RegressionData> {
        let io = |e| Error::io("<design container>", e);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Data("not a design container (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported container version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(io)?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json).map_err(io)?;
        let h: ContainerHeader = serde_json::from_slice(&json)?;
        let x = read_matrix(&mut r, h.n_bins, h.p).map_err(io)?;
        let y = read_matrix(&mut r, h.n_bins, h.p).map_err(io)?;
        let z = match h.q {
            Some(q) => Some(read_matrix(&mut r, h.n_bins, q).map_err(io)?),
            None => None,
        };
        let reg = RegressionData {
            n_bins: h.n_bins,
            bin_width: h.bin_width,
            x,
            y,
            z,
            observed_ids: h.observed_ids,
            column_gain: h.column_gain,
        };
        reg.validate()?;
        Ok(reg)
    }
}

/// Projection of the hidden contribution Zδ_i onto the observed covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundingDiagnostic {
    pub b: Vec<f64>,
    pub b_l1: f64,
    pub b_l2_sq: f64,
    /// Share of coordinates with |b_j| > 1e−8.
    pub dense_fraction: f64,
}

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows().max(1) as f64;
    let mut c = m.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    c
}

/// Least-squares coefficient b with Cov(x, zᵀδ_i − xᵀb) = 0, computed on
/// column-centered X and Z through ridge-jittered (1e−10) normal equations.
pub fn oracle_confounding_bias(reg: &RegressionData, delta_i: &[f64]) -> Result<ConfoundingDiagnostic> {
    let z = reg
        .z
        .as_ref()
        .ok_or_else(|| Error::Config("hidden covariates were not retained in the design".into()))?;
    if delta_i.len() != z.ncols() {
        return Err(Error::Dimension(format!(
            "delta_i has length {} but there are {} hidden columns",
            delta_i.len(),
            z.ncols()
        )));
    }
    let xc = centered(&reg.x);
    let target = centered(z) * DVector::from_column_slice(delta_i);
    let p = xc.ncols();
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += 1e-10;
    }
    let rhs = xc.transpose() * target;
    let b = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Data("singular observed covariance".into()))?,
    };
    let b_l1 = b.iter().map(|v| v.abs()).sum();
    let b_l2_sq = b.norm_squared();
    let dense = b.iter().filter(|v| v.abs() > 1e-8).count();
    Ok(ConfoundingDiagnostic {
        b: b.iter().copied().collect(),
        b_l1,
        b_l2_sq,
        dense_fraction: if p == 0 { 0.0 } else { dense as f64 / p as f64 },
    })
}
