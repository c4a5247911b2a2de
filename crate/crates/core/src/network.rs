//! Generative network model: observed and hidden Hawkes components, the
//! block topologies used in the simulation studies, and the stationarity
//! and flow-bound checks on the integrated transfer matrix Ω.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    Exponential,
}

/// Transition kernel κ(t) of a source component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionKernel {
    pub family: KernelFamily,
    /// Decay per unit time.
    pub rate: f64,
}

impl TransitionKernel {
    pub fn exponential(rate: f64) -> Result<Self> {
        let k = TransitionKernel {
            family: KernelFamily::Exponential,
            rate,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::Config(format!(
                "kernel rate must be positive and finite, got {}",
                self.rate
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => (-self.rate * t).exp(),
        }
    }

    /// ∫₀^∞ κ(t) dt
    pub fn integral(&self) -> f64 {
        match self.family {
            KernelFamily::Exponential => 1.0 / self.rate,
        }
    }

    /// Multiplicative decay of the integrated process over an interval of
    /// length `dt` with no events.
    pub fn decay(&self, dt: f64) -> f64 {
        match self.family {
            KernelFamily::Exponential => (-self.rate * dt).exp(),
        }
    }
}

impl Default for TransitionKernel {
    fn default() -> Self {
        TransitionKernel {
            family: KernelFamily::Exponential,
            rate: 1.0,
        }
    }
}

/// Ground-truth generative model over `p` observed and `q` hidden components.
///
/// Components `0..p` are observed, `p..p+q` hidden. Row `i` of the full
/// coefficient matrix holds the weights of every source on target `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub p: usize,
    pub q: usize,
    pub mu: Vec<f64>,
    /// Observed → observed, p × p.
    #[serde(with = "rows")]
    pub theta: DMatrix<f64>,
    /// Hidden → observed, p × q.
    #[serde(with = "crate::linalg::shaped")]
    pub delta: DMatrix<f64>,
    /// Drivers of the hidden components, q × (p + q).
    #[serde(with = "crate::linalg::shaped")]
    pub hidden_block: DMatrix<f64>,
    /// One kernel per source component (length p + q).
    pub kernel: Vec<TransitionKernel>,
}

/// Checkable pieces of the stationarity and flow assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda_max_omega: f64,
    pub max_row_sum: f64,
    pub max_col_sum: f64,
    pub passes_a1: bool,
    pub passes_a4: bool,
}

impl NetworkSpec {
    pub fn n_components(&self) -> usize {
        self.p + self.q
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_components();
        if self.mu.len() != n {
            return Err(Error::Dimension(format!(
                "mu has length {} but p + q = {n}",
                self.mu.len()
            )));
        }
        if self.theta.shape() != (self.p, self.p) {
            return Err(Error::Dimension(format!(
                "theta is {:?}, expected ({}, {})",
                self.theta.shape(),
                self.p,
                self.p
            )));
        }
        if self.delta.shape() != (self.p, self.q) {
            return Err(Error::Dimension(format!(
                "delta is {:?}, expected ({}, {})",
                self.delta.shape(),
                self.p,
                self.q
            )));
        }
        if self.hidden_block.shape() != (self.q, n) {
            return Err(Error::Dimension(format!(
                "hidden_block is {:?}, expected ({}, {n})",
                self.hidden_block.shape(),
                self.q
            )));
        }
        if self.kernel.len() != n {
            return Err(Error::Dimension(format!(
                "{} kernels given for {n} components",
                self.kernel.len()
            )));
        }
        for k in &self.kernel {
            k.validate()?;
        }
        if let Some(m) = self.mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::Config(format!("baseline rates must be positive, got {m}")));
        }
        let finite = self.theta.iter().all(|v| v.is_finite())
            && self.delta.iter().all(|v| v.is_finite())
            && self.hidden_block.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("network coefficients"));
        }
        Ok(())
    }

    /// The (p+q) × (p+q) coefficient matrix B_full.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let n = self.n_components();
        let mut b = DMatrix::zeros(n, n);
        b.view_mut((0, 0), (self.p, self.p)).copy_from(&self.theta);
        b.view_mut((0, self.p), (self.p, self.q))
            .copy_from(&self.delta);
        b.view_mut((self.p, 0), (self.q, n))
            .copy_from(&self.hidden_block);
        b
    }

    /// B̄_ij = B_ij · ∫κ_j
    pub fn integrated_matrix(&self) -> DMatrix<f64> {
        let mut b = self.full_matrix();
        for (j, k) in self.kernel.iter().enumerate() {
            b.column_mut(j).scale_mut(k.integral());
        }
        b
    }

    /// Ω_ij = |B_ij| · ∫|κ_j|
    pub fn omega(&self) -> DMatrix<f64> {
        self.integrated_matrix().abs()
    }

    /// True edge set among observed components: {(i, j) : θ_ij ≠ 0}.
    pub fn true_edges(&self) -> BTreeSet<(usize, usize)> {
        let mut s = BTreeSet::new();
        for i in 0..self.p {
            for j in 0..self.p {
                if self.theta[(i, j)] != 0.0 {
                    s.insert((i, j));
                }
            }
        }
        s
    }

    pub fn has_negative_coefficients(&self) -> bool {
        self.full_matrix().iter().any(|v| *v < 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Λ_max(ΩᵀΩ) together with the maximum in- and out-flow of Ω.
pub fn check_stationarity(spec: &NetworkSpec) -> SpectrumReport {
    let omega = spec.omega();
    let lambda_max_omega = linalg::lambda_max_sym(&(omega.transpose() * &omega)).max(0.0);
    let max_row_sum = omega
        .row_iter()
        .map(|r| r.sum())
        .fold(0.0_f64, f64::max);
    let max_col_sum = omega
        .column_iter()
        .map(|c| c.sum())
        .fold(0.0_f64, f64::max);
    SpectrumReport {
        lambda_max_omega,
        max_row_sum,
        max_col_sum,
        passes_a1: lambda_max_omega < 1.0,
        passes_a4: max_row_sum < 1.0,
    }
}

/// Parameters of the block topologies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub p: usize,
    pub q: usize,
    pub block_size: usize,
    /// Weight of every within-block observed edge.
    pub beta: f64,
    /// Weight of every hidden → observed edge.
    pub delta: f64,
    /// Baseline rate of every component, observed and hidden.
    pub mu: f64,
    /// Share of blocks wired to hidden components.
    pub confounded_fraction: f64,
    pub kernel_rate: f64,
}

impl BlockParams {
    /// Confounded block setting: β = 0.12, δ = 0.10, μ = 0.05, half the
    /// blocks confounded.
    pub fn confounded(p: usize, q: usize) -> Self {
        BlockParams {
            p,
            q,
            block_size: 5,
            beta: 0.12,
            delta: 0.10,
            mu: 0.05,
            confounded_fraction: 0.5,
            kernel_rate: 1.0,
        }
    }

    /// Orthogonal block setting: β = 0.2, δ = 0.18, μ = 0.05.
    pub fn orthogonal(p: usize, q: usize) -> Self {
        BlockParams {
            beta: 0.2,
            delta: 0.18,
            ..Self::confounded(p, q)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("block_size must be positive".into()));
        }
        if self.p == 0 || !self.p.is_multiple_of(self.block_size) {
            return Err(Error::Config(format!(
                "p = {} is not a positive multiple of block_size = {}",
                self.p, self.block_size
            )));
        }
        if !(0.0..=1.0).contains(&self.confounded_fraction) {
            return Err(Error::Config(format!(
                "confounded_fraction must lie in [0, 1], got {}",
                self.confounded_fraction
            )));
        }
        if !(self.beta.is_finite() && self.delta.is_finite()) {
            return Err(Error::NonFinite("block weights"));
        }
        Ok(())
    }
}

fn empty_spec(params: &BlockParams) -> Result<NetworkSpec> {
    let n = params.p + params.q;
    let kernel = TransitionKernel::exponential(params.kernel_rate)?;
    Ok(NetworkSpec {
        p: params.p,
        q: params.q,
        mu: vec![params.mu; n],
        theta: DMatrix::zeros(params.p, params.p),
        delta: DMatrix::zeros(params.p, params.q),
        hidden_block: DMatrix::zeros(params.q, n),
        kernel: vec![kernel; n],
    })
}

fn fill_observed_block(spec: &mut NetworkSpec, block: usize, bs: usize, beta: f64) {
    let start = block * bs;
    for i in start..start + bs {
        for j in start..start + bs {
            if i != j {
                spec.theta[(i, j)] = beta;
            }
        }
    }
}

fn fill_hidden_block(spec: &mut NetworkSpec, block: usize, bs: usize, delta: f64) {
    let start = block * bs;
    for i in start..start + bs {
        for h in start..start + bs {
            spec.delta[(i, h)] = delta;
        }
    }
}

fn accept(spec: NetworkSpec) -> Result<NetworkSpec> {
    spec.validate()?;
    let report = check_stationarity(&spec);
    if !report.passes_a1 {
        return Err(Error::Stationarity { report });
    }
    Ok(spec)
}

/// Observed components fully connected (no self-edges) within consecutive
/// blocks; the first `round(confounded_fraction · n_blocks)` blocks also
/// receive δ from their own disjoint set of `block_size` hidden nodes.
/// Hidden nodes are unconnected Poisson sources.
pub fn make_block_network(params: &BlockParams) -> Result<NetworkSpec> {
    params.validate()?;
    let bs = params.block_size;
    let n_blocks = params.p / bs;
    let n_conf = (params.confounded_fraction * n_blocks as f64).round() as usize;
    if n_conf * bs > params.q {
        return Err(Error::Config(format!(
            "{n_conf} confounded blocks need {} hidden components but q = {}",
            n_conf * bs,
            params.q
        )));
    }
    let mut spec = empty_spec(params)?;
    for b in 0..n_blocks {
        fill_observed_block(&mut spec, b, bs, params.beta);
        if b < n_conf {
            fill_hidden_block(&mut spec, b, bs, params.delta);
        }
    }
    accept(spec)
}

/// Variant where blocks wired to hidden nodes carry no observed edges, so the
/// column spaces of Θ and Δ are orthogonal. Half of the blocks (fewer if q is
/// too small) are confounded; `confounded_fraction` is ignored.
pub fn make_orthogonal_block_network(params: &BlockParams) -> Result<NetworkSpec> {
    params.validate()?;
    let bs = params.block_size;
    let n_blocks = params.p / bs;
    let n_conf = (n_blocks / 2).min(params.q / bs);
    let mut spec = empty_spec(params)?;
    for b in 0..n_blocks {
        if b < n_conf {
            fill_hidden_block(&mut spec, b, bs, params.delta);
        } else {
            fill_observed_block(&mut spec, b, bs, params.beta);
        }
    }
    accept(spec)
}

/// Largest |⟨u, v⟩| over unit-normalized nonzero columns u of Θ and v of Δ.
pub fn max_column_alignment(theta: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for a in theta.column_iter() {
        let na = a.norm();
        if na == 0.0 {
            continue;
        }
        for b in delta.column_iter() {
            let nb = b.norm();
            if nb == 0.0 {
                continue;
            }
            worst = worst.max((a.dot(&b) / (na * nb)).abs());
        }
    }
    worst
}
