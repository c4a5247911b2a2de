//! Lasso with an unpenalized intercept,
//!
//! ```text
//! (1/T)·‖y − μ − Xβ‖₂² + λ‖β‖₁
//! ```
//!
//! solved by cyclic coordinate descent on the centered Gram matrix, plus
//! penalty selection and KKT certification.
//!
//! With this scaling the coordinate update is
//! `β_j = S(c_j − Σ_{k≠j} G_jk β_k, λ/2) / G_jj` where `G = XcᵀXc/T` and
//! `c = Xcᵀyc/T` for column-centered `Xc`, `yc`, and the null-model
//! threshold is `λ_max = max_j 2|c_j|`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the objective after every sweep.
    #[serde(default)]
    pub trace: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-7,
            max_iter: 10_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub n_iter: usize,
    pub objective: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    pub fn nnz(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Sufficient statistics of a multi-response design: every target shares
/// the same X.
#[derive(Debug, Clone)]
pub struct LassoGram {
    n: usize,
    x_mean: DVector<f64>,
    /// XcᵀXc / T
    gram: DMatrix<f64>,
    /// column i = Xcᵀ yc_i / T
    cross: DMatrix<f64>,
    y_mean: DVector<f64>,
    /// yc_iᵀ yc_i / T
    y_ss: DVector<f64>,
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl LassoGram {
    /// `x` is T × p, `ys` is T × m (one column per target).
    pub fn new(x: &DMatrix<f64>, ys: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != ys.nrows() {
            return Err(Error::Dimension(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                ys.nrows()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Dimension("empty design".into()));
        }
        check_finite(x, "design matrix")?;
        check_finite(ys, "response")?;
        let n = x.nrows();
        let nf = n as f64;
        let x_mean = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / nf));
        let y_mean = DVector::from_iterator(ys.ncols(), ys.column_iter().map(|c| c.sum() / nf));
        let mut xc = x.clone();
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-x_mean[j]);
        }
        let mut yc = ys.clone();
        for (i, mut col) in yc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-y_mean[i]);
        }
        let gram = xc.tr_mul(&xc) / nf;
        let cross = xc.tr_mul(&yc) / nf;
        let y_ss = DVector::from_iterator(yc.ncols(), yc.column_iter().map(|c| c.norm_squared() / nf));
        Ok(LassoGram {
            n,
            x_mean,
            gram,
            cross,
            y_mean,
            y_ss,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.gram.nrows()
    }

    pub fn n_targets(&self) -> usize {
        self.cross.ncols()
    }

    /// Smallest λ at which target `i` has the all-zero solution.
    pub fn lambda_max(&self, target: usize) -> f64 {
        self.cross
            .column(target)
            .iter()
            .map(|c| 2.0 * c.abs())
            .fold(0.0, f64::max)
    }

    /// Largest [`LassoGram::lambda_max`] over targets.
    pub fn lambda_max_pooled(&self) -> f64 {
        (0..self.n_targets())
            .map(|i| self.lambda_max(i))
            .fold(0.0, f64::max)
    }

    fn objective(&self, target: usize, beta: &DVector<f64>, lambda: f64) -> f64 {
        let c = self.cross.column(target);
        let quad = beta.dot(&(&self.gram * beta));
        let rss = (self.y_ss[target] - 2.0 * c.dot(beta) + quad).max(0.0);
        rss + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn intercept(&self, target: usize, beta: &DVector<f64>) -> f64 {
        self.y_mean[target] - self.x_mean.dot(beta)
    }

    /// Coordinate descent for one target, optionally warm-started.
    pub fn fit(
        &self,
        target: usize,
        lambda: f64,
        opts: &LassoOptions,
        warm: Option<&[f64]>,
    ) -> Result<LassoFit> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be nonnegative, got {lambda}")));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
        }
        if target >= self.n_targets() {
            return Err(Error::Dimension(format!("target {target} out of range")));
        }
        let p = self.n_features();
        let mut beta = match warm {
            Some(w) if w.len() == p => DVector::from_column_slice(w),
            Some(w) => {
                return Err(Error::Dimension(format!(
                    "warm start has length {}, expected {p}",
                    w.len()
                )))
            }
            None => DVector::zeros(p),
        };
        let c = self.cross.column(target);
        // grad_j = c_j − (Gβ)_j, maintained incrementally
        let mut grad = c - &self.gram * &beta;
        let half = 0.5 * lambda;
        let mut trace = Vec::new();
        if opts.trace {
            trace.push(self.objective(target, &beta, lambda));
        }
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < opts.max_iter {
            sweeps += 1;
            let mut max_change = 0.0_f64;
            for j in 0..p {
                let gjj = self.gram[(j, j)];
                let old = beta[j];
                let new = if gjj > 0.0 {
                    soft_threshold(grad[j] + gjj * old, half) / gjj
                } else {
                    0.0
                };
                let change = new - old;
                if change != 0.0 {
                    beta[j] = new;
                    grad.axpy(-change, &self.gram.column(j), 1.0);
                    max_change = max_change.max(change.abs());
                }
            }
            if opts.trace {
                trace.push(self.objective(target, &beta, lambda));
            }
            if max_change < opts.tol {
                converged = true;
                break;
            }
        }
        Ok(LassoFit {
            intercept: self.intercept(target, &beta),
            objective: self.objective(target, &beta, lambda),
            beta: beta.iter().copied().collect(),
            lambda,
            n_iter: sweeps,
            converged,
            objective_trace: trace,
        })
    }
}

/// Single-target convenience wrapper around [`LassoGram`].
pub fn fit_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    let ys = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    LassoGram::new(x, &ys)?.fit(0, lambda, opts, None)
}

/// Objective evaluated directly from the data.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, intercept: f64, beta: &[f64], lambda: f64) -> f64 {
    let b = DVector::from_column_slice(beta);
    let r = y - x * &b;
    let rss = r.iter().map(|v| (v - intercept).powi(2)).sum::<f64>() / y.len() as f64;
    rss + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
}

/// Per-coordinate violation of the lasso optimality conditions, computed from
/// the raw residual `r = y − μ − Xβ`:
/// active j: |(2/T)·x_jᵀr − λ·sign(β_j)|; inactive j: max(0, (2/T)|x_jᵀr| − λ).
pub fn kkt_residuals(fit: &LassoFit, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vec<f64>> {
    if x.nrows() != y.len() || x.ncols() != fit.beta.len() {
        return Err(Error::Dimension("fit, X and y do not conform".into()));
    }
    let b = DVector::from_column_slice(&fit.beta);
    let mut r = y - x * &b;
    r.add_scalar_mut(-fit.intercept);
    let t = y.len() as f64;
    Ok(x
        .column_iter()
        .zip(&fit.beta)
        .map(|(col, &bj)| {
            let g = 2.0 / t * col.dot(&r);
            if bj != 0.0 {
                (g - fit.lambda * bj.signum()).abs()
            } else {
                (g.abs() - fit.lambda).max(0.0)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyStrategy {
    /// λ = c · Λ²_max(F) · T^(−2/5)
    RateRule,
    /// Smallest path λ whose pooled fit keeps at most `budget` nonzeros.
    EdgeBudget,
    /// Contiguous 80/20 train/validation split.
    TimeSplitCV,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRule {
    pub strategy: PenaltyStrategy,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub budget: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

fn default_c() -> f64 {
    0.5
}

fn default_folds() -> usize {
    1
}

impl Default for PenaltyRule {
    fn default() -> Self {
        PenaltyRule::rate(default_c())
    }
}

impl PenaltyRule {
    pub fn rate(c: f64) -> Self {
        PenaltyRule {
            strategy: PenaltyStrategy::RateRule,
            c,
            budget: 0,
            folds: default_folds(),
        }
    }

    pub fn edge_budget(budget: usize) -> Self {
        PenaltyRule {
            strategy: PenaltyStrategy::EdgeBudget,
            budget,
            ..Self::default()
        }
    }

    pub fn time_split() -> Self {
        PenaltyRule {
            strategy: PenaltyStrategy::TimeSplitCV,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("penalty constant must be positive, got {}", self.c)));
        }
        if self.strategy == PenaltyStrategy::TimeSplitCV && self.folds == 0 {
            return Err(Error::Config("time-split CV needs at least one fold".into()));
        }
        Ok(())
    }
}

pub const PATH_LEN: usize = 50;
/// Ratio of the smallest to the largest λ on the path.
pub const PATH_EPS: f64 = 1e-3;

/// Log-spaced descending path from `lambda_max` to `PATH_EPS · lambda_max`.
pub fn lambda_path(lambda_max: f64) -> Vec<f64> {
    if !(lambda_max > 0.0) {
        return vec![0.0];
    }
    let lo = (lambda_max * PATH_EPS).ln();
    let hi = lambda_max.ln();
    (0..PATH_LEN)
        .map(|k| {
            if k == 0 {
                lambda_max
            } else {
                (hi + (lo - hi) * k as f64 / (PATH_LEN - 1) as f64).exp()
            }
        })
        .collect()
}

/// One point of a pooled regularization path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub nnz: usize,
    /// Sum of per-target objectives.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaChoice {
    pub lambda: f64,
    pub path: Vec<PathPoint>,
    pub note: Option<String>,
}

/// Fits every target at every λ of `path`, warm-starting along it.
fn pooled_path(gram: &LassoGram, path: &[f64], opts: &LassoOptions) -> Result<Vec<Vec<LassoFit>>> {
    use rayon::prelude::*;
    let per_target: Vec<Vec<LassoFit>> = (0..gram.n_targets())
        .into_par_iter()
        .map(|i| {
            let mut fits = Vec::with_capacity(path.len());
            let mut warm: Option<Vec<f64>> = None;
            for &lam in path {
                let fit = gram.fit(i, lam, opts, warm.as_deref())?;
                warm = Some(fit.beta.clone());
                fits.push(fit);
            }
            Ok(fits)
        })
        .collect::<Result<_>>()?;
    // regroup by λ
    Ok((0..path.len())
        .map(|k| per_target.iter().map(|f| f[k].clone()).collect())
        .collect())
}

fn summarize(path: &[f64], fits: &[Vec<LassoFit>]) -> Vec<PathPoint> {
    path.iter()
        .zip(fits)
        .map(|(&lambda, f)| PathPoint {
            lambda,
            nnz: f.iter().map(LassoFit::nnz).sum(),
            objective: f.iter().map(|g| g.objective).sum(),
        })
        .collect()
}

/// Chooses a single λ shared by all targets (columns of `ys`).
///
/// `f_norm` is Λ_max(F) of the spectral map applied to the design (1 when
/// none was applied).
pub fn select_lambda(
    x: &DMatrix<f64>,
    ys: &DMatrix<f64>,
    rule: &PenaltyRule,
    f_norm: f64,
    opts: &LassoOptions,
) -> Result<LambdaChoice> {
    rule.validate()?;
    let t = x.nrows();
    match rule.strategy {
        PenaltyStrategy::RateRule => Ok(LambdaChoice {
            lambda: rule.c * f_norm * f_norm * (t as f64).powf(-0.4),
            path: Vec::new(),
            note: None,
        }),
        PenaltyStrategy::EdgeBudget => {
            let gram = LassoGram::new(x, ys)?;
            edge_budget_lambda(&gram, rule.budget, opts)
        }
        PenaltyStrategy::TimeSplitCV => time_split_lambda(x, ys, opts),
    }
}

/// Scans the pooled path from λ_max downwards and stops just before the
/// first λ whose fit exceeds `budget` nonzeros.
pub fn edge_budget_lambda(gram: &LassoGram, budget: usize, opts: &LassoOptions) -> Result<LambdaChoice> {
    let path = lambda_path(gram.lambda_max_pooled());
    let fits = pooled_path(gram, &path, opts)?;
    let points = summarize(&path, &fits);
    let mut chosen = None;
    for (k, pt) in points.iter().enumerate() {
        if pt.nnz > budget {
            chosen = Some(k.saturating_sub(1));
            break;
        }
    }
    let (idx, note) = match chosen {
        Some(k) => (k, None),
        None => (
            points.len() - 1,
            Some(format!(
                "edge budget {budget} not reached on the path; using the smallest lambda ({} edges)",
                points.last().map_or(0, |p| p.nnz)
            )),
        ),
    };
    Ok(LambdaChoice {
        lambda: points[idx].lambda,
        path: points,
        note,
    })
}

fn time_split_lambda(x: &DMatrix<f64>, ys: &DMatrix<f64>, opts: &LassoOptions) -> Result<LambdaChoice> {
    let t = x.nrows();
    let n_train = (t as f64 * 0.8).floor() as usize;
    if n_train < 2 || n_train >= t {
        return Err(Error::Config(format!("{t} rows are too few for a train/validation split")));
    }
    let x_tr = x.rows(0, n_train).into_owned();
    let y_tr = ys.rows(0, n_train).into_owned();
    let x_va = x.rows(n_train, t - n_train);
    let y_va = ys.rows(n_train, t - n_train);
    let gram = LassoGram::new(&x_tr, &y_tr)?;
    let path = lambda_path(gram.lambda_max_pooled());
    let fits = pooled_path(&gram, &path, opts)?;
    let points = summarize(&path, &fits);
    let mut best = (f64::INFINITY, 0usize);
    for (k, per_target) in fits.iter().enumerate() {
        let mut sse = 0.0;
        for (i, fit) in per_target.iter().enumerate() {
            let b = DVector::from_column_slice(&fit.beta);
            let pred = x_va * b;
            sse += y_va
                .column(i)
                .iter()
                .zip(pred.iter())
                .map(|(y, f)| (y - fit.intercept - f).powi(2))
                .sum::<f64>();
        }
        let mse = sse / ((t - n_train) * ys.ncols().max(1)) as f64;
        // strict improvement only, so ties keep the larger λ
        if mse < best.0 {
            best = (mse, k);
        }
    }
    Ok(LambdaChoice {
        lambda: path[best.1],
        path: points,
        note: None,
    })
}

/// Writes `lambda,nnz,objective` rows.
pub fn write_path_csv<W: std::io::Write>(path: &[PathPoint], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["lambda", "nnz", "objective"])?;
    for pt in path {
        wtr.write_record([pt.lambda.to_string(), pt.nnz.to_string(), pt.objective.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<path csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, t: usize, p: usize) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(t, p, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let beta: Vec<f64> = (0..p).map(|j| if j % 2 == 0 { 1.5 } else { 0.0 }).collect();
        let y = DVector::from_fn(t, |i, _| {
            0.7 + (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>() + 0.3 * (rng.random::<f64>() - 0.5)
        });
        (x, y)
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn null_model_above_lambda_max() {
        let (x, y) = random_problem(1, 60, 4);
        let ys = DMatrix::from_column_slice(60, 1, y.as_slice());
        let g = LassoGram::new(&x, &ys).unwrap();
        let fit = g.fit(0, g.lambda_max(0), &LassoOptions::default(), None).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert!((fit.intercept - y.mean()).abs() < 1e-14);
        let below = g.fit(0, 0.99 * g.lambda_max(0), &LassoOptions::default(), None).unwrap();
        assert_eq!(below.nnz(), 1);
    }

    #[test]
    fn objective_monotone_per_sweep() {
        let (x, y) = random_problem(2, 80, 6);
        let opts = LassoOptions {
            trace: true,
            ..Default::default()
        };
        let fit = fit_lasso(&x, &y, 0.05, &opts).unwrap();
        assert!(fit.converged);
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-14, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn gram_objective_matches_direct() {
        let (x, y) = random_problem(3, 50, 5);
        let fit = fit_lasso(&x, &y, 0.1, &LassoOptions::default()).unwrap();
        let direct = lasso_objective(&x, &y, fit.intercept, &fit.beta, 0.1);
        assert!((fit.objective - direct).abs() < 1e-12);
    }

    #[test]
    fn kkt_detects_perturbation() {
        let (x, y) = random_problem(4, 100, 5);
        let opts = LassoOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let fit = fit_lasso(&x, &y, 0.05, &opts).unwrap();
        let slack = kkt_residuals(&fit, &x, &y).unwrap();
        assert!(slack.iter().all(|s| *s < 1e-6), "{slack:?}");
        let j = fit.beta.iter().position(|b| *b != 0.0).unwrap();
        let mut bad = fit.clone();
        bad.beta[j] += 0.1;
        let slack = kkt_residuals(&bad, &x, &y).unwrap();
        assert!(slack[j] > 1e-3);
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let (x, y) = random_problem(5, 200, 3);
        let opts = LassoOptions {
            tol: 1e-13,
            ..Default::default()
        };
        let fit = fit_lasso(&x, &y, 0.0, &opts).unwrap();
        let slack = kkt_residuals(&fit, &x, &y).unwrap();
        assert!(slack.iter().all(|s| *s < 1e-6));
    }

    #[test]
    fn constant_response_gives_zero_row() {
        let (x, _) = random_problem(6, 40, 3);
        let y = DVector::from_element(40, 2.5);
        let fit = fit_lasso(&x, &y, 0.01, &LassoOptions::default()).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert!((fit.intercept - 2.5).abs() < 1e-14);
    }

    #[test]
    fn invalid_arguments() {
        let (x, y) = random_problem(7, 20, 2);
        assert!(fit_lasso(&x, &y, -1.0, &LassoOptions::default()).is_err());
        let bad = LassoOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(fit_lasso(&x, &y, 0.1, &bad).is_err());
        let short = DVector::zeros(5);
        assert!(fit_lasso(&x, &short, 0.1, &LassoOptions::default()).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let (x, y) = random_problem(8, 50, 4);
        let opts = LassoOptions {
            tol: 1e-15,
            max_iter: 1,
            trace: false,
        };
        let fit = fit_lasso(&x, &y, 0.001, &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.n_iter, 1);
    }

    #[test]
    fn rate_rule_arithmetic() {
        let x = DMatrix::zeros(1000, 2);
        let ys = DMatrix::zeros(1000, 1);
        let c = select_lambda(&x, &ys, &PenaltyRule::rate(1.0), 1.0, &LassoOptions::default()).unwrap();
        assert!((c.lambda - 1000f64.powf(-0.4)).abs() < 1e-15);
        assert!((c.lambda - 0.0631).abs() < 1e-4);
    }

    #[test]
    fn budget_zero_is_null_model() {
        let (x, y) = random_problem(9, 100, 6);
        let ys = DMatrix::from_column_slice(100, 1, y.as_slice());
        let g = LassoGram::new(&x, &ys).unwrap();
        let c = edge_budget_lambda(&g, 0, &LassoOptions::default()).unwrap();
        assert_eq!(c.lambda, g.lambda_max_pooled());
    }

    #[test]
    fn unreachable_budget_notes() {
        let (x, y) = random_problem(10, 100, 3);
        let ys = DMatrix::from_column_slice(100, 1, y.as_slice());
        let g = LassoGram::new(&x, &ys).unwrap();
        let c = edge_budget_lambda(&g, 50, &LassoOptions::default()).unwrap();
        assert!(c.note.is_some());
        assert_eq!(c.lambda, c.path.last().unwrap().lambda);
    }

    #[test]
    fn time_split_picks_a_path_value() {
        let (x, y) = random_problem(11, 200, 5);
        let ys = DMatrix::from_column_slice(200, 1, y.as_slice());
        let c = select_lambda(&x, &ys, &PenaltyRule::time_split(), 1.0, &LassoOptions::default()).unwrap();
        assert!(c.path.iter().any(|p| p.lambda == c.lambda));
        // signal is strong, so CV should not choose the null model
        assert!(c.lambda < c.path[0].lambda);
    }

    #[test]
    fn path_is_log_spaced() {
        let path = lambda_path(2.0);
        assert_eq!(path.len(), PATH_LEN);
        assert_eq!(path[0], 2.0);
        assert!((path[PATH_LEN - 1] - 2.0 * PATH_EPS).abs() < 1e-12);
        let r0 = path[1] / path[0];
        let r1 = path[20] / path[19];
        assert!((r0 - r1).abs() < 1e-12);
    }
}
