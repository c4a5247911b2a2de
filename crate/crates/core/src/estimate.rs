//! Network estimators (hp-trim, naive lasso, HIVE), thresholded edge
//! selection, evaluation against a known network and estimate export.
//!
//! All estimators share one pipeline: columns of X are centered and scaled
//! to unit standard deviation and Y is centered; the method-specific map is
//! applied; a single λ is chosen for all targets; the p lasso problems are
//! solved in parallel; coefficients are mapped back to the raw covariate
//! scale and divided by the design's `column_gain`, so that they are on the
//! scale of the instantaneous transfer coefficients.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::RegressionData;
use crate::error::{Error, Result};
use crate::hive::{self, HiveState};
use crate::lasso::{select_lambda, LassoGram, LassoOptions, PenaltyRule};
use crate::linalg::{column_moments, rows};
use crate::network::NetworkSpec;
use crate::spectral::{self, SpectralTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    HpTrim,
    Naive,
    HiveOracle,
    HiveEmpirical,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::HpTrim,
        Method::Naive,
        Method::HiveOracle,
        Method::HiveEmpirical,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::HpTrim => "hp-trim",
            Method::Naive => "naive",
            Method::HiveOracle => "hive-oracle",
            Method::HiveEmpirical => "hive-empirical",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "hp-trim" | "hptrim" | "trim" => Ok(Method::HpTrim),
            "naive" => Ok(Method::Naive),
            "hive-oracle" | "hiveoracle" => Ok(Method::HiveOracle),
            "hive-empirical" | "hiveempirical" | "hive" => Ok(Method::HiveEmpirical),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

mod edge_list {
    use std::collections::BTreeSet;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(e: &BTreeSet<(usize, usize)>, s: S) -> Result<S::Ok, S::Error> {
        e.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeSet<(usize, usize)>, D::Error> {
        let v: Vec<[usize; 2]> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|[i, j]| (i, j)).collect())
    }
}

/// Fitted network among the observed components. Row `i` of `beta_hat`
/// holds the estimated effects of every component on target `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEstimate {
    pub method: Method,
    pub lambda: f64,
    pub tau_select: f64,
    pub q_used: Option<usize>,
    pub intercepts: Vec<f64>,
    #[serde(with = "rows")]
    pub beta_hat: DMatrix<f64>,
    /// (target, source) pairs with |beta_hat| > tau_select.
    #[serde(with = "edge_list")]
    pub edges: BTreeSet<(usize, usize)>,
    pub observed_ids: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl NetworkEstimate {
    pub fn p(&self) -> usize {
        self.beta_hat.nrows()
    }

    /// beta_hat with entries at or below the selection threshold zeroed.
    pub fn selected(&self) -> DMatrix<f64> {
        let tau = self.tau_select;
        self.beta_hat.map(|b| if b.abs() > tau { b } else { 0.0 })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// `i,j,beta_hat,selected` for every ordered pair.
    pub fn write_adjacency_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["i", "j", "beta_hat", "selected"])?;
        for i in 0..self.p() {
            for j in 0..self.p() {
                let sel = self.edges.contains(&(i, j));
                wtr.write_record([
                    i.to_string(),
                    j.to_string(),
                    self.beta_hat[(i, j)].to_string(),
                    u8::from(sel).to_string(),
                ])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<adjacency csv>", e))?;
        Ok(())
    }

    /// Directed graph with one `source -> target` statement per selected
    /// edge; pen width grows with |beta_hat|.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{}\" {{", self.method.name());
        for i in 0..self.p() {
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", self.observed_ids.get(i).copied().unwrap_or(i));
        }
        let max = self
            .edges
            .iter()
            .map(|&(i, j)| self.beta_hat[(i, j)].abs())
            .fold(0.0_f64, f64::max);
        for &(i, j) in &self.edges {
            let b = self.beta_hat[(i, j)];
            let width = if max > 0.0 { 1.0 + 4.0 * b.abs() / max } else { 1.0 };
            let color = if b >= 0.0 { "black" } else { "blue" };
            let _ = writeln!(
                s,
                "  n{j} -> n{i} [penwidth={width:.3}, color={color}, label=\"{b:.4}\"];"
            );
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub lasso: LassoOptions,
    /// Trim threshold; the median singular value when unset.
    pub tau_trim: Option<f64>,
    /// Edge selection threshold; λ/2 when unset.
    pub tau_select: Option<f64>,
    pub hetero_pca_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lasso: LassoOptions::default(),
            tau_trim: None,
            tau_select: None,
            hetero_pca_iters: 10,
        }
    }
}

/// Centered, unit-variance design plus the moments needed to undo it.
struct Standardized {
    x: DMatrix<f64>,
    yc: DMatrix<f64>,
    x_mean: DVector<f64>,
    /// sd_j · gain_j; zero for constant columns
    scale: DVector<f64>,
    x_sd: DVector<f64>,
    y_mean: DVector<f64>,
}

fn standardize(reg: &RegressionData) -> Result<Standardized> {
    reg.validate()?;
    if reg.p() == 0 {
        return Err(Error::Data("no observed components to fit".into()));
    }
    let (x_mean, x_sd) = column_moments(&reg.x);
    let mut x = reg.x.clone();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        if x_sd[j] > 0.0 {
            col.add_scalar_mut(-x_mean[j]);
            col.scale_mut(1.0 / x_sd[j]);
        } else {
            col.fill(0.0);
        }
    }
    let (y_mean, _) = column_moments(&reg.y);
    let mut yc = reg.y.clone();
    for (i, mut col) in yc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-y_mean[i]);
    }
    let scale = DVector::from_iterator(
        reg.p(),
        (0..reg.p()).map(|j| x_sd[j] * reg.column_gain[j]),
    );
    Ok(Standardized {
        x,
        yc,
        x_mean,
        scale,
        x_sd,
        y_mean,
    })
}

struct Fitted {
    lambda: f64,
    beta_std: DMatrix<f64>,
    note: Option<String>,
}

fn fit_all_targets(x: &DMatrix<f64>, ys: &DMatrix<f64>, rule: &PenaltyRule, f_norm: f64, opts: &FitOptions) -> Result<Fitted> {
    let choice = select_lambda(x, ys, rule, f_norm, &opts.lasso)?;
    let gram = LassoGram::new(x, ys)?;
    let fits = (0..ys.ncols())
        .into_par_iter()
        .map(|i| gram.fit(i, choice.lambda, &opts.lasso, None))
        .collect::<Result<Vec<_>>>()?;
    let p = x.ncols();
    let mut beta_std = DMatrix::zeros(ys.ncols(), p);
    let mut unconverged = 0;
    for (i, f) in fits.iter().enumerate() {
        if !f.converged {
            unconverged += 1;
        }
        for j in 0..p {
            beta_std[(i, j)] = f.beta[j];
        }
    }
    let mut note = choice.note;
    if unconverged > 0 {
        let msg = format!("{unconverged} target fits hit the iteration limit");
        note = Some(match note {
            Some(n) => format!("{n}; {msg}"),
            None => msg,
        });
    }
    Ok(Fitted {
        lambda: choice.lambda,
        beta_std,
        note,
    })
}

fn finish(
    method: Method,
    reg: &RegressionData,
    st: &Standardized,
    outcome_mean: &DVector<f64>,
    fitted: Fitted,
    q_used: Option<usize>,
    opts: &FitOptions,
) -> NetworkEstimate {
    let p = reg.p();
    let mut beta_hat = DMatrix::zeros(p, p);
    let mut intercepts = vec![0.0; p];
    for i in 0..p {
        let mut shift = 0.0;
        for j in 0..p {
            let b = fitted.beta_std[(i, j)];
            if b != 0.0 && st.scale[j] > 0.0 {
                beta_hat[(i, j)] = b / st.scale[j];
                shift += st.x_mean[j] * b / st.x_sd[j];
            }
        }
        intercepts[i] = outcome_mean[i] - shift;
    }
    let tau_select = opts.tau_select.unwrap_or(0.5 * fitted.lambda);
    let mut est = NetworkEstimate {
        method,
        lambda: fitted.lambda,
        tau_select,
        q_used,
        intercepts,
        beta_hat,
        edges: BTreeSet::new(),
        observed_ids: reg.observed_ids.clone(),
        note: fitted.note,
    };
    est.edges = edge_set(&est.beta_hat, tau_select);
    est
}

fn edge_set(beta: &DMatrix<f64>, tau: f64) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for i in 0..beta.nrows() {
        for j in 0..beta.ncols() {
            if beta[(i, j)].abs() > tau {
                s.insert((i, j));
            }
        }
    }
    s
}

/// Lasso on the untransformed design, ignoring hidden components.
pub fn fit_naive(reg: &RegressionData, rule: &PenaltyRule, opts: &FitOptions) -> Result<NetworkEstimate> {
    let st = standardize(reg)?;
    let fitted = fit_all_targets(&st.x, &st.yc, rule, 1.0, opts)?;
    Ok(finish(Method::Naive, reg, &st, &st.y_mean, fitted, None, opts))
}

/// Trim transform of the standardized design followed by the lasso.
pub fn fit_hp_trim(reg: &RegressionData, rule: &PenaltyRule, opts: &FitOptions) -> Result<NetworkEstimate> {
    fit_hp_trim_with_transform(reg, rule, opts).map(|(e, _)| e)
}

pub fn fit_hp_trim_with_transform(
    reg: &RegressionData,
    rule: &PenaltyRule,
    opts: &FitOptions,
) -> Result<(NetworkEstimate, SpectralTransform)> {
    let st = standardize(reg)?;
    let tf = spectral::trim_transform(&st.x, opts.tau_trim)?;
    let (xt, yt) = tf.apply(&st.x, &st.yc)?;
    let fitted = fit_all_targets(&xt, &yt, rule, tf.f_norm(), opts)?;
    Ok((finish(Method::HpTrim, reg, &st, &st.y_mean, fitted, None, opts), tf))
}

/// HIVE: naive residuals → residual covariance → latent dimension (given,
/// or by eigengap when `q` is `None`) → heteroPCA projector → lasso of the
/// projected outcomes P_{Δ⊥}·Y(t) on X.
pub fn fit_hive(
    reg: &RegressionData,
    rule: &PenaltyRule,
    q: Option<usize>,
    opts: &FitOptions,
) -> Result<NetworkEstimate> {
    fit_hive_with_state(reg, rule, q, opts).map(|(e, _)| e)
}

pub fn fit_hive_with_state(
    reg: &RegressionData,
    rule: &PenaltyRule,
    q: Option<usize>,
    opts: &FitOptions,
) -> Result<(NetworkEstimate, HiveState)> {
    let st = standardize(reg)?;
    let p = reg.p();
    if let Some(q) = q {
        if q >= p {
            return Err(Error::Config(format!("HIVE needs q < p, got q = {q}, p = {p}")));
        }
    }
    let naive = fit_all_targets(&st.x, &st.yc, rule, 1.0, opts)?;
    let residuals = &st.yc - &st.x * naive.beta_std.transpose();
    let resid_cov = residuals.tr_mul(&residuals) / reg.n_bins as f64;

    let (method, q_hat, eigengaps) = match q {
        Some(q) => {
            let gaps = if p >= 2 {
                hive::estimate_q(&resid_cov)?.eigengaps
            } else {
                Vec::new()
            };
            (Method::HiveOracle, q, gaps)
        }
        None => {
            let e = hive::estimate_q(&resid_cov)?;
            (Method::HiveEmpirical, e.q_hat, e.eigengaps)
        }
    };

    let p_delta = if q_hat == 0 {
        DMatrix::zeros(p, p)
    } else {
        hive::projector(&hive::hetero_pca(&resid_cov, q_hat, opts.hetero_pca_iters)?)
    };
    let p_delta_perp = DMatrix::identity(p, p) - &p_delta;

    let (outcome, outcome_mean) = if q_hat == 0 {
        (st.yc.clone(), st.y_mean.clone())
    } else {
        (&st.yc * p_delta_perp.transpose(), &p_delta_perp * &st.y_mean)
    };
    let fitted = fit_all_targets(&st.x, &outcome, rule, 1.0, opts)?;
    let est = finish(method, reg, &st, &outcome_mean, fitted, Some(q_hat), opts);
    Ok((
        est,
        HiveState {
            residuals,
            resid_cov,
            eigengaps,
            q_hat,
            p_delta,
            p_delta_perp,
        },
    ))
}

/// Runs `method`; `oracle_q` is required for [`Method::HiveOracle`].
pub fn fit_method(
    method: Method,
    reg: &RegressionData,
    rule: &PenaltyRule,
    oracle_q: Option<usize>,
    opts: &FitOptions,
) -> Result<NetworkEstimate> {
    match method {
        Method::HpTrim => fit_hp_trim(reg, rule, opts),
        Method::Naive => fit_naive(reg, rule, opts),
        Method::HiveOracle => {
            let q = oracle_q.ok_or_else(|| Error::Config("hive-oracle needs the number of latent factors".into()))?;
            fit_hive(reg, rule, Some(q), opts)
        }
        Method::HiveEmpirical => fit_hive(reg, rule, None, opts),
    }
}

/// Recomputes the edge set at a new threshold; `beta_hat` is kept as is.
pub fn threshold_edges(est: &NetworkEstimate, tau_select: f64) -> Result<NetworkEstimate> {
    if !(tau_select >= 0.0) {
        return Err(Error::Config(format!("selection threshold must be nonnegative, got {tau_select}")));
    }
    let mut out = est.clone();
    out.tau_select = tau_select;
    out.edges = edge_set(&est.beta_hat, tau_select);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    /// Σ_i ‖β̂_i − β_i‖₁ over the raw (unthresholded) estimate.
    pub l1_error: f64,
}

/// Scores the selected edges against {(i, j) : θ_ij ≠ 0}. Precision is 1
/// when nothing is selected and recall is 1 when the truth is empty.
pub fn edge_metrics(est: &NetworkEstimate, truth: &NetworkSpec) -> Result<EdgeMetrics> {
    if est.p() != truth.p {
        return Err(Error::Dimension(format!(
            "estimate has p = {} but the network has p = {}",
            est.p(),
            truth.p
        )));
    }
    let true_edges = truth.true_edges();
    let tp = est.edges.intersection(&true_edges).count();
    let fp = est.edges.len() - tp;
    let fn_ = true_edges.len() - tp;
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if true_edges.is_empty() {
        1.0
    } else {
        tp as f64 / true_edges.len() as f64
    };
    let l1_error = (&est.beta_hat - &truth.theta).abs().sum();
    Ok(EdgeMetrics {
        tp,
        fp,
        fn_,
        precision,
        recall,
        l1_error,
    })
}
