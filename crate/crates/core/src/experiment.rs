//! Simulation studies over the block topologies: simulate, bin, fit every
//! requested method, threshold, score against the generating network and
//! aggregate over replicates.
//!
//! Replicate `r` uses seed `splitmix64(seed + r)` for every horizon. The
//! simulator consumes its random streams identically up to the horizon, so
//! the shorter horizons of a replicate are prefixes of the longest run; each
//! replicate is simulated once and truncated.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::build_design;
use crate::error::{Error, Result};
use crate::estimate::{edge_metrics, fit_method, FitOptions, Method, NetworkEstimate};
use crate::hive::span_projector;
use crate::lasso::{LassoOptions, PenaltyRule};
use crate::network::{
    check_stationarity, make_block_network, make_orthogonal_block_network, BlockParams, NetworkSpec,
    SpectrumReport,
};
use crate::sim::{simulate, EventData};
use crate::spikes::HoldoutReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Half of the blocks receive hidden input; Θ and Δ share rows.
    Confounded,
    /// Blocks with hidden input carry no observed edges.
    Orthogonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub topology: Topology,
    pub p: usize,
    pub q: usize,
    pub block_size: usize,
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
    /// Simulation horizons in time units; with unit bins these equal the
    /// number of regression time points.
    pub horizons: Vec<f64>,
    pub n_replicates: usize,
    pub methods: Vec<Method>,
    pub penalty: PenaltyRule,
    /// Edge selection threshold; λ/2 when unset.
    #[serde(default)]
    pub tau_select: Option<f64>,
    pub seed: u64,
    #[serde(default = "one")]
    pub bin_width: f64,
    #[serde(default = "one")]
    pub kernel_rate: f64,
    #[serde(default)]
    pub floor: f64,
    /// Free-form label carried into the report ("desk" or "paper" for the presets).
    #[serde(default)]
    pub scale: String,
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    fn base(name: &str, topology: Topology, p: usize, q: usize, reps: usize, scale: &str) -> Self {
        let params = match topology {
            Topology::Confounded => BlockParams::confounded(p, q),
            Topology::Orthogonal => BlockParams::orthogonal(p, q),
        };
        ExperimentConfig {
            name: name.to_string(),
            topology,
            p,
            q,
            block_size: params.block_size,
            beta: params.beta,
            delta: params.delta,
            mu: params.mu,
            horizons: vec![1000.0, 5000.0],
            n_replicates: reps,
            methods: Method::ALL.to_vec(),
            penalty: PenaltyRule::rate(0.5),
            tau_select: None,
            seed: 20_240_101,
            bin_width: 1.0,
            kernel_rate: 1.0,
            floor: 0.0,
            scale: scale.to_string(),
        }
    }

    /// Named presets: `fig2-desk`, `fig3-desk` (p = q = 20, 20 replicates)
    /// and the long-running `fig2-paper`, `fig3-paper` (p = q = 100, 100
    /// replicates).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig2-desk" => Ok(Self::base(name, Topology::Confounded, 20, 20, 20, "desk")),
            "fig3-desk" => Ok(Self::base(name, Topology::Orthogonal, 20, 20, 20, "desk")),
            "fig2-paper" => Ok(Self::base(name, Topology::Confounded, 100, 100, 100, "paper")),
            "fig3-paper" => Ok(Self::base(name, Topology::Orthogonal, 100, 100, 100, "paper")),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected fig2-desk, fig3-desk, fig2-paper, fig3-paper)"
            ))),
        }
    }

    pub fn block_params(&self) -> BlockParams {
        BlockParams {
            p: self.p,
            q: self.q,
            block_size: self.block_size,
            beta: self.beta,
            delta: self.delta,
            mu: self.mu,
            confounded_fraction: 0.5,
            kernel_rate: self.kernel_rate,
        }
    }

    pub fn network(&self) -> Result<NetworkSpec> {
        let params = self.block_params();
        match self.topology {
            Topology::Confounded => make_block_network(&params),
            Topology::Orthogonal => make_orthogonal_block_network(&params),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_replicates == 0 {
            return Err(Error::Config("n_replicates must be at least 1".into()));
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("at least one horizon is required".into()));
        }
        if let Some(h) = self.horizons.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::Config(format!("horizons must be positive, got {h}")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        if let Some(t) = self.tau_select {
            if !(t >= 0.0) {
                return Err(Error::Config(format!("tau_select must be nonnegative, got {t}")));
            }
        }
        self.penalty.validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Seed of replicate `r`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((r as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub horizon: f64,
    pub method: Method,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub l1_error: f64,
    pub lambda: f64,
    pub tau_select: f64,
    pub n_edges: usize,
    pub exact_recovery: bool,
    pub q_used: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub horizon: f64,
    pub n: usize,
    pub tp_mean: f64,
    pub tp_sd: f64,
    pub fp_mean: f64,
    pub fp_sd: f64,
    pub l1_mean: f64,
    pub l1_sd: f64,
    pub l1_median: f64,
    pub exact_recovery_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub spectrum: SpectrumReport,
    pub true_edges: usize,
    /// dim col(Δ), the latent dimension handed to hive-oracle.
    pub oracle_q: usize,
    pub cells: Vec<CellSummary>,
    pub replicates: Vec<ReplicateRecord>,
}

impl ExperimentReport {
    pub fn cell(&self, method: Method, horizon: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.horizon == horizon)
    }
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    crate::spectral::median(values)
}

/// Numerical rank of Δ (relative cut 1e−10).
pub fn latent_rank(spec: &NetworkSpec) -> usize {
    if spec.q == 0 {
        return 0;
    }
    let p_delta = span_projector(&spec.delta);
    p_delta.trace().round() as usize
}

/// Events of `ev` that fall before `horizon`.
pub fn truncate(ev: &EventData, horizon: f64) -> Result<EventData> {
    let events = ev
        .events
        .iter()
        .map(|ts| ts.iter().copied().take_while(|t| *t < horizon).collect())
        .collect();
    EventData::new(horizon, events, ev.observed_ids.clone())
}

/// Fits one method on one realization and scores it.
pub fn score_once(
    spec: &NetworkSpec,
    ev: &EventData,
    cfg: &ExperimentConfig,
    method: Method,
    oracle_q: usize,
) -> Result<(NetworkEstimate, crate::estimate::EdgeMetrics)> {
    let reg = build_design(ev, &spec.kernel[..ev.n_components], cfg.bin_width, false)?;
    let opts = FitOptions {
        lasso: LassoOptions::default(),
        tau_select: cfg.tau_select,
        ..FitOptions::default()
    };
    let est = fit_method(method, &reg, &cfg.penalty, Some(oracle_q), &opts)?;
    let m = edge_metrics(&est, spec)?;
    Ok((est, m))
}

fn run_replicate(
    spec: &NetworkSpec,
    cfg: &ExperimentConfig,
    r: usize,
    oracle_q: usize,
) -> Result<Vec<ReplicateRecord>> {
    let seed = replicate_seed(cfg.seed, r);
    let max_h = cfg.horizons.iter().copied().fold(0.0, f64::max);
    let full = simulate(spec, max_h, seed, cfg.floor)?;
    let truth = spec.true_edges();
    let mut out = Vec::new();
    for &h in &cfg.horizons {
        let ev = truncate(&full, h)?.select(&(0..spec.p).collect::<Vec<_>>())?;
        for &method in &cfg.methods {
            let (est, m) = score_once(spec, &ev, cfg, method, oracle_q)?;
            out.push(ReplicateRecord {
                replicate: r,
                seed,
                horizon: h,
                method,
                tp: m.tp,
                fp: m.fp,
                fn_: m.fn_,
                precision: m.precision,
                recall: m.recall,
                l1_error: m.l1_error,
                lambda: est.lambda,
                tau_select: est.tau_select,
                n_edges: est.edges.len(),
                exact_recovery: est.edges == truth,
                q_used: est.q_used,
            });
        }
    }
    Ok(out)
}

/// Aggregates per-replicate records into one summary per (method, horizon),
/// ordered by horizon then method.
pub fn aggregate(records: &[ReplicateRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(u64, Method), Vec<&ReplicateRecord>> = BTreeMap::new();
    for rec in records {
        groups
            .entry((rec.horizon.to_bits(), rec.method))
            .or_default()
            .push(rec);
    }
    let mut cells: Vec<CellSummary> = groups
        .into_iter()
        .map(|((hbits, method), recs)| {
            let tp: Vec<f64> = recs.iter().map(|r| r.tp as f64).collect();
            let fp: Vec<f64> = recs.iter().map(|r| r.fp as f64).collect();
            let l1: Vec<f64> = recs.iter().map(|r| r.l1_error).collect();
            let (tp_mean, tp_sd) = mean_sd(&tp);
            let (fp_mean, fp_sd) = mean_sd(&fp);
            let (l1_mean, l1_sd) = mean_sd(&l1);
            let exact = recs.iter().filter(|r| r.exact_recovery).count();
            CellSummary {
                method,
                horizon: f64::from_bits(hbits),
                n: recs.len(),
                tp_mean,
                tp_sd,
                fp_mean,
                fp_sd,
                l1_mean,
                l1_sd,
                l1_median: median(&l1),
                exact_recovery_rate: exact as f64 / recs.len() as f64,
            }
        })
        .collect();
    cells.sort_by(|a, b| a.horizon.total_cmp(&b.horizon).then(a.method.cmp(&b.method)));
    cells
}

/// Runs the full study. Replicates run in parallel and are joined by
/// replicate index, so the report does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let spec = cfg.network()?;
    let spectrum = check_stationarity(&spec);
    let oracle_q = latent_rank(&spec);
    let per_rep: Vec<Vec<ReplicateRecord>> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|r| run_replicate(&spec, cfg, r, oracle_q))
        .collect::<Result<_>>()?;
    let replicates: Vec<ReplicateRecord> = per_rep.into_iter().flatten().collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        spectrum,
        true_edges: spec.true_edges().len(),
        oracle_q,
        cells: aggregate(&replicates),
        replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
    Dot,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "csv" => Ok(ExportFormat::Csv),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(Error::Config(format!("unknown export format {other:?}"))),
        }
    }
}

/// Anything the CLI can export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Report(ExperimentReport),
    Holdout(HoldoutReport),
    Estimate(NetworkEstimate),
}

impl Payload {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn cells_csv(cells: &[CellSummary]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "method",
        "horizon",
        "n",
        "tp_mean",
        "tp_sd",
        "fp_mean",
        "fp_sd",
        "l1_mean",
        "l1_sd",
        "l1_median",
        "exact_recovery_rate",
    ])?;
    for c in cells {
        wtr.write_record([
            c.method.name().to_string(),
            c.horizon.to_string(),
            c.n.to_string(),
            c.tp_mean.to_string(),
            c.tp_sd.to_string(),
            c.fp_mean.to_string(),
            c.fp_sd.to_string(),
            c.l1_mean.to_string(),
            c.l1_sd.to_string(),
            c.l1_median.to_string(),
            c.exact_recovery_rate.to_string(),
        ])?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

/// Replicate records as CSV, one row per (replicate, horizon, method).
pub fn replicates_csv(records: &[ReplicateRecord]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "replicate", "seed", "horizon", "method", "tp", "fp", "fn", "l1_error", "lambda", "tau_select", "n_edges",
        "exact_recovery", "q_used",
    ])?;
    for r in records {
        wtr.write_record([
            r.replicate.to_string(),
            r.seed.to_string(),
            r.horizon.to_string(),
            r.method.name().to_string(),
            r.tp.to_string(),
            r.fp.to_string(),
            r.fn_.to_string(),
            r.l1_error.to_string(),
            r.lambda.to_string(),
            r.tau_select.to_string(),
            r.n_edges.to_string(),
            r.exact_recovery.to_string(),
            r.q_used.map_or(String::new(), |q| q.to_string()),
        ])?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}

/// Renders a payload. DOT is only defined for network estimates.
pub fn export_report(payload: &Payload, format: ExportFormat) -> Result<String> {
    match (payload, format) {
        (Payload::Report(r), ExportFormat::Json) => Ok(serde_json::to_string_pretty(r)? + "\n"),
        (Payload::Holdout(h), ExportFormat::Json) => Ok(serde_json::to_string_pretty(h)? + "\n"),
        (Payload::Estimate(e), ExportFormat::Json) => Ok(e.to_json()? + "\n"),
        (Payload::Report(r), ExportFormat::Csv) => cells_csv(&r.cells),
        (Payload::Estimate(e), ExportFormat::Csv) => {
            let mut buf = Vec::new();
            e.write_adjacency_csv(&mut buf)?;
            String::from_utf8(buf).map_err(|e| Error::Data(e.to_string()))
        }
        (Payload::Holdout(h), ExportFormat::Csv) => {
            let mut s = String::from("full_edges,reduced_edges,shared_edges,overlap_fraction\n");
            let _ = writeln!(
                s,
                "{},{},{},{}",
                h.full_edges_restricted, h.reduced_edges, h.shared_edges, h.overlap_fraction
            );
            Ok(s)
        }
        (Payload::Estimate(e), ExportFormat::Dot) => Ok(e.to_dot()),
        (_, ExportFormat::Dot) => Err(Error::Config(
            "DOT export is only available for network estimates".into(),
        )),
    }
}
