//! Causal network estimation for partially observed multivariate Hawkes
//! processes.
//!
//! The crate simulates linear Hawkes networks with hidden components, turns
//! event data into a binned regression design, and estimates the
//! observed-to-observed connectivity with a spectrally deconfounded lasso
//! (`hp-trim`), a naive lasso, or the HIVE projection baseline. The
//! [`experiment`] module drives the simulation studies and [`spikes`]
//! handles recorded spike trains.

pub mod design;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod hive;
pub mod lasso;
pub mod linalg;
pub mod network;
pub mod sim;
pub mod spectral;
pub mod spikes;

pub use design::{build_design, oracle_confounding_bias, ConfoundingDiagnostic, RegressionData};
pub use error::{Error, Result};
pub use estimate::{
    edge_metrics, fit_hive, fit_hp_trim, fit_method, fit_naive, threshold_edges, EdgeMetrics, FitOptions, Method,
    NetworkEstimate,
};
pub use hive::{estimate_q, hetero_pca, HiveState};
pub use lasso::{fit_lasso, kkt_residuals, select_lambda, LassoFit, LassoOptions, PenaltyRule, PenaltyStrategy};
pub use network::{
    check_stationarity, make_block_network, make_orthogonal_block_network, BlockParams, NetworkSpec, SpectrumReport,
    TransitionKernel,
};
pub use sim::{empirical_rates, simulate, stationary_rates, EventData};
pub use spectral::{compute_svd, trim_transform, SpectralTransform};
pub use experiment::{export_report, run_experiment, ExperimentConfig, ExperimentReport, ExportFormat, Payload, Topology};
pub use spikes::{ingest_spikes, read_spikes, stability_holdout, HoldoutOptions, HoldoutReport, SpikeRecording};
