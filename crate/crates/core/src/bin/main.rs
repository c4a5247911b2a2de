use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use hawkes_trim::experiment::{replicates_csv, ExperimentConfig, Topology};
use hawkes_trim::{
    build_design, check_stationarity, edge_metrics, export_report, fit_method, read_spikes, run_experiment,
    simulate, stability_holdout, BlockParams, Error, EventData, ExportFormat, FitOptions, HoldoutOptions, Method,
    NetworkSpec, Payload, PenaltyRule, RegressionData, Result, TransitionKernel,
};

#[derive(Parser)]
#[command(name = "hawkes-trim", version, about = "Causal network estimation for partially observed Hawkes processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a block network and write observed events as CSV.
    Simulate(SimulateArgs),
    /// Fit a network estimate from an event CSV or a design container.
    Fit(FitArgs),
    /// Run a simulation study.
    Experiment(ExperimentArgs),
    /// Convert a spike recording into events (and optionally a design).
    Ingest(IngestArgs),
    /// Hold-out stability analysis.
    Holdout(HoldoutArgs),
    /// Re-render a saved report or estimate.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Confounded,
    Orthogonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Rate,
    Budget,
    Cv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Dot,
}

#[derive(Args)]
struct NetworkArgs {
    /// Network JSON; overrides the block generator options.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "confounded")]
    topology: TopologyArg,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 20)]
    q: usize,
    #[arg(long, default_value_t = 5)]
    block_size: usize,
    /// Defaults to 0.12 (confounded) or 0.2 (orthogonal).
    #[arg(long)]
    beta: Option<f64>,
    /// Defaults to 0.10 (confounded) or 0.18 (orthogonal).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    mu: f64,
    #[arg(long, default_value_t = 0.5)]
    confounded_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    kernel_rate: f64,
}

impl NetworkArgs {
    fn build(&self) -> Result<NetworkSpec> {
        if let Some(path) = &self.network {
            return NetworkSpec::from_json(&read_to_string(path)?);
        }
        let mut params = match self.topology {
            TopologyArg::Confounded => BlockParams::confounded(self.p, self.q),
            TopologyArg::Orthogonal => BlockParams::orthogonal(self.p, self.q),
        };
        params.block_size = self.block_size;
        params.mu = self.mu;
        params.confounded_fraction = self.confounded_fraction;
        params.kernel_rate = self.kernel_rate;
        if let Some(b) = self.beta {
            params.beta = b;
        }
        if let Some(d) = self.delta {
            params.delta = d;
        }
        match self.topology {
            TopologyArg::Confounded => hawkes_trim::make_block_network(&params),
            TopologyArg::Orthogonal => hawkes_trim::make_orthogonal_block_network(&params),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    net: NetworkArgs,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    floor: f64,
    /// Event CSV (`component_id,time`).
    #[arg(long)]
    out: PathBuf,
    /// Also write hidden components (ids p..p+q).
    #[arg(long)]
    include_hidden: bool,
    /// Write the generating network as JSON.
    #[arg(long)]
    network_out: Option<PathBuf>,
}

#[derive(Args)]
struct PenaltyArgs {
    #[arg(long, value_enum, default_value = "rate")]
    penalty: PenaltyArg,
    /// Rate-rule constant.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Edge budget.
    #[arg(long, default_value_t = 30)]
    budget: usize,
    /// Selection threshold; λ/2 when omitted.
    #[arg(long)]
    tau_select: Option<f64>,
    /// Trim threshold; the median singular value when omitted.
    #[arg(long)]
    tau_trim: Option<f64>,
}

impl PenaltyArgs {
    fn rule(&self) -> PenaltyRule {
        let mut rule = match self.penalty {
            PenaltyArg::Rate => PenaltyRule::rate(self.c),
            PenaltyArg::Budget => PenaltyRule::edge_budget(self.budget),
            PenaltyArg::Cv => PenaltyRule::time_split(),
        };
        rule.c = self.c;
        rule
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            tau_select: self.tau_select,
            tau_trim: self.tau_trim,
            ..FitOptions::default()
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Event CSV.
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    events: Option<PathBuf>,
    /// Design container written by `ingest --design-out`.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Observation horizon of the event CSV.
    #[arg(long, required_unless_present = "design")]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    bin_width: f64,
    #[arg(long, default_value_t = 1.0)]
    kernel_rate: f64,
    #[arg(long, default_value = "hp-trim")]
    method: Method,
    /// Latent dimension for hive-oracle.
    #[arg(long)]
    oracle_q: Option<usize>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// Estimate JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    adjacency: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Ground-truth network JSON; prints edge metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// fig2-desk, fig3-desk, fig2-paper or fig3-paper.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Experiment config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    tau_select: Option<f64>,
    #[arg(long)]
    bin_width: Option<f64>,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Cell summary CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for per-replicate records.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    spikes: PathBuf,
    /// Duration of one time tick in seconds.
    #[arg(long, default_value_t = 1.0 / 30000.0)]
    time_unit: f64,
    /// Recording length in seconds.
    #[arg(long)]
    horizon: f64,
    /// Ticks per regression bin.
    #[arg(long, default_value_t = 30)]
    decimation: usize,
    /// Re-indexed event CSV (times in seconds).
    #[arg(long)]
    out: PathBuf,
    /// Mapping from dense index to original id.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Also write the binned design container.
    #[arg(long)]
    design_out: Option<PathBuf>,
    /// Kernel decay rate per second for the design.
    #[arg(long, default_value_t = 1.0)]
    kernel_rate: f64,
}

#[derive(Args)]
struct HoldoutArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    horizon: f64,
    /// Comma separated component ids to hide.
    #[arg(long, value_delimiter = ',')]
    hide: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    bin_width: f64,
    #[arg(long, default_value_t = 1.0)]
    kernel_rate: f64,
    #[arg(long, default_value = "hp-trim")]
    method: Method,
    #[arg(long)]
    oracle_q: Option<usize>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Report, hold-out or estimate JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn read_events(path: &Path, horizon: f64) -> Result<EventData> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    EventData::read_csv(BufReader::new(f), horizon)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let spec = a.net.build()?;
    let report = check_stationarity(&spec);
    if !report.passes_a1 {
        return Err(Error::Stationarity { report });
    }
    let ev = simulate(&spec, a.horizon, a.seed, a.floor)?;
    let ev = if a.include_hidden {
        ev
    } else {
        ev.select(&(0..spec.p).collect::<Vec<_>>())?
    };
    let mut w = create(&a.out)?;
    ev.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    if let Some(path) = &a.network_out {
        write_string(path, &(spec.to_json()? + "\n"))?;
    }
    eprintln!(
        "simulated {} events over {} components (lambda_max(Omega^T Omega) = {:.4})",
        ev.total_events(),
        ev.n_components,
        report.lambda_max_omega
    );
    Ok(())
}

fn load_design(a: &FitArgs) -> Result<RegressionData> {
    if let Some(path) = &a.design {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        return RegressionData::read_container(BufReader::new(f));
    }
    let path = a.events.as_ref().expect("clap enforces events or design");
    let ev = read_events(path, a.horizon.expect("clap enforces horizon"))?;
    let kernels = vec![TransitionKernel::exponential(a.kernel_rate)?; ev.n_components];
    build_design(&ev, &kernels, a.bin_width, false)
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let reg = load_design(a)?;
    let est = fit_method(a.method, &reg, &a.penalty.rule(), a.oracle_q, &a.penalty.options())?;
    write_string(&a.out, &(est.to_json()? + "\n"))?;
    if let Some(path) = &a.adjacency {
        let mut w = create(path)?;
        est.write_adjacency_csv(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &a.dot {
        write_string(path, &est.to_dot())?;
    }
    eprintln!("{}: lambda = {:.6}, {} edges", a.method.name(), est.lambda, est.edges.len());
    if let Some(path) = &a.truth {
        let spec = NetworkSpec::from_json(&read_to_string(path)?)?;
        let m = edge_metrics(&est, &spec)?;
        println!("{}", serde_json::to_string(&m)?);
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    let mut cfg = match (&a.preset, &a.config) {
        (Some(name), _) => ExperimentConfig::preset(name)?,
        (None, Some(path)) => ExperimentConfig::from_json(&read_to_string(path)?)?,
        (None, None) => unreachable!("clap enforces preset or config"),
    };
    cfg.seed = a.seed;
    if let Some(r) = a.replicates {
        cfg.n_replicates = r;
    }
    if let Some(h) = &a.horizons {
        cfg.horizons = h.clone();
    }
    if let Some(m) = &a.methods {
        cfg.methods = m.clone();
    }
    if a.tau_select.is_some() {
        cfg.tau_select = a.tau_select;
    }
    if let Some(bw) = a.bin_width {
        cfg.bin_width = bw;
    }
    cfg.validate()?;
    if cfg.scale == "paper" {
        eprintln!("note: {} is a paper-scale configuration and takes a long time", cfg.name);
    }
    info!(
        "{:?} topology, p = {}, q = {}, {} replicates",
        cfg.topology,
        cfg.p,
        cfg.q,
        cfg.n_replicates
    );
    let started = Instant::now();
    let report = run_experiment(&cfg)?;
    let elapsed = started.elapsed().as_secs_f64();
    let payload = Payload::Report(report);
    write_string(&a.out, &export_report(&payload, ExportFormat::Json)?)?;
    if let Some(path) = &a.csv {
        write_string(path, &export_report(&payload, ExportFormat::Csv)?)?;
    }
    let Payload::Report(report) = payload else { unreachable!() };
    if let Some(dir) = &a.dump_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_string(&dir.join("replicates.csv"), &replicates_csv(&report.replicates)?)?;
    }
    for c in &report.cells {
        eprintln!(
            "T = {:<8} {:<15} TP {:6.2}  FP {:6.2}  l1 {:7.3}",
            c.horizon,
            c.method.name(),
            c.tp_mean,
            c.fp_mean,
            c.l1_mean
        );
    }
    let topo = match cfg.topology {
        Topology::Confounded => "confounded",
        Topology::Orthogonal => "orthogonal",
    };
    eprintln!(
        "{topo} ({}) finished in {elapsed:.1} s ({:.2} s per replicate)",
        cfg.scale,
        elapsed / cfg.n_replicates as f64
    );
    Ok(())
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let f = File::open(&a.spikes).map_err(|e| Error::io(&a.spikes, e))?;
    let rec = read_spikes(BufReader::new(f), a.time_unit, a.horizon, a.decimation)?;
    let mut w = create(&a.out)?;
    rec.events.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    if let Some(path) = &a.mapping {
        write_string(path, &rec.mapping_csv())?;
    }
    if let Some(path) = &a.design_out {
        let kernels = vec![TransitionKernel::exponential(a.kernel_rate)?; rec.events.n_components];
        let reg = build_design(&rec.events, &kernels, rec.bin_width, false)?;
        let mut w = create(path)?;
        reg.write_container(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    eprintln!(
        "{} components, {} spikes, bin width {} s",
        rec.events.n_components,
        rec.events.total_events(),
        rec.bin_width
    );
    Ok(())
}

fn cmd_holdout(a: &HoldoutArgs) -> Result<()> {
    let ev = read_events(&a.events, a.horizon)?;
    let opts = HoldoutOptions {
        kernel: TransitionKernel::exponential(a.kernel_rate)?,
        bin_width: a.bin_width,
        oracle_q: a.oracle_q,
        fit: a.penalty.options(),
    };
    let rep = stability_holdout(&ev, &a.hide, a.method, &a.penalty.rule(), &opts)?;
    write_string(&a.out, &export_report(&Payload::Holdout(rep.clone()), ExportFormat::Json)?)?;
    eprintln!(
        "overlap {:.3} ({} of {} reduced edges also in the full fit)",
        rep.overlap_fraction,
        rep.shared_edges,
        rep.reduced_edges
    );
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let payload = Payload::from_json(&read_to_string(&a.input)?)?;
    let format = match a.format {
        FormatArg::Json => ExportFormat::Json,
        FormatArg::Csv => ExportFormat::Csv,
        FormatArg::Dot => ExportFormat::Dot,
    };
    write_string(&a.out, &export_report(&payload, format)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Holdout(a) => cmd_holdout(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
