//! Command-line pipelines wiring ingestion, fitting, simulation,
//! prediction, and benchmarking. The `cnhpp` binary is a thin wrapper over
//! [`main_entry`].
//!
//! Exit codes: 0 on success, 1 on input/usage errors, 2 when the fit
//! finished but some grid point failed to converge.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    default_xi_grid, fit_cnhpp, fit_hpp, fit_nhpp, FitResult, SolverConfig,
};
use crate::ingest;
use crate::model::{self, ModelParams};
use crate::network::{build_weights, LinearNetwork, NeighborConfig, WeightScheme};
use crate::simulate::{self, ScenarioConfig, Topology};
use crate::validation::model_comparison;

#[derive(Debug, Parser)]
#[command(
    name = "cnhpp",
    about = "Convolutional non-homogeneous Poisson processes on linear networks",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model (and optional baselines) to a data bundle.
    Fit(FitArgs),
    /// Generate a synthetic scenario bundle.
    Simulate(SimulateArgs),
    /// Evaluate fitted intensities on future covariates.
    Predict(PredictArgs),
    /// Time the series-form versus recurrence-form evaluation.
    Bench(BenchArgs),
}

/// Flags for `fit`. Every option may also come from `--config <json>`;
/// explicit flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FitArgs {
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Explicit adjacency pairs overriding geometric snapping.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Comma-separated decay grid, e.g. "0.0,0.1,0.2".
    #[arg(long = "xi-grid")]
    pub xi_grid: Option<String>,
    /// Series truncation K.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Leading panel steps outside the likelihood window (default: K).
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    #[arg(long = "include-self")]
    pub include_self: Option<bool>,
    /// `equal` or `exponential-distance`.
    #[arg(long = "weight-scheme")]
    pub weight_scheme: Option<String>,
    #[arg(long = "snap-tolerance")]
    pub snap_tolerance: Option<f64>,
    /// Rescale exponential-distance rows to unit sums.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub renormalize: bool,
    /// Also fit the HPP and NHPP baselines and emit a comparison table.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub baselines: bool,
    #[arg(long = "grad-tol")]
    pub grad_tolerance: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iterations: Option<usize>,
    /// Worker threads (default: all cores). Thread count never changes
    /// numerical output.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl FitArgs {
    fn merged_over(self, file: FitArgs) -> FitArgs {
        FitArgs {
            network: self.network.or(file.network),
            adjacency: self.adjacency.or(file.adjacency),
            panel: self.panel.or(file.panel),
            events: self.events.or(file.events),
            xi_grid: self.xi_grid.or(file.xi_grid),
            k: self.k.or(file.k),
            burn_in: self.burn_in.or(file.burn_in),
            include_self: self.include_self.or(file.include_self),
            weight_scheme: self.weight_scheme.or(file.weight_scheme),
            snap_tolerance: self.snap_tolerance.or(file.snap_tolerance),
            renormalize: self.renormalize || file.renormalize,
            baselines: self.baselines || file.baselines,
            grad_tolerance: self.grad_tolerance.or(file.grad_tolerance),
            max_iterations: self.max_iterations.or(file.max_iterations),
            threads: self.threads.or(file.threads),
            out: self.out.or(file.out),
            config: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    /// `chain`, `binary-tree`, or `lattice`.
    #[arg(long)]
    pub topology: Option<String>,
    /// Number of segments.
    #[arg(long)]
    pub n: Option<usize>,
    /// Likelihood-window length in steps.
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Comma-separated true coefficients, intercept first.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// AR(1) coefficient of the covariates.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Innovation scale of the covariates.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl SimulateArgs {
    fn merged_over(self, file: SimulateArgs) -> SimulateArgs {
        SimulateArgs {
            topology: self.topology.or(file.topology),
            n: self.n.or(file.n),
            t: self.t.or(file.t),
            burn_in: self.burn_in.or(file.burn_in),
            xi: self.xi.or(file.xi),
            beta: self.beta.or(file.beta),
            rho: self.rho.or(file.rho),
            scale: self.scale.or(file.scale),
            k: self.k.or(file.k),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            config: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictArgs {
    /// Fit JSON written by `fit`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Future covariate panel (raw; training standardization is applied).
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// How many trailing panel steps to predict.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl PredictArgs {
    fn merged_over(self, file: PredictArgs) -> PredictArgs {
        PredictArgs {
            fit: self.fit.or(file.fit),
            panel: self.panel.or(file.panel),
            steps: self.steps.or(file.steps),
            out: self.out.or(file.out),
            config: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "T")]
    pub t: Option<usize>,
    #[arg(long = "K-max")]
    pub k_max: Option<usize>,
    /// Timing repetitions; the minimum is reported.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl BenchArgs {
    fn merged_over(self, file: BenchArgs) -> BenchArgs {
        BenchArgs {
            n: self.n.or(file.n),
            t: self.t.or(file.t),
            k_max: self.k_max.or(file.k_max),
            reps: self.reps.or(file.reps),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            config: None,
        }
    }
}

fn load_config_file<T: for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<Option<T>> {
    match path {
        Some(p) => Ok(Some(ingest::read_json(p)?)),
        None => Ok(None),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required option --{flag}")))
}

fn preflight(paths: &[(&str, &Path)]) -> Result<()> {
    for (what, p) in paths {
        if !p.exists() {
            return Err(Error::Config(format!("{what} file does not exist: {}", p.display())));
        }
    }
    Ok(())
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse {what} entry `{s}`")))
        })
        .collect()
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // The global pool can only be installed once per process; a
        // later attempt (e.g. in tests) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Everything `predict` needs to reproduce the fit-time setup: the fit
/// itself plus the network geometry, adjacency, neighbor configuration,
/// and burn-in that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    #[serde(flatten)]
    pub fit: FitResult,
    pub network_file: String,
    pub adjacency_file: Option<String>,
    pub neighbor_config: NeighborConfig,
    pub burn_in: usize,
}

fn load_network_any(
    network: &Path,
    adjacency: Option<&Path>,
    ncfg: &NeighborConfig,
) -> Result<LinearNetwork> {
    match adjacency {
        Some(adj) => ingest::load_network_with_adjacency(network, adj, ncfg),
        None => ingest::load_network(network, ncfg),
    }
}

fn write_profile_csv(path: &Path, fit: &FitResult) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["xi", "loglik", "iterations", "converged", "grad_sup_norm", "error"])?;
    for p in &fit.profile {
        writer.write_record(&[
            p.xi.to_string(),
            p.loglik.map(|v| v.to_string()).unwrap_or_default(),
            p.iterations.to_string(),
            p.converged.to_string(),
            p.grad_sup_norm.map(|v| v.to_string()).unwrap_or_default(),
            p.error.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Run the fit pipeline; returns the process exit code (0, or 2 when some
/// grid point did not converge).
pub fn cmd_fit(args: FitArgs) -> Result<i32> {
    let file: Option<FitArgs> = load_config_file(&args.config)?;
    let args = match file {
        Some(f) => args.merged_over(f),
        None => args,
    };
    configure_threads(args.threads);

    let network_path = require(args.network, "network")?;
    let panel_path = require(args.panel, "panel")?;
    let events_path = require(args.events, "events")?;
    let out_dir = require(args.out, "out")?;
    let mut checks = vec![
        ("network", network_path.as_path()),
        ("panel", panel_path.as_path()),
        ("events", events_path.as_path()),
    ];
    if let Some(adj) = &args.adjacency {
        checks.push(("adjacency", adj.as_path()));
    }
    preflight(&checks)?;

    let scheme = match &args.weight_scheme {
        Some(s) => s.parse::<WeightScheme>()?,
        None => WeightScheme::Equal,
    };
    let ncfg = NeighborConfig {
        snap_tolerance: args.snap_tolerance.unwrap_or(1e-6),
        include_self: args.include_self.unwrap_or(true),
        scheme,
        renormalize: args.renormalize,
    };
    let k_trunc = args.k.unwrap_or(7);
    let burn_in = args.burn_in.unwrap_or(k_trunc);
    let solver = SolverConfig {
        grad_tolerance: args.grad_tolerance.unwrap_or(1e-8),
        max_iterations: args.max_iterations.unwrap_or(500),
        xi_grid: match &args.xi_grid {
            Some(text) => parse_f64_list(text, "xi grid")?,
            None => default_xi_grid(),
        },
        k_trunc,
    };
    solver.validate()?;

    let net = load_network_any(&network_path, args.adjacency.as_deref(), &ncfg)?;
    let w = build_weights(&net, &ncfg);
    let raw_panel = ingest::load_panel(&panel_path, burn_in)?;
    if raw_panel.n_segments() != net.n_segments() {
        return Err(Error::Panel(format!(
            "panel covers {} segments, network has {}",
            raw_panel.n_segments(),
            net.n_segments()
        )));
    }
    let (panel, stats) = ingest::standardize(&raw_panel)?;
    let events = ingest::load_events(&events_path, net.n_segments(), panel.window_steps())?;

    println!(
        "fit: N={} segments, T={} window steps, {} events, K={}, {} grid points",
        net.n_segments(),
        panel.window_steps(),
        events.len(),
        k_trunc,
        solver.xi_grid.len()
    );
    let mut fit = fit_cnhpp(&panel, &events, &w, &solver)?;
    fit.standardization = Some(stats);

    std::fs::create_dir_all(&out_dir)?;
    let doc = FitDocument {
        fit: fit.clone(),
        network_file: network_path.to_string_lossy().into_owned(),
        adjacency_file: args.adjacency.map(|p| p.to_string_lossy().into_owned()),
        neighbor_config: ncfg,
        burn_in,
    };
    ingest::write_json(&out_dir.join("fit.json"), &doc)?;
    write_profile_csv(&out_dir.join("profile.csv"), &fit)?;

    let table = if args.baselines {
        let hpp = fit_hpp(&events)?;
        let nhpp = fit_nhpp(&panel, &events, &solver)?;
        ingest::write_json(&out_dir.join("nhpp.json"), &nhpp)?;
        model_comparison(Some(&hpp), &[("NHPP", &nhpp), ("cNHPP", &fit)])?
    } else {
        model_comparison(None, &[("cNHPP", &fit)])?
    };
    std::fs::write(out_dir.join("comparison.txt"), table.to_text())?;
    std::fs::write(out_dir.join("comparison.csv"), table.to_csv())?;

    println!(
        "selected xi = {:.3}, loglik = {:.4}, converged = {}",
        fit.params_hat.xi, fit.loglik, fit.converged
    );
    println!("{}", table.to_text());

    let all_converged = fit.profile.iter().all(|p| p.converged);
    Ok(if all_converged { 0 } else { 2 })
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let file: Option<SimulateArgs> = load_config_file(&args.config)?;
    let args = match file {
        Some(f) => args.merged_over(f),
        None => args,
    };

    let topology: Topology = require(args.topology, "topology")?.parse()?;
    let n = require(args.n, "n")?;
    let horizon = require(args.t, "T")?;
    let xi = require(args.xi, "xi")?;
    let beta = parse_f64_list(&require(args.beta, "beta")?, "beta")?;
    let out_dir = require(args.out, "out")?;
    let k_trunc = args.k.unwrap_or(7);
    let cfg = ScenarioConfig {
        topology,
        n_segments: n,
        horizon,
        burn_in: args.burn_in.unwrap_or(k_trunc),
        q: beta.len() - 1,
        rho: args.rho.unwrap_or(0.3),
        noise_scale: args.scale.unwrap_or(1.0),
        true_params: ModelParams::new(xi, Array1::from_vec(beta))?,
        k_trunc,
        seed: args.seed.unwrap_or(0),
    };
    cfg.validate()?;

    let bundle = write_scenario_bundle(&cfg, &out_dir)?;
    println!(
        "simulate: wrote {} segments, {} panel steps, {} events to {}",
        cfg.n_segments,
        cfg.horizon + cfg.burn_in,
        bundle.n_events,
        out_dir.display()
    );
    Ok(0)
}

/// Summary of a written scenario bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleSummary {
    pub config: ScenarioConfig,
    pub n_events: usize,
    pub files: Vec<String>,
}

/// Generate a scenario and write `network.csv`, `adjacency.csv`,
/// `panel.csv`, `events.csv`, and `truth.json` under `dir`; the bundle is
/// loadable by the ingest functions unchanged.
pub fn write_scenario_bundle(cfg: &ScenarioConfig, dir: &Path) -> Result<BundleSummary> {
    cfg.validate()?;
    let net = simulate::gen_network(cfg.topology, cfg.n_segments, cfg.seed)?;
    let ncfg = NeighborConfig::default();
    let w = build_weights(&net, &ncfg);
    let panel = simulate::gen_covariates(
        &net,
        cfg.horizon + cfg.burn_in,
        cfg.burn_in,
        cfg.q,
        cfg.rho,
        cfg.noise_scale,
        cfg.seed,
    )?;
    let events = simulate::sample_events(&cfg.true_params, &panel, &w, cfg.k_trunc, cfg.seed)?;

    std::fs::create_dir_all(dir)?;
    ingest::write_network_csv(&dir.join("network.csv"), &net)?;
    ingest::write_adjacency_csv(&dir.join("adjacency.csv"), &net)?;
    ingest::write_panel_csv(&dir.join("panel.csv"), &panel)?;
    ingest::write_events_csv(&dir.join("events.csv"), &events)?;
    let summary = BundleSummary {
        config: cfg.clone(),
        n_events: events.len(),
        files: vec![
            "network.csv".into(),
            "adjacency.csv".into(),
            "panel.csv".into(),
            "events.csv".into(),
        ],
    };
    ingest::write_json(&dir.join("truth.json"), &summary)?;
    Ok(summary)
}

pub fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let file: Option<PredictArgs> = load_config_file(&args.config)?;
    let args = match file {
        Some(f) => args.merged_over(f),
        None => args,
    };

    let fit_path = require(args.fit, "fit")?;
    let panel_path = require(args.panel, "panel")?;
    let steps = require(args.steps, "steps")?;
    let out_dir = require(args.out, "out")?;
    preflight(&[("fit", fit_path.as_path()), ("panel", panel_path.as_path())])?;
    if steps == 0 {
        return Err(Error::Config("--steps must be at least 1".into()));
    }

    let doc: FitDocument = ingest::read_json(&fit_path)?;
    let network_path = PathBuf::from(&doc.network_file);
    let adjacency_path = doc.adjacency_file.as_ref().map(PathBuf::from);
    preflight(&[("network", network_path.as_path())])?;
    if let Some(adj) = &adjacency_path {
        preflight(&[("adjacency", adj.as_path())])?;
    }
    let net = load_network_any(&network_path, adjacency_path.as_deref(), &doc.neighbor_config)?;
    let w = build_weights(&net, &doc.neighbor_config);

    // The last `steps` panel rows are predicted; everything before them is
    // trailing history for the convolution.
    let raw = ingest::load_panel(&panel_path, 0)?;
    let total = raw.total_steps();
    if total < steps {
        return Err(Error::Panel(format!(
            "panel has {total} steps, cannot predict {steps}"
        )));
    }
    let history = total - steps;
    if history < doc.fit.k_trunc {
        return Err(Error::Panel(format!(
            "insufficient trailing history: predicting {steps} of {total} panel steps leaves \
             {history} history steps, but truncation K={} requires at least {} panel steps in \
             total",
            doc.fit.k_trunc,
            steps + doc.fit.k_trunc
        )));
    }
    let raw = raw.with_burn_in(history)?;
    let panel = match &doc.fit.standardization {
        Some(stats) => stats.apply(&raw)?,
        None => raw,
    };

    let mut field = doc.fit.predict(&panel, &w)?;
    // Report steps in the input panel's own indexing.
    field.first_step += history as i64;

    std::fs::create_dir_all(&out_dir)?;
    ingest::write_intensity_csv(&out_dir.join("prediction.csv"), &field)?;
    println!(
        "predict: wrote {} steps x {} segments to {}",
        field.n_steps(),
        field.n_segments(),
        out_dir.join("prediction.csv").display()
    );
    Ok(0)
}

/// One truncation level of the series-vs-recurrence timing sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchPoint {
    pub k: usize,
    pub series_seconds: f64,
    pub recurrence_seconds: f64,
    /// series / recurrence.
    pub ratio: f64,
}

/// Time the evaluation of the whole window of log-intensities by (a) the
/// series route, building the convolutional design at each step through
/// iterated sparse powers, and (b) the recurrence route, one sparse
/// product per step. Reports the minimum over `reps` repetitions for each
/// K in `0..=k_max`.
pub fn bench_forms(
    n: usize,
    t_steps: usize,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchPoint>> {
    let net = simulate::gen_network(Topology::Chain, n, seed)?;
    let ncfg = NeighborConfig::default();
    let w = build_weights(&net, &ncfg);
    let panel = simulate::gen_covariates(&net, t_steps + k_max, k_max, 4, 0.3, 1.0, seed)?;
    let params = ModelParams::new(
        0.5,
        Array1::from_vec(vec![-3.0, 0.4, -0.3, 0.2, -0.1]),
    )?;
    let reps = reps.max(1);

    let mut out = Vec::with_capacity(k_max + 1);
    let window = panel.window_steps();
    for k in 0..=k_max {
        // The panel keeps burn_in = k_max for every level, so all levels
        // evaluate the same window and timings are comparable across K.
        let mut series_best = f64::INFINITY;
        let mut recurrence_best = f64::INFINITY;
        for _ in 0..reps {
            let start = Instant::now();
            let mut sink = 0.0;
            for t in 0..window {
                let eta = model::log_intensity_series(&params, &panel, &w, k, t)?;
                sink += eta[0];
            }
            series_best = series_best.min(start.elapsed().as_secs_f64());
            std::hint::black_box(sink);

            let start = Instant::now();
            let field = model::log_intensity_recurrence(
                &params,
                &panel,
                &w,
                -(k as i64),
                window as i64 - 1,
                Array1::zeros(n),
            )?;
            recurrence_best = recurrence_best.min(start.elapsed().as_secs_f64());
            std::hint::black_box(field.log_lambda[[0, 0]]);
        }
        out.push(BenchPoint {
            k,
            series_seconds: series_best,
            recurrence_seconds: recurrence_best,
            ratio: series_best / recurrence_best,
        });
    }
    Ok(out)
}

pub fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let file: Option<BenchArgs> = load_config_file(&args.config)?;
    let args = match file {
        Some(f) => args.merged_over(f),
        None => args,
    };
    let n = args.n.unwrap_or(5000);
    let t_steps = args.t.unwrap_or(30);
    let k_max = args.k_max.unwrap_or(7);
    let reps = args.reps.unwrap_or(5);
    let seed = args.seed.unwrap_or(0);

    let points = bench_forms(n, t_steps, k_max, reps, seed)?;
    println!("bench: N={n}, T={t_steps}, reps={reps}");
    println!("{:>3} {:>14} {:>14} {:>8}", "K", "series (s)", "recurrence (s)", "ratio");
    for p in &points {
        println!(
            "{:>3} {:>14.6} {:>14.6} {:>8.2}",
            p.k, p.series_seconds, p.recurrence_seconds, p.ratio
        );
    }

    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir)?;
        let mut writer = csv::Writer::from_path(dir.join("bench.csv"))?;
        writer.write_record(["k", "series_seconds", "recurrence_seconds", "ratio"])?;
        for p in &points {
            writer.write_record(&[
                p.k.to_string(),
                p.series_seconds.to_string(),
                p.recurrence_seconds.to_string(),
                p.ratio.to_string(),
            ])?;
        }
        writer.flush()?;
    }
    Ok(0)
}

/// Dispatch a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Parse the process arguments and run; maps usage problems and input
/// errors to exit code 1 per the exit-code contract.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
