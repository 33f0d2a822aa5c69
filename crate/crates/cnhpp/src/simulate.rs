//! Synthetic scenarios: networks, AR(1) covariate panels, and event logs
//! drawn from a ground-truth model, for parameter-recovery and
//! distributional checks.
//!
//! All randomness flows from the scenario seed through counted ChaCha
//! substreams: the generator for each purpose (network, covariates,
//! events) and each replicate gets its own stream, so replicates are
//! independent and every output is reproducible byte for byte.

use ndarray::Array3;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_cnhpp, FitResult, SolverConfig};
use crate::convolution::CovariatePanel;
use crate::ingest::standardize;
use crate::model::{intensity_window_series, Event, EventLog, ModelParams};
use crate::network::{
    build_network, build_weights, LinearNetwork, NeighborConfig, Segment, WeightMatrix,
};

/// Maximum per-cell expected count; anything above this means the scenario
/// is misconfigured rather than interesting.
pub const MAX_CELL_RATE: f64 = 1e3;

/// Synthetic network shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Chain,
    BinaryTree,
    Lattice,
}

impl std::str::FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Topology::Chain),
            "binary-tree" | "tree" => Ok(Topology::BinaryTree),
            "lattice" | "2d-lattice" => Ok(Topology::Lattice),
            other => Err(Error::Config(format!("unknown topology `{other}`"))),
        }
    }
}

/// Ground-truth configuration for one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub n_segments: usize,
    /// Likelihood-window length T.
    pub horizon: usize,
    pub burn_in: usize,
    /// Number of covariates (the intercept is implicit).
    pub q: usize,
    /// AR(1) coefficient of each covariate series.
    pub rho: f64,
    /// Innovation scale of the AR(1) series.
    pub noise_scale: f64,
    pub true_params: ModelParams,
    /// Truncation used when evaluating the ground-truth intensity.
    pub k_trunc: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_segments == 0 || self.horizon == 0 {
            return Err(Error::Simulation("scenario needs segments and a nonempty window".into()));
        }
        if self.rho.abs() >= 1.0 {
            return Err(Error::Simulation(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if self.burn_in < self.k_trunc {
            return Err(Error::Simulation(format!(
                "burn_in {} must be at least the truncation K={}",
                self.burn_in, self.k_trunc
            )));
        }
        if self.true_params.beta.len() != self.q + 1 {
            return Err(Error::Simulation(format!(
                "beta has {} entries, expected q+1 = {}",
                self.true_params.beta.len(),
                self.q + 1
            )));
        }
        Ok(())
    }
}

/// RNG purposes; combined with a replicate index to form a stream id.
mod domain {
    pub const NETWORK: u64 = 1;
    pub const COVARIATES: u64 = 2;
    pub const EVENTS: u64 = 3;
}

/// Deterministic substream `domain` of a scenario seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn replicate_stream(purpose: u64, replicate: usize) -> u64 {
    purpose + ((replicate as u64 + 1) << 8)
}

/// Deterministic synthetic network of the requested topology and size.
pub fn gen_network(topology: Topology, n: usize, seed: u64) -> Result<LinearNetwork> {
    if n == 0 {
        return Err(Error::Simulation("network size must be at least 1".into()));
    }
    let _rng = substream(seed, domain::NETWORK); // reserved: topologies are currently jitter-free
    match topology {
        Topology::Chain => {
            let segments = (0..n)
                .map(|i| Segment::new(i, [i as f64, 0.0], [i as f64 + 1.0, 0.0]))
                .collect();
            build_network(segments, &NeighborConfig::default())
        }
        Topology::BinaryTree => {
            // Segments are the tree nodes (heap order); adjacency is the
            // parent/child relation, supplied explicitly so the segment
            // graph is exactly a tree: n segments, n-1 adjacency pairs.
            let mut segments = Vec::with_capacity(n);
            for i in 0..n {
                let depth = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
                let within = (i + 1) - (1 << depth);
                let width = (1usize << depth) as f64;
                let cx = (within as f64 + 0.5) / width;
                let half = 0.4 / width;
                segments.push(Segment::new(
                    i,
                    [cx - half, depth as f64],
                    [cx + half, depth as f64],
                ));
            }
            let pairs: Vec<(usize, usize)> = (1..n).map(|i| (i, (i - 1) / 2)).collect();
            LinearNetwork::with_explicit_adjacency(segments, &pairs)
        }
        Topology::Lattice => {
            // Segments along the edges of the smallest square node grid
            // with enough edges; enumeration keeps every prefix connected
            // (row of horizontals, then the verticals underneath it).
            let mut m = 2usize;
            while 2 * m * (m - 1) < n {
                m += 1;
            }
            let mut segments = Vec::with_capacity(n);
            let mut id = 0usize;
            'outer: for r in 0..m {
                for c in 0..m - 1 {
                    segments.push(Segment::new(
                        id,
                        [c as f64, r as f64],
                        [c as f64 + 1.0, r as f64],
                    ));
                    id += 1;
                    if id == n {
                        break 'outer;
                    }
                }
                if r < m - 1 {
                    for c in 0..m {
                        segments.push(Segment::new(
                            id,
                            [c as f64, r as f64],
                            [c as f64, r as f64 + 1.0],
                        ));
                        id += 1;
                        if id == n {
                            break 'outer;
                        }
                    }
                }
            }
            build_network(segments, &NeighborConfig::default())
        }
    }
}

/// Per-segment AR(1) covariates with independent innovations, started from
/// the stationary distribution, then z-standardized (constant columns
/// standardize to zeros). `t_total` includes the burn-in steps.
pub fn gen_covariates(
    net: &LinearNetwork,
    t_total: usize,
    burn_in: usize,
    q: usize,
    rho: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<CovariatePanel> {
    gen_covariates_stream(net, t_total, burn_in, q, rho, noise_scale, seed, domain::COVARIATES)
}

#[allow(clippy::too_many_arguments)]
fn gen_covariates_stream(
    net: &LinearNetwork,
    t_total: usize,
    burn_in: usize,
    q: usize,
    rho: f64,
    noise_scale: f64,
    seed: u64,
    stream: u64,
) -> Result<CovariatePanel> {
    if rho.abs() >= 1.0 {
        return Err(Error::Simulation(format!("|rho| must be < 1, got {rho}")));
    }
    let n = net.n_segments();
    let mut raw = Array3::zeros((t_total, n, q));
    if noise_scale > 0.0 {
        let mut rng = substream(seed, stream);
        let stationary_sd = noise_scale / (1.0 - rho * rho).sqrt();
        let init = Normal::new(0.0, stationary_sd)
            .map_err(|e| Error::Simulation(format!("bad AR(1) parameters: {e}")))?;
        let step = Normal::new(0.0, noise_scale)
            .map_err(|e| Error::Simulation(format!("bad AR(1) parameters: {e}")))?;
        for c in 0..q {
            for i in 0..n {
                let mut v = init.sample(&mut rng);
                raw[[0, i, c]] = v;
                for t in 1..t_total {
                    v = rho * v + step.sample(&mut rng);
                    raw[[t, i, c]] = v;
                }
            }
        }
    }
    let names = (1..=q).map(|i| format!("x{i}")).collect();
    let panel = CovariatePanel::from_covariates(raw, burn_in, names)?;
    let (standardized, _) = standardize(&panel)?;
    Ok(standardized)
}

/// Draw per-cell Poisson counts from the ground-truth intensity, placing
/// each event uniformly within its step. Refuses scenarios whose expected
/// count per cell exceeds [`MAX_CELL_RATE`].
pub fn sample_events(
    true_params: &ModelParams,
    panel: &CovariatePanel,
    w: &WeightMatrix,
    k_trunc: usize,
    seed: u64,
) -> Result<EventLog> {
    sample_events_stream(true_params, panel, w, k_trunc, seed, domain::EVENTS)
}

fn sample_events_stream(
    true_params: &ModelParams,
    panel: &CovariatePanel,
    w: &WeightMatrix,
    k_trunc: usize,
    seed: u64,
    stream: u64,
) -> Result<EventLog> {
    let field = intensity_window_series(true_params, panel, w, k_trunc)?;
    let n = panel.n_segments();
    let window = panel.window_steps();
    let mut rng = substream(seed, stream);
    let mut events = Vec::new();
    for t in 0..window {
        for i in 0..n {
            let lam = field.log_lambda[[t, i]].exp();
            if lam > MAX_CELL_RATE {
                return Err(Error::Simulation(format!(
                    "expected count {lam:.3} at (segment {i}, step {t}) exceeds {MAX_CELL_RATE}; \
                     the scenario is misconfigured"
                )));
            }
            if lam == 0.0 {
                continue;
            }
            let count = Poisson::new(lam)
                .map_err(|e| Error::Simulation(format!("invalid Poisson rate {lam}: {e}")))?
                .sample(&mut rng) as u64;
            for _ in 0..count {
                events.push(Event {
                    segment: i,
                    time: t as f64 + rng.random_range(0.0..1.0),
                });
            }
        }
    }
    EventLog::new(events, n, window)
}

/// One replicate of a recovery experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub n_events: usize,
    pub xi_hat: f64,
    pub beta_hat: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    /// Per-coefficient indicator: |β̂_j − β_j| within three standard
    /// errors (None when standard errors were unavailable).
    pub within_3se: Option<Vec<bool>>,
}

/// Aggregated simulate → fit → summarize report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub config: ScenarioConfig,
    pub replicates: usize,
    pub outcomes: Vec<ReplicateOutcome>,
    /// Mean of β̂_j − β_j.
    pub beta_bias: Vec<f64>,
    pub beta_rmse: Vec<f64>,
    /// Median of |β̂_j − β_j| / |β_j| (guarded for β_j = 0).
    pub beta_median_rel_error: Vec<f64>,
    /// (grid value, how many replicates selected it).
    pub xi_histogram: Vec<(f64, usize)>,
    /// Fraction of replicates whose 3-SE interval covered β_j.
    pub coverage_3se: Vec<f64>,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Simulate and refit `replicates` independent datasets from one scenario
/// and summarize estimation quality. Replicates run in parallel on
/// independent substreams; the report is reduced in replicate order.
pub fn recovery_experiment(
    cfg: &ScenarioConfig,
    replicates: usize,
    solver: &SolverConfig,
) -> Result<RecoveryReport> {
    cfg.validate()?;
    solver.validate()?;
    if replicates == 0 {
        return Err(Error::Simulation("at least one replicate required".into()));
    }
    let net = gen_network(cfg.topology, cfg.n_segments, cfg.seed)?;
    let ncfg = NeighborConfig::default();
    let w = build_weights(&net, &ncfg);
    let t_total = cfg.horizon + cfg.burn_in;

    let fits: Vec<(usize, EventLog, FitResult)> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<(usize, EventLog, FitResult)> {
            let panel = gen_covariates_stream(
                &net,
                t_total,
                cfg.burn_in,
                cfg.q,
                cfg.rho,
                cfg.noise_scale,
                cfg.seed,
                replicate_stream(domain::COVARIATES, r),
            )?;
            let events = sample_events_stream(
                &cfg.true_params,
                &panel,
                &w,
                cfg.k_trunc,
                cfg.seed,
                replicate_stream(domain::EVENTS, r),
            )?;
            let fit = fit_cnhpp(&panel, &events, &w, solver)?;
            Ok((r, events, fit))
        })
        .collect::<Result<Vec<_>>>()?;

    let p = cfg.true_params.beta.len();
    let truth = &cfg.true_params.beta;
    let mut outcomes = Vec::with_capacity(replicates);
    for (r, events, fit) in &fits {
        let beta_hat = fit.params_hat.beta.to_vec();
        let within = fit.std_errors.as_ref().map(|ses| {
            (0..p)
                .map(|j| (beta_hat[j] - truth[j]).abs() <= 3.0 * ses[j])
                .collect()
        });
        outcomes.push(ReplicateOutcome {
            replicate: *r,
            n_events: events.len(),
            xi_hat: fit.params_hat.xi,
            beta_hat,
            loglik: fit.loglik,
            converged: fit.converged,
            within_3se: within,
        });
    }

    let mut beta_bias = vec![0.0; p];
    let mut beta_rmse = vec![0.0; p];
    let mut rel_errors: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut covered = vec![0usize; p];
    let mut covered_total = vec![0usize; p];
    for o in &outcomes {
        for j in 0..p {
            let err = o.beta_hat[j] - truth[j];
            beta_bias[j] += err / replicates as f64;
            beta_rmse[j] += err * err / replicates as f64;
            let denom = truth[j].abs().max(1e-12);
            rel_errors[j].push(err.abs() / denom);
            if let Some(w3) = &o.within_3se {
                covered_total[j] += 1;
                if w3[j] {
                    covered[j] += 1;
                }
            }
        }
    }
    for v in beta_rmse.iter_mut() {
        *v = v.sqrt();
    }
    let beta_median_rel_error = rel_errors.into_iter().map(median).collect();
    let coverage_3se = (0..p)
        .map(|j| {
            if covered_total[j] == 0 {
                f64::NAN
            } else {
                covered[j] as f64 / covered_total[j] as f64
            }
        })
        .collect();

    let mut xi_histogram: Vec<(f64, usize)> = solver.xi_grid.iter().map(|&x| (x, 0)).collect();
    for o in &outcomes {
        if let Some(slot) = xi_histogram.iter_mut().find(|(x, _)| *x == o.xi_hat) {
            slot.1 += 1;
        }
    }

    Ok(RecoveryReport {
        config: cfg.clone(),
        replicates,
        outcomes,
        beta_bias,
        beta_rmse,
        beta_median_rel_error,
        xi_histogram,
        coverage_3se,
    })
}
