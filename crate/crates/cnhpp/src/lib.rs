//! Convolutional non-homogeneous Poisson processes on linear networks.
//!
//! Events on the segments of a linear network (power lines, roads) are
//! modeled as per-segment Poisson processes whose log-intensity combines
//! the current covariate effects with a geometrically decaying,
//! network-convolved sum of past covariate effects:
//!
//! ```text
//! log λ(t) = Σ_{k=0..K} ξ^k W^k X(t-k) β
//! ```
//!
//! where `W` is a sparse neighbor-contribution matrix, `ξ ∈ [0, 1)` is the
//! decay factor, and `X(t)` is the per-segment covariate design. At
//! `ξ = 0` the model is a plain log-linear NHPP. The same log-intensities
//! are the outputs of the linear recurrence `h(t) = ξ W h(t-1) + X(t) β`,
//! which is the cheap way to evaluate them over long windows.
//!
//! What lives where:
//!
//! - [`network`]: network graphs, neighbor generations, weight matrices,
//!   sparse matrix powers, and a brute-force walk-enumeration oracle
//! - [`convolution`]: the network-convolution operator and the
//!   convolutional covariate design
//! - [`model`]: intensity evaluation (both forms), the log-likelihood,
//!   analytic gradients via backpropagation through time, and event-count
//!   probabilities
//! - [`estimation`]: L-BFGS maximization, the ξ-grid profile likelihood,
//!   and the HPP/NHPP baselines
//! - [`simulate`]: synthetic networks, AR(1) covariates, seeded event
//!   sampling, and recovery experiments
//! - [`ingest`]: CSV/JSON loaders and writers, standardization, NDVI, and
//!   nearest-grid assignment
//! - [`validation`]: percentile-rank validation, comparison tables, and
//!   density exports
//! - [`cli`]: the pipelines behind the `cnhpp` binary
//!
//! The `examples/` directory has one runnable walkthrough per capability;
//! start with `simulate_and_fit`.

pub mod cli;
pub mod convolution;
pub mod error;
pub mod estimation;
pub mod ingest;
pub mod model;
pub mod network;
pub mod simulate;
pub mod validation;

pub use convolution::{conv_covariate_matrix, nc_apply, nc_nfold, ConvCovariates, CovariatePanel};
pub use error::{Error, Result};
pub use estimation::{
    fit_cnhpp, fit_hpp, fit_nhpp, optimize_beta, FitResult, HppFit, SolverConfig,
};
pub use model::{
    event_probability, gradient_bptt, log_intensity_recurrence, log_intensity_series,
    log_likelihood, predict_intensity, Event, EventLog, IntensityField, ModelParams,
};
pub use network::{
    build_network, build_weights, enumerate_walks, generation_neighbors, matrix_power_apply,
    LinearNetwork, NeighborConfig, Segment, WeightMatrix, WeightScheme,
};
pub use simulate::{
    gen_covariates, gen_network, recovery_experiment, sample_events, ScenarioConfig, Topology,
};
pub use validation::{model_comparison, percentile_rank, PercentileReport};
