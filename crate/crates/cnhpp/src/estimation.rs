//! Maximum-likelihood fitting: a limited-memory quasi-Newton maximizer for
//! the concave β problem, profile likelihood over a ξ grid for the full
//! model, and the homogeneous / non-homogeneous baselines.
//!
//! ξ enters the likelihood only through the convolutional design, and
//! rebuilding that design is the expensive part of an evaluation. Fitting
//! therefore profiles: for each ξ on a grid the design is built once, β is
//! maximized by L-BFGS over the resulting Poisson regression, and the grid
//! point with the largest maximized likelihood wins.

use ndarray::{Array1, Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convolution::{conv_design, CovariatePanel};
use crate::error::{Error, Result};
use crate::ingest::StandardizationStats;
use crate::model::{design_row_product, loglik_from_eta, EventLog, ModelParams};
use crate::network::WeightMatrix;

/// Solver settings: gradient tolerance, iteration cap, the ξ grid, and the
/// series truncation K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence threshold on the gradient sup-norm.
    pub grad_tolerance: f64,
    pub max_iterations: usize,
    /// Strictly increasing decay-factor candidates in [0, 1).
    pub xi_grid: Vec<f64>,
    /// Number of retained historical terms.
    pub k_trunc: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tolerance: 1e-8,
            max_iterations: 500,
            xi_grid: default_xi_grid(),
            k_trunc: 7,
        }
    }
}

/// 0.00, 0.05, ..., 0.95.
pub fn default_xi_grid() -> Vec<f64> {
    (0..20).map(|i| i as f64 * 0.05).collect()
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grad_tolerance <= 0.0 {
            return Err(Error::Config("grad_tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if self.xi_grid.is_empty() {
            return Err(Error::Config("xi grid must be non-empty".into()));
        }
        for pair in self.xi_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Config("xi grid must be strictly increasing".into()));
            }
        }
        for &xi in &self.xi_grid {
            if !(0.0..1.0).contains(&xi) {
                return Err(Error::Config(format!("xi grid value {xi} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// One grid point of the profile curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub xi: f64,
    pub loglik: Option<f64>,
    pub beta: Option<Vec<f64>>,
    pub grad_sup_norm: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// A fitted model: the selected parameters, the profile curve, and solver
/// diagnostics. Serializes to the fit JSON consumed by prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params_hat: ModelParams,
    pub loglik: f64,
    pub k_trunc: usize,
    pub converged: bool,
    pub profile: Vec<ProfilePoint>,
    /// Observed-information standard errors for β (None when the observed
    /// information is singular).
    pub std_errors: Option<Vec<f64>>,
    pub covariate_names: Vec<String>,
    /// Standardization applied to the training panel; reused verbatim for
    /// prediction panels.
    pub standardization: Option<StandardizationStats>,
}

impl FitResult {
    /// Intensities for a (future) panel under the fitted parameters. The
    /// panel must already be standardized with the training statistics.
    pub fn predict(
        &self,
        panel: &CovariatePanel,
        w: &WeightMatrix,
    ) -> Result<crate::model::IntensityField> {
        crate::model::predict_intensity(&self.params_hat, panel, w, self.k_trunc)
    }
}

/// Homogeneous-Poisson baseline: one constant rate for the whole network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HppFit {
    /// Events per segment per step.
    pub rate: f64,
    pub loglik: f64,
    pub n_events: usize,
    pub n_segments: usize,
    pub window_steps: usize,
}

/// Closed-form HPP estimate: `λ̂ = (total events) / (N T)`, with the
/// log-likelihood evaluated as an intercept-only model on the same
/// discretized window.
pub fn fit_hpp(events: &EventLog) -> Result<HppFit> {
    let n = events.n_segments();
    let t = events.window_steps();
    if n == 0 || t == 0 {
        return Err(Error::Events("HPP fit needs a nonempty network and window".into()));
    }
    let count = events.len();
    let cells = (n * t) as f64;
    let rate = count as f64 / cells;
    let loglik = if count > 0 {
        count as f64 * rate.ln() - rate * cells
    } else {
        0.0
    };
    Ok(HppFit { rate, loglik, n_events: count, n_segments: n, window_steps: t })
}

/// Poisson regression on a fixed (T, N, q+1) design with log link. Row
/// order is (t, i); all accumulation follows that order so alternate
/// evaluation routes agree bit for bit.
pub(crate) struct PoissonGlm {
    design: Array3<f64>,
    counts: Array2<f64>,
}

impl PoissonGlm {
    pub(crate) fn new(design: Array3<f64>, counts: Array2<f64>) -> Self {
        debug_assert_eq!(design.dim().0, counts.dim().0);
        debug_assert_eq!(design.dim().1, counts.dim().1);
        PoissonGlm { design, counts }
    }

    /// Log-likelihood and score; `None` when the linear predictor leaves
    /// the representable range.
    pub(crate) fn eval(&self, beta: &Array1<f64>) -> Option<(f64, Array1<f64>)> {
        let (t_steps, n, cols) = self.design.dim();
        let mut eta = Array2::zeros((t_steps, n));
        for t in 0..t_steps {
            let row = design_row_product(self.design.index_axis(Axis(0), t), beta.view());
            eta.row_mut(t).assign(&row);
        }
        let ll = loglik_from_eta(&eta, &self.counts, beta.view()).ok()?;
        let mut grad = Array1::zeros(cols);
        for t in 0..t_steps {
            let x = self.design.index_axis(Axis(0), t);
            for i in 0..n {
                let d = self.counts[[t, i]] - eta[[t, i]].exp();
                if d != 0.0 {
                    for c in 0..cols {
                        grad[c] += x[[i, c]] * d;
                    }
                }
            }
        }
        Some((ll, grad))
    }
}

/// Outcome of one β maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSolve {
    pub beta: Array1<f64>,
    pub value: f64,
    pub grad_sup_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sup_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Maximize a smooth concave objective with limited-memory BFGS and a
/// backtracking Armijo line search. The provider returns `None` for
/// iterates where the objective is undefined (e.g. exp overflow); such
/// trial points are rejected by the line search. Terminates when the
/// gradient sup-norm drops below tolerance or the iteration cap is hit;
/// deterministic given the starting point.
pub fn optimize_beta<F>(provider: F, init: Array1<f64>, cfg: &SolverConfig) -> Result<BetaSolve>
where
    F: Fn(&Array1<f64>) -> Option<(f64, Array1<f64>)>,
{
    const MEMORY: usize = 10;
    const ARMIJO_C1: f64 = 1e-4;
    const CURVATURE_MIN: f64 = 1e-10;
    const MAX_BACKTRACKS: usize = 60;
    // Near the optimum the per-step improvement drops below the additive
    // rounding noise of the objective; a step is then still acceptable if
    // it does not lose more than the noise floor and makes real gradient
    // progress, which is what the stopping rule measures.
    const NOISE_TOL: f64 = 1e-12;

    let (mut value, mut grad) = provider(&init)
        .ok_or_else(|| Error::Solver("objective undefined at the starting point".into()))?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Solver("objective or gradient non-finite at the starting point".into()));
    }
    let mut x = init;
    let mut history: Vec<(Array1<f64>, Array1<f64>, f64)> = Vec::new(); // (s, y, rho)
    let mut iterations = 0usize;

    while iterations < cfg.max_iterations {
        let gnorm = sup_norm(&grad);
        if gnorm < cfg.grad_tolerance {
            return Ok(BetaSolve { beta: x, value, grad_sup_norm: gnorm, iterations, converged: true });
        }
        iterations += 1;

        // Two-loop recursion on the negative gradient (we maximize).
        let mut q = -grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * s.dot(&q);
            q.scaled_add(-a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.last() {
            let gamma = s.dot(y) / y.dot(y);
            q *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q.scaled_add(a - b, s);
        }
        let mut direction = -q; // ascent direction for the maximization

        // Fall back to steepest ascent if the model direction is not one.
        let mut dir_deriv = direction.dot(&grad);
        if !dir_deriv.is_finite() || dir_deriv <= 0.0 {
            direction = grad.clone();
            dir_deriv = direction.dot(&grad);
        }

        let mut step = if history.is_empty() {
            (1.0 / direction.dot(&direction).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        let noise_floor = value - NOISE_TOL * value.abs().max(1.0);
        for _ in 0..MAX_BACKTRACKS {
            let trial = &x + &(&direction * step);
            if let Some((tv, tg)) = provider(&trial) {
                if tv.is_finite() {
                    let sufficient = tv >= value + ARMIJO_C1 * step * dir_deriv;
                    let noise_progress = tv >= noise_floor && sup_norm(&tg) <= 0.9 * gnorm;
                    if sufficient || noise_progress {
                        accepted = Some((trial, tv, tg));
                        break;
                    }
                }
            }
            step *= 0.5;
        }

        let Some((new_x, new_value, new_grad)) = accepted else {
            // No acceptable step remains: return the last good iterate.
            let converged = gnorm < cfg.grad_tolerance;
            return Ok(BetaSolve { beta: x, value, grad_sup_norm: gnorm, iterations, converged });
        };

        let s = &new_x - &x;
        let y = &new_grad - &grad;
        // Curvature safeguard: store the pair only when sᵀ(-y) is safely
        // positive (y is the gradient change of the maximized objective).
        let sy = -s.dot(&y);
        if sy > CURVATURE_MIN * s.dot(&s).sqrt() * y.dot(&y).sqrt() {
            if history.len() == MEMORY {
                history.remove(0);
            }
            history.push((s, -y, 1.0 / sy));
        }
        x = new_x;
        value = new_value;
        grad = new_grad;
    }

    let gnorm = sup_norm(&grad);
    Ok(BetaSolve {
        beta: x,
        value,
        grad_sup_norm: gnorm,
        iterations,
        converged: gnorm < cfg.grad_tolerance,
    })
}

/// Starting point: intercept at the homogeneous-rate solution, all other
/// coefficients zero.
fn initial_beta(events: &EventLog, cols: usize) -> Array1<f64> {
    let cells = (events.n_segments() * events.window_steps()) as f64;
    let n = events.len();
    let rate = if n > 0 { n as f64 / cells } else { 0.5 / cells };
    let mut beta = Array1::zeros(cols);
    beta[0] = rate.ln();
    beta
}

fn window_design(panel: &CovariatePanel) -> Array3<f64> {
    let (window, n, cols) = (panel.window_steps(), panel.n_segments(), panel.n_columns());
    let mut design = Array3::zeros((window, n, cols));
    for t in 0..window {
        design
            .index_axis_mut(Axis(0), t)
            .assign(&panel.design_at(t as i64).expect("window step in range"));
    }
    design
}

/// Coefficients past this magnitude on a standardized design mean the MLE
/// is running to a boundary (per-cell rates below e^-20): the separated-
/// data case, where the gradient vanishes along a diverging ray. Such
/// solutions are reported but flagged as non-converged.
const BETA_DIVERGENCE_BOUND: f64 = 20.0;

fn solve_point(glm: &PoissonGlm, init: Array1<f64>, cfg: &SolverConfig, xi: f64) -> ProfilePoint {
    match optimize_beta(|b| glm.eval(b), init, cfg) {
        Ok(solve) => {
            let diverged = solve.beta.iter().any(|b| b.abs() > BETA_DIVERGENCE_BOUND);
            ProfilePoint {
                xi,
                loglik: Some(solve.value),
                beta: Some(solve.beta.to_vec()),
                grad_sup_norm: Some(solve.grad_sup_norm),
                iterations: solve.iterations,
                converged: solve.converged && !diverged,
                error: diverged.then(|| {
                    format!("coefficients diverged beyond ±{BETA_DIVERGENCE_BOUND} (separated data?)")
                }),
            }
        }
        Err(e) => ProfilePoint {
            xi,
            loglik: None,
            beta: None,
            grad_sup_norm: None,
            iterations: 0,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

/// Observed-information standard errors: central finite differences of the
/// analytic score give the Hessian; SEs are the square roots of the
/// diagonal of its negated inverse. `None` when the information matrix is
/// singular (e.g. separated data).
fn standard_errors(glm: &PoissonGlm, beta: &Array1<f64>) -> Option<Vec<f64>> {
    let p = beta.len();
    let mut hessian = Array2::zeros((p, p));
    for j in 0..p {
        let h = 1e-5 * beta[j].abs().max(1.0);
        let mut up = beta.clone();
        let mut dn = beta.clone();
        up[j] += h;
        dn[j] -= h;
        let (_, gu) = glm.eval(&up)?;
        let (_, gd) = glm.eval(&dn)?;
        for i in 0..p {
            hessian[[i, j]] = (gu[i] - gd[i]) / (2.0 * h);
        }
    }
    // Symmetrize and invert the negative Hessian.
    let mut info = Array2::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            info[[i, j]] = -(hessian[[i, j]] + hessian[[j, i]]) / 2.0;
        }
    }
    let inv = invert_symmetric(info)?;
    let mut out = Vec::with_capacity(p);
    for i in 0..p {
        let v = inv[[i, i]];
        if v <= 0.0 || !v.is_finite() {
            return None;
        }
        out.push(v.sqrt());
    }
    Some(out)
}

/// Gauss-Jordan inverse with partial pivoting; fine at coefficient-vector
/// sizes.
fn invert_symmetric(mut a: Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut inv = Array2::eye(n);
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[[r, col]].abs() > a[[pivot, col]].abs() {
                pivot = r;
            }
        }
        if a[[pivot, col]].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.swap([pivot, c], [col, c]);
                inv.swap([pivot, c], [col, c]);
            }
        }
        let d = a[[col, col]];
        for c in 0..n {
            a[[col, c]] /= d;
            inv[[col, c]] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[[r, col]];
                if f != 0.0 {
                    for c in 0..n {
                        a[[r, c]] -= f * a[[col, c]];
                        inv[[r, c]] -= f * inv[[col, c]];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn select_best(profile: &[ProfilePoint]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, point) in profile.iter().enumerate() {
        if let Some(ll) = point.loglik {
            if ll.is_finite() && best.map_or(true, |(_, b)| ll > b) {
                best = Some((idx, ll));
            }
        }
    }
    best.map(|(idx, _)| idx)
        .ok_or_else(|| Error::Solver("every grid point failed to produce a finite likelihood".into()))
}

fn assemble_fit(
    model: &str,
    profile: Vec<ProfilePoint>,
    cfg: &SolverConfig,
    panel: &CovariatePanel,
    glm_for_best: &PoissonGlm,
) -> Result<FitResult> {
    let best = select_best(&profile)?;
    let chosen = &profile[best];
    let beta = Array1::from_vec(chosen.beta.clone().expect("selected point has coefficients"));
    let std_errors = standard_errors(glm_for_best, &beta);
    let params_hat = ModelParams::new(chosen.xi, beta)?;
    Ok(FitResult {
        model: model.to_string(),
        params_hat,
        loglik: chosen.loglik.expect("selected point has a likelihood"),
        k_trunc: cfg.k_trunc,
        converged: chosen.converged,
        profile,
        std_errors,
        covariate_names: panel.covariate_names().to_vec(),
        standardization: None,
    })
}

/// Conventional NHPP fit: ξ fixed at zero, so the design is the raw
/// covariate panel and no burn-in is consumed.
pub fn fit_nhpp(panel: &CovariatePanel, events: &EventLog, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    let glm = PoissonGlm::new(window_design(panel), events.count_matrix());
    let init = initial_beta(events, panel.n_columns());
    let point = solve_point(&glm, init, cfg, 0.0);
    let profile = vec![point];
    let mut fit = assemble_fit("nhpp", profile, cfg, panel, &glm)?;
    fit.k_trunc = 0;
    Ok(fit)
}

/// Full profile-likelihood fit: for each ξ on the grid, build the
/// convolutional design once and maximize over β; return the argmax and
/// the whole profile curve. Grid points run in parallel and are reduced in
/// grid order; a fit fails only when every grid point fails.
pub fn fit_cnhpp(
    panel: &CovariatePanel,
    events: &EventLog,
    w: &WeightMatrix,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if events.n_segments() != panel.n_segments() || events.window_steps() != panel.window_steps() {
        return Err(Error::Events("event log does not align with the covariate panel".into()));
    }
    let counts = events.count_matrix();
    let init = initial_beta(events, panel.n_columns());

    let profile: Vec<ProfilePoint> = cfg
        .xi_grid
        .par_iter()
        .map(|&xi| match conv_design(w, panel, xi, cfg.k_trunc, false) {
            Ok(design) => {
                let glm = PoissonGlm::new(design, counts.clone());
                solve_point(&glm, init.clone(), cfg, xi)
            }
            Err(e) => ProfilePoint {
                xi,
                loglik: None,
                beta: None,
                grad_sup_norm: None,
                iterations: 0,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let best = select_best(&profile)?;
    let best_design = conv_design(w, panel, profile[best].xi, cfg.k_trunc, false)?;
    let glm = PoissonGlm::new(best_design, counts);
    assemble_fit("cnhpp", profile, cfg, panel, &glm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;
    use crate::network::{build_network, build_weights, NeighborConfig, Segment};
    use ndarray::{array, Array3};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn chain_net(n: usize, cfg: &NeighborConfig) -> crate::network::LinearNetwork {
        let segs = (0..n)
            .map(|i| Segment::new(i, [i as f64, 0.0], [i as f64 + 1.0, 0.0]))
            .collect();
        build_network(segs, cfg).unwrap()
    }

    #[test]
    fn hpp_matches_closed_forms() {
        let events = EventLog::new(vec![], 6398, 30).unwrap();
        assert_eq!(fit_hpp(&events).unwrap().rate, 0.0);

        let mk = |n_ev: usize, n: usize, t: usize| {
            let evs = (0..n_ev)
                .map(|j| Event { segment: j % n, time: (j % t) as f64 + 0.5 })
                .collect();
            EventLog::new(evs, n, t).unwrap()
        };
        let fit = fit_hpp(&mk(15, 6398, 30)).unwrap();
        assert!((fit.rate - 7.815e-5).abs() / 7.815e-5 < 5e-4, "rate {}", fit.rate);

        let fit = fit_hpp(&mk(6, 3, 2)).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn optimizer_solves_concave_quadratic() {
        let target = array![1.5, -2.0, 0.25];
        let provider = |b: &Array1<f64>| {
            let d = b - &target;
            Some((-d.dot(&d), -2.0 * d))
        };
        let cfg = SolverConfig::default();
        let solve = optimize_beta(provider, Array1::zeros(3), &cfg).unwrap();
        assert!(solve.converged);
        for i in 0..3 {
            assert!((solve.beta[i] - target[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn optimizer_matches_poisson_closed_form() {
        // Single rate parameter: ℓ(b) = n b − T e^b maximized at b = ln(n/T).
        let (n, t) = (7.0, 20.0);
        let provider = |b: &Array1<f64>| {
            let e = b[0].exp();
            Some((n * b[0] - t * e, array![n - t * e]))
        };
        let cfg = SolverConfig::default();
        let solve = optimize_beta(provider, array![0.0], &cfg).unwrap();
        assert!(solve.converged);
        assert!((solve.beta[0] - (n / t).ln()).abs() < 1e-8);
    }

    #[test]
    fn optimizer_rejects_undefined_start() {
        let provider = |_: &Array1<f64>| -> Option<(f64, Array1<f64>)> { None };
        let cfg = SolverConfig::default();
        assert!(optimize_beta(provider, array![0.0], &cfg).is_err());
    }

    fn small_instance(
        seed: u64,
        n: usize,
        steps: usize,
        q: usize,
        burn_in: usize,
        n_events: usize,
    ) -> (CovariatePanel, EventLog) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let raw = Array3::from_shape_fn((steps + burn_in, n, q), |_| rng.random_range(-1.0..1.0));
        let names = (1..=q).map(|i| format!("x{i}")).collect();
        let panel = CovariatePanel::from_covariates(raw, burn_in, names).unwrap();
        let events = (0..n_events)
            .map(|_| Event {
                segment: rng.random_range(0..n),
                time: rng.random_range(0.0..steps as f64),
            })
            .collect();
        (panel, EventLog::new(events, n, steps).unwrap())
    }

    #[test]
    fn nhpp_single_segment_recovers_log_rate() {
        let raw = Array3::zeros((10, 1, 0));
        let panel = CovariatePanel::from_covariates(raw, 0, vec![]).unwrap();
        let events = EventLog::new(
            (0..4).map(|j| Event { segment: 0, time: j as f64 + 0.5 }).collect(),
            1,
            10,
        )
        .unwrap();
        let fit = fit_nhpp(&panel, &events, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.params_hat.beta[0] - (0.4f64).ln()).abs() < 1e-8);
    }

    #[test]
    fn nhpp_gradient_is_small_at_optimum() {
        let (panel, events) = small_instance(31, 8, 30, 3, 0, 40);
        let cfg = SolverConfig::default();
        let fit = fit_nhpp(&panel, &events, &cfg).unwrap();
        assert!(fit.converged);
        let point = &fit.profile[0];
        assert!(point.grad_sup_norm.unwrap() < 1e-8);
    }

    #[test]
    fn separated_data_flags_nonconvergence_without_crashing() {
        // Binary covariate; events occur only where it is 1, so the MLE for
        // that coefficient runs to infinity.
        let steps = 8usize;
        let n = 2usize;
        let mut raw = Array3::zeros((steps, n, 1));
        for t in 0..steps {
            raw[[t, 0, 0]] = 1.0; // segment 0 exposed, segment 1 never
        }
        let panel = CovariatePanel::from_covariates(raw, 0, vec!["x1".into()]).unwrap();
        let events = EventLog::new(
            (0..6).map(|j| Event { segment: 0, time: j as f64 % steps as f64 }).collect(),
            n,
            steps,
        )
        .unwrap();
        let cfg = SolverConfig { max_iterations: 60, ..Default::default() };
        let fit = fit_nhpp(&panel, &events, &cfg).unwrap();
        assert!(!fit.converged);
    }

    #[test]
    fn cnhpp_with_zero_grid_equals_nhpp_exactly() {
        let cfg_net = NeighborConfig::default();
        let net = chain_net(6, &cfg_net);
        let w = build_weights(&net, &cfg_net);
        let (panel, events) = small_instance(17, 6, 25, 2, 4, 30);
        let cfg = SolverConfig { xi_grid: vec![0.0], k_trunc: 4, ..Default::default() };
        let cn = fit_cnhpp(&panel, &events, &w, &cfg).unwrap();
        let nh = fit_nhpp(&panel, &events, &cfg).unwrap();
        assert_eq!(cn.loglik, nh.loglik);
        assert_eq!(cn.params_hat.beta, nh.params_hat.beta);
    }

    #[test]
    fn profile_containment_over_grids() {
        let cfg_net = NeighborConfig::default();
        let net = chain_net(5, &cfg_net);
        let w = build_weights(&net, &cfg_net);
        let (panel, events) = small_instance(23, 5, 20, 2, 4, 25);
        let subset = SolverConfig {
            xi_grid: vec![0.0, 0.4],
            k_trunc: 4,
            ..Default::default()
        };
        let superset = SolverConfig {
            xi_grid: vec![0.0, 0.2, 0.4, 0.6],
            k_trunc: 4,
            ..Default::default()
        };
        let small = fit_cnhpp(&panel, &events, &w, &subset).unwrap();
        let large = fit_cnhpp(&panel, &events, &w, &superset).unwrap();
        assert!(large.loglik >= small.loglik - 1e-12);
    }

    #[test]
    fn fit_result_bytes_are_deterministic() {
        let cfg_net = NeighborConfig::default();
        let net = chain_net(5, &cfg_net);
        let w = build_weights(&net, &cfg_net);
        let (panel, events) = small_instance(29, 5, 20, 2, 3, 18);
        let cfg = SolverConfig {
            xi_grid: vec![0.0, 0.3, 0.6],
            k_trunc: 3,
            ..Default::default()
        };
        let a = fit_cnhpp(&panel, &events, &w, &cfg).unwrap();
        let b = fit_cnhpp(&panel, &events, &w, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn selected_point_attains_profile_maximum() {
        let cfg_net = NeighborConfig::default();
        let net = chain_net(6, &cfg_net);
        let w = build_weights(&net, &cfg_net);
        let (panel, events) = small_instance(41, 6, 24, 2, 5, 28);
        let cfg = SolverConfig {
            xi_grid: vec![0.0, 0.25, 0.5, 0.75],
            k_trunc: 5,
            ..Default::default()
        };
        let fit = fit_cnhpp(&panel, &events, &w, &cfg).unwrap();
        let best = fit
            .profile
            .iter()
            .filter_map(|p| p.loglik)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(fit.loglik, best);
        assert!((0.0..1.0).contains(&fit.params_hat.xi));
    }

    #[test]
    fn invert_symmetric_matches_hand_inverse() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let inv = invert_symmetric(a.clone()).unwrap();
        let prod = a.dot(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - expected).abs() < 1e-12);
            }
        }
        assert!(invert_symmetric(array![[1.0, 1.0], [1.0, 1.0]]).is_none());
    }

    #[test]
    fn grid_validation_catches_bad_configs() {
        let mut cfg = SolverConfig::default();
        cfg.xi_grid = vec![0.2, 0.1];
        assert!(cfg.validate().is_err());
        cfg.xi_grid = vec![0.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.xi_grid = vec![];
        assert!(cfg.validate().is_err());
    }
}
