//! Log-intensity evaluation (truncated-series and recurrence forms), the
//! Poisson log-likelihood, analytic gradients by backpropagation through
//! time, and event-count probabilities.
//!
//! The model: events on segment `i` follow a non-homogeneous Poisson
//! process whose log-intensity is the geometrically decaying, network-
//! convolved sum of current and past covariate effects,
//!
//! ```text
//! log λ(t) = Σ_{k=0..K} ξ^k W^k X(t-k) β = X~(t) β.
//! ```
//!
//! The same quantity is the output of a linear recurrence
//! `h(t) = ξ W h(t-1) + X(t) β` when the recurrence is started from a zero
//! hidden state exactly K steps before `t`. The likelihood treats the
//! process as Poisson given covariates: there is no event feedback.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::convolution::{conv_covariate_matrix, conv_design, CovariatePanel};
use crate::error::{Error, Result};
use crate::network::WeightMatrix;

/// Guard on the linear predictor: `exp` overflows long before f64 does,
/// and a predictor past this bound means the optimizer or the data are
/// broken, so evaluation aborts instead of returning infinities.
pub const ETA_OVERFLOW_BOUND: f64 = 50.0;

/// Model parameters θ = (ξ, β).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Decay factor in [0, 1).
    pub xi: f64,
    /// Coefficients (β0 intercept, β1..βq effects).
    pub beta: Array1<f64>,
}

impl ModelParams {
    pub fn new(xi: f64, beta: Array1<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&xi) {
            return Err(Error::Model(format!("decay factor xi={xi} must lie in [0, 1)")));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Model("beta contains a non-finite coefficient".into()));
        }
        Ok(ModelParams { xi, beta })
    }
}

/// One event: a segment index and a real event time in window units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub segment: usize,
    pub time: f64,
}

/// Observed events over a window of `window_steps` unit steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<Event>,
    n_segments: usize,
    window_steps: usize,
}

impl EventLog {
    pub fn new(events: Vec<Event>, n_segments: usize, window_steps: usize) -> Result<Self> {
        if window_steps == 0 {
            return Err(Error::Events("window must contain at least one step".into()));
        }
        for (row, e) in events.iter().enumerate() {
            if e.segment >= n_segments {
                return Err(Error::Events(format!(
                    "event {row} references segment {} outside 0..{n_segments}",
                    e.segment
                )));
            }
            if !e.time.is_finite() || e.time < 0.0 || e.time > window_steps as f64 {
                return Err(Error::Events(format!(
                    "event {row} has time {} outside the window [0, {window_steps}]",
                    e.time
                )));
            }
        }
        Ok(EventLog { events, n_segments, window_steps })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn window_steps(&self) -> usize {
        self.window_steps
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The step containing an event time. A time exactly at the window end
    /// belongs to the last step.
    pub fn step_of(&self, event: &Event) -> usize {
        (event.time.floor() as usize).min(self.window_steps - 1)
    }

    /// Event counts b_i per segment.
    pub fn counts_per_segment(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_segments];
        for e in &self.events {
            counts[e.segment] += 1;
        }
        counts
    }

    /// T x N matrix of per-step, per-segment counts.
    pub fn count_matrix(&self) -> Array2<f64> {
        let mut counts = Array2::zeros((self.window_steps, self.n_segments));
        for e in &self.events {
            counts[[self.step_of(e), e.segment]] += 1.0;
        }
        counts
    }
}

/// Log-intensities over a range of steps; row `r` is step `first_step + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityField {
    pub log_lambda: Array2<f64>,
    pub first_step: i64,
}

impl IntensityField {
    pub fn n_steps(&self) -> usize {
        self.log_lambda.nrows()
    }

    pub fn n_segments(&self) -> usize {
        self.log_lambda.ncols()
    }

    pub fn lambda(&self) -> Array2<f64> {
        self.log_lambda.mapv(f64::exp)
    }

    /// Row index for a window step, if covered.
    pub fn row_of(&self, step: i64) -> Option<usize> {
        let r = step - self.first_step;
        if r >= 0 && (r as usize) < self.n_steps() {
            Some(r as usize)
        } else {
            None
        }
    }
}

/// Hidden state of the intensity recurrence; the output map is the
/// identity, so `h` is the log-intensity vector at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceState {
    pub h: Array1<f64>,
    pub t: i64,
}

impl RecurrenceState {
    pub fn zero(n: usize, t: i64) -> Self {
        RecurrenceState { h: Array1::zeros(n), t }
    }

    /// Advance one step: `h(t+1) = ξ W h(t) + X(t+1) β`.
    pub fn step(&mut self, params: &ModelParams, panel: &CovariatePanel, w: &WeightMatrix) -> Result<()> {
        let next_t = self.t + 1;
        let x = panel.design_at(next_t)?;
        let mut h = w.apply(self.h.view());
        h *= params.xi;
        let drive = design_row_product(x, params.beta.view());
        h += &drive;
        self.h = h;
        self.t = next_t;
        Ok(())
    }
}

/// Row-wise product X β with a fixed left-to-right summation order, so
/// every evaluation path produces bit-identical linear predictors.
pub(crate) fn design_row_product(x: ArrayView2<f64>, beta: ArrayView1<f64>) -> Array1<f64> {
    let (n, cols) = (x.nrows(), x.ncols());
    assert_eq!(cols, beta.len(), "design width does not match beta length");
    let mut out = Array1::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for c in 0..cols {
            acc += x[[i, c]] * beta[c];
        }
        out[i] = acc;
    }
    out
}

/// log λ(t) at one window step via the K-truncated series form.
pub fn log_intensity_series(
    params: &ModelParams,
    panel: &CovariatePanel,
    w: &WeightMatrix,
    k_trunc: usize,
    t: usize,
) -> Result<Array1<f64>> {
    let conv = conv_covariate_matrix(w, panel, params.xi, k_trunc, t, false)?;
    Ok(design_row_product(conv.values.view(), params.beta.view()))
}

/// log λ(t) for every window step via the K-truncated series form.
pub fn intensity_window_series(
    params: &ModelParams,
    panel: &CovariatePanel,
    w: &WeightMatrix,
    k_trunc: usize,
) -> Result<IntensityField> {
    let design = conv_design(w, panel, params.xi, k_trunc, false)?;
    let window = panel.window_steps();
    let mut log_lambda = Array2::zeros((window, panel.n_segments()));
    for t in 0..window {
        let eta = design_row_product(design.index_axis(ndarray::Axis(0), t), params.beta.view());
        log_lambda.row_mut(t).assign(&eta);
    }
    Ok(IntensityField { log_lambda, first_step: 0 })
}

/// Iterate the recurrence `h(t) = ξ W h(t-1) + X(t) β` from `h_init` (the
/// hidden state just before `t_start`) and return `o(t) = h(t)` for steps
/// `t_start ..= t_end` in window time. Steps may reach into the burn-in
/// region (negative t).
pub fn log_intensity_recurrence(
    params: &ModelParams,
    panel: &CovariatePanel,
    w: &WeightMatrix,
    t_start: i64,
    t_end: i64,
    h_init: Array1<f64>,
) -> Result<IntensityField> {
    if t_end < t_start {
        return Err(Error::Model(format!("empty recurrence range [{t_start}, {t_end}]")));
    }
    let n = panel.n_segments();
    if h_init.len() != n {
        return Err(Error::Model(format!(
            "h_init has length {}, network has {n} segments",
            h_init.len()
        )));
    }
    let steps = (t_end - t_start + 1) as usize;
    let mut state = RecurrenceState { h: h_init, t: t_start - 1 };
    let mut log_lambda = Array2::zeros((steps, n));
    for r in 0..steps {
        state.step(params, panel, w)?;
        log_lambda.row_mut(r).assign(&state.h);
    }
    Ok(IntensityField { log_lambda, first_step: t_start })
}

fn check_alignment(panel: &CovariatePanel, events: &EventLog) -> Result<()> {
    if events.n_segments() != panel.n_segments() {
        return Err(Error::Events(format!(
            "event log covers {} segments, panel has {}",
            events.n_segments(),
            panel.n_segments()
        )));
    }
    if events.window_steps() != panel.window_steps() {
        return Err(Error::Events(format!(
            "event log window ({} steps) does not match panel window ({} steps)",
            events.window_steps(),
            panel.window_steps()
        )));
    }
    Ok(())
}

fn overflow_error(i: usize, t: usize, eta: f64, beta: ArrayView1<f64>) -> Error {
    Error::Model(format!(
        "exp overflow: linear predictor {eta:.6} > {ETA_OVERFLOW_BOUND} at segment {i}, window \
         step {t}; beta = {:?}",
        beta.to_vec()
    ))
}

/// The Poisson log-likelihood
/// `ℓ(θ) = Σ_events x~(i, t_j)ᵀ β − Σ_{i,t} exp(x~(i,t)ᵀ β) Δ` with Δ one
/// step and the integral taken as a left-endpoint step sum (exact for
/// piecewise-constant covariates). Events are binned to their containing
/// step.
pub fn log_likelihood(
    params: &ModelParams,
    panel: &CovariatePanel,
    events: &EventLog,
    w: &WeightMatrix,
    k_trunc: usize,
) -> Result<f64> {
    check_alignment(panel, events)?;
    let field = intensity_window_series(params, panel, w, k_trunc)?;
    let counts = events.count_matrix();
    loglik_from_eta(&field.log_lambda, &counts, params.beta.view())
}

/// Shared likelihood kernel over a precomputed predictor matrix; fixed
/// (t, i) accumulation order.
pub(crate) fn loglik_from_eta(
    eta: &Array2<f64>,
    counts: &Array2<f64>,
    beta: ArrayView1<f64>,
) -> Result<f64> {
    let (t_steps, n) = eta.dim();
    let mut ll = 0.0;
    for t in 0..t_steps {
        for i in 0..n {
            let e = eta[[t, i]];
            if e > ETA_OVERFLOW_BOUND {
                return Err(overflow_error(i, t, e, beta));
            }
            let b = counts[[t, i]];
            if b > 0.0 {
                ll += b * e;
            }
            ll -= e.exp();
        }
    }
    Ok(ll)
}

/// Gradient of the log-likelihood: the β block and the scalar ξ component.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub beta: Array1<f64>,
    pub xi: f64,
}

impl Gradient {
    /// Flatten to (q+2) entries: β components first, ξ last.
    pub fn into_vector(self) -> Array1<f64> {
        let mut v = self.beta.to_vec();
        v.push(self.xi);
        Array1::from_vec(v)
    }
}

/// Analytic gradient of [`log_likelihood`] by backpropagation through
/// time.
///
/// Forward pass: a rolling buffer carries `a_k(t) = W^k c(t-k)` with
/// `c(s) = X(s) β`, giving `h(t) = Σ_k ξ^k a_k(t)` and
/// `∂h(t)/∂ξ = Σ_k k ξ^{k-1} a_k(t)` in one sweep. Backward pass: the
/// adjoint of the truncated model is
/// `∂ℓ/∂h(s) = Σ_{k=0..K} ξ^k (Wᵀ)^k ∂ℓ/∂o(s+k)` — the usual
/// back-propagated recursion with contributions capped at lag K, matching
/// the truncation — from which `∂ℓ/∂β = Σ_s X(s)ᵀ ∂ℓ/∂h(s)`. The output
/// adjoint is `∂ℓ/∂o(t) = b(t) − λ(t)`.
pub fn gradient_bptt(
    params: &ModelParams,
    panel: &CovariatePanel,
    events: &EventLog,
    w: &WeightMatrix,
    k_trunc: usize,
) -> Result<Gradient> {
    check_alignment(panel, events)?;
    if panel.burn_in() < k_trunc {
        return Err(Error::Panel(format!(
            "insufficient history: truncation K={k_trunc} needs burn-in >= K, panel has {}",
            panel.burn_in()
        )));
    }
    let n = panel.n_segments();
    let window = panel.window_steps();
    let counts = events.count_matrix();

    // Forward sweep: per-step residuals d(t) = b(t) - λ(t) and the ξ part.
    let mut residuals: Vec<Array1<f64>> = Vec::with_capacity(window);
    let mut grad_xi = 0.0;
    let mut buffer: Vec<Option<Array1<f64>>> = vec![None; k_trunc + 1];
    for p in 0..panel.total_steps() {
        for k in (1..=k_trunc).rev() {
            buffer[k] = buffer[k - 1].take().map(|prev| w.apply(prev.view()));
        }
        buffer[0] = Some(design_row_product(
            panel.design_at_panel_step(p),
            params.beta.view(),
        ));

        if p >= panel.burn_in() {
            let t = p - panel.burn_in();
            let mut h = buffer[0].as_ref().unwrap().clone();
            let mut dh_dxi: Array1<f64> = Array1::zeros(n);
            let mut xi_pow = 1.0; // ξ^{k-1} on entry to iteration k
            for (k, slot) in buffer.iter().enumerate().take(k_trunc + 1).skip(1) {
                let a_k = slot
                    .as_ref()
                    .ok_or_else(|| Error::Panel(format!("missing history at window step {t}")))?;
                // d(ξ^k)/dξ = k ξ^{k-1}; at ξ = 0 only k = 1 survives.
                let dcoef = k as f64 * xi_pow;
                xi_pow *= params.xi;
                if xi_pow != 0.0 {
                    h.scaled_add(xi_pow, a_k);
                }
                if dcoef != 0.0 {
                    dh_dxi.scaled_add(dcoef, a_k);
                }
            }
            let mut d = Array1::zeros(n);
            for i in 0..n {
                let e = h[i];
                if e > ETA_OVERFLOW_BOUND {
                    return Err(overflow_error(i, t, e, params.beta.view()));
                }
                d[i] = counts[[t, i]] - e.exp();
                grad_xi += d[i] * dh_dxi[i];
            }
            residuals.push(d);
        }
    }

    // Backward sweep: adjoint g(s) = Σ_{k=0..K} ξ^k (Wᵀ)^k d(s+k), with d
    // zero outside the window. Contributions exist down to s = -K.
    let s_min = -(k_trunc as i64);
    let span = (window as i64 - s_min) as usize;
    let mut adjoints: Vec<Array1<f64>> = vec![Array1::zeros(n); span];
    let mut back: Vec<Option<Array1<f64>>> = vec![None; k_trunc + 1];
    for s in (s_min..window as i64).rev() {
        for k in (1..=k_trunc).rev() {
            back[k] = back[k - 1].take().map(|prev| w.apply_transpose(prev.view()));
        }
        back[0] = if s >= 0 {
            Some(residuals[s as usize].clone())
        } else {
            Some(Array1::zeros(n))
        };

        let mut g = back[0].as_ref().unwrap().clone();
        let mut xi_pow = 1.0;
        for slot in back.iter().take(k_trunc + 1).skip(1) {
            xi_pow *= params.xi;
            if xi_pow != 0.0 {
                if let Some(r_k) = slot {
                    g.scaled_add(xi_pow, r_k);
                }
            }
        }
        adjoints[(s - s_min) as usize] = g;
    }

    // Accumulate ∂ℓ/∂β = Σ_s X(s)ᵀ g(s) in ascending (s, i, c) order.
    let cols = panel.n_columns();
    let mut grad_beta = Array1::zeros(cols);
    for s in s_min..window as i64 {
        let x = panel.design_at(s)?;
        let g = &adjoints[(s - s_min) as usize];
        for i in 0..n {
            let gi = g[i];
            if gi != 0.0 {
                for c in 0..cols {
                    grad_beta[c] += x[[i, c]] * gi;
                }
            }
        }
    }

    Ok(Gradient { beta: grad_beta, xi: grad_xi })
}

/// Integrated intensities Λ_i over a step range for a subnet, with the
/// joint and total Poisson count distributions they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    /// Λ_i per subnet segment, in subnet order.
    pub lambdas: Vec<f64>,
    pub segments: Vec<usize>,
}

impl CountDistribution {
    /// Total-count rate Σ Λ_i: the subnet total is Poisson with this mean.
    pub fn total_lambda(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Joint probability Π_i Poisson(n_i; Λ_i).
    pub fn joint_prob(&self, counts: &[u64]) -> Result<f64> {
        if counts.len() != self.lambdas.len() {
            return Err(Error::Model(format!(
                "{} counts supplied for {} subnet segments",
                counts.len(),
                self.lambdas.len()
            )));
        }
        let mut p = 1.0;
        for (&n, &lam) in counts.iter().zip(&self.lambdas) {
            p *= poisson_pmf(n, lam);
        }
        Ok(p)
    }

    /// Poisson pmf of the subnet total count.
    pub fn total_pmf(&self, n: u64) -> f64 {
        poisson_pmf(n, self.total_lambda())
    }
}

pub fn poisson_pmf(n: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut log_fact = 0.0;
    for k in 1..=n {
        log_fact += (k as f64).ln();
    }
    (n as f64 * lambda.ln() - lambda - log_fact).exp()
}

/// Integrate the intensity field over `[t0, t1)` on a subnet.
pub fn event_count_distribution(
    field: &IntensityField,
    subnet: &[usize],
    t0: i64,
    t1: i64,
) -> Result<CountDistribution> {
    if t1 <= t0 {
        return Err(Error::Model(format!("empty step range [{t0}, {t1})")));
    }
    let n = field.n_segments();
    for &i in subnet {
        if i >= n {
            return Err(Error::Model(format!("subnet segment {i} outside 0..{n}")));
        }
    }
    let mut lambdas = vec![0.0; subnet.len()];
    for step in t0..t1 {
        let row = field
            .row_of(step)
            .ok_or_else(|| Error::Model(format!("step {step} outside the intensity window")))?;
        for (slot, &i) in lambdas.iter_mut().zip(subnet) {
            *slot += field.log_lambda[[row, i]].exp();
        }
    }
    Ok(CountDistribution { lambdas, segments: subnet.to_vec() })
}

/// Probability of observing exactly `counts` on `subnet` over `[t0, t1)`.
pub fn event_probability(
    field: &IntensityField,
    subnet: &[usize],
    t0: i64,
    t1: i64,
    counts: &[u64],
) -> Result<f64> {
    event_count_distribution(field, subnet, t0, t1)?.joint_prob(counts)
}

/// Intensities for future steps from fitted parameters: identical
/// machinery to [`intensity_window_series`], applied to a panel whose
/// burn-in rows carry the trailing history.
pub fn predict_intensity(
    params: &ModelParams,
    future_panel: &CovariatePanel,
    w: &WeightMatrix,
    k_trunc: usize,
) -> Result<IntensityField> {
    intensity_window_series(params, future_panel, w, k_trunc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, build_weights, NeighborConfig, Segment};
    use ndarray::{array, Array3, Axis};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn chain_net(n: usize, cfg: &NeighborConfig) -> crate::network::LinearNetwork {
        let segs = (0..n)
            .map(|i| Segment::new(i, [i as f64, 0.0], [i as f64 + 1.0, 0.0]))
            .collect();
        build_network(segs, cfg).unwrap()
    }

    fn random_panel(
        rng: &mut ChaCha12Rng,
        t_total: usize,
        n: usize,
        q: usize,
        burn_in: usize,
    ) -> CovariatePanel {
        let raw = Array3::from_shape_fn((t_total, n, q), |_| rng.random_range(-1.0..1.0));
        let names = (1..=q).map(|i| format!("x{i}")).collect();
        CovariatePanel::from_covariates(raw, burn_in, names).unwrap()
    }

    fn random_events(
        rng: &mut ChaCha12Rng,
        n: usize,
        window: usize,
        count: usize,
    ) -> EventLog {
        let events = (0..count)
            .map(|_| Event {
                segment: rng.random_range(0..n),
                time: rng.random_range(0.0..window as f64),
            })
            .collect();
        EventLog::new(events, n, window).unwrap()
    }

    #[test]
    fn series_with_xi_zero_is_plain_log_linear() {
        let cfg = NeighborConfig::default();
        let net = chain_net(4, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let panel = random_panel(&mut rng, 10, 4, 2, 3);
        let beta = array![-1.0, 0.5, -0.25];
        let params = ModelParams::new(0.0, beta.clone()).unwrap();
        let eta = log_intensity_series(&params, &panel, &w, 3, 2).unwrap();
        let expected = design_row_product(panel.design_at(2).unwrap(), beta.view());
        assert_eq!(eta, expected);
    }

    #[test]
    fn series_with_zero_weights_ignores_history_for_any_k() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let panel = random_panel(&mut rng, 10, 4, 2, 5);
        let w = WeightMatrix::zeros(4);
        let beta = array![-0.5, 1.0, 0.3];
        let expected = design_row_product(panel.design_at(1).unwrap(), beta.view());
        for k in [0usize, 1, 3, 5] {
            let params = ModelParams::new(0.8, beta.clone()).unwrap();
            let eta = log_intensity_series(&params, &panel, &w, k, 1).unwrap();
            assert_eq!(eta, expected, "K = {k}");
        }
    }

    #[test]
    fn series_matches_hand_computed_truncation_on_chain() {
        // Independent evaluation: the k-th term per segment via explicit
        // walk enumeration, as in the graphical/ancestor computation.
        let cfg = NeighborConfig::default();
        let net = chain_net(3, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let panel = random_panel(&mut rng, 8, 3, 2, 2);
        let beta = array![0.2, -0.7, 0.4];
        let params = ModelParams::new(0.5, beta.clone()).unwrap();
        let t = 4usize;
        let k_trunc = 2usize;
        let eta = log_intensity_series(&params, &panel, &w, k_trunc, t).unwrap();
        for i in 0..3 {
            let mut expected = 0.0;
            for k in 0..=k_trunc {
                let x_past = panel.design_at(t as i64 - k as i64).unwrap();
                let c_past = design_row_product(x_past, beta.view());
                let mut term = 0.0;
                for j in 0..3 {
                    term += crate::network::enumerate_walks(&w, j, i, k).unwrap() * c_past[j];
                }
                expected += params.xi.powi(k as i32) * term;
            }
            assert!((eta[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_base_step_is_current_drive() {
        let cfg = NeighborConfig::default();
        let net = chain_net(3, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let panel = random_panel(&mut rng, 6, 3, 1, 2);
        let beta = array![0.1, -0.4];
        let params = ModelParams::new(0.6, beta.clone()).unwrap();
        let field =
            log_intensity_recurrence(&params, &panel, &w, 0, 0, Array1::zeros(3)).unwrap();
        let expected = design_row_product(panel.design_at(0).unwrap(), beta.view());
        assert_eq!(field.log_lambda.row(0), expected.view());
    }

    #[test]
    fn recurrence_restarted_k_steps_back_equals_series() {
        let cfg = NeighborConfig::default();
        let net = chain_net(5, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let k_trunc = 4usize;
        let panel = random_panel(&mut rng, 16, 5, 2, k_trunc);
        let params = ModelParams::new(0.7, array![-0.3, 0.8, -0.5]).unwrap();
        for t in 0..panel.window_steps() {
            let series = log_intensity_series(&params, &panel, &w, k_trunc, t).unwrap();
            let rec = log_intensity_recurrence(
                &params,
                &panel,
                &w,
                t as i64 - k_trunc as i64,
                t as i64,
                Array1::zeros(5),
            )
            .unwrap();
            let last = rec.log_lambda.row(rec.n_steps() - 1);
            for i in 0..5 {
                assert!(
                    (series[i] - last[i]).abs() <= 1e-12,
                    "t={t} i={i}: {} vs {}",
                    series[i],
                    last[i]
                );
            }
        }
    }

    #[test]
    fn recurrence_with_xi_zero_forgets_any_initial_state() {
        let cfg = NeighborConfig::default();
        let net = chain_net(3, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let panel = random_panel(&mut rng, 6, 3, 1, 1);
        let beta = array![0.2, 0.9];
        let params = ModelParams::new(0.0, beta.clone()).unwrap();
        let h_init = array![100.0, -50.0, 7.0];
        let field = log_intensity_recurrence(&params, &panel, &w, 0, 3, h_init).unwrap();
        for t in 0..=3 {
            let expected = design_row_product(panel.design_at(t as i64).unwrap(), beta.view());
            for i in 0..3 {
                assert!((field.log_lambda[[t, i]] - expected[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn likelihood_with_no_events_is_negative_total_mass() {
        let cfg = NeighborConfig::default();
        let net = chain_net(3, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let panel = random_panel(&mut rng, 9, 3, 1, 2);
        let params = ModelParams::new(0.4, array![-2.0, 0.1]).unwrap();
        let events = EventLog::new(vec![], 3, panel.window_steps()).unwrap();
        let ll = log_likelihood(&params, &panel, &events, &w, 2).unwrap();
        let field = intensity_window_series(&params, &panel, &w, 2).unwrap();
        let total: f64 = field.lambda().sum();
        assert!((ll + total).abs() < 1e-10);
    }

    #[test]
    fn likelihood_reduces_to_textbook_poisson_on_one_segment() {
        // One segment, constant unit covariates, ξ = 0: ℓ(β0) = n β0 − T e^{β0}.
        let net = build_network(
            vec![Segment::new(0, [0.0, 0.0], [1.0, 0.0])],
            &NeighborConfig::default(),
        )
        .unwrap();
        let w = build_weights(&net, &NeighborConfig::default());
        let t_steps = 12usize;
        let raw = Array3::zeros((t_steps, 1, 0));
        let panel = CovariatePanel::from_covariates(raw, 0, vec![]).unwrap();
        let n_events = 5usize;
        let events = EventLog::new(
            (0..n_events)
                .map(|j| Event { segment: 0, time: j as f64 + 0.25 })
                .collect(),
            1,
            t_steps,
        )
        .unwrap();
        let rate = n_events as f64 / t_steps as f64;
        let params = ModelParams::new(0.0, array![rate.ln()]).unwrap();
        let ll = log_likelihood(&params, &panel, &events, &w, 0).unwrap();
        let expected = n_events as f64 * rate.ln() - t_steps as f64 * rate;
        assert!((ll - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_at_xi_zero_is_poisson_glm_score() {
        let cfg = NeighborConfig::default();
        let net = chain_net(4, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let panel = random_panel(&mut rng, 12, 4, 2, 3);
        let events = random_events(&mut rng, 4, panel.window_steps(), 14);
        let params = ModelParams::new(0.0, array![-0.8, 0.4, -0.2]).unwrap();
        let grad = gradient_bptt(&params, &panel, &events, &w, 3).unwrap();

        // Standard score: Σ_events x − Σ_{i,t} x exp(xᵀβ).
        let counts = events.count_matrix();
        let mut expected: Array1<f64> = Array1::zeros(3);
        for t in 0..panel.window_steps() {
            let x = panel.design_at(t as i64).unwrap();
            let eta = design_row_product(x, params.beta.view());
            for i in 0..4 {
                let d = counts[[t, i]] - eta[i].exp();
                for c in 0..3 {
                    expected[c] += x[[i, c]] * d;
                }
            }
        }
        for c in 0..3 {
            assert!((grad.beta[c] - expected[c]).abs() < 1e-10);
        }
        assert!(grad.xi.is_finite());
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let cfg = NeighborConfig::default();
        let net = chain_net(6, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(18);
        let k_trunc = 3usize;
        let panel = random_panel(&mut rng, 20 + k_trunc, 6, 2, k_trunc);
        let events = random_events(&mut rng, 6, panel.window_steps(), 25);
        let params = ModelParams::new(0.45, array![-0.6, 0.5, -0.3]).unwrap();
        let grad = gradient_bptt(&params, &panel, &events, &w, k_trunc).unwrap();

        let h = 1e-5;
        let ll_at = |xi: f64, beta: Array1<f64>| {
            let p = ModelParams::new(xi, beta).unwrap();
            log_likelihood(&p, &panel, &events, &w, k_trunc).unwrap()
        };
        for c in 0..3 {
            let mut up = params.beta.clone();
            let mut dn = params.beta.clone();
            up[c] += h;
            dn[c] -= h;
            let fd = (ll_at(params.xi, up) - ll_at(params.xi, dn)) / (2.0 * h);
            let denom = grad.beta[c].abs().max(fd.abs()).max(1e-6);
            assert!(
                ((grad.beta[c] - fd) / denom).abs() < 1e-6,
                "beta[{c}]: analytic {} vs fd {fd}",
                grad.beta[c]
            );
        }
        let fd_xi = (ll_at(params.xi + h, params.beta.clone())
            - ll_at(params.xi - h, params.beta.clone()))
            / (2.0 * h);
        let denom = grad.xi.abs().max(fd_xi.abs()).max(1e-6);
        assert!(((grad.xi - fd_xi) / denom).abs() < 1e-6, "xi: {} vs {fd_xi}", grad.xi);
    }

    #[test]
    fn xi_gradient_closed_form_on_single_segment() {
        // One segment, W = [[1]], constant covariate: h = c Σ_k ξ^k, so
        // dℓ/dξ = (n − T e^h) · c · Σ_k k ξ^{k-1}.
        let cfg = NeighborConfig::default();
        let net =
            build_network(vec![Segment::new(0, [0.0, 0.0], [1.0, 0.0])], &cfg).unwrap();
        let w = build_weights(&net, &cfg); // 1x1 identity row
        let k_trunc = 4usize;
        let t_steps = 10usize;
        let mut raw = Array3::zeros((t_steps + k_trunc, 1, 1));
        raw.index_axis_mut(Axis(2), 0).fill(1.5);
        let panel = CovariatePanel::from_covariates(raw, k_trunc, vec!["x1".into()]).unwrap();
        let beta = array![-1.0, 0.5];
        let xi = 0.6f64;
        let params = ModelParams::new(xi, beta.clone()).unwrap();
        let events = EventLog::new(
            vec![Event { segment: 0, time: 1.5 }, Event { segment: 0, time: 7.1 }],
            1,
            t_steps,
        )
        .unwrap();
        let grad = gradient_bptt(&params, &panel, &events, &w, k_trunc).unwrap();

        let c = beta[0] + beta[1] * 1.5;
        let geo: f64 = (0..=k_trunc).map(|k| xi.powi(k as i32)).sum();
        let dgeo: f64 = (1..=k_trunc).map(|k| k as f64 * xi.powi(k as i32 - 1)).sum();
        let h_val = c * geo;
        let expected = (2.0 - t_steps as f64 * h_val.exp()) * c * dgeo;
        assert!((grad.xi - expected).abs() < 1e-9, "{} vs {expected}", grad.xi);
    }

    #[test]
    fn likelihood_is_midpoint_concave_in_beta() {
        let cfg = NeighborConfig::default();
        let net = chain_net(5, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(20);
        let panel = random_panel(&mut rng, 15, 5, 2, 3);
        let events = random_events(&mut rng, 5, panel.window_steps(), 20);
        let params_at = |beta: Array1<f64>| ModelParams::new(0.5, beta).unwrap();
        for _ in 0..10 {
            let b1 = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
            let b2 = Array1::from_shape_fn(3, |_| rng.random_range(-1.0..1.0));
            let mid = (&b1 + &b2) / 2.0;
            let l1 = log_likelihood(&params_at(b1), &panel, &events, &w, 3).unwrap();
            let l2 = log_likelihood(&params_at(b2), &panel, &events, &w, 3).unwrap();
            let lm = log_likelihood(&params_at(mid), &panel, &events, &w, 3).unwrap();
            assert!(lm >= (l1 + l2) / 2.0 - 1e-10);
        }
    }

    #[test]
    fn overflow_names_the_offending_cell() {
        let cfg = NeighborConfig::default();
        let net = chain_net(2, &cfg);
        let w = build_weights(&net, &cfg);
        let raw = Array3::from_elem((4, 2, 1), 10.0);
        let panel = CovariatePanel::from_covariates(raw, 0, vec!["x1".into()]).unwrap();
        let events = EventLog::new(vec![], 2, 4).unwrap();
        let params = ModelParams::new(0.0, array![0.0, 10.0]).unwrap();
        let err = log_likelihood(&params, &panel, &events, &w, 0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("overflow") && msg.contains("segment"), "{msg}");
    }

    #[test]
    fn event_probability_closed_forms() {
        let field = IntensityField {
            log_lambda: array![[0.1f64.ln(), 0.1f64.ln()]],
            first_step: 0,
        };
        let p00 = event_probability(&field, &[0, 1], 0, 1, &[0, 0]).unwrap();
        assert!((p00 - (-0.2f64).exp()).abs() < 1e-12);
        let p10 = event_probability(&field, &[0, 1], 0, 1, &[1, 0]).unwrap();
        assert!((p10 - 0.1 * (-0.2f64).exp()).abs() < 1e-12);
        let dist = event_count_distribution(&field, &[0, 1], 0, 1).unwrap();
        assert!((dist.total_lambda() - 0.2).abs() < 1e-12);
        assert!((dist.total_pmf(0) - (-0.2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn joint_count_probabilities_normalize() {
        let field = IntensityField {
            log_lambda: array![[0.4f64.ln(), 0.9f64.ln()]],
            first_step: 0,
        };
        let dist = event_count_distribution(&field, &[0, 1], 0, 1).unwrap();
        let n_max = 30u64;
        let mut total = 0.0;
        for n0 in 0..=n_max {
            for n1 in 0..=n_max {
                total += dist.joint_prob(&[n0, n1]).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "sum = {total}");
    }

    #[test]
    fn prediction_smoothness_contracts_with_large_decay() {
        // Step-change covariate on a single self-connected segment. The two
        // parameter sets are calibrated to the same stationary response, so
        // the one-step movement after the jump isolates the decay factor.
        let net = build_network(
            vec![Segment::new(0, [0.0, 0.0], [1.0, 0.0])],
            &NeighborConfig::default(),
        )
        .unwrap();
        let cfg = NeighborConfig::default();
        let w = build_weights(&net, &cfg);
        let k_trunc = 7usize;
        let t_total = 20usize;
        let jump_panel_step = 12usize;
        let mut raw = Array3::zeros((t_total, 1, 1));
        for p in jump_panel_step..t_total {
            raw[[p, 0, 0]] = 1.0;
        }
        let panel = CovariatePanel::from_covariates(raw, k_trunc, vec!["x1".into()]).unwrap();

        let geo = |xi: f64| (0..=k_trunc).map(|k| xi.powi(k as i32)).sum::<f64>();
        let base = array![-1.0, 0.8];
        let small = ModelParams::new(0.1, base.clone() * (geo(0.1).recip())).unwrap();
        let large = ModelParams::new(0.9, base.clone() * (geo(0.9).recip())).unwrap();

        let jump_t = (jump_panel_step - k_trunc) as usize;
        let change = |params: &ModelParams| {
            let field = predict_intensity(params, &panel, &w, k_trunc).unwrap();
            (field.log_lambda[[jump_t, 0]] - field.log_lambda[[jump_t - 1, 0]]).abs()
        };
        assert!(change(&large) < change(&small));
    }

    #[test]
    fn prediction_with_true_params_reproduces_truth() {
        let cfg = NeighborConfig::default();
        let net = chain_net(4, &cfg);
        let w = build_weights(&net, &cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        let panel = random_panel(&mut rng, 12, 4, 2, 3);
        let params = ModelParams::new(0.3, array![-1.2, 0.6, -0.4]).unwrap();
        let truth = intensity_window_series(&params, &panel, &w, 3).unwrap();
        let predicted = predict_intensity(&params, &panel, &w, 3).unwrap();
        assert_eq!(truth, predicted);
    }

    #[test]
    fn event_binning_clamps_window_endpoint() {
        let log = EventLog::new(vec![Event { segment: 0, time: 5.0 }], 2, 5).unwrap();
        assert_eq!(log.step_of(&log.events()[0]), 4);
        assert!(EventLog::new(vec![Event { segment: 0, time: 5.1 }], 2, 5).is_err());
        assert!(EventLog::new(vec![Event { segment: 9, time: 1.0 }], 2, 5).is_err());
    }
}
