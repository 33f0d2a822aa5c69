//! The network-convolution operator, its n-fold composition, and the
//! convolutional covariate matrix.
//!
//! `nc_apply` aggregates a per-segment function over each segment's
//! neighbor set with the contribution weights; composing it `n` times and
//! scaling by a geometric decay gives the historical terms of the model's
//! log-intensity series. `conv_covariate_matrix` assembles the truncated
//! series for the covariate design at one time step,
//! `X~(t) = Σ_{k=0..K} ξ^k W^k X(t-k)`, and `conv_design` does the same for
//! a whole window with a rolling buffer so each step costs K sparse
//! products instead of K(K+1)/2.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::network::WeightMatrix;

/// Per-segment, per-step covariate design rows, intercept included.
///
/// `values` has shape `(total_steps, n_segments, q + 1)` with the first
/// covariate column identically 1. The first `burn_in` steps precede the
/// likelihood window: panel step `p` corresponds to window time
/// `t = p - burn_in`, and the window covers `t = 0 .. window_steps()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariatePanel {
    values: Array3<f64>,
    burn_in: usize,
    covariate_names: Vec<String>,
}

impl CovariatePanel {
    /// Wrap a full design array (intercept column already present).
    pub fn from_values(
        values: Array3<f64>,
        burn_in: usize,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let (t_total, _n, cols) = values.dim();
        if cols == 0 {
            return Err(Error::Panel("panel needs at least the intercept column".into()));
        }
        if covariate_names.len() != cols - 1 {
            return Err(Error::Panel(format!(
                "{} covariate names supplied for {} covariate columns",
                covariate_names.len(),
                cols - 1
            )));
        }
        if burn_in >= t_total {
            return Err(Error::Panel(format!(
                "burn_in {burn_in} leaves no likelihood window in a panel of {t_total} steps"
            )));
        }
        for v in values.iter() {
            if !v.is_finite() {
                return Err(Error::Panel("panel contains a non-finite value".into()));
            }
        }
        for x in values.index_axis(Axis(2), 0).iter() {
            if *x != 1.0 {
                return Err(Error::Panel("intercept column must be exactly 1.0 everywhere".into()));
            }
        }
        Ok(CovariatePanel { values, burn_in, covariate_names })
    }

    /// Build from raw covariates of shape `(total_steps, n_segments, q)`;
    /// the intercept column is prepended.
    pub fn from_covariates(
        raw: Array3<f64>,
        burn_in: usize,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let (t_total, n, q) = raw.dim();
        let mut values = Array3::zeros((t_total, n, q + 1));
        values.index_axis_mut(Axis(2), 0).fill(1.0);
        for c in 0..q {
            values
                .index_axis_mut(Axis(2), c + 1)
                .assign(&raw.index_axis(Axis(2), c));
        }
        CovariatePanel::from_values(values, burn_in, covariate_names)
    }

    pub fn n_segments(&self) -> usize {
        self.values.dim().1
    }

    /// Number of covariates q, excluding the intercept.
    pub fn n_covariates(&self) -> usize {
        self.values.dim().2 - 1
    }

    /// Design width q + 1.
    pub fn n_columns(&self) -> usize {
        self.values.dim().2
    }

    pub fn total_steps(&self) -> usize {
        self.values.dim().0
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// Steps in the likelihood window.
    pub fn window_steps(&self) -> usize {
        self.total_steps() - self.burn_in
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Design matrix X at a raw panel step.
    pub fn design_at_panel_step(&self, p: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), p)
    }

    /// Design matrix X(t) at a window time (t = 0 is the first window step;
    /// negative t reaches into the burn-in region).
    pub fn design_at(&self, t: i64) -> Result<ArrayView2<'_, f64>> {
        let p = t + self.burn_in as i64;
        if p < 0 || p >= self.total_steps() as i64 {
            return Err(Error::Panel(format!(
                "window step {t} (panel step {p}) is outside the panel"
            )));
        }
        Ok(self.values.index_axis(Axis(0), p as usize))
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    /// Same data re-labeled with a different burn-in split.
    pub fn with_burn_in(&self, burn_in: usize) -> Result<Self> {
        CovariatePanel::from_values(self.values.clone(), burn_in, self.covariate_names.clone())
    }
}

/// The convolutional covariate matrix X~(t) for one requested step.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvCovariates {
    /// N x (q+1) transformed design.
    pub values: Array2<f64>,
    /// Number of historical terms actually backed by panel data
    /// (equals K unless zero-padding filled in missing steps).
    pub k_used: usize,
}

/// One application of the network-convolution operator:
/// `out[i] = Σ_{i' in Ω_i} w[i][i'] f[i']`.
pub fn nc_apply(w: &WeightMatrix, f: ArrayView1<f64>) -> Array1<f64> {
    w.apply(f)
}

/// n-fold network convolution; `n = 0` returns `f` unchanged.
pub fn nc_nfold(w: &WeightMatrix, f: ArrayView1<f64>, n: usize) -> Array1<f64> {
    let mut out = f.to_owned();
    for _ in 0..n {
        out = w.apply(out.view());
    }
    out
}

fn missing_history_error(t: usize, burn_in: usize, k: usize) -> Error {
    let have = burn_in + t;
    Error::Panel(format!(
        "insufficient history at window step {t}: truncation K={k} needs panel steps back to \
         t-{k}, but only {have} earlier steps exist (missing {}); increase burn-in or set \
         pad_history",
        k - have
    ))
}

/// X~(t) = Σ_{k=0..K} ξ^k W^k X(t-k), by k incremental sparse products per
/// term. `t` is a window step. Missing history is an error unless
/// `pad_history` substitutes zeros for the absent terms.
pub fn conv_covariate_matrix(
    w: &WeightMatrix,
    panel: &CovariatePanel,
    xi: f64,
    k_trunc: usize,
    t: usize,
    pad_history: bool,
) -> Result<ConvCovariates> {
    if t >= panel.window_steps() {
        return Err(Error::Panel(format!(
            "window step {t} is outside the likelihood window of {} steps",
            panel.window_steps()
        )));
    }
    let available = panel.burn_in() + t;
    if available < k_trunc && !pad_history {
        return Err(missing_history_error(t, panel.burn_in(), k_trunc));
    }
    let k_used = k_trunc.min(available);
    let mut acc = panel.design_at(t as i64)?.to_owned();
    let mut xi_pow = 1.0;
    for k in 1..=k_used {
        xi_pow *= xi;
        let term = crate::network::matrix_power_apply(w, k, panel.design_at(t as i64 - k as i64)?);
        acc.scaled_add(xi_pow, &term);
    }
    Ok(ConvCovariates { values: acc, k_used })
}

/// Convolutional design for every window step at once, shape
/// `(window_steps, N, q+1)`. A rolling buffer carries `W^k X(p-k)` across
/// steps, so the whole window costs K sparse products per step. Term
/// arithmetic matches [`conv_covariate_matrix`] exactly.
pub fn conv_design(
    w: &WeightMatrix,
    panel: &CovariatePanel,
    xi: f64,
    k_trunc: usize,
    pad_history: bool,
) -> Result<Array3<f64>> {
    if panel.burn_in() < k_trunc && !pad_history {
        return Err(missing_history_error(0, panel.burn_in(), k_trunc));
    }
    let n = panel.n_segments();
    let cols = panel.n_columns();
    let window = panel.window_steps();
    let mut out = Array3::zeros((window, n, cols));

    // buffer[k] = W^k X(p-k) for the current panel step p; None while the
    // panel does not reach back far enough.
    let mut buffer: Vec<Option<Array2<f64>>> = vec![None; k_trunc + 1];
    for p in 0..panel.total_steps() {
        for k in (1..=k_trunc).rev() {
            buffer[k] = buffer[k - 1].take().map(|prev| w.apply_matrix(prev.view()));
        }
        buffer[0] = Some(panel.design_at_panel_step(p).to_owned());

        if p >= panel.burn_in() {
            let t = p - panel.burn_in();
            let mut acc = buffer[0].as_ref().unwrap().clone();
            let mut xi_pow = 1.0;
            for term in buffer.iter().take(k_trunc + 1).skip(1) {
                xi_pow *= xi;
                if let Some(term) = term {
                    acc.scaled_add(xi_pow, term);
                }
            }
            out.index_axis_mut(Axis(0), t).assign(&acc);
        }
    }
    Ok(out)
}
