//! The network-convolution operator and the truncated log-intensity
//! series: n-fold smoothing, the convolutional covariate matrix, the
//! geometric truncation bound, and the equivalence with the recurrence.

use cnhpp::convolution::{conv_covariate_matrix, nc_nfold, CovariatePanel};
use cnhpp::model::{log_intensity_recurrence, log_intensity_series, ModelParams};
use cnhpp::network::{build_weights, NeighborConfig};
use cnhpp::simulate::{gen_covariates, gen_network, Topology};
use ndarray::{array, Array1};

fn main() {
    let n = 8;
    let cfg = NeighborConfig::default();
    let net = gen_network(Topology::Chain, n, 1).unwrap();
    let w = build_weights(&net, &cfg);

    // Repeated convolution smooths a spike across the chain.
    let mut spike = Array1::zeros(n);
    spike[3] = 1.0;
    println!("n-fold network convolution of a unit spike at segment 3:");
    for fold in 0..4 {
        let smoothed = nc_nfold(&w, spike.view(), fold);
        let cells: Vec<String> = smoothed.iter().map(|v| format!("{v:.3}")).collect();
        println!("  NC^({fold}) = [{}]", cells.join(", "));
    }

    // The convolutional covariate matrix mixes each segment's current
    // covariates with decayed, neighbor-averaged history.
    let k = 5;
    let panel = gen_covariates(&net, 30 + k, k, 2, 0.5, 1.0, 7).unwrap();
    let xi = 0.6;
    let t = 10;
    let conv = conv_covariate_matrix(&w, &panel, xi, k, t, false).unwrap();
    println!("\nconvolutional design at step {t} (xi = {xi}, K = {k}), segment 0:");
    println!("  current row  = {:?}", panel.design_at(t as i64).unwrap().row(0).to_vec());
    println!("  convolved    = {:?}", conv.values.row(0).to_vec());

    // Truncation error is geometric: increasing K changes nothing beyond
    // xi^{K+1}/(1-xi) times the covariate bound.
    println!("\ntruncation tail at segment 0, column 1:");
    let reference = conv_covariate_matrix(&w, &panel, xi, k, t, false).unwrap();
    for k_short in 0..k {
        let shorter = conv_covariate_matrix(&w, &panel, xi, k_short, t, false).unwrap();
        let gap = (reference.values[[0, 1]] - shorter.values[[0, 1]]).abs();
        println!("  K = {k_short}: |gap to K = {k}| = {gap:.3e}");
    }

    // The same numbers come out of the recurrence when it starts from a
    // zero hidden state exactly K steps earlier.
    let params = ModelParams::new(xi, array![-1.0, 0.6, -0.4]).unwrap();
    let series = log_intensity_series(&params, &panel, &w, k, t).unwrap();
    let recurrence = log_intensity_recurrence(
        &params,
        &panel,
        &w,
        t as i64 - k as i64,
        t as i64,
        Array1::zeros(n),
    )
    .unwrap();
    let last = recurrence.log_lambda.row(recurrence.n_steps() - 1);
    let max_gap = series
        .iter()
        .zip(last.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("\nseries vs recurrence at step {t}: max |gap| = {max_gap:.2e}");
}
