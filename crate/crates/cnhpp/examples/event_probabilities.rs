//! Scenario probabilities from an intensity field: per-segment Poisson
//! counts, joint probabilities of specific outcomes on a sub-network, and
//! the distribution of the subnet total.

use cnhpp::model::{event_count_distribution, event_probability, ModelParams};
use cnhpp::model::intensity_window_series;
use cnhpp::network::{build_weights, NeighborConfig};
use cnhpp::simulate::{gen_covariates, gen_network, Topology};
use ndarray::array;

fn main() {
    let n = 12;
    let k = 4;
    let cfg = NeighborConfig::default();
    let net = gen_network(Topology::Chain, n, 3).unwrap();
    let w = build_weights(&net, &cfg);
    let panel = gen_covariates(&net, 20 + k, k, 2, 0.5, 1.0, 3).unwrap();
    let params = ModelParams::new(0.4, array![-2.0, 0.7, -0.5]).unwrap();
    let field = intensity_window_series(&params, &panel, &w, k).unwrap();

    // Integrate a five-segment subnet over a three-step horizon.
    let subnet = [2usize, 3, 4, 5, 6];
    let (t0, t1) = (5i64, 8i64);
    let dist = event_count_distribution(&field, &subnet, t0, t1).unwrap();
    println!("integrated rates over steps [{t0}, {t1}) on subnet {subnet:?}:");
    for (seg, lam) in dist.segments.iter().zip(&dist.lambdas) {
        println!("  segment {seg}: Lambda = {lam:.4}");
    }
    println!("  total: {:.4}", dist.total_lambda());

    let quiet = vec![0u64; subnet.len()];
    println!(
        "\nP(no events anywhere on the subnet)          = {:.4}",
        event_probability(&field, &subnet, t0, t1, &quiet).unwrap()
    );
    let mut one_ignition = quiet.clone();
    one_ignition[2] = 1;
    println!(
        "P(exactly one event, on segment {})           = {:.4}",
        subnet[2],
        event_probability(&field, &subnet, t0, t1, &one_ignition).unwrap()
    );

    println!("\ndistribution of the subnet total count:");
    for count in 0..=4u64 {
        println!("  P(total = {count}) = {:.4}", dist.total_pmf(count));
    }
}
