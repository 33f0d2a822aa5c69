//! Linear-network basics: build a network from segment geometry, inspect
//! neighbor sets and generations, assemble contribution weights, and check
//! a sparse matrix power against brute-force walk enumeration.

use cnhpp::network::{
    build_network, build_weights, enumerate_walks, generation_neighbors, generation_walk_counts,
    matrix_power_apply, NeighborConfig, Segment,
};
use ndarray::Array2;

fn main() {
    // A five-segment Y shape: a chain 0-1-2 with segments 3 and 4 branching
    // off the junction between 1 and 2.
    let segments = vec![
        Segment::new(0, [0.0, 0.0], [1.0, 0.0]),
        Segment::new(1, [1.0, 0.0], [2.0, 0.0]),
        Segment::new(2, [2.0, 0.0], [3.0, 0.0]),
        Segment::new(3, [2.0, 0.0], [2.0, 1.0]),
        Segment::new(4, [2.0, 0.0], [2.0, -1.0]),
    ];
    let cfg = NeighborConfig::default();
    let net = build_network(segments, &cfg).unwrap();

    println!("network with {} segments", net.n_segments());
    for i in 0..net.n_segments() {
        println!("  adjacency({i}) = {:?}", net.adjacency(i));
    }

    println!("\nneighbor generations of segment 0 (self included):");
    for m in 0..=3 {
        let omega = generation_neighbors(&net, 0, m, &cfg);
        let counts = generation_walk_counts(&net, 0, m, &cfg);
        println!("  generation {m}: {omega:?}, walk multiplicities {counts:?}");
    }

    let w = build_weights(&net, &cfg);
    println!("\nequal contribution weights (rows sum to one):");
    for i in 0..net.n_segments() {
        println!("  w[{i}] = {:?}", w.row(i));
    }

    // (W^3)[i][j] sums the weight products over every 3-step walk j -> i;
    // the brute-force enumeration must agree entry by entry.
    let k = 3;
    let power = matrix_power_apply(&w, k, Array2::eye(net.n_segments()).view());
    let mut max_gap = 0.0f64;
    for i in 0..net.n_segments() {
        for j in 0..net.n_segments() {
            let walks = enumerate_walks(&w, j, i, k).unwrap();
            max_gap = max_gap.max((power[[i, j]] - walks).abs());
        }
    }
    println!("\nmax |(W^{k})[i][j] - walk enumeration| = {max_gap:.2e}");
}
