//! Linear-network graphs: segments, adjacency, neighbor generations, and
//! sparse contribution-weight matrices.
//!
//! A linear network is a collection of one-dimensional segments (power
//! lines, roads) on which a point process lives. Two segments are adjacent
//! when they share an endpoint, up to a snap tolerance. The weight matrix
//! holds per-row contributions `w[i][i']` from neighbor `i'` to segment
//! `i`; it is the kernel of the network-convolution operator and of all
//! sparse matrix-power work.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One segment of a linear network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    /// First endpoint, (x, y).
    pub a: [f64; 2],
    /// Second endpoint, (x, y).
    pub b: [f64; 2],
    pub length: f64,
}

impl Segment {
    pub fn new(id: usize, a: [f64; 2], b: [f64; 2]) -> Self {
        let length = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        Segment { id, a, b, length }
    }

    pub fn midpoint(&self) -> [f64; 2] {
        [(self.a[0] + self.b[0]) / 2.0, (self.a[1] + self.b[1]) / 2.0]
    }
}

/// Weighting scheme for neighbor contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// `w[i][i'] = 1/|Ω_i|`: every neighbor contributes equally.
    Equal,
    /// `w[i][i'] = exp(-d_ii') / |Ω_i|` with `d_ii'` the midpoint distance.
    ExponentialDistance,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(WeightScheme::Equal),
            "exponential-distance" | "exponential" => Ok(WeightScheme::ExponentialDistance),
            other => Err(Error::Config(format!("unknown weight scheme `{other}`"))),
        }
    }
}

/// Configuration of the neighbor relation Ω and the weight scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborConfig {
    /// Two endpoints within this distance are treated as the same junction.
    pub snap_tolerance: f64,
    /// Whether Ω_i contains segment `i` itself. The default is `true`: with
    /// self-weights the identity-matrix special case (a segment that only
    /// depends on its own history) is reachable by configuration.
    pub include_self: bool,
    pub scheme: WeightScheme,
    /// Rescale exponential-distance rows to sum to one. Off by default;
    /// the kernel formula itself is not normalized.
    pub renormalize: bool,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        NeighborConfig {
            snap_tolerance: 1e-6,
            include_self: true,
            scheme: WeightScheme::Equal,
            renormalize: false,
        }
    }
}

/// An immutable linear network: segments plus a symmetric adjacency
/// structure over segment indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearNetwork {
    segments: Vec<Segment>,
    /// Sorted neighbor indices per segment; excludes the segment itself.
    adjacency: Vec<Vec<usize>>,
}

impl LinearNetwork {
    /// Number of segments N.
    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, i: usize) -> &Segment {
        &self.segments[i]
    }

    /// Immediate neighbors of segment `i` (sorted, never contains `i`).
    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// The configured neighbor set Ω_i: adjacency plus `i` itself when
    /// `include_self` is set. Sorted.
    pub fn neighbor_set(&self, i: usize, cfg: &NeighborConfig) -> Vec<usize> {
        let mut out = self.adjacency[i].clone();
        if cfg.include_self {
            let pos = out.partition_point(|&j| j < i);
            out.insert(pos, i);
        }
        out
    }

    /// Build a network from explicit adjacency pairs instead of geometric
    /// snapping. Pairs are symmetrized; self-pairs and out-of-range ids are
    /// rejected.
    pub fn with_explicit_adjacency(segments: Vec<Segment>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = segments.len();
        if n == 0 {
            return Err(Error::Network("network must contain at least one segment".into()));
        }
        check_segments(&segments)?;
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::Network(format!(
                    "adjacency pair ({i}, {j}) references a segment outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::Network(format!("adjacency pair ({i}, {j}) is a self-loop")));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        Ok(LinearNetwork { segments, adjacency })
    }
}

fn check_segments(segments: &[Segment]) -> Result<()> {
    for (k, s) in segments.iter().enumerate() {
        if s.id != k {
            return Err(Error::Network(format!(
                "segment ids must be dense 0..N-1; position {k} has id {}",
                s.id
            )));
        }
        let coords = [s.a[0], s.a[1], s.b[0], s.b[1]];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Network(format!("segment {k} has non-finite coordinates")));
        }
    }
    Ok(())
}

/// Build the network graph from segment geometry: two segments are adjacent
/// iff they share an endpoint within `cfg.snap_tolerance`. Isolated segments
/// are allowed. Segments whose both endpoints coincide with another
/// segment's (in either orientation) are rejected as duplicates.
pub fn build_network(segments: Vec<Segment>, cfg: &NeighborConfig) -> Result<LinearNetwork> {
    let n = segments.len();
    if n == 0 {
        return Err(Error::Network("network must contain at least one segment".into()));
    }
    if cfg.snap_tolerance < 0.0 {
        return Err(Error::Network("snap_tolerance must be nonnegative".into()));
    }
    check_segments(&segments)?;

    let tol = cfg.snap_tolerance;
    // Hash grid over endpoints: cell size = tolerance, search the 3x3
    // neighborhood so near-cell-boundary matches are not missed.
    let cell = tol.max(1e-12);
    let key = |p: [f64; 2]| -> (i64, i64) { ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64) };
    let mut grid: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    let endpoint = |seg: &Segment, which: usize| if which == 0 { seg.a } else { seg.b };

    let close = |p: [f64; 2], q: [f64; 2]| -> bool {
        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
        d2 <= tol * tol
    };

    let mut touching: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n]; // (other, my endpoint, their endpoint)
    for (i, seg) in segments.iter().enumerate() {
        for which in 0..2 {
            let p = endpoint(seg, which);
            let (kx, ky) = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(bucket) = grid.get(&(kx + dx, ky + dy)) {
                        for &(j, jw) in bucket {
                            if j != i && close(p, endpoint(&segments[j], jw)) {
                                touching[i].push((j, which, jw));
                                touching[j].push((i, jw, which));
                            }
                        }
                    }
                }
            }
            grid.entry((kx, ky)).or_default().push((i, which));
        }
    }

    // Duplicate geometry: both endpoints matched against the same partner.
    for (i, touches) in touching.iter().enumerate() {
        let mut matched: HashMap<usize, [bool; 2]> = HashMap::new();
        for &(j, my, _) in touches {
            matched.entry(j).or_default()[my] = true;
        }
        for (&j, flags) in &matched {
            if flags[0] && flags[1] && j > i {
                // Confirm the full geometric overlap in either orientation.
                let (si, sj) = (&segments[i], &segments[j]);
                let same = (close(si.a, sj.a) && close(si.b, sj.b))
                    || (close(si.a, sj.b) && close(si.b, sj.a));
                if same {
                    return Err(Error::Network(format!(
                        "segments {i} and {j} have duplicate geometry (both endpoints coincide within tolerance)"
                    )));
                }
            }
        }
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, touches) in touching.iter().enumerate() {
        for &(j, _, _) in touches {
            adjacency[i].push(j);
        }
        adjacency[i].sort_unstable();
        adjacency[i].dedup();
    }

    Ok(LinearNetwork { segments, adjacency })
}

/// Sparse N x N contribution-weight matrix, stored by row. `rows[i]` holds
/// `(i', w[i][i'])` pairs sorted by `i'`; everything absent is structurally
/// zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    n: usize,
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Entry lookup; zero off the stored pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(col, _)| col == j)
            .map_or(0.0, |&(_, w)| w)
    }

    pub fn identity(n: usize) -> Self {
        WeightMatrix {
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
            n,
        }
    }

    /// All-zero matrix (every row structurally empty).
    pub fn zeros(n: usize) -> Self {
        WeightMatrix { rows: vec![Vec::new(); n], n }
    }

    /// User-supplied weights, validated for structural sparsity only:
    /// nonzeros must lie inside the configured neighbor sets.
    pub fn user_supplied(
        net: &LinearNetwork,
        cfg: &NeighborConfig,
        rows: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self> {
        let n = net.n_segments();
        if rows.len() != n {
            return Err(Error::Network(format!(
                "user weights have {} rows, network has {n} segments",
                rows.len()
            )));
        }
        let mut out = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            let omega = net.neighbor_set(i, cfg);
            for &(j, w) in &row {
                if !w.is_finite() {
                    return Err(Error::Network(format!("weight w[{i}][{j}] is not finite")));
                }
                if w != 0.0 && omega.binary_search(&j).is_err() {
                    return Err(Error::Network(format!(
                        "weight w[{i}][{j}] is nonzero but {j} is not in the neighbor set of {i}"
                    )));
                }
            }
            row.sort_unstable_by_key(|&(j, _)| j);
            row.retain(|&(_, w)| w != 0.0);
            out.push(row);
        }
        Ok(WeightMatrix { rows: out, n })
    }

    /// y = W f, i.e. `y[i] = Σ_{i'} w[i][i'] f[i']`.
    pub fn apply(&self, f: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(f.len(), self.n, "dimension mismatch");
        let mut out = Array1::zeros(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, w) in row {
                acc += w * f[j];
            }
            out[i] = acc;
        }
        out
    }

    /// y = Wᵀ f.
    pub fn apply_transpose(&self, f: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(f.len(), self.n, "dimension mismatch");
        let mut out = Array1::zeros(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let fi = f[i];
            if fi != 0.0 {
                for &(j, w) in row {
                    out[j] += w * fi;
                }
            }
        }
        out
    }

    /// Y = W M for a dense N x p matrix M.
    pub fn apply_matrix(&self, m: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.n, "dimension mismatch");
        let p = m.ncols();
        let mut out = Array2::zeros((self.n, p));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                for c in 0..p {
                    out[[i, c]] += w * m[[j, c]];
                }
            }
        }
        out
    }

    /// Total number of stored entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Build contribution weights under the configured scheme.
///
/// Equal scheme: `w[i][i'] = 1/|Ω_i|`. Exponential scheme:
/// `w[i][i'] = exp(-d_ii')/|Ω_i|` with midpoint distances, optionally
/// renormalized to a unit row sum. An isolated segment with
/// `include_self = false` yields a structurally zero row (logged).
pub fn build_weights(net: &LinearNetwork, cfg: &NeighborConfig) -> WeightMatrix {
    let n = net.n_segments();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let omega = net.neighbor_set(i, cfg);
        if omega.is_empty() {
            log::warn!("segment {i} is isolated with include_self=false: weight row is zero");
            rows.push(Vec::new());
            continue;
        }
        let size = omega.len() as f64;
        let mut row: Vec<(usize, f64)> = match cfg.scheme {
            WeightScheme::Equal => omega.iter().map(|&j| (j, 1.0 / size)).collect(),
            WeightScheme::ExponentialDistance => {
                let mi = net.segment(i).midpoint();
                omega
                    .iter()
                    .map(|&j| {
                        let mj = net.segment(j).midpoint();
                        let d = ((mi[0] - mj[0]).powi(2) + (mi[1] - mj[1]).powi(2)).sqrt();
                        (j, (-d).exp() / size)
                    })
                    .collect()
            }
        };
        if cfg.renormalize {
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if sum > 0.0 {
                for entry in &mut row {
                    entry.1 /= sum;
                }
            }
        }
        rows.push(row);
    }
    WeightMatrix { rows, n }
}

/// The m-th generation neighbor set Ω_i^(m): Ω^(0) = {i}, and Ω^(m) is the
/// union of configured neighbor sets over Ω^(m-1). Sorted.
pub fn generation_neighbors(
    net: &LinearNetwork,
    i: usize,
    m: usize,
    cfg: &NeighborConfig,
) -> Vec<usize> {
    assert!(i < net.n_segments(), "segment index out of range");
    let mut current = vec![i];
    for _ in 0..m {
        let mut next: Vec<usize> = Vec::new();
        for &v in &current {
            next.extend_from_slice(&net.neighbor_set(v, cfg));
        }
        next.sort_unstable();
        next.dedup();
        current = next;
    }
    current
}

/// Walk multiplicities after `m` steps: for each reachable `j`, the number
/// of distinct m-step walks from `i` to `j` under the configured neighbor
/// relation. The key set equals `generation_neighbors(net, i, m, cfg)`.
pub fn generation_walk_counts(
    net: &LinearNetwork,
    i: usize,
    m: usize,
    cfg: &NeighborConfig,
) -> Vec<(usize, u64)> {
    assert!(i < net.n_segments(), "segment index out of range");
    let n = net.n_segments();
    let mut counts = vec![0u64; n];
    counts[i] = 1;
    for _ in 0..m {
        let mut next = vec![0u64; n];
        for (v, &c) in counts.iter().enumerate() {
            if c > 0 {
                for j in net.neighbor_set(v, cfg) {
                    next[j] += c;
                }
            }
        }
        counts = next;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect()
}

/// Brute-force walk oracle: the sum over all k-step walks from `j` to `i`
/// of the product of step weights, by explicit enumeration. Equals
/// `(W^k)[i][j]`. Exponential in `k`; refuses large instances.
pub fn enumerate_walks(w: &WeightMatrix, j: usize, i: usize, k: usize) -> Result<f64> {
    if k > 6 || w.n() > 64 {
        return Err(Error::Network(format!(
            "walk enumeration limited to k <= 6 and N <= 64 (got k={k}, N={})",
            w.n()
        )));
    }
    if k == 0 {
        return Ok(if i == j { 1.0 } else { 0.0 });
    }
    // Walk j = v_0 -> v_1 -> ... -> v_k = i; step p contributes w[v_p][v_{p-1}].
    fn recurse(w: &WeightMatrix, from: usize, target: usize, steps_left: usize, acc: f64) -> f64 {
        if steps_left == 0 {
            return if from == target { acc } else { 0.0 };
        }
        let mut total = 0.0;
        for (next, row) in w.rows().iter().enumerate() {
            for &(col, weight) in row {
                if col == from {
                    total += recurse(w, next, target, steps_left - 1, acc * weight);
                }
            }
        }
        total
    }
    Ok(recurse(w, j, i, k, 1.0))
}

/// W^k M by k successive sparse-times-dense products; never materializes a
/// dense power of W.
pub fn matrix_power_apply(w: &WeightMatrix, k: usize, m: ArrayView2<f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    for _ in 0..k {
        out = w.apply_matrix(out.view());
    }
    out
}
