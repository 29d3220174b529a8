//! Merged-depot graph geometry and degree normalization.
//!
//! The predictor sees one node per place: node 0 is the depot and nodes
//! `1..=n` are the customers, collapsing the arc-flow model's duplicated
//! depot. All matrices here are indexed in that merged scheme.

use ndarray::Array2;

use crate::instance::Instance;

/// Symmetric travel costs over the merged graph: entry `(i, j)` is the
/// distance between places `i` and `j`, zero on the diagonal.
pub fn pairwise_costs(instance: &Instance) -> Array2<f64> {
    let n = instance.n_customers() + 1;
    Array2::from_shape_fn((n, n), |(i, j)| instance.costs().at(i, j))
}

/// `pairwise_costs` rescaled so the largest off-diagonal entry is 1; an
/// all-coincident instance stays all-zero.
pub fn normalized_costs(instance: &Instance) -> Array2<f64> {
    let mut costs = pairwise_costs(instance);
    let max = costs.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        costs.mapv_inplace(|c| c / max);
    }
    costs
}

/// Complete-graph adjacency: ones off the diagonal, zeros on it.
pub fn complete_graph(nodes: usize) -> Array2<f64> {
    Array2::from_shape_fn((nodes, nodes), |(i, j)| f64::from(i != j))
}

/// Adjacency keeping each node's `k` nearest neighbors by cost (union over
/// both endpoints, so the result stays symmetric). `k ≥ nodes − 1` gives the
/// complete graph back.
pub fn knn_graph(costs: &Array2<f64>, k: usize) -> Array2<f64> {
    let n = costs.nrows();
    let mut adjacency = Array2::zeros((n, n));
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| costs[[i, a]].total_cmp(&costs[[i, b]]).then(a.cmp(&b)));
        for &j in others.iter().take(k) {
            adjacency[[i, j]] = 1.0;
            adjacency[[j, i]] = 1.0;
        }
    }
    adjacency
}

/// Binary adjacency for an instance: complete by default, or k-nearest
/// sparsified when `knn` is set.
pub fn build_adjacency(instance: &Instance, knn: Option<usize>) -> Array2<f64> {
    let nodes = instance.n_customers() + 1;
    match knn {
        None => complete_graph(nodes),
        Some(k) => knn_graph(&pairwise_costs(instance), k),
    }
}

/// Symmetric degree normalization with self-loops:
/// `Â_ij = (A + I)_ij / sqrt(d_i · d_j)` where `d_i = Σ_j (A + I)_ij`.
/// The self-loop keeps every degree ≥ 1, so the division is always defined.
/// For the complete graph on `N` nodes every entry is exactly `1/N`.
pub fn normalized_adjacency(adjacency: &Array2<f64>) -> Array2<f64> {
    let n = adjacency.nrows();
    debug_assert_eq!(adjacency.ncols(), n, "adjacency must be square");
    debug_assert!(
        (0..n).all(|i| adjacency[[i, i]] == 0.0),
        "adjacency must have a zero diagonal"
    );
    debug_assert!(
        (0..n).all(|i| (0..n).all(|j| adjacency[[i, j]] == adjacency[[j, i]])),
        "adjacency must be symmetric"
    );
    let mut with_loops = adjacency.clone();
    for i in 0..n {
        with_loops[[i, i]] = 1.0;
    }
    let degrees: Vec<f64> = (0..n).map(|i| with_loops.row(i).sum()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        with_loops[[i, j]] / (degrees[i] * degrees[j]).sqrt()
    })
}
