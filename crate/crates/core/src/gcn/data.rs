//! Feature extraction, supervision targets, and dataset assembly.

use ndarray::Array2;

use super::graph::{build_adjacency, normalized_adjacency, normalized_costs};
use super::GcnError;
use crate::instance::{GeneratorConfig, Instance};
use crate::milp::Routes;
use crate::oracle::{exact_cvrp, EXACT_MAX_CUSTOMERS};

/// Per-node input width: two normalized coordinates, relative demand, and a
/// depot indicator.
pub const FEATURE_DIM: usize = 4;

/// One predictor input: everything `forward` and the loss need, in merged
/// single-depot indexing (row 0 = depot, rows `1..=n` = customers).
#[derive(Debug, Clone)]
pub struct Example {
    /// `N×4` node features.
    pub features: Array2<f64>,
    /// `N×N` degree-normalized adjacency.
    pub adjacency: Array2<f64>,
    /// `N×N` symmetric costs scaled so the largest entry is 1.
    pub edge_costs: Array2<f64>,
    /// `N×N` binary matrix marking undirected edges of the reference plan;
    /// all-zero for inference-only examples.
    pub target: Array2<f64>,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// `N×4` matrix of rows `(lat, lon, demand/capacity, depot flag)` with both
/// coordinates min-max scaled to `[0, 1]` over the instance (a degenerate
/// axis maps to 0.5). The depot is row 0; its demand entry is 0 and its flag
/// is 1.
pub fn node_features(instance: &Instance) -> Array2<f64> {
    let nodes = instance.n_customers() + 1;
    let (lat_lo, lat_hi) = min_max((0..nodes).map(|i| instance.point(i).lat));
    let (lon_lo, lon_hi) = min_max((0..nodes).map(|i| instance.point(i).lon));
    let scale = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    };
    let capacity = f64::from(instance.capacity());
    Array2::from_shape_fn((nodes, FEATURE_DIM), |(i, f)| {
        let point = instance.point(i);
        match f {
            0 => scale(point.lat, lat_lo, lat_hi),
            1 => scale(point.lon, lon_lo, lon_hi),
            2 => f64::from(instance.demand(i)) / capacity,
            _ => f64::from(i == 0),
        }
    })
}

/// Binary `N×N` matrix with a 1 wherever two places are consecutive on some
/// route; both depot copies collapse to node 0, making the matrix symmetric
/// with a zero diagonal.
pub fn route_targets(instance: &Instance, routes: &Routes) -> Array2<f64> {
    let nodes = instance.n_customers() + 1;
    let merged = |node: usize| if node >= instance.depot_end() { 0 } else { node };
    let mut target = Array2::zeros((nodes, nodes));
    for route in &routes.0 {
        for leg in route.windows(2) {
            let (a, b) = (merged(leg[0]), merged(leg[1]));
            if a != b {
                target[[a, b]] = 1.0;
                target[[b, a]] = 1.0;
            }
        }
    }
    target
}

/// Assemble the supervised input for one solved instance over the complete
/// merged graph.
pub fn make_training_example(instance: &Instance, optimal: &Routes) -> Example {
    Example {
        target: route_targets(instance, optimal),
        ..inference_example(instance, None)
    }
}

/// Input for an unsolved instance (all-zero target), optionally sparsified
/// to each node's `knn` nearest neighbors.
pub fn inference_example(instance: &Instance, knn: Option<usize>) -> Example {
    let nodes = instance.n_customers() + 1;
    Example {
        features: node_features(instance),
        adjacency: normalized_adjacency(&build_adjacency(instance, knn)),
        edge_costs: normalized_costs(instance),
        target: Array2::zeros((nodes, nodes)),
    }
}

/// Generate `count` instances from `config` and label each with the exact
/// optimum. Seeds run `seed_base, seed_base+1, …`; draws whose grouped
/// demands form more customers than the exact solver's cap are skipped (a
/// vanishing-probability event under default settings), so consecutive
/// seeds may not be contiguous in the output.
pub fn oracle_labeled_dataset(
    count: usize,
    config: &GeneratorConfig,
    seed_base: u64,
) -> Result<Vec<(Instance, Routes, Example)>, GcnError> {
    let mut out = Vec::with_capacity(count);
    let mut seed = seed_base;
    while out.len() < count {
        let instance = Instance::generate(config, seed)?;
        seed = seed.wrapping_add(1);
        if instance.n_customers() > EXACT_MAX_CUSTOMERS {
            continue;
        }
        let labeled = exact_cvrp(&instance)?;
        let example = make_training_example(&instance, &labeled.routes);
        out.push((instance, labeled.routes, example));
    }
    Ok(out)
}
