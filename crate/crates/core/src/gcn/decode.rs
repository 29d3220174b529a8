//! Turning an edge heatmap into capacity-feasible routes.

use ndarray::Array2;

use super::data::inference_example;
use super::model::GcnModel;
use super::GcnError;
use crate::instance::Instance;
use crate::milp::Routes;

/// One partially decoded plan. Indices are merged-graph (0 = depot); the
/// accumulated routes are in original instance indexing.
#[derive(Debug, Clone)]
struct Partial {
    visited: u64,
    current: usize,
    load: u32,
    /// Sum of log edge probabilities along every chosen leg.
    score: f64,
    /// True travel cost accumulated so far.
    cost: f64,
    finished: Vec<Vec<usize>>,
    open: Vec<usize>,
}

/// Level-synchronous beam construction over a heatmap: each step extends
/// every kept plan by one unvisited customer (the depot return is fused into
/// the extension when nothing fits the remaining capacity), keeps the
/// `beam_width` best by cumulative log probability (ties: lower cost, then
/// generation order), and finally returns the cheapest completed plan.
/// With `beam_width = 1` this is the greedy walk that always follows the
/// most probable feasible edge.
pub fn decode_routes(heatmap: &Array2<f64>, instance: &Instance, beam_width: usize) -> Routes {
    let n = instance.n_customers();
    if n == 0 {
        return Routes(Vec::new());
    }
    debug_assert!(n <= 63, "bitmask decoding supports at most 63 customers");
    debug_assert_eq!(heatmap.dim(), (n + 1, n + 1));
    let width = beam_width.max(1);
    let capacity = instance.capacity();
    let end = instance.depot_end();
    let costs = instance.costs();

    let mut beam = vec![Partial {
        visited: 0,
        current: 0,
        load: 0,
        score: 0.0,
        cost: 0.0,
        finished: Vec::new(),
        open: vec![0],
    }];
    for _ in 0..n {
        let mut expanded: Vec<Partial> = Vec::new();
        for state in &beam {
            let unvisited =
                || (1..=n).filter(|&c| state.visited & (1 << (c - 1)) == 0);
            let mut any_fits = false;
            for c in unvisited() {
                if state.load + instance.demand(c) > capacity {
                    continue;
                }
                any_fits = true;
                let mut next = state.clone();
                next.score += heatmap[[state.current, c]].ln();
                next.cost += costs.at(state.current, c);
                next.open.push(c);
                next.load += instance.demand(c);
                next.current = c;
                next.visited |= 1 << (c - 1);
                expanded.push(next);
            }
            if !any_fits {
                // Nothing fits: return to the depot and restart at each
                // candidate, scoring both legs of the combined move.
                for c in unvisited() {
                    let mut next = state.clone();
                    next.score +=
                        heatmap[[state.current, 0]].ln() + heatmap[[0, c]].ln();
                    next.cost += costs.at(state.current, end) + costs.at(0, c);
                    next.open.push(end);
                    next.finished.push(std::mem::replace(&mut next.open, vec![0, c]));
                    next.load = instance.demand(c);
                    next.current = c;
                    next.visited |= 1 << (c - 1);
                    expanded.push(next);
                }
            }
        }
        expanded.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.cost.total_cmp(&b.cost)));
        expanded.truncate(width);
        beam = expanded;
    }

    let mut complete: Vec<Partial> = beam
        .into_iter()
        .map(|mut state| {
            state.score += heatmap[[state.current, 0]].ln();
            state.cost += costs.at(state.current, end);
            state.open.push(end);
            state.finished.push(std::mem::take(&mut state.open));
            state
        })
        .collect();
    complete.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(b.score.total_cmp(&a.score)));
    Routes(complete.swap_remove(0).finished)
}

/// Run the model on an instance and decode the resulting heatmap.
pub fn predict_routes(
    model: &GcnModel,
    instance: &Instance,
    beam_width: usize,
    knn: Option<usize>,
) -> Result<Routes, GcnError> {
    let example = inference_example(instance, knn);
    let forward = model.forward_example(&example)?;
    Ok(decode_routes(&forward.probabilities, instance, beam_width))
}
