//! Branch-and-bound search over the arc-flow model's LP relaxation.
//!
//! Nodes are ordered best-bound-first, with a depth-first plunge on the
//! child that matches the rounding of the branched variable so good
//! incumbents appear early under tight wall-clock limits. A
//! nearest-neighbor construction seeds the incumbent, guaranteeing the
//! time-limit path always has a solution to return (unless vehicle-count
//! side constraints reject it). The search is single-threaded and fully
//! deterministic for fixed inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::instance::CostMatrix;
use crate::milp::{Arc, MilpModel, ModelError, Relaxation, Routes, INTEGRALITY_TOL};
use crate::simplex::{
    solve_lp, LpOptions, LpStatus, Sense, SimplexError, FEASIBILITY_TOL,
};

/// Bounds within this absolute distance of the incumbent prune their
/// subtree; also the tolerance under which the gap collapses to exactly 0.
pub const PRUNE_TOL: f64 = 1e-9;

/// Knobs for one search. `time_limit` is wall-clock seconds and may be
/// `f64::INFINITY`; `gap_target_percent = 0` disables early gap stops.
#[derive(Debug, Clone)]
pub struct SearchParams {
    pub time_limit: f64,
    pub node_limit: Option<u64>,
    pub gap_target_percent: f64,
    pub verbose: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            time_limit: 30.0,
            node_limit: None,
            gap_target_percent: 0.0,
            verbose: false,
        }
    }
}

/// One statistics row for a finished search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_explored: u64,
    pub simplex_iterations: u64,
    pub run_time: f64,
    pub objective: f64,
    pub best_bound: f64,
    pub gap_percent: f64,
}

/// Why the search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Optimal,
    TimeLimit,
    NodeLimit,
    GapTarget,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let label = match self {
            Termination::Optimal => "optimal",
            Termination::TimeLimit => "time limit",
            Termination::NodeLimit => "node limit",
            Termination::GapTarget => "gap target",
        };
        f.write_str(label)
    }
}

/// A finished search: the incumbent plan, its statistics row, and the
/// reason the search stopped.
#[derive(Debug, Clone)]
pub struct Solved {
    pub routes: Routes,
    pub stats: SolveStats,
    pub termination: Termination,
}

/// Per-node history of the search, for bound-monotonicity checks.
#[derive(Debug, Clone, Default)]
pub struct SearchTrace {
    /// Objective of the root LP relaxation, if the root solved in time.
    pub root_objective: Option<f64>,
    /// Global lower bound after each explored node (non-decreasing).
    pub bound_history: Vec<f64>,
    /// Every incumbent objective in discovery order (non-increasing).
    pub incumbents: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("model has no feasible integer solution")]
    Infeasible,
    #[error("search stopped with no incumbent; best bound {best_bound}")]
    NoIncumbent { best_bound: f64 },
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("every arc variable is already integral")]
    AlreadyIntegral,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] SimplexError),
}

/// Relative optimality gap in percent: `100·(incumbent − bound)/max(|incumbent|, 1e-12)`,
/// exactly `0.0` whenever the pair agrees within `1e-9`, and clamped at zero
/// against rounding noise.
pub fn compute_gap(incumbent: f64, best_bound: f64) -> f64 {
    if incumbent - best_bound <= PRUNE_TOL {
        return 0.0;
    }
    (100.0 * (incumbent - best_bound) / incumbent.abs().max(1e-12)).max(0.0)
}

/// Greedy capacity-respecting construction: from the depot, repeatedly move
/// to the cheapest unvisited customer whose demand still fits (ties to the
/// lower index), returning to the depot whenever nothing fits. Requires
/// every demand to fit an empty vehicle.
pub fn nearest_neighbor_routes(costs: &CostMatrix, demands: &[u32], capacity: u32) -> Routes {
    let end = costs.dim() - 1;
    let mut unvisited: Vec<usize> = (1..end).collect();
    debug_assert!(unvisited.iter().all(|&c| demands[c] <= capacity));
    let mut routes = Vec::new();
    while !unvisited.is_empty() {
        let mut route = vec![0];
        let mut here = 0;
        let mut load = 0u32;
        loop {
            let mut pick: Option<(usize, f64)> = None;
            for (slot, &c) in unvisited.iter().enumerate() {
                if load + demands[c] > capacity {
                    continue;
                }
                let cost = costs.at(here, c);
                if pick.is_none_or(|(_, best)| cost < best) {
                    pick = Some((slot, cost));
                }
            }
            let Some((slot, _)) = pick else { break };
            let c = unvisited.remove(slot);
            route.push(c);
            load += demands[c];
            here = c;
        }
        route.push(end);
        routes.push(route);
    }
    Routes(routes)
}

/// The arc variable to branch on: fractional part closest to one half,
/// ties broken by the lexicographically smallest `(from, to)`. Errors when
/// every arc variable is integral within tolerance.
pub fn branch_select(model: &MilpModel, values: &[f64]) -> Result<Arc, SolveError> {
    if values.len() != model.num_vars() {
        return Err(ModelError::WrongLength {
            got: values.len(),
            expected: model.num_vars(),
        }
        .into());
    }
    let mut best: Option<(f64, Arc)> = None;
    for (var, &arc) in model.arcs().iter().enumerate() {
        let v = values[var];
        let frac = v - v.floor();
        if frac.min(1.0 - frac) <= INTEGRALITY_TOL {
            continue;
        }
        let score = (frac - 0.5).abs();
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, arc));
        }
    }
    best.map(|(_, arc)| arc).ok_or(SolveError::AlreadyIntegral)
}

/// `solve` plus the per-node bound/incumbent history.
pub fn solve_with_trace(
    model: &MilpModel,
    params: &SearchParams,
) -> Result<(Solved, SearchTrace), SolveError> {
    Search::new(model, params)?.run()
}

/// Branch-and-bound to a proven optimum or a resource limit. On success the
/// routes pass feasibility checks and `stats` holds the full statistics row;
/// stopping with no incumbent (possible only under vehicle-count side
/// constraints) is an error carrying the best bound.
pub fn solve(model: &MilpModel, params: &SearchParams) -> Result<Solved, SolveError> {
    solve_with_trace(model, params).map(|(solved, _)| solved)
}

struct Node {
    bound: f64,
    fixings: Vec<(usize, f64, f64)>,
}

/// Heap entry ordered so the smallest (bound, insertion sequence) pops
/// first from `BinaryHeap`'s max-heap.
struct Ranked {
    node: Node,
    seq: u64,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .node
            .bound
            .total_cmp(&self.node.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    params: &'a SearchParams,
    start: Instant,
    deadline: Option<Instant>,
    heap: BinaryHeap<Ranked>,
    /// Depth-first plunge: at most the rounding-matched child of the node
    /// explored last.
    stack: Vec<Node>,
    seq: u64,
    incumbent: Option<(f64, Routes)>,
    nodes_explored: u64,
    simplex_iterations: u64,
    trace: SearchTrace,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, params: &'a SearchParams) -> Result<Self, SolveError> {
        if !(params.time_limit > 0.0) {
            return Err(SolveError::InvalidParams(format!(
                "time_limit must be positive, got {}",
                params.time_limit
            )));
        }
        if !(params.gap_target_percent >= 0.0) {
            return Err(SolveError::InvalidParams(format!(
                "gap_target_percent must be non-negative, got {}",
                params.gap_target_percent
            )));
        }
        let start = Instant::now();
        let deadline = params
            .time_limit
            .is_finite()
            .then(|| start + Duration::from_secs_f64(params.time_limit));
        let mut search = Self {
            model,
            params,
            start,
            deadline,
            heap: BinaryHeap::new(),
            stack: Vec::new(),
            seq: 0,
            incumbent: None,
            nodes_explored: 0,
            simplex_iterations: 0,
            trace: SearchTrace::default(),
        };
        search.install_greedy_incumbent()?;
        search.stack.push(Node {
            bound: f64::NEG_INFINITY,
            fixings: Vec::new(),
        });
        Ok(search)
    }

    /// Seed the incumbent with the nearest-neighbor plan when it satisfies
    /// every model row (it always satisfies the base rows; only vehicle
    /// side constraints can reject it).
    fn install_greedy_incumbent(&mut self) -> Result<(), SolveError> {
        let greedy =
            nearest_neighbor_routes(self.model.costs(), self.model.demands(), self.model.capacity());
        let values = self.model.routes_to_assignment(&greedy)?;
        let satisfied = self.model.constraints().iter().all(|c| {
            let activity: f64 = c.coeffs.iter().map(|&(v, a)| a * values[v]).sum();
            match c.sense {
                Sense::Le => activity <= c.rhs + FEASIBILITY_TOL,
                Sense::Ge => activity >= c.rhs - FEASIBILITY_TOL,
                Sense::Eq => (activity - c.rhs).abs() <= FEASIBILITY_TOL,
            }
        });
        if satisfied {
            self.record_incumbent(greedy.cost(self.model.costs()), greedy);
        }
        Ok(())
    }

    fn record_incumbent(&mut self, cost: f64, routes: Routes) {
        if self
            .incumbent
            .as_ref()
            .is_none_or(|(current, _)| cost < *current)
        {
            if self.params.verbose {
                eprintln!("[search] incumbent {cost:.7}");
            }
            self.incumbent = Some((cost, routes));
            self.trace.incumbents.push(cost);
        }
    }

    fn incumbent_cost(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::INFINITY, |(cost, _)| *cost)
    }

    /// Tightest bound still open; `+inf` once the tree is exhausted.
    fn open_bound(&self) -> f64 {
        let stack = self.stack.iter().map(|n| n.bound);
        let heap = self.heap.iter().map(|r| r.node.bound);
        stack.chain(heap).fold(f64::INFINITY, f64::min)
    }

    fn run(mut self) -> Result<(Solved, SearchTrace), SolveError> {
        let termination = loop {
            if self.stack.is_empty() && self.heap.is_empty() {
                break Termination::Optimal;
            }
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    break Termination::TimeLimit;
                }
            }
            if let Some(limit) = self.params.node_limit {
                if self.nodes_explored >= limit {
                    break Termination::NodeLimit;
                }
            }
            if self.params.gap_target_percent > 0.0 && self.incumbent.is_some() {
                let gap = compute_gap(self.incumbent_cost(), self.open_bound());
                if gap <= self.params.gap_target_percent {
                    break Termination::GapTarget;
                }
            }

            let node = match self.stack.pop() {
                Some(node) => node,
                None => self.heap.pop().expect("checked non-empty").node,
            };
            if node.bound >= self.incumbent_cost() - PRUNE_TOL {
                continue;
            }
            if !self.explore(node)? {
                break Termination::TimeLimit;
            }
        };

        let run_time = self.start.elapsed().as_secs_f64();
        let incumbent_cost = self.incumbent_cost();
        let best_bound = match termination {
            Termination::Optimal => incumbent_cost,
            _ => self.open_bound().min(incumbent_cost),
        };
        let Some((objective, routes)) = self.incumbent else {
            return match termination {
                Termination::Optimal => Err(SolveError::Infeasible),
                _ => Err(SolveError::NoIncumbent { best_bound }),
            };
        };
        let stats = SolveStats {
            nodes_explored: self.nodes_explored,
            simplex_iterations: self.simplex_iterations,
            run_time,
            objective,
            best_bound,
            gap_percent: compute_gap(objective, best_bound),
        };
        Ok((
            Solved {
                routes,
                stats,
                termination,
            },
            self.trace,
        ))
    }

    /// Solve one node's LP and either prune, admit a new incumbent, or
    /// branch. Returns `false` when the LP was cut off by the deadline (the
    /// per-LP iteration cap is far beyond any relaxation this model size
    /// produces, so a cutoff always means time).
    fn explore(&mut self, node: Node) -> Result<bool, SolveError> {
        let problem = match self.model.relax(&node.fixings) {
            Relaxation::Problem(problem) => problem,
            Relaxation::Infeasible => return Ok(true),
        };
        let options = LpOptions {
            deadline: self.deadline,
            ..LpOptions::default()
        };
        let lp = solve_lp(&problem, &options)?;
        self.simplex_iterations += lp.iterations;
        match lp.status {
            LpStatus::IterationLimit => return Ok(false),
            LpStatus::Infeasible => {
                self.trace.bound_history.push(self.open_bound().min(self.incumbent_cost()));
                return Ok(true);
            }
            LpStatus::Optimal => {}
        }
        self.nodes_explored += 1;
        // A child LP can dip below its parent's bound by rounding error;
        // the parent bound stays valid for the subtree.
        let bound = lp.objective.max(node.bound);
        if self.trace.root_objective.is_none() {
            self.trace.root_objective = Some(lp.objective);
        }
        if self.params.verbose && self.nodes_explored % 100 == 0 {
            eprintln!(
                "[search] node {} bound {:.7} incumbent {:.7}",
                self.nodes_explored,
                bound,
                self.incumbent_cost()
            );
        }

        if bound < self.incumbent_cost() - PRUNE_TOL {
            match branch_select(self.model, &lp.values) {
                Ok(arc) => {
                    let var = self
                        .model
                        .arc_var(arc.from, arc.to)
                        .expect("branch_select returns model arcs");
                    let value = lp.values[var];
                    let mut fix_one = node.fixings.clone();
                    fix_one.push((var, 1.0, 1.0));
                    let mut fix_zero = node.fixings;
                    fix_zero.push((var, 0.0, 0.0));
                    let (plunge, queued) = if value >= 0.5 {
                        (fix_one, fix_zero)
                    } else {
                        (fix_zero, fix_one)
                    };
                    self.heap.push(Ranked {
                        node: Node {
                            bound,
                            fixings: queued,
                        },
                        seq: self.seq,
                    });
                    self.seq += 1;
                    self.stack.push(Node {
                        bound,
                        fixings: plunge,
                    });
                }
                Err(SolveError::AlreadyIntegral) => {
                    let routes = self.model.assignment_to_routes(&lp.values)?;
                    let cost = routes.cost(self.model.costs());
                    self.record_incumbent(cost, routes);
                }
                Err(other) => return Err(other),
            }
        }
        self.trace
            .bound_history
            .push(self.open_bound().min(self.incumbent_cost()));
        Ok(true)
    }
}

/// On-disk shape of one solved instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub objective: f64,
    pub routes: Routes,
    pub loads: Vec<u32>,
    pub stats: SolveStats,
}

impl SolutionFile {
    pub fn new(solved: &Solved, demands: &[u32]) -> Self {
        Self {
            objective: solved.stats.objective,
            routes: solved.routes.clone(),
            loads: solved.routes.loads(demands),
            stats: solved.stats,
        }
    }
}
