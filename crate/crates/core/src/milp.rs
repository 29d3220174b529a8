//! Exact arc-flow model of the routing problem.
//!
//! Binary arc variables x[i,j] select travel legs; continuous load variables
//! y[i] carry the seats already picked up when leaving customer i. Load
//! propagation rows (the MTZ scheme) simultaneously enforce the capacity cap
//! and rule out tours that never touch the depot.
//!
//! Admissible arcs exclude anything into the start depot, anything out of
//! the end depot, and the empty start-to-end hop, so every vehicle that
//! leaves the depot serves at least one customer.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::instance::{CostMatrix, Instance};
use crate::simplex::{LpProblem, LpRow, Sense};

/// An arc variable is integral when within this distance of 0 or 1.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("customer {node} demand {demand} exceeds vehicle capacity {capacity}")]
    DemandExceedsCapacity {
        node: usize,
        demand: u32,
        capacity: u32,
    },
    #[error("no value supplied for arc variable x[{},{}]", .0.from, .0.to)]
    MissingVariable(Arc),
    #[error("arc variable x[{},{}] = {value} is not integral", arc.from, arc.to)]
    NonIntegral { arc: Arc, value: f64 },
    #[error("customer {customer} has {count} selected outgoing arcs, expected exactly 1")]
    BadOutDegree { customer: usize, count: usize },
    #[error("customer {0} is visited more than once")]
    VisitedTwice(usize),
    #[error("customers {0:?} are selected in a cycle that never reaches the end depot")]
    Subtour(Vec<usize>),
    #[error("route {index} is malformed: {reason}")]
    BadRoute { index: usize, reason: String },
    #[error("assignment has {got} values but the model has {expected} variables")]
    WrongLength { got: usize, expected: usize },
}

/// Directed travel leg between two node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
}

/// Why a constraint row exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Each customer is left exactly once.
    Degree { customer: usize },
    /// Inflow equals outflow at a customer.
    Flow { customer: usize },
    /// Load propagation along one arc; also kills depot-free cycles.
    Mtz { arc: Arc },
    /// Optional cap or floor on the number of vehicles leaving the depot.
    Fleet,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Optional side constraints on the depot out-degree. The base model leaves
/// the vehicle count free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FleetBounds {
    pub min_vehicles: Option<u32>,
    pub max_vehicles: Option<u32>,
}

/// Depot-to-depot node sequences, one per vehicle. Every route starts at
/// node 0 and ends at the end-depot index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Routes(pub Vec<Vec<usize>>);

impl Routes {
    pub fn route_count(&self) -> usize {
        self.0.len()
    }

    /// Total travel cost, summing consecutive legs of every route.
    pub fn cost(&self, costs: &CostMatrix) -> f64 {
        self.0
            .iter()
            .map(|route| route.windows(2).map(|w| costs.at(w[0], w[1])).sum::<f64>())
            .sum()
    }

    /// Seats picked up per route.
    pub fn loads(&self, demands: &[u32]) -> Vec<u32> {
        self.0
            .iter()
            .map(|route| route.iter().map(|&i| demands[i]).sum())
            .collect()
    }

    /// Orientation- and order-independent form: each route is flipped to the
    /// lexicographically smaller direction (costs are symmetric, so this
    /// preserves cost), then routes are sorted. Used for tie-breaking and
    /// comparing solutions from different engines.
    pub fn canonical(&self) -> Routes {
        let mut routes: Vec<Vec<usize>> = self
            .0
            .iter()
            .map(|route| {
                let inner = &route[1..route.len() - 1];
                let mut reversed: Vec<usize> = inner.to_vec();
                reversed.reverse();
                let pick = if reversed < inner.to_vec() {
                    reversed
                } else {
                    inner.to_vec()
                };
                let mut full = Vec::with_capacity(route.len());
                full.push(route[0]);
                full.extend(pick);
                full.push(route[route.len() - 1]);
                full
            })
            .collect();
        routes.sort();
        Routes(routes)
    }
}

/// Result of tightening variable bounds before a relaxation solve.
#[derive(Debug)]
pub enum Relaxation {
    Problem(LpProblem),
    /// Some fixing crossed its bounds; no LP needs to be solved.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    n_customers: usize,
    capacity: u32,
    demands: Vec<u32>,
    costs: CostMatrix,
    arcs: Vec<Arc>,
    arc_ids: HashMap<Arc, usize>,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    integer: Vec<bool>,
    constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn build(instance: &Instance) -> Result<MilpModel, ModelError> {
        MilpModel::build_with_fleet(instance, FleetBounds::default())
    }

    pub fn build_with_fleet(
        instance: &Instance,
        fleet: FleetBounds,
    ) -> Result<MilpModel, ModelError> {
        for i in instance.customers() {
            if instance.demand(i) > instance.capacity() {
                return Err(ModelError::DemandExceedsCapacity {
                    node: i,
                    demand: instance.demand(i),
                    capacity: instance.capacity(),
                });
            }
        }
        let violations = instance.validate();
        if !violations.is_empty() {
            return Err(ModelError::InvalidInstance(violations.join("; ")));
        }

        let n = instance.n_customers();
        let end = instance.depot_end();
        let capacity = instance.capacity();
        let q = f64::from(capacity);

        // Arc variables in lexicographic (from, to) order.
        let mut arcs = Vec::with_capacity(n * n + n);
        for from in 0..=n {
            for to in 1..=end {
                if to == from || (from == 0 && to == end) {
                    continue;
                }
                arcs.push(Arc { from, to });
            }
        }
        let arc_ids: HashMap<Arc, usize> =
            arcs.iter().enumerate().map(|(v, &a)| (a, v)).collect();
        let num_arcs = arcs.len();
        let num_vars = num_arcs + n;
        let load_var = |customer: usize| num_arcs + customer - 1;

        let mut objective = vec![0.0; num_vars];
        let mut lower = vec![0.0; num_vars];
        let mut upper = vec![1.0; num_vars];
        let mut integer = vec![true; num_vars];
        for (v, arc) in arcs.iter().enumerate() {
            objective[v] = instance.costs().at(arc.from, arc.to);
        }
        for i in instance.customers() {
            let v = load_var(i);
            lower[v] = f64::from(instance.demand(i));
            upper[v] = q;
            integer[v] = false;
        }

        let mut constraints = Vec::new();
        for i in instance.customers() {
            let coeffs: Vec<(usize, f64)> = arcs
                .iter()
                .enumerate()
                .filter(|(_, a)| a.from == i)
                .map(|(v, _)| (v, 1.0))
                .collect();
            constraints.push(Constraint {
                kind: ConstraintKind::Degree { customer: i },
                coeffs,
                sense: Sense::Eq,
                rhs: 1.0,
            });
        }
        for h in instance.customers() {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for (v, arc) in arcs.iter().enumerate() {
                if arc.to == h {
                    coeffs.push((v, 1.0));
                } else if arc.from == h {
                    coeffs.push((v, -1.0));
                }
            }
            constraints.push(Constraint {
                kind: ConstraintKind::Flow { customer: h },
                coeffs,
                sense: Sense::Eq,
                rhs: 0.0,
            });
        }
        // Load propagation: y_j >= y_i + q_j * x_ij - Q * (1 - x_ij) for every
        // arc into a customer, with y_0 fixed at zero (the depot leaves empty,
        // so its term simply drops).
        for (v, arc) in arcs.iter().enumerate() {
            if arc.to == end {
                continue;
            }
            let qj = f64::from(instance.demand(arc.to));
            let mut coeffs = vec![(load_var(arc.to), 1.0)];
            if arc.from != 0 {
                coeffs.push((load_var(arc.from), -1.0));
            }
            coeffs.push((v, -(qj + q)));
            constraints.push(Constraint {
                kind: ConstraintKind::Mtz { arc: *arc },
                coeffs,
                sense: Sense::Ge,
                rhs: -q,
            });
        }
        let depot_out: Vec<(usize, f64)> = arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.from == 0)
            .map(|(v, _)| (v, 1.0))
            .collect();
        if let Some(min) = fleet.min_vehicles {
            constraints.push(Constraint {
                kind: ConstraintKind::Fleet,
                coeffs: depot_out.clone(),
                sense: Sense::Ge,
                rhs: f64::from(min),
            });
        }
        if let Some(max) = fleet.max_vehicles {
            constraints.push(Constraint {
                kind: ConstraintKind::Fleet,
                coeffs: depot_out,
                sense: Sense::Le,
                rhs: f64::from(max),
            });
        }

        Ok(MilpModel {
            n_customers: n,
            capacity,
            demands: instance.demands().to_vec(),
            costs: instance.costs().clone(),
            arcs,
            arc_ids,
            objective,
            lower,
            upper,
            integer,
            constraints,
        })
    }

    pub fn n_customers(&self) -> usize {
        self.n_customers
    }

    pub fn depot_end(&self) -> usize {
        self.n_customers + 1
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Demands aligned with node indices.
    pub fn demands(&self) -> &[u32] {
        &self.demands
    }

    pub fn costs(&self) -> &CostMatrix {
        &self.costs
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn num_arc_vars(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_load_vars(&self) -> usize {
        self.n_customers
    }

    pub fn num_vars(&self) -> usize {
        self.arcs.len() + self.n_customers
    }

    pub fn arc_var(&self, from: usize, to: usize) -> Option<usize> {
        self.arc_ids.get(&Arc { from, to }).copied()
    }

    /// The arc behind a variable index, or None for load variables.
    pub fn var_arc(&self, var: usize) -> Option<Arc> {
        self.arcs.get(var).copied()
    }

    pub fn load_var(&self, customer: usize) -> usize {
        debug_assert!(customer >= 1 && customer <= self.n_customers);
        self.arcs.len() + customer - 1
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn is_integer(&self, var: usize) -> bool {
        self.integer[var]
    }

    /// Objective of a dense assignment covering every variable.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.num_vars());
        self.objective
            .iter()
            .zip(values)
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Objective of a sparse arc assignment; every arc variable must be
    /// present. Load variables never enter the objective.
    pub fn evaluate_objective(&self, arc_values: &HashMap<Arc, f64>) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for (v, arc) in self.arcs.iter().enumerate() {
            let x = arc_values
                .get(arc)
                .ok_or(ModelError::MissingVariable(*arc))?;
            total += self.objective[v] * x;
        }
        Ok(total)
    }

    /// LP relaxation with optional bound tightenings `(var, lb, ub)`.
    /// Tightenings intersect the base bounds; a crossed pair short-circuits
    /// to `Relaxation::Infeasible` without building the LP.
    pub fn relax(&self, fixings: &[(usize, f64, f64)]) -> Relaxation {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for &(var, lb, ub) in fixings {
            lower[var] = lower[var].max(lb);
            upper[var] = upper[var].min(ub);
            if lower[var] > upper[var] {
                return Relaxation::Infeasible;
            }
        }
        let rows = self
            .constraints
            .iter()
            .map(|c| LpRow {
                coeffs: c.coeffs.clone(),
                sense: c.sense,
                rhs: c.rhs,
            })
            .collect();
        Relaxation::Problem(LpProblem {
            objective: self.objective.clone(),
            lower,
            upper,
            rows,
        })
    }

    /// Follows selected arcs from the depot and reassembles routes. The
    /// assignment must be integral within `INTEGRALITY_TOL` and satisfy the
    /// degree and flow rows; depot-free cycles are reported as subtours.
    pub fn assignment_to_routes(&self, values: &[f64]) -> Result<Routes, ModelError> {
        if values.len() != self.num_vars() {
            return Err(ModelError::WrongLength {
                got: values.len(),
                expected: self.num_vars(),
            });
        }
        let n = self.n_customers;
        let end = self.depot_end();
        let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for (v, arc) in self.arcs.iter().enumerate() {
            let x = values[v];
            let rounded = x.round();
            if (x - rounded).abs() > INTEGRALITY_TOL || !(rounded == 0.0 || rounded == 1.0) {
                return Err(ModelError::NonIntegral {
                    arc: *arc,
                    value: x,
                });
            }
            if rounded == 1.0 {
                successors[arc.from].push(arc.to);
            }
        }
        for i in 1..=n {
            if successors[i].len() != 1 {
                return Err(ModelError::BadOutDegree {
                    customer: i,
                    count: successors[i].len(),
                });
            }
        }
        let mut visited = vec![false; n + 2];
        let mut routes = Vec::new();
        for &first in &successors[0] {
            let mut route = vec![0];
            let mut current = first;
            while current != end {
                if visited[current] {
                    return Err(ModelError::VisitedTwice(current));
                }
                visited[current] = true;
                route.push(current);
                current = successors[current][0];
            }
            route.push(end);
            routes.push(route);
        }
        let stranded: Vec<usize> = (1..=n).filter(|&i| !visited[i]).collect();
        if !stranded.is_empty() {
            return Err(ModelError::Subtour(stranded));
        }
        Ok(Routes(routes))
    }

    /// Encodes routes as a dense feasible assignment: selected arcs at 1 and
    /// loads accumulated along each route. Capacity is not checked here; an
    /// overloaded route simply encodes to a point outside the load bounds.
    pub fn routes_to_assignment(&self, routes: &Routes) -> Result<Vec<f64>, ModelError> {
        let n = self.n_customers;
        let end = self.depot_end();
        let mut seen = vec![false; n + 1];
        let mut values = vec![0.0; self.num_vars()];
        for (index, route) in routes.0.iter().enumerate() {
            let bad = |reason: &str| ModelError::BadRoute {
                index,
                reason: reason.to_string(),
            };
            if route.len() < 3 {
                return Err(bad("shorter than depot-customer-depot"));
            }
            if route[0] != 0 {
                return Err(bad("does not start at the depot"));
            }
            if route[route.len() - 1] != end {
                return Err(bad("does not end at the end depot"));
            }
            let mut load = 0.0;
            for &node in &route[1..route.len() - 1] {
                if node < 1 || node > n {
                    return Err(bad(&format!("contains non-customer node {node}")));
                }
                if seen[node] {
                    return Err(ModelError::VisitedTwice(node));
                }
                seen[node] = true;
                load += f64::from(self.demands[node]);
                values[self.load_var(node)] = load;
            }
            for leg in route.windows(2) {
                let var = self
                    .arc_var(leg[0], leg[1])
                    .ok_or_else(|| bad(&format!("uses inadmissible arc {}->{}", leg[0], leg[1])))?;
                values[var] = 1.0;
            }
        }
        if let Some(missing) = (1..=n).find(|&i| !seen[i]) {
            return Err(ModelError::BadRoute {
                index: routes.0.len(),
                reason: format!("customer {missing} appears in no route"),
            });
        }
        Ok(values)
    }
}

/// Checks a candidate plan against the routing rules: depot-to-depot route
/// shape, every customer served exactly once, and per-route load within
/// capacity. Returns one description per violation.
pub fn check_feasibility(instance: &Instance, routes: &Routes) -> Vec<String> {
    let mut violations = Vec::new();
    let n = instance.n_customers();
    let end = instance.depot_end();
    let mut visits = vec![0usize; n + 1];
    for (index, route) in routes.0.iter().enumerate() {
        if route.len() < 3 {
            violations.push(format!("route {index} has no customers"));
            continue;
        }
        if route[0] != 0 {
            violations.push(format!("route {index} does not start at the depot"));
        }
        if route[route.len() - 1] != end {
            violations.push(format!("route {index} does not end at the end depot"));
        }
        let mut load: u64 = 0;
        for &node in &route[1..route.len() - 1] {
            if node < 1 || node > n {
                violations.push(format!("route {index} visits non-customer node {node}"));
                continue;
            }
            visits[node] += 1;
            load += u64::from(instance.demand(node));
        }
        if load > u64::from(instance.capacity()) {
            violations.push(format!(
                "route {index} load {load} exceeds capacity {}",
                instance.capacity()
            ));
        }
    }
    for i in 1..=n {
        if visits[i] == 0 {
            violations.push(format!("customer {i} is not visited (visit-once)"));
        } else if visits[i] > 1 {
            violations.push(format!(
                "customer {i} is visited {} times (visit-once)",
                visits[i]
            ));
        }
    }
    violations
}
