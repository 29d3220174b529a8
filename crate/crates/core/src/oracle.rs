//! Brute-force exact optima for tiny instances.
//!
//! Two layers: a bitmask dynamic program for the single-vehicle path through
//! a customer subset, and an exhaustive sweep over capacity-feasible set
//! partitions of all customers, pricing each block with the dynamic program.
//! Intended as ground truth for solver tests and as a labeler for training
//! data; the size caps keep runtime at desk scale.

use std::collections::HashMap;

use crate::instance::{CostMatrix, Instance};
use crate::milp::Routes;
use serde::{Deserialize, Serialize};

/// Largest customer subset the path dynamic program accepts.
pub const HELD_KARP_MAX_CUSTOMERS: usize = 15;
/// Largest customer count the partition sweep accepts.
pub const EXACT_MAX_CUSTOMERS: usize = 8;
/// Absolute tolerance for treating two plan costs as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("{count} customers exceed the exhaustive limit of {limit}")]
    TooLarge { count: usize, limit: usize },
    #[error("customer {node} demand {demand} exceeds capacity {capacity}")]
    Infeasible {
        node: usize,
        demand: u32,
        capacity: u32,
    },
    #[error("customer subset is empty")]
    EmptySubset,
    #[error("node {0} is not a customer index")]
    NotACustomer(usize),
    #[error("node {0} appears twice in the customer subset")]
    Duplicate(usize),
}

/// Exact optimum with the number of capacity-feasible partitions priced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    pub objective: f64,
    pub routes: Routes,
    pub partitions_evaluated: u64,
}

/// Cheapest single-vehicle path depot -> every listed customer -> end depot,
/// by dynamic programming over customer subsets. Returns the cost and the
/// full node sequence including both depot copies.
pub fn held_karp_tsp(
    costs: &CostMatrix,
    customers: &[usize],
) -> Result<(f64, Vec<usize>), OracleError> {
    let k = customers.len();
    if k == 0 {
        return Err(OracleError::EmptySubset);
    }
    if k > HELD_KARP_MAX_CUSTOMERS {
        return Err(OracleError::TooLarge {
            count: k,
            limit: HELD_KARP_MAX_CUSTOMERS,
        });
    }
    let end = costs.dim() - 1;
    let mut seen = vec![false; costs.dim()];
    for &c in customers {
        if c == 0 || c >= end {
            return Err(OracleError::NotACustomer(c));
        }
        if seen[c] {
            return Err(OracleError::Duplicate(c));
        }
        seen[c] = true;
    }

    let full = (1usize << k) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * k];
    let mut parent = vec![u32::MAX; (full + 1) * k];
    for i in 0..k {
        dp[(1 << i) * k + i] = costs.at(0, customers[i]);
    }
    for mask in 1..=full {
        for i in 0..k {
            if mask & (1 << i) == 0 {
                continue;
            }
            let base = dp[mask * k + i];
            if !base.is_finite() {
                continue;
            }
            for j in 0..k {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let next = mask | (1 << j);
                let cand = base + costs.at(customers[i], customers[j]);
                if cand < dp[next * k + j] {
                    dp[next * k + j] = cand;
                    parent[next * k + j] = i as u32;
                }
            }
        }
    }

    let mut best_cost = f64::INFINITY;
    let mut best_last = 0;
    for i in 0..k {
        let cand = dp[full * k + i] + costs.at(customers[i], end);
        if cand < best_cost {
            best_cost = cand;
            best_last = i;
        }
    }

    let mut order = Vec::with_capacity(k);
    let mut mask = full;
    let mut at = best_last;
    loop {
        order.push(customers[at]);
        let prev = parent[mask * k + at];
        mask &= !(1 << at);
        if prev == u32::MAX {
            break;
        }
        at = prev as usize;
    }
    order.reverse();
    let mut path = Vec::with_capacity(k + 2);
    path.push(0);
    path.extend(order);
    path.push(end);
    Ok((best_cost, path))
}

/// Exact minimum-cost plan by enumerating every set partition of the
/// customers whose blocks fit the vehicle, pricing each block with
/// [`held_karp_tsp`]. Cost ties are broken toward fewer routes, then the
/// lexicographically smallest canonical route set.
pub fn exact_cvrp(instance: &Instance) -> Result<OracleResult, OracleError> {
    let n = instance.n_customers();
    if n == 0 {
        return Err(OracleError::EmptySubset);
    }
    if n > EXACT_MAX_CUSTOMERS {
        return Err(OracleError::TooLarge {
            count: n,
            limit: EXACT_MAX_CUSTOMERS,
        });
    }
    for i in instance.customers() {
        if instance.demand(i) > instance.capacity() {
            return Err(OracleError::Infeasible {
                node: i,
                demand: instance.demand(i),
                capacity: instance.capacity(),
            });
        }
    }

    let mut sweep = PartitionSweep {
        instance,
        memo: HashMap::new(),
        assignment: vec![0; n],
        block_loads: Vec::new(),
        partitions_evaluated: 0,
        best: None,
    };
    sweep.descend(0)?;
    let (objective, routes) = sweep.best.expect("singleton partition is always feasible");
    Ok(OracleResult {
        objective,
        routes,
        partitions_evaluated: sweep.partitions_evaluated,
    })
}

struct PartitionSweep<'a> {
    instance: &'a Instance,
    /// Block bitmask (bit i-1 = customer i) -> priced path.
    memo: HashMap<u32, (f64, Vec<usize>)>,
    assignment: Vec<usize>,
    block_loads: Vec<u64>,
    partitions_evaluated: u64,
    best: Option<(f64, Routes)>,
}

impl PartitionSweep<'_> {
    /// Restricted-growth enumeration: customer `i` may join any existing
    /// block (capacity permitting) or open the next one.
    fn descend(&mut self, i: usize) -> Result<(), OracleError> {
        let n = self.instance.n_customers();
        if i == n {
            self.price_current()?;
            return Ok(());
        }
        let demand = u64::from(self.instance.demand(i + 1));
        let capacity = u64::from(self.instance.capacity());
        for block in 0..=self.block_loads.len() {
            let load = self.block_loads.get(block).copied().unwrap_or(0);
            if load + demand > capacity {
                continue;
            }
            self.assignment[i] = block;
            if block == self.block_loads.len() {
                self.block_loads.push(demand);
            } else {
                self.block_loads[block] += demand;
            }
            self.descend(i + 1)?;
            if block + 1 == self.block_loads.len() && self.block_loads[block] == demand {
                self.block_loads.pop();
            } else {
                self.block_loads[block] -= demand;
            }
        }
        Ok(())
    }

    fn price_current(&mut self) -> Result<(), OracleError> {
        self.partitions_evaluated += 1;
        let blocks = self.block_loads.len();
        let mut masks = vec![0u32; blocks];
        for (i, &b) in self.assignment.iter().enumerate() {
            masks[b] |= 1 << i;
        }
        let mut total = 0.0;
        for &mask in &masks {
            total += self.price_block(mask)?.0;
        }
        let current_best = self.best.as_ref().map(|(c, _)| *c).unwrap_or(f64::INFINITY);
        if total > current_best + TIE_TOL {
            return Ok(());
        }
        let mut routes = Vec::with_capacity(blocks);
        for &mask in &masks {
            routes.push(self.price_block(mask)?.1);
        }
        let candidate = Routes(routes).canonical();
        match &self.best {
            Some((cost, routes))
                if total >= cost - TIE_TOL
                    && (candidate.route_count(), &candidate.0)
                        >= (routes.route_count(), &routes.0) => {}
            _ => self.best = Some((total, candidate)),
        }
        Ok(())
    }

    fn price_block(&mut self, mask: u32) -> Result<(f64, Vec<usize>), OracleError> {
        if let Some(hit) = self.memo.get(&mask) {
            return Ok(hit.clone());
        }
        let members: Vec<usize> = (0..self.instance.n_customers())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| i + 1)
            .collect();
        let priced = held_karp_tsp(self.instance.costs(), &members)?;
        self.memo.insert(mask, priced.clone());
        Ok(priced)
    }
}
