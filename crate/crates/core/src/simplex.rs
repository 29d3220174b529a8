//! Bounded-variable primal simplex over a dense tableau.
//!
//! Two phases with explicit artificial variables. Pricing is Dantzig (largest
//! reduced cost magnitude) and falls back to Bland's smallest-index rule
//! after a run of non-improving iterations, which guards against cycling.
//! Bound flips of nonbasic variables count as iterations just like pivots,
//! and the iteration counter accumulates across both phases.
//!
//! Tolerances are fixed here: `PIVOT_TOL` for usable pivot elements,
//! `FEASIBILITY_TOL` for phase-one acceptance and residual checks, and
//! `OPTIMALITY_TOL` for reduced-cost sign tests.

use std::time::Instant;

pub const PIVOT_TOL: f64 = 1e-9;
pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: u64 = 200_000;

/// Consecutive non-improving iterations tolerated before Bland's rule.
const STALL_LIMIT: u64 = 1000;
/// Objective decrease below this counts as "non-improving".
const IMPROVEMENT_EPS: f64 = 1e-12;
/// Absolute slack when comparing ratio-test step lengths.
const RATIO_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// One linear constraint row with sparse coefficients.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program over finitely bounded variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), SimplexError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SimplexError::Invalid(format!(
                "bound vectors ({}, {}) do not match {} variables",
                self.lower.len(),
                self.upper.len(),
                n
            )));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(SimplexError::Invalid(format!(
                    "objective coefficient {j} is not finite"
                )));
            }
            if !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                return Err(SimplexError::Invalid(format!(
                    "variable {j} must have finite bounds"
                )));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SimplexError::Invalid(format!("row {r} rhs is not finite")));
            }
            for &(j, c) in &row.coeffs {
                if j >= n {
                    return Err(SimplexError::Invalid(format!(
                        "row {r} references variable {j} of {n}"
                    )));
                }
                if !c.is_finite() {
                    return Err(SimplexError::Invalid(format!(
                        "row {r} coefficient on variable {j} is not finite"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// Solve outcome. On `Optimal` the values satisfy every row within
/// `FEASIBILITY_TOL`; on `IterationLimit` they are the working point at the
/// moment the budget ran out and carry no feasibility promise.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SimplexError {
    #[error("malformed LP: {0}")]
    Invalid(String),
    #[error("LP is unbounded below")]
    Unbounded,
}

/// Resource limits for one solve. `deadline` is wall clock and is checked
/// every iteration, so overruns stay within a single pivot.
#[derive(Debug, Clone, Default)]
pub struct LpOptions {
    pub max_iterations: Option<u64>,
    pub deadline: Option<Instant>,
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    nstruct: usize,
    art_start: usize,
    ncols: usize,
    a: Vec<Vec<f64>>,
    bhat: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    active: Vec<bool>,
    obj: Vec<f64>,
    iterations: u64,
    stall: u64,
}

enum PhaseEnd {
    Converged,
    OutOfBudget,
}

pub fn solve_lp(problem: &LpProblem, options: &LpOptions) -> Result<LpSolution, SimplexError> {
    problem.check()?;
    let nstruct = problem.num_vars();
    for j in 0..nstruct {
        if problem.lower[j] > problem.upper[j] {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: 0.0,
                values: Vec::new(),
                iterations: 0,
            });
        }
    }

    let mut t = Tableau::build(problem);
    if options.verbose {
        eprintln!(
            "simplex: {} rows, {} columns ({} structural)",
            t.a.len(),
            t.ncols,
            t.nstruct
        );
    }

    // Phase one: minimize the artificial sum.
    let mut phase_cost = vec![0.0; t.ncols];
    for j in t.art_start..t.ncols {
        phase_cost[j] = 1.0;
    }
    t.price_out(&phase_cost);
    match t.run(&phase_cost, options)? {
        PhaseEnd::OutOfBudget => return Ok(t.interrupted(problem)),
        PhaseEnd::Converged => {}
    }
    let infeasibility = t.cost_of(&phase_cost);
    if infeasibility > FEASIBILITY_TOL {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: infeasibility,
            values: Vec::new(),
            iterations: t.iterations,
        });
    }
    t.retire_artificials();

    // Phase two: the real objective.
    let mut cost = vec![0.0; t.ncols];
    cost[..nstruct].copy_from_slice(&problem.objective);
    t.price_out(&cost);
    match t.run(&cost, options)? {
        PhaseEnd::OutOfBudget => return Ok(t.interrupted(problem)),
        PhaseEnd::Converged => {}
    }

    let values = t.structural_values();
    let objective = dot(&problem.objective, &values);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
        iterations: t.iterations,
    })
}

fn dot(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl Tableau {
    fn build(problem: &LpProblem) -> Tableau {
        let nstruct = problem.num_vars();
        let nrows = problem.rows.len();
        let nslack = problem
            .rows
            .iter()
            .filter(|r| r.sense != Sense::Eq)
            .count();
        let art_start = nstruct + nslack;
        let ncols = art_start + nrows;

        let mut lower = vec![0.0; ncols];
        let mut upper = vec![f64::INFINITY; ncols];
        lower[..nstruct].copy_from_slice(&problem.lower);
        upper[..nstruct].copy_from_slice(&problem.upper);

        let mut a = vec![vec![0.0; ncols]; nrows];
        let mut bhat = vec![0.0; nrows];
        let mut slack = art_start - nslack; // next slack column
        for (r, row) in problem.rows.iter().enumerate() {
            for &(j, c) in &row.coeffs {
                a[r][j] += c;
            }
            match row.sense {
                Sense::Le => {
                    a[r][slack] = 1.0;
                    slack += 1;
                }
                Sense::Ge => {
                    a[r][slack] = -1.0;
                    slack += 1;
                }
                Sense::Eq => {}
            }
            bhat[r] = row.rhs;
        }

        // Everything nonbasic starts at its lower bound; each row gets an
        // artificial basic variable covering the residual. Rows with a
        // negative residual are scaled by -1 so the artificial stays >= 0
        // and the basis is the identity.
        let mut status = vec![VarStatus::AtLower; ncols];
        let mut basis = vec![0; nrows];
        for r in 0..nrows {
            let mut residual = bhat[r];
            for j in 0..art_start {
                if a[r][j] != 0.0 {
                    residual -= a[r][j] * lower[j];
                }
            }
            if residual < 0.0 {
                for j in 0..art_start {
                    a[r][j] = -a[r][j];
                }
                bhat[r] = -bhat[r];
            }
            let art = art_start + r;
            a[r][art] = 1.0;
            basis[r] = art;
            status[art] = VarStatus::Basic;
        }

        Tableau {
            nstruct,
            art_start,
            ncols,
            a,
            bhat,
            lower,
            upper,
            status,
            basis,
            active: vec![true; nrows],
            obj: vec![0.0; ncols],
            iterations: 0,
            stall: 0,
        }
    }

    /// Value a nonbasic column currently rests at.
    fn resting(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            VarStatus::Basic => unreachable!("resting value of a basic column"),
        }
    }

    /// Current values of the basic variables, row by row.
    fn basic_values(&self) -> Vec<f64> {
        let shifted: Vec<(usize, f64)> = (0..self.ncols)
            .filter(|&j| self.status[j] != VarStatus::Basic)
            .map(|j| (j, self.resting(j)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        let mut values = vec![0.0; self.a.len()];
        for r in 0..self.a.len() {
            if !self.active[r] {
                continue;
            }
            let mut v = self.bhat[r];
            for &(j, x) in &shifted {
                if self.a[r][j] != 0.0 {
                    v -= self.a[r][j] * x;
                }
            }
            values[r] = v;
        }
        values
    }

    fn column_value(&self, j: usize, basics: &[f64]) -> f64 {
        if self.status[j] == VarStatus::Basic {
            for r in 0..self.a.len() {
                if self.active[r] && self.basis[r] == j {
                    return basics[r];
                }
            }
            0.0
        } else {
            self.resting(j)
        }
    }

    fn cost_of(&self, cost: &[f64]) -> f64 {
        let basics = self.basic_values();
        (0..self.ncols)
            .filter(|&j| cost[j] != 0.0)
            .map(|j| cost[j] * self.column_value(j, &basics))
            .sum()
    }

    fn structural_values(&self) -> Vec<f64> {
        let basics = self.basic_values();
        (0..self.nstruct).map(|j| self.column_value(j, &basics)).collect()
    }

    /// Rebuilds the reduced-cost row for `cost` against the current basis.
    /// Basis columns are unit vectors in the tableau, so one elimination pass
    /// per row restores canonical form.
    fn price_out(&mut self, cost: &[f64]) {
        self.obj.copy_from_slice(cost);
        for r in 0..self.a.len() {
            if !self.active[r] {
                continue;
            }
            let f = self.obj[self.basis[r]];
            if f != 0.0 {
                for j in 0..self.ncols {
                    self.obj[j] -= f * self.a[r][j];
                }
            }
        }
    }

    /// Runs pivots until the current phase objective is optimal or a budget
    /// is exhausted.
    fn run(&mut self, cost: &[f64], options: &LpOptions) -> Result<PhaseEnd, SimplexError> {
        let max_iterations = options.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
        let mut objective = self.cost_of(cost);
        loop {
            if self.iterations >= max_iterations {
                return Ok(PhaseEnd::OutOfBudget);
            }
            if let Some(deadline) = options.deadline {
                if Instant::now() >= deadline {
                    return Ok(PhaseEnd::OutOfBudget);
                }
            }

            let entering = if self.stall >= STALL_LIMIT {
                self.entering_bland()
            } else {
                self.entering_dantzig()
            };
            let Some(e) = entering else {
                return Ok(PhaseEnd::Converged);
            };
            let direction = match self.status[e] {
                VarStatus::AtLower => 1.0,
                VarStatus::AtUpper => -1.0,
                VarStatus::Basic => unreachable!("basic column cannot enter"),
            };

            let basics = self.basic_values();
            let mut step = self.upper[e] - self.lower[e];
            let mut leaving: Option<(usize, VarStatus)> = None;
            for r in 0..self.a.len() {
                if !self.active[r] {
                    continue;
                }
                let alpha = self.a[r][e];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let delta = direction * alpha; // basic r moves by -delta * t
                let col = self.basis[r];
                let limit = if delta > 0.0 {
                    if self.lower[col].is_finite() {
                        ((basics[r] - self.lower[col]) / delta).max(0.0)
                    } else {
                        f64::INFINITY
                    }
                } else if self.upper[col].is_finite() {
                    ((self.upper[col] - basics[r]) / -delta).max(0.0)
                } else {
                    f64::INFINITY
                };
                if !limit.is_finite() {
                    continue;
                }
                let hit = if delta > 0.0 {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                if limit < step - RATIO_TIE_TOL {
                    step = limit;
                    leaving = Some((r, hit));
                } else if (limit - step).abs() <= RATIO_TIE_TOL {
                    // Tie: keep a bound flip if one is pending, otherwise
                    // prefer the numerically larger pivot, then the lower row.
                    if let Some((cur, _)) = leaving {
                        let better = alpha.abs() > self.a[cur][e].abs() + RATIO_TIE_TOL
                            || ((alpha.abs() - self.a[cur][e].abs()).abs() <= RATIO_TIE_TOL
                                && r < cur);
                        if better {
                            step = limit.min(step);
                            leaving = Some((r, hit));
                        }
                    }
                }
            }

            if !step.is_finite() {
                return Err(SimplexError::Unbounded);
            }

            self.iterations += 1;
            match leaving {
                None => {
                    // Bound flip: the entering column crosses to its other
                    // bound without any basis change.
                    self.status[e] = match self.status[e] {
                        VarStatus::AtLower => VarStatus::AtUpper,
                        VarStatus::AtUpper => VarStatus::AtLower,
                        VarStatus::Basic => unreachable!(),
                    };
                }
                Some((row, hit)) => {
                    self.pivot(row, e, hit);
                }
            }

            let new_objective = self.cost_of(cost);
            if new_objective < objective - IMPROVEMENT_EPS {
                self.stall = 0;
            } else {
                self.stall += 1;
            }
            objective = new_objective;
        }
    }

    fn entering_dantzig(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            let Some(score) = self.eligibility(j) else {
                continue;
            };
            match best {
                Some((_, s)) if s >= score => {}
                _ => best = Some((j, score)),
            }
        }
        best.map(|(j, _)| j)
    }

    fn entering_bland(&self) -> Option<usize> {
        (0..self.ncols).find(|&j| self.eligibility(j).is_some())
    }

    /// Improvement potential of a nonbasic column, if any.
    fn eligibility(&self, j: usize) -> Option<f64> {
        if self.status[j] == VarStatus::Basic || self.lower[j] >= self.upper[j] {
            return None;
        }
        let d = self.obj[j];
        match self.status[j] {
            VarStatus::AtLower if d < -OPTIMALITY_TOL => Some(-d),
            VarStatus::AtUpper if d > OPTIMALITY_TOL => Some(d),
            _ => None,
        }
    }

    fn pivot(&mut self, row: usize, entering: usize, hit: VarStatus) {
        let leaving = self.basis[row];
        self.status[leaving] = hit;
        self.status[entering] = VarStatus::Basic;
        self.basis[row] = entering;

        let pivot = self.a[row][entering];
        for j in 0..self.ncols {
            self.a[row][j] /= pivot;
        }
        self.a[row][entering] = 1.0;
        self.bhat[row] /= pivot;

        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let f = self.a[r][entering];
            if f != 0.0 {
                for j in 0..self.ncols {
                    self.a[r][j] -= f * self.a[row][j];
                }
                self.a[r][entering] = 0.0;
                self.bhat[r] -= f * self.bhat[row];
            }
        }
        let f = self.obj[entering];
        if f != 0.0 {
            for j in 0..self.ncols {
                self.obj[j] -= f * self.a[row][j];
            }
            self.obj[entering] = 0.0;
        }
    }

    /// After phase one, pivots leftover artificial variables out of the
    /// basis (rows where that is impossible are redundant and get dropped)
    /// and pins every artificial to zero.
    fn retire_artificials(&mut self) {
        for r in 0..self.a.len() {
            if !self.active[r] || self.basis[r] < self.art_start {
                continue;
            }
            let mut pick: Option<usize> = None;
            for j in 0..self.art_start {
                if self.status[j] != VarStatus::Basic && self.a[r][j].abs() > PIVOT_TOL {
                    let better = match pick {
                        None => true,
                        Some(cur) => self.a[r][j].abs() > self.a[r][cur].abs(),
                    };
                    if better {
                        pick = Some(j);
                    }
                }
            }
            match pick {
                Some(j) => self.pivot(r, j, VarStatus::AtLower),
                None => {
                    self.active[r] = false;
                }
            }
        }
        for j in self.art_start..self.ncols {
            self.upper[j] = 0.0;
            if self.status[j] != VarStatus::Basic {
                self.status[j] = VarStatus::AtLower;
            }
        }
    }

    fn interrupted(&self, problem: &LpProblem) -> LpSolution {
        let values = self.structural_values();
        let objective = dot(&problem.objective, &values);
        LpSolution {
            status: LpStatus::IterationLimit,
            objective,
            values,
            iterations: self.iterations,
        }
    }
}
