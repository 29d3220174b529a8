//! C ABI for the routing toolkit: opaque handles over instances and
//! solutions, status codes instead of Rust errors, and JSON round trips for
//! anything structured.
//!
//! Ownership rules are the usual C idiom: every `*mut` handle returned
//! through an out-parameter is owned by the caller and must be released with
//! the matching `pararoute_free_*` function; strings go back through
//! [`pararoute_free_string`]. All functions are panic-safe: a panic inside
//! the library is caught and surfaced as
//! [`ParaRouteStatus::InternalError`].

use pararoute::branch_bound::{self, SearchParams, SolveError, Termination};
use pararoute::instance::{DemandMode, GeneratorConfig, Instance, InstanceError};
use pararoute::milp::{MilpModel, Routes};
use pararoute::oracle::{self, OracleError};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call in this API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParaRouteStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input could not be parsed as JSON of the expected shape.
    ParseError = 3,
    /// The instance content violates its own invariants.
    InvalidInstance = 4,
    /// A numeric argument is out of its documented range.
    InvalidArgument = 5,
    /// No feasible plan exists for the input.
    Infeasible = 6,
    /// The solver stopped at its limit before finding any feasible plan.
    NoIncumbent = 7,
    /// The instance is too large for the requested algorithm.
    SizeLimit = 8,
    /// A route or stop index is past the end.
    IndexOutOfRange = 9,
    /// The caller's buffer cannot hold the result.
    BufferTooSmall = 10,
    /// A bug: unexpected internal failure or caught panic.
    InternalError = 11,
}

/// A routing problem held behind an opaque pointer.
pub struct ParaRouteInstance {
    inner: Instance,
}

/// A solved plan: objective, per-vehicle routes, and solver statistics.
pub struct ParaRouteSolution {
    objective: f64,
    gap_percent: f64,
    optimal: bool,
    nodes_explored: u64,
    simplex_iterations: u64,
    run_time_seconds: f64,
    routes: Routes,
    loads: Vec<u32>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn fail(status: ParaRouteStatus, message: impl Into<String>) -> ParaRouteStatus {
    set_error(message);
    status
}

/// Run `body` with panics converted to [`ParaRouteStatus::InternalError`].
fn guarded(body: impl FnOnce() -> ParaRouteStatus) -> ParaRouteStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| {
        set_error("internal panic; this is a bug in the library");
        ParaRouteStatus::InternalError
    })
}

fn instance_error_status(err: &InstanceError) -> ParaRouteStatus {
    match err {
        InstanceError::Json(_) | InstanceError::ParseFile { .. } => ParaRouteStatus::ParseError,
        InstanceError::Io { .. } => ParaRouteStatus::InternalError,
        _ => ParaRouteStatus::InvalidInstance,
    }
}

fn solution_from_solve(solved: &branch_bound::Solved, demands: &[u32]) -> ParaRouteSolution {
    ParaRouteSolution {
        objective: solved.stats.objective,
        gap_percent: solved.stats.gap_percent,
        optimal: solved.termination == Termination::Optimal,
        nodes_explored: solved.stats.nodes_explored,
        simplex_iterations: solved.stats.simplex_iterations,
        run_time_seconds: solved.stats.run_time,
        loads: solved.routes.loads(demands),
        routes: solved.routes.clone(),
    }
}

/// Library version as a static C string; do not free it.
#[no_mangle]
pub extern "C" fn pararoute_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on the calling thread, or null
/// when nothing failed yet. The pointer stays valid until the next failing
/// call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn pararoute_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Generate a random instance.
///
/// `requests` passengers are drawn around the default service area with
/// vehicle capacity `capacity`. With `unit_demands` every pickup point is a
/// single passenger; otherwise passengers arrive in parties of up to
/// `min(4, capacity)` sharing one pickup point.
///
/// # Safety
/// `out` must be a valid pointer. On `Ok` it receives a handle owned by the
/// caller; release it with [`pararoute_free_instance`].
#[no_mangle]
pub unsafe extern "C" fn pararoute_generate(
    requests: u32,
    capacity: u32,
    unit_demands: bool,
    seed: u64,
    out: *mut *mut ParaRouteInstance,
) -> ParaRouteStatus {
    guarded(|| {
        if out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "out pointer is null");
        }
        let config = GeneratorConfig {
            request_count: requests,
            capacity,
            demand_mode: if unit_demands {
                DemandMode::Unit
            } else {
                DemandMode::Grouped
            },
            max_group: if unit_demands { 1 } else { capacity.min(4) },
            ..GeneratorConfig::default()
        };
        match Instance::generate(&config, seed) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ParaRouteInstance { inner }));
                ParaRouteStatus::Ok
            }
            Err(err) => fail(instance_error_status(&err), err.to_string()),
        }
    })
}

/// Parse an instance from its JSON representation.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
/// On `Ok` the caller owns the handle; release it with
/// [`pararoute_free_instance`].
#[no_mangle]
pub unsafe extern "C" fn pararoute_instance_from_json(
    json: *const c_char,
    out: *mut *mut ParaRouteInstance,
) -> ParaRouteStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "json or out pointer is null");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(text) => text,
            Err(err) => return fail(ParaRouteStatus::InvalidUtf8, err.to_string()),
        };
        match Instance::from_json_str(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(ParaRouteInstance { inner }));
                ParaRouteStatus::Ok
            }
            Err(err) => fail(instance_error_status(&err), err.to_string()),
        }
    })
}

unsafe fn export_string(text: String, out: *mut *mut c_char) -> ParaRouteStatus {
    match CString::new(text) {
        Ok(exported) => {
            *out = exported.into_raw();
            ParaRouteStatus::Ok
        }
        Err(err) => fail(ParaRouteStatus::InternalError, err.to_string()),
    }
}

/// Serialize an instance to JSON. The returned string is owned by the
/// caller; release it with [`pararoute_free_string`].
///
/// # Safety
/// `instance` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_instance_to_json(
    instance: *const ParaRouteInstance,
    out: *mut *mut c_char,
) -> ParaRouteStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "instance or out pointer is null");
        }
        export_string((*instance).inner.to_json_string(), out)
    })
}

/// Copy one scalar out of an instance behind the usual null checks.
/// (Exported functions are spelled out one by one because the header
/// generator reads source text and does not expand Rust macros.)
unsafe fn instance_field<T>(
    instance: *const ParaRouteInstance,
    out: *mut T,
    read: impl FnOnce(&Instance) -> T,
) -> ParaRouteStatus {
    guarded(move || {
        if instance.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "instance or out pointer is null");
        }
        *out = read(&(*instance).inner);
        ParaRouteStatus::Ok
    })
}

/// Number of pickup points (grouped parties count once).
///
/// # Safety
/// `instance` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_instance_customer_count(
    instance: *const ParaRouteInstance,
    out: *mut u32,
) -> ParaRouteStatus {
    instance_field(instance, out, |inst| inst.n_customers() as u32)
}

/// Total passengers over all pickup points.
///
/// # Safety
/// `instance` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_instance_total_demand(
    instance: *const ParaRouteInstance,
    out: *mut u64,
) -> ParaRouteStatus {
    instance_field(instance, out, |inst| inst.total_demand())
}

/// Vehicle capacity in seats.
///
/// # Safety
/// `instance` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_instance_capacity(
    instance: *const ParaRouteInstance,
    out: *mut u32,
) -> ParaRouteStatus {
    instance_field(instance, out, |inst| inst.capacity())
}

/// Solve an instance to proven optimality by branch-and-bound, stopping at
/// `time_limit_seconds` with the best plan found so far.
///
/// Returns `Ok` whenever a feasible plan exists; inspect
/// [`pararoute_solution_is_optimal`] and [`pararoute_solution_gap_percent`]
/// to see whether the search finished. `Infeasible` and `NoIncumbent` report
/// runs that produced no plan at all.
///
/// # Safety
/// `instance` must be a live handle from this library and `out` a valid
/// pointer. On `Ok` the caller owns the solution handle; release it with
/// [`pararoute_free_solution`].
#[no_mangle]
pub unsafe extern "C" fn pararoute_solve(
    instance: *const ParaRouteInstance,
    time_limit_seconds: f64,
    out: *mut *mut ParaRouteSolution,
) -> ParaRouteStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "instance or out pointer is null");
        }
        let inner = &(*instance).inner;
        let model = match MilpModel::build(inner) {
            Ok(model) => model,
            Err(err) => return fail(ParaRouteStatus::InvalidInstance, err.to_string()),
        };
        let params = SearchParams {
            time_limit: time_limit_seconds,
            ..SearchParams::default()
        };
        match branch_bound::solve(&model, &params) {
            Ok(solved) => {
                let solution = solution_from_solve(&solved, inner.demands());
                *out = Box::into_raw(Box::new(solution));
                ParaRouteStatus::Ok
            }
            Err(SolveError::Infeasible) => {
                fail(ParaRouteStatus::Infeasible, "no feasible plan exists")
            }
            Err(err @ SolveError::NoIncumbent { .. }) => {
                fail(ParaRouteStatus::NoIncumbent, err.to_string())
            }
            Err(err @ SolveError::InvalidParams(_)) => {
                fail(ParaRouteStatus::InvalidArgument, err.to_string())
            }
            Err(err) => fail(ParaRouteStatus::InternalError, err.to_string()),
        }
    })
}

/// Solve a small instance exactly by exhaustive partition enumeration.
///
/// Works up to 8 pickup points; larger instances return `SizeLimit`. In the
/// resulting solution, `nodes_explored` counts the capacity-feasible
/// partitions priced and `simplex_iterations` is zero.
///
/// # Safety
/// `instance` must be a live handle from this library and `out` a valid
/// pointer. On `Ok` the caller owns the solution handle; release it with
/// [`pararoute_free_solution`].
#[no_mangle]
pub unsafe extern "C" fn pararoute_oracle(
    instance: *const ParaRouteInstance,
    out: *mut *mut ParaRouteSolution,
) -> ParaRouteStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "instance or out pointer is null");
        }
        let inner = &(*instance).inner;
        match oracle::exact_cvrp(inner) {
            Ok(result) => {
                let solution = ParaRouteSolution {
                    objective: result.objective,
                    gap_percent: 0.0,
                    optimal: true,
                    nodes_explored: result.partitions_evaluated,
                    simplex_iterations: 0,
                    run_time_seconds: 0.0,
                    loads: result.routes.loads(inner.demands()),
                    routes: result.routes,
                };
                *out = Box::into_raw(Box::new(solution));
                ParaRouteStatus::Ok
            }
            Err(err @ OracleError::TooLarge { .. }) => {
                fail(ParaRouteStatus::SizeLimit, err.to_string())
            }
            Err(err @ OracleError::Infeasible { .. }) => {
                fail(ParaRouteStatus::Infeasible, err.to_string())
            }
            Err(err) => fail(ParaRouteStatus::InternalError, err.to_string()),
        }
    })
}

/// Copy one scalar out of a solution behind the usual null checks.
unsafe fn solution_field<T>(
    solution: *const ParaRouteSolution,
    out: *mut T,
    read: impl FnOnce(&ParaRouteSolution) -> T,
) -> ParaRouteStatus {
    guarded(move || {
        if solution.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "solution or out pointer is null");
        }
        *out = read(&*solution);
        ParaRouteStatus::Ok
    })
}

/// Total travel cost of the plan.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_objective(
    solution: *const ParaRouteSolution,
    out: *mut f64,
) -> ParaRouteStatus {
    solution_field(solution, out, |sol| sol.objective)
}

/// Remaining optimality gap in percent; 0 for proven-optimal plans.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_gap_percent(
    solution: *const ParaRouteSolution,
    out: *mut f64,
) -> ParaRouteStatus {
    solution_field(solution, out, |sol| sol.gap_percent)
}

/// Whether the plan was proven optimal.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_is_optimal(
    solution: *const ParaRouteSolution,
    out: *mut bool,
) -> ParaRouteStatus {
    solution_field(solution, out, |sol| sol.optimal)
}

/// Search nodes explored (partitions priced for oracle solutions).
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_nodes_explored(
    solution: *const ParaRouteSolution,
    out: *mut u64,
) -> ParaRouteStatus {
    solution_field(solution, out, |sol| sol.nodes_explored)
}

/// Total simplex iterations over all search nodes.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_simplex_iterations(
    solution: *const ParaRouteSolution,
    out: *mut u64,
) -> ParaRouteStatus {
    solution_field(solution, out, |sol| sol.simplex_iterations)
}

/// Wall-clock solve time in seconds.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_run_time_seconds(
    solution: *const ParaRouteSolution,
    out: *mut f64,
) -> ParaRouteStatus {
    solution_field(solution, out, |sol| sol.run_time_seconds)
}

/// Number of vehicle routes in the plan.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_route_count(
    solution: *const ParaRouteSolution,
    out: *mut u32,
) -> ParaRouteStatus {
    guarded(|| {
        if solution.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "solution or out pointer is null");
        }
        *out = (*solution).routes.route_count() as u32;
        ParaRouteStatus::Ok
    })
}

/// Number of stops on one route, including the depot at both ends.
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_route_length(
    solution: *const ParaRouteSolution,
    route: u32,
    out: *mut u32,
) -> ParaRouteStatus {
    guarded(|| {
        if solution.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "solution or out pointer is null");
        }
        let routes = &(*solution).routes;
        match routes.0.get(route as usize) {
            Some(stops) => {
                *out = stops.len() as u32;
                ParaRouteStatus::Ok
            }
            None => fail(
                ParaRouteStatus::IndexOutOfRange,
                format!("route {route} of {}", routes.route_count()),
            ),
        }
    })
}

/// Copy the node ids visited by one route into `buffer`, in travel order.
/// Node 0 is the depot, ids `1..=customer_count` are pickup points, and the
/// final id is the returning depot copy. `out_written` receives the number
/// of stops copied.
///
/// # Safety
/// `solution` must be a live handle from this library; `buffer` must point
/// to at least `buffer_len` writable `uint32_t`s; `out_written` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_route_stops(
    solution: *const ParaRouteSolution,
    route: u32,
    buffer: *mut u32,
    buffer_len: u32,
    out_written: *mut u32,
) -> ParaRouteStatus {
    guarded(|| {
        if solution.is_null() || buffer.is_null() || out_written.is_null() {
            return fail(
                ParaRouteStatus::NullPointer,
                "solution, buffer, or out pointer is null",
            );
        }
        let routes = &(*solution).routes;
        let stops = match routes.0.get(route as usize) {
            Some(stops) => stops,
            None => {
                return fail(
                    ParaRouteStatus::IndexOutOfRange,
                    format!("route {route} of {}", routes.route_count()),
                )
            }
        };
        if (buffer_len as usize) < stops.len() {
            return fail(
                ParaRouteStatus::BufferTooSmall,
                format!("route has {} stops, buffer holds {buffer_len}", stops.len()),
            );
        }
        for (offset, &node) in stops.iter().enumerate() {
            *buffer.add(offset) = node as u32;
        }
        *out_written = stops.len() as u32;
        ParaRouteStatus::Ok
    })
}

/// Serialize the full solution (objective, routes, loads, statistics) to
/// JSON. The returned string is owned by the caller; release it with
/// [`pararoute_free_string`].
///
/// # Safety
/// `solution` must be a live handle from this library and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pararoute_solution_to_json(
    solution: *const ParaRouteSolution,
    out: *mut *mut c_char,
) -> ParaRouteStatus {
    guarded(|| {
        if solution.is_null() || out.is_null() {
            return fail(ParaRouteStatus::NullPointer, "solution or out pointer is null");
        }
        let sol = &*solution;
        let body = serde_json::json!({
            "objective_cost": sol.objective,
            "gap_percent": sol.gap_percent,
            "optimal": sol.optimal,
            "nodes_explored": sol.nodes_explored,
            "simplex_iterations": sol.simplex_iterations,
            "run_time_s": sol.run_time_seconds,
            "routes": sol.routes,
            "loads": sol.loads,
        });
        match serde_json::to_string_pretty(&body) {
            Ok(text) => export_string(text, out),
            Err(err) => fail(ParaRouteStatus::InternalError, err.to_string()),
        }
    })
}

/// Release an instance handle. Passing null is a no-op.
///
/// # Safety
/// `instance` must be null or a handle produced by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pararoute_free_instance(instance: *mut ParaRouteInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Release a solution handle. Passing null is a no-op.
///
/// # Safety
/// `solution` must be null or a handle produced by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pararoute_free_solution(solution: *mut ParaRouteSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Release a string returned through an out-parameter of this library.
/// Passing null is a no-op.
///
/// # Safety
/// `text` must be null or a string produced by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pararoute_free_string(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}
