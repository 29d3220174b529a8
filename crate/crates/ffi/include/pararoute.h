#ifndef PARAROUTE_H
#define PARAROUTE_H

/* Generated by cbindgen from the pararoute-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call in this API.
typedef enum {
  // The call succeeded.
  PARA_ROUTE_STATUS_OK = 0,
  // A required pointer argument was null.
  PARA_ROUTE_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  PARA_ROUTE_STATUS_INVALID_UTF8 = 2,
  // The input could not be parsed as JSON of the expected shape.
  PARA_ROUTE_STATUS_PARSE_ERROR = 3,
  // The instance content violates its own invariants.
  PARA_ROUTE_STATUS_INVALID_INSTANCE = 4,
  // A numeric argument is out of its documented range.
  PARA_ROUTE_STATUS_INVALID_ARGUMENT = 5,
  // No feasible plan exists for the input.
  PARA_ROUTE_STATUS_INFEASIBLE = 6,
  // The solver stopped at its limit before finding any feasible plan.
  PARA_ROUTE_STATUS_NO_INCUMBENT = 7,
  // The instance is too large for the requested algorithm.
  PARA_ROUTE_STATUS_SIZE_LIMIT = 8,
  // A route or stop index is past the end.
  PARA_ROUTE_STATUS_INDEX_OUT_OF_RANGE = 9,
  // The caller's buffer cannot hold the result.
  PARA_ROUTE_STATUS_BUFFER_TOO_SMALL = 10,
  // A bug: unexpected internal failure or caught panic.
  PARA_ROUTE_STATUS_INTERNAL_ERROR = 11,
} ParaRouteStatus;

// A routing problem held behind an opaque pointer.
typedef struct ParaRouteInstance ParaRouteInstance;

// A solved plan: objective, per-vehicle routes, and solver statistics.
typedef struct ParaRouteSolution ParaRouteSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static C string; do not free it.
const char *pararoute_version(void);

// Message describing the most recent failure on the calling thread, or null
// when nothing failed yet. The pointer stays valid until the next failing
// call on the same thread; do not free it.
const char *pararoute_last_error_message(void);

// Generate a random instance.
//
// `requests` passengers are drawn around the default service area with
// vehicle capacity `capacity`. With `unit_demands` every pickup point is a
// single passenger; otherwise passengers arrive in parties of up to
// `min(4, capacity)` sharing one pickup point.
//
// # Safety
// `out` must be a valid pointer. On `Ok` it receives a handle owned by the
// caller; release it with [`pararoute_free_instance`].
ParaRouteStatus pararoute_generate(uint32_t requests,
                                   uint32_t capacity,
                                   bool unit_demands,
                                   uint64_t seed,
                                   ParaRouteInstance **out);

// Parse an instance from its JSON representation.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
// On `Ok` the caller owns the handle; release it with
// [`pararoute_free_instance`].
ParaRouteStatus pararoute_instance_from_json(const char *json, ParaRouteInstance **out);

// Serialize an instance to JSON. The returned string is owned by the
// caller; release it with [`pararoute_free_string`].
//
// # Safety
// `instance` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_instance_to_json(const ParaRouteInstance *instance, char **out);

// Number of pickup points (grouped parties count once).
//
// # Safety
// `instance` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_instance_customer_count(const ParaRouteInstance *instance, uint32_t *out);

// Total passengers over all pickup points.
//
// # Safety
// `instance` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_instance_total_demand(const ParaRouteInstance *instance, uint64_t *out);

// Vehicle capacity in seats.
//
// # Safety
// `instance` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_instance_capacity(const ParaRouteInstance *instance, uint32_t *out);

// Solve an instance to proven optimality by branch-and-bound, stopping at
// `time_limit_seconds` with the best plan found so far.
//
// Returns `Ok` whenever a feasible plan exists; inspect
// [`pararoute_solution_is_optimal`] and [`pararoute_solution_gap_percent`]
// to see whether the search finished. `Infeasible` and `NoIncumbent` report
// runs that produced no plan at all.
//
// # Safety
// `instance` must be a live handle from this library and `out` a valid
// pointer. On `Ok` the caller owns the solution handle; release it with
// [`pararoute_free_solution`].
ParaRouteStatus pararoute_solve(const ParaRouteInstance *instance,
                                double time_limit_seconds,
                                ParaRouteSolution **out);

// Solve a small instance exactly by exhaustive partition enumeration.
//
// Works up to 8 pickup points; larger instances return `SizeLimit`. In the
// resulting solution, `nodes_explored` counts the capacity-feasible
// partitions priced and `simplex_iterations` is zero.
//
// # Safety
// `instance` must be a live handle from this library and `out` a valid
// pointer. On `Ok` the caller owns the solution handle; release it with
// [`pararoute_free_solution`].
ParaRouteStatus pararoute_oracle(const ParaRouteInstance *instance, ParaRouteSolution **out);

// Total travel cost of the plan.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_objective(const ParaRouteSolution *solution, double *out);

// Remaining optimality gap in percent; 0 for proven-optimal plans.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_gap_percent(const ParaRouteSolution *solution, double *out);

// Whether the plan was proven optimal.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_is_optimal(const ParaRouteSolution *solution, bool *out);

// Search nodes explored (partitions priced for oracle solutions).
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_nodes_explored(const ParaRouteSolution *solution, uint64_t *out);

// Total simplex iterations over all search nodes.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_simplex_iterations(const ParaRouteSolution *solution,
                                                      uint64_t *out);

// Wall-clock solve time in seconds.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_run_time_seconds(const ParaRouteSolution *solution, double *out);

// Number of vehicle routes in the plan.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_route_count(const ParaRouteSolution *solution, uint32_t *out);

// Number of stops on one route, including the depot at both ends.
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_route_length(const ParaRouteSolution *solution,
                                                uint32_t route,
                                                uint32_t *out);

// Copy the node ids visited by one route into `buffer`, in travel order.
// Node 0 is the depot, ids `1..=customer_count` are pickup points, and the
// final id is the returning depot copy. `out_written` receives the number
// of stops copied.
//
// # Safety
// `solution` must be a live handle from this library; `buffer` must point
// to at least `buffer_len` writable `uint32_t`s; `out_written` must be a
// valid pointer.
ParaRouteStatus pararoute_solution_route_stops(const ParaRouteSolution *solution,
                                               uint32_t route,
                                               uint32_t *buffer,
                                               uint32_t buffer_len,
                                               uint32_t *out_written);

// Serialize the full solution (objective, routes, loads, statistics) to
// JSON. The returned string is owned by the caller; release it with
// [`pararoute_free_string`].
//
// # Safety
// `solution` must be a live handle from this library and `out` a valid
// pointer.
ParaRouteStatus pararoute_solution_to_json(const ParaRouteSolution *solution, char **out);

// Release an instance handle. Passing null is a no-op.
//
// # Safety
// `instance` must be null or a handle produced by this library that has not
// been freed yet.
void pararoute_free_instance(ParaRouteInstance *instance);

// Release a solution handle. Passing null is a no-op.
//
// # Safety
// `solution` must be null or a handle produced by this library that has not
// been freed yet.
void pararoute_free_solution(ParaRouteSolution *solution);

// Release a string returned through an out-parameter of this library.
// Passing null is a no-op.
//
// # Safety
// `text` must be null or a string produced by this library that has not
// been freed yet.
void pararoute_free_string(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARAROUTE_H */
