//! Drives the C ABI the way a foreign caller would: raw pointers, status
//! codes, explicit frees, and a compile check of the generated header.

use pararoute_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn last_error() -> String {
    let message = pararoute_last_error_message();
    if message.is_null() {
        String::new()
    } else {
        unsafe { CStr::from_ptr(message) }
            .to_string_lossy()
            .into_owned()
    }
}

unsafe fn generate(requests: u32, capacity: u32, seed: u64) -> *mut ParaRouteInstance {
    let mut instance = ptr::null_mut();
    let status = pararoute_generate(requests, capacity, false, seed, &mut instance);
    assert_eq!(status, ParaRouteStatus::Ok, "{}", last_error());
    assert!(!instance.is_null());
    instance
}

unsafe fn take_string(text: *mut c_char) -> String {
    assert!(!text.is_null());
    let copied = CStr::from_ptr(text).to_string_lossy().into_owned();
    pararoute_free_string(text);
    copied
}

#[test]
fn version_is_a_nonempty_static_string() {
    let version = pararoute_version();
    assert!(!version.is_null());
    let text = unsafe { CStr::from_ptr(version) }.to_str().unwrap();
    assert!(!text.is_empty());
}

#[test]
fn generate_solve_and_read_back_a_plan() {
    unsafe {
        let instance = generate(6, 4, 3);

        let mut customers = 0u32;
        let mut capacity = 0u32;
        let mut passengers = 0u64;
        assert_eq!(
            pararoute_instance_customer_count(instance, &mut customers),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_instance_capacity(instance, &mut capacity),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_instance_total_demand(instance, &mut passengers),
            ParaRouteStatus::Ok
        );
        assert!(customers >= 2);
        assert_eq!(capacity, 4);
        assert_eq!(passengers, 6);

        let mut solution = ptr::null_mut();
        assert_eq!(
            pararoute_solve(instance, 30.0, &mut solution),
            ParaRouteStatus::Ok,
            "{}",
            last_error()
        );

        let mut objective = 0.0f64;
        let mut gap = -1.0f64;
        let mut optimal = false;
        let mut nodes = 0u64;
        let mut iterations = 0u64;
        let mut seconds = -1.0f64;
        assert_eq!(
            pararoute_solution_objective(solution, &mut objective),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_solution_gap_percent(solution, &mut gap),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_solution_is_optimal(solution, &mut optimal),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_solution_nodes_explored(solution, &mut nodes),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_solution_simplex_iterations(solution, &mut iterations),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_solution_run_time_seconds(solution, &mut seconds),
            ParaRouteStatus::Ok
        );
        assert!(objective > 0.0);
        assert_eq!(gap, 0.0);
        assert!(optimal);
        assert!(nodes >= 1);
        assert!(iterations >= 1);
        assert!(seconds >= 0.0);

        // Walk every route through the buffer API and check coverage.
        let mut route_count = 0u32;
        assert_eq!(
            pararoute_solution_route_count(solution, &mut route_count),
            ParaRouteStatus::Ok
        );
        assert!(route_count >= 1);
        let mut seen = Vec::new();
        for route in 0..route_count {
            let mut length = 0u32;
            assert_eq!(
                pararoute_solution_route_length(solution, route, &mut length),
                ParaRouteStatus::Ok
            );
            let mut stops = vec![0u32; length as usize];
            let mut written = 0u32;
            assert_eq!(
                pararoute_solution_route_stops(
                    solution,
                    route,
                    stops.as_mut_ptr(),
                    length,
                    &mut written
                ),
                ParaRouteStatus::Ok
            );
            assert_eq!(written, length);
            assert_eq!(stops[0], 0, "routes leave from the depot");
            assert_eq!(
                stops[length as usize - 1],
                customers + 1,
                "routes finish at the returning depot copy"
            );
            seen.extend(stops[1..length as usize - 1].iter().copied());
        }
        seen.sort_unstable();
        let expected: Vec<u32> = (1..=customers).collect();
        assert_eq!(seen, expected, "every pickup point appears exactly once");

        pararoute_free_solution(solution);
        pararoute_free_instance(instance);
    }
}

#[test]
fn json_round_trip_preserves_the_instance() {
    unsafe {
        let instance = generate(5, 5, 9);
        let mut json = ptr::null_mut();
        assert_eq!(
            pararoute_instance_to_json(instance, &mut json),
            ParaRouteStatus::Ok
        );
        let text = take_string(json);

        let mut reloaded = ptr::null_mut();
        let c_text = CString::new(text.clone()).unwrap();
        assert_eq!(
            pararoute_instance_from_json(c_text.as_ptr(), &mut reloaded),
            ParaRouteStatus::Ok,
            "{}",
            last_error()
        );
        let mut round_tripped = ptr::null_mut();
        assert_eq!(
            pararoute_instance_to_json(reloaded, &mut round_tripped),
            ParaRouteStatus::Ok
        );
        assert_eq!(take_string(round_tripped), text);

        pararoute_free_instance(reloaded);
        pararoute_free_instance(instance);
    }
}

#[test]
fn oracle_agrees_with_the_solver() {
    unsafe {
        let instance = generate(6, 4, 11);
        let mut solved = ptr::null_mut();
        let mut reference = ptr::null_mut();
        assert_eq!(
            pararoute_solve(instance, 30.0, &mut solved),
            ParaRouteStatus::Ok
        );
        assert_eq!(
            pararoute_oracle(instance, &mut reference),
            ParaRouteStatus::Ok,
            "{}",
            last_error()
        );
        let mut a = 0.0f64;
        let mut b = 0.0f64;
        pararoute_solution_objective(solved, &mut a);
        pararoute_solution_objective(reference, &mut b);
        assert!((a - b).abs() < 1e-9, "solver {a} vs oracle {b}");
        pararoute_free_solution(solved);
        pararoute_free_solution(reference);
        pararoute_free_instance(instance);
    }
}

#[test]
fn oracle_rejects_oversized_instances() {
    unsafe {
        let mut instance = ptr::null_mut();
        assert_eq!(
            pararoute_generate(20, 10, true, 0, &mut instance),
            ParaRouteStatus::Ok
        );
        let mut solution = ptr::null_mut();
        assert_eq!(
            pararoute_oracle(instance, &mut solution),
            ParaRouteStatus::SizeLimit
        );
        assert!(solution.is_null());
        assert!(last_error().contains("exceed"), "{}", last_error());
        pararoute_free_instance(instance);
    }
}

#[test]
fn null_and_malformed_inputs_return_precise_statuses() {
    unsafe {
        assert_eq!(
            pararoute_generate(5, 5, false, 0, ptr::null_mut()),
            ParaRouteStatus::NullPointer
        );
        let mut out = ptr::null_mut();
        assert_eq!(
            pararoute_instance_from_json(ptr::null(), &mut out),
            ParaRouteStatus::NullPointer
        );

        let invalid_utf8: [c_char; 3] = [-1i8 as c_char, -1i8 as c_char, 0];
        assert_eq!(
            pararoute_instance_from_json(invalid_utf8.as_ptr(), &mut out),
            ParaRouteStatus::InvalidUtf8
        );

        let not_json = CString::new("not json at all").unwrap();
        assert_eq!(
            pararoute_instance_from_json(not_json.as_ptr(), &mut out),
            ParaRouteStatus::ParseError
        );
        assert!(!last_error().is_empty());

        // Structurally valid JSON violating instance rules: depot demand.
        let bad_instance = CString::new(
            r#"{"version":1,"seed":0,"capacity":2,"center":{"lat":0.0,"lon":0.0},
               "nodes":[{"id":0,"lat":0.0,"lon":0.0,"demand":7},
                        {"id":1,"lat":1.0,"lon":0.0,"demand":1}]}"#,
        )
        .unwrap();
        assert_eq!(
            pararoute_instance_from_json(bad_instance.as_ptr(), &mut out),
            ParaRouteStatus::InvalidInstance
        );

        let mut objective = 0.0;
        assert_eq!(
            pararoute_solution_objective(ptr::null(), &mut objective),
            ParaRouteStatus::NullPointer
        );

        // Freeing null handles must be a safe no-op.
        pararoute_free_instance(ptr::null_mut());
        pararoute_free_solution(ptr::null_mut());
        pararoute_free_string(ptr::null_mut());
    }
}

#[test]
fn invalid_solver_arguments_are_reported() {
    unsafe {
        let instance = generate(4, 4, 1);
        let mut solution = ptr::null_mut();
        assert_eq!(
            pararoute_solve(instance, -1.0, &mut solution),
            ParaRouteStatus::InvalidArgument
        );
        assert!(solution.is_null());
        pararoute_free_instance(instance);
    }
}

#[test]
fn route_index_and_buffer_errors_are_distinct() {
    unsafe {
        let instance = generate(4, 4, 5);
        let mut solution = ptr::null_mut();
        assert_eq!(
            pararoute_solve(instance, 30.0, &mut solution),
            ParaRouteStatus::Ok
        );
        let mut length = 0u32;
        assert_eq!(
            pararoute_solution_route_length(solution, 99, &mut length),
            ParaRouteStatus::IndexOutOfRange
        );
        let mut tiny = [0u32; 1];
        let mut written = 0u32;
        assert_eq!(
            pararoute_solution_route_stops(solution, 0, tiny.as_mut_ptr(), 1, &mut written),
            ParaRouteStatus::BufferTooSmall
        );
        pararoute_free_solution(solution);
        pararoute_free_instance(instance);
    }
}

#[test]
fn solution_json_lists_routes_and_loads() {
    unsafe {
        let instance = generate(6, 4, 3);
        let mut solution = ptr::null_mut();
        assert_eq!(
            pararoute_solve(instance, 30.0, &mut solution),
            ParaRouteStatus::Ok
        );
        let mut json = ptr::null_mut();
        assert_eq!(
            pararoute_solution_to_json(solution, &mut json),
            ParaRouteStatus::Ok
        );
        let parsed: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        assert!(parsed["objective_cost"].as_f64().unwrap() > 0.0);
        assert!(parsed["optimal"].as_bool().unwrap());
        assert!(!parsed["routes"].as_array().unwrap().is_empty());
        assert_eq!(
            parsed["routes"].as_array().unwrap().len(),
            parsed["loads"].as_array().unwrap().len()
        );
        pararoute_free_solution(solution);
        pararoute_free_instance(instance);
    }
}

/// The committed header must stand alone as C99: compile a translation unit
/// that uses it against a real compiler.
#[test]
fn generated_header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("smoke.c");
    std::fs::write(
        &source,
        r#"
#include "pararoute.h"

int check(void) {
    ParaRouteInstance *instance = 0;
    ParaRouteStatus status = pararoute_generate(5, 5, true, 0, &instance);
    if (status != PARA_ROUTE_STATUS_OK) return 1;
    ParaRouteSolution *solution = 0;
    status = pararoute_solve(instance, 30.0, &solution);
    double objective = 0.0;
    pararoute_solution_objective(solution, &objective);
    pararoute_free_solution(solution);
    pararoute_free_instance(instance);
    return objective > 0.0 ? 0 : 1;
}
"#,
    )
    .unwrap();
    let include_dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let output = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-c"])
        .arg("-I")
        .arg(include_dir)
        .arg("-o")
        .arg(dir.path().join("smoke.o"))
        .arg(&source)
        .output()
        .expect("cc should be available");
    assert!(
        output.status.success(),
        "header failed to compile:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
}
