//! End-to-end acceptance gate for the toolkit.
//!
//! Each test covers one numbered release criterion and prints a single
//! `ACCEPTANCE <k> <name>: PASS|FAIL` verdict line (visible under
//! `cargo test -- --nocapture`); on FAIL the test panics with one message
//! per broken check. The suite is deliberately self-contained: every
//! fixture is regenerated from pinned seeds, so a verdict never depends on
//! files on disk or on test ordering.

use ndarray::Array2;
use pararoute::branch_bound::{
    solve, solve_with_trace, SearchParams, SolveStats, Termination,
};
use pararoute::gcn::{
    build_adjacency, dataset_loss, gradient_check, make_training_example, normalized_adjacency,
    oracle_labeled_dataset, predict_routes, train, Example, GcnConfig, GcnModel, TrainConfig,
    FEATURE_DIM, GRADIENT_CHECK_TOL,
};
use pararoute::grid::{grid_to_csv, run_grid, GridConfig, GridRow, GRID_CSV_HEADER};
use pararoute::instance::{DemandMode, GeneratorConfig, Instance};
use pararoute::milp::{check_feasibility, MilpModel};
use pararoute::oracle::{exact_cvrp, held_karp_tsp};
use std::sync::OnceLock;
use std::time::Instant;

/// Two objective values are "the same optimum" when they agree this closely.
const MATCH_TOL: f64 = 1e-9;

fn report(number: u32, name: &str, failures: &[String]) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {number} {name}: {verdict}");
    assert!(
        failures.is_empty(),
        "acceptance check {number} ({name}):\n  {}",
        failures.join("\n  ")
    );
}

/// Search settings that always run to a proven optimum.
fn exhaustive_params() -> SearchParams {
    SearchParams {
        time_limit: f64::INFINITY,
        ..SearchParams::default()
    }
}

/// Fifty deterministic instances with at most seven customers, alternating
/// unit and grouped demands, each rebuilt with a capacity tightened so the
/// cheapest plan needs one, two, or three vehicles (cycling through all
/// three targets).
fn small_mixed_instances() -> Vec<Instance> {
    (0..50usize)
        .map(|idx| {
            let requests = 4 + (idx % 4) as u32;
            let unit = idx % 2 == 0;
            let config = GeneratorConfig {
                request_count: requests,
                capacity: requests,
                demand_mode: if unit { DemandMode::Unit } else { DemandMode::Grouped },
                max_group: if unit { 1 } else { 3 },
                ..GeneratorConfig::default()
            };
            let drawn = Instance::generate(&config, idx as u64)
                .expect("fixture generator settings are valid");
            let customers = drawn.customer_data();
            let largest = u64::from(customers.iter().map(|&(_, q)| q).max().unwrap_or(1));
            let vehicles = 1 + (idx % 3) as u64;
            let tight = drawn
                .total_demand()
                .div_ceil(vehicles)
                .max(largest);
            Instance::new(
                drawn.point(0),
                &customers,
                u32::try_from(tight).expect("small totals fit in u32"),
            )
        })
        .collect()
}

static DEFAULT_GRID: OnceLock<Vec<GridRow>> = OnceLock::new();

/// The default benchmark grid, run once and shared by the tests that audit
/// its shape and its cost magnitudes.
fn default_grid() -> &'static [GridRow] {
    DEFAULT_GRID
        .get_or_init(|| run_grid(&GridConfig::default()).expect("default grid settings are valid"))
        .as_slice()
}

fn same_search(a: &SolveStats, b: &SolveStats) -> bool {
    a.objective == b.objective
        && a.best_bound == b.best_bound
        && a.gap_percent == b.gap_percent
        && a.nodes_explored == b.nodes_explored
        && a.simplex_iterations == b.simplex_iterations
}

#[test]
fn accept_1_small_instances_match_the_exhaustive_optimum() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for (idx, instance) in small_mixed_instances().iter().enumerate() {
        let reference =
            exact_cvrp(instance).expect("fixtures stay within the exhaustive solver's cap");
        let vehicles = reference.routes.route_count();
        if !(1..=3).contains(&vehicles) {
            failures.push(format!(
                "fixture {idx}: capacity was meant to force 1-3 vehicles, optimum uses {vehicles}"
            ));
        }
        let model = MilpModel::build(instance).expect("fixtures are valid instances");
        match solve(&model, &exhaustive_params()) {
            Ok(solved) if solved.termination != Termination::Optimal => failures.push(format!(
                "fixture {idx}: search stopped early ({})",
                solved.termination
            )),
            Ok(solved) if (solved.stats.objective - reference.objective).abs() > MATCH_TOL => {
                failures.push(format!(
                    "fixture {idx}: search found {:.12}, exhaustive enumeration found {:.12}",
                    solved.stats.objective, reference.objective
                ))
            }
            Ok(_) => {}
            Err(err) => failures.push(format!("fixture {idx}: solve failed: {err}")),
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        failures.push(format!("suite took {elapsed:.1}s, budget is 60s"));
    }
    report(1, "small instances match the exhaustive optimum", &failures);
}

#[test]
fn accept_2_roomy_vehicles_match_the_single_tour_optimum() {
    let mut failures = Vec::new();
    for idx in 0..20u64 {
        let requests = 3 + (idx % 5) as u32;
        let config = GeneratorConfig {
            request_count: requests,
            // Unit demands sum to the request count, so one vehicle fits all.
            capacity: requests,
            demand_mode: DemandMode::Unit,
            max_group: 1,
            ..GeneratorConfig::default()
        };
        let instance =
            Instance::generate(&config, 100 + idx).expect("fixture generator settings are valid");
        let customers: Vec<usize> = instance.customers().collect();
        let (tour_cost, _) = held_karp_tsp(instance.costs(), &customers)
            .expect("fixtures stay within the dynamic-programming cap");
        let model = MilpModel::build(&instance).expect("fixtures are valid instances");
        match solve(&model, &exhaustive_params()) {
            Ok(solved) if (solved.stats.objective - tour_cost).abs() > MATCH_TOL => {
                failures.push(format!(
                    "fixture {idx}: search found {:.12}, single-tour optimum is {:.12}",
                    solved.stats.objective, tour_cost
                ))
            }
            Ok(_) => {}
            Err(err) => failures.push(format!("fixture {idx}: solve failed: {err}")),
        }
    }
    report(2, "roomy vehicles match the single-tour optimum", &failures);
}

#[test]
fn accept_3_relaxation_bounds_never_overshoot() {
    let mut failures = Vec::new();
    for (idx, instance) in small_mixed_instances().iter().enumerate() {
        let model = MilpModel::build(instance).expect("fixtures are valid instances");
        let (solved, trace) = match solve_with_trace(&model, &exhaustive_params()) {
            Ok(pair) => pair,
            Err(err) => {
                failures.push(format!("fixture {idx}: solve failed: {err}"));
                continue;
            }
        };
        let optimum = solved.stats.objective;
        match trace.root_objective {
            Some(root) if root > optimum + MATCH_TOL => failures.push(format!(
                "fixture {idx}: root relaxation {root:.12} exceeds the optimum {optimum:.12}"
            )),
            Some(_) => {}
            None => failures.push(format!("fixture {idx}: root relaxation value is missing")),
        }
        if let Some(pair) = trace.bound_history.windows(2).find(|w| w[1] < w[0]) {
            failures.push(format!(
                "fixture {idx}: lower bound dropped from {:.12} to {:.12}",
                pair[0], pair[1]
            ));
        }
    }
    report(3, "relaxation bounds never overshoot", &failures);
}

#[test]
fn accept_4_default_grid_emits_fifteen_well_formed_rows() {
    let mut failures = Vec::new();
    let rows = default_grid();
    if rows.len() != 15 {
        failures.push(format!("expected 15 rows, found {}", rows.len()));
    }
    let expected_cells: Vec<(u32, u32)> = [10u32, 15, 20, 30, 40]
        .iter()
        .flat_map(|&n| [10u32, 15, 20].iter().map(move |&q| (n, q)))
        .collect();
    let cells: Vec<(u32, u32)> = rows.iter().map(|row| (row.requests, row.capacity)).collect();
    if cells != expected_cells {
        failures.push(format!(
            "row coordinates {cells:?} differ from the default request/capacity cross"
        ));
    }
    if GRID_CSV_HEADER != "n,Q,nodes_explored,simplex_iterations,run_time_s,objective_cost,gap_percent" {
        failures.push(format!("unexpected column header: {GRID_CSV_HEADER}"));
    }
    let csv = grid_to_csv(rows);
    if csv.lines().next() != Some(GRID_CSV_HEADER) {
        failures.push("emitted table does not start with the column header".into());
    }
    if csv.lines().count() != rows.len() + 1 {
        failures.push("emitted table does not hold exactly one line per cell".into());
    }
    for row in rows {
        match &row.result {
            // The default budget is 30 s per cell: a cell either proves its
            // optimum (gap exactly zero) or stops on the clock with a
            // positive gap and a run time inside [30 s, 31 s].
            Ok(stats) => {
                let proven = stats.gap_percent == 0.0;
                let timed_out =
                    stats.gap_percent > 0.0 && (30.0..=31.0).contains(&stats.run_time);
                if !proven && !timed_out {
                    failures.push(format!(
                        "cell n={} Q={}: gap {:.4}% at {:.2}s matches neither stopping rule",
                        row.requests, row.capacity, stats.gap_percent, stats.run_time
                    ));
                }
            }
            Err(message) => failures.push(format!(
                "cell n={} Q={} failed: {message}",
                row.requests, row.capacity
            )),
        }
    }
    report(4, "default grid emits fifteen well-formed rows", &failures);
}

#[test]
fn accept_5_default_grid_costs_sit_in_the_expected_band() {
    let mut failures = Vec::new();
    for row in default_grid() {
        match &row.result {
            // Degree-denominated costs around a metro-sized jitter square:
            // every cell's objective lands between 0.005 and 0.10.
            Ok(stats) if !(0.005..=0.10).contains(&stats.objective) => failures.push(format!(
                "cell n={} Q={}: objective {:.7} is outside [0.005, 0.10]",
                row.requests, row.capacity, stats.objective
            )),
            Ok(_) => {}
            Err(message) => failures.push(format!(
                "cell n={} Q={} failed: {message}",
                row.requests, row.capacity
            )),
        }
    }
    report(5, "default grid costs sit in the expected band", &failures);
}

#[test]
fn accept_6_graph_network_algebra_holds() {
    let mut failures = Vec::new();

    // Complete graphs normalize to the exactly uniform matrix.
    for n in 2..=12usize {
        let mut complete = Array2::ones((n, n));
        for i in 0..n {
            complete[[i, i]] = 0.0;
        }
        let normalized = normalized_adjacency(&complete);
        let uniform = 1.0 / n as f64;
        if normalized.iter().any(|&value| value != uniform) {
            failures.push(format!(
                "complete graph on {n} nodes does not normalize to exactly 1/{n}"
            ));
        }
    }

    // Relabeling nodes relabels the outputs and changes nothing else.
    let generator = GeneratorConfig {
        request_count: 7,
        capacity: 8,
        ..GeneratorConfig::default()
    };
    let instance = Instance::generate(&generator, 11).expect("valid generator settings");
    let labeled = exact_cvrp(&instance).expect("small instance labels exactly");
    let example = make_training_example(&instance, &labeled.routes);
    let model = GcnModel::new(FEATURE_DIM, &GcnConfig::default(), 3).expect("valid architecture");
    let base = model
        .forward(&example.features, &example.adjacency, &example.edge_costs)
        .expect("forward pass succeeds");
    let n = example.features.nrows();
    let shift = n / 2 + 1;
    let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
    let features = Array2::from_shape_fn((n, FEATURE_DIM), |(i, c)| {
        example.features[[perm[i], c]]
    });
    let adjacency =
        Array2::from_shape_fn((n, n), |(i, j)| example.adjacency[[perm[i], perm[j]]]);
    let costs = Array2::from_shape_fn((n, n), |(i, j)| example.edge_costs[[perm[i], perm[j]]]);
    let permuted = model
        .forward(&features, &adjacency, &costs)
        .expect("forward pass succeeds");
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((permuted.logits[[i, j]] - base.logits[[perm[i], perm[j]]]).abs());
            worst = worst.max(
                (permuted.probabilities[[i, j]] - base.probabilities[[perm[i], perm[j]]]).abs(),
            );
        }
    }
    if worst > 1e-9 {
        failures.push(format!("relabeling the nodes moved outputs by {worst:.3e}"));
    }
    // The default graph construction really is the complete graph, so the
    // uniform-normalization fact above applies to every generated example.
    let mut complete = Array2::ones((n, n));
    for i in 0..n {
        complete[[i, i]] = 0.0;
    }
    if build_adjacency(&instance, None) != complete {
        failures.push("default graph construction is not the complete graph".into());
    }

    // Analytic gradients agree with central finite differences.
    let architecture = GcnConfig {
        layers: 3,
        hidden: 8,
        head_hidden: 8,
    };
    for seed in 0..10u64 {
        let generator = GeneratorConfig {
            request_count: 5,
            capacity: 6,
            max_group: 3,
            ..GeneratorConfig::default()
        };
        let instance =
            Instance::generate(&generator, 200 + seed).expect("valid generator settings");
        let labeled = exact_cvrp(&instance).expect("small instance labels exactly");
        let example = make_training_example(&instance, &labeled.routes);
        let model = GcnModel::new(FEATURE_DIM, &architecture, seed).expect("valid architecture");
        match gradient_check(&model, &example, None) {
            Ok(error) if error >= GRADIENT_CHECK_TOL => failures.push(format!(
                "seed {seed}: worst relative gradient error {error:.3e} exceeds {GRADIENT_CHECK_TOL:.0e}"
            )),
            Ok(_) => {}
            Err(err) => failures.push(format!("seed {seed}: gradient check failed to run: {err}")),
        }
    }

    report(6, "graph network algebra holds", &failures);
}

/// Trains on 200 exactly-labeled ten-request instances and audits both the
/// held-out loss improvement and the quality of decoded plans on 50 more.
///
/// Known shortfall, kept failing on purpose: on complete graphs the
/// normalized adjacency is uniform, so after one convolution every node
/// carries the same embedding and an edge score can only depend on the pair
/// cost plus instance-wide context. A Bayes-optimal cost-only predictor
/// measured on this exact distribution cuts the class-weighted held-out
/// loss by ~14%, and trained models land at 12-14% — so the 30% bar below
/// is out of reach for this architecture, not for a particular training
/// schedule. The decoding checks (feasibility and cost ratio) do pass.
#[test]
fn accept_7_heatmap_training_and_decoding() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let generator = GeneratorConfig {
        request_count: 10,
        capacity: 10,
        ..GeneratorConfig::default()
    };
    let labeled = oracle_labeled_dataset(250, &generator, 0)
        .expect("labeling stays within the exhaustive solver's cap");
    let (train_half, holdout) = labeled.split_at(200);
    let train_examples: Vec<Example> = train_half.iter().map(|(_, _, e)| e.clone()).collect();
    let holdout_examples: Vec<Example> = holdout.iter().map(|(_, _, e)| e.clone()).collect();

    let mut model =
        GcnModel::new(FEATURE_DIM, &GcnConfig::default(), 0).expect("valid architecture");
    let initial = dataset_loss(&model, &holdout_examples, None).expect("holdout is non-empty");
    let schedule = TrainConfig {
        epochs: 200,
        learning_rate: 1e-2,
        batch_size: Some(32),
        ..TrainConfig::default()
    };
    train(&mut model, &train_examples, &schedule).expect("training stays finite");
    let trained = dataset_loss(&model, &holdout_examples, None).expect("holdout is non-empty");
    let cut = 1.0 - trained / initial;
    if !(cut >= 0.30) {
        failures.push(format!(
            "held-out loss cut {:.1}% is below the 30% bar (initial {initial:.4}, trained {trained:.4})",
            100.0 * cut
        ));
    }

    let mut infeasible = 0usize;
    let mut ratio_sum = 0.0;
    for (instance, optimal, _) in holdout {
        let predicted =
            predict_routes(&model, instance, 3, None).expect("decoding always returns a plan");
        if !check_feasibility(instance, &predicted).is_empty() {
            infeasible += 1;
        }
        ratio_sum += predicted.cost(instance.costs()) / optimal.cost(instance.costs());
    }
    let mean_ratio = ratio_sum / holdout.len() as f64;
    if infeasible > 0 {
        failures.push(format!(
            "{infeasible} of {} decoded plans violate capacity",
            holdout.len()
        ));
    }
    if mean_ratio > 1.5 {
        failures.push(format!(
            "decoded plans average {mean_ratio:.3}x the exact cost, above the 1.5x bar"
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 600.0 {
        failures.push(format!("suite took {elapsed:.0}s, budget is 600s"));
    }
    report(7, "heatmap training and decoding", &failures);
}

#[test]
fn accept_8_identical_seeds_reproduce_identical_searches() {
    let mut failures = Vec::new();

    // A solve run twice from scratch, to a proven optimum.
    let generator = GeneratorConfig {
        request_count: 7,
        capacity: 5,
        ..GeneratorConfig::default()
    };
    let instance = Instance::generate(&generator, 42).expect("valid generator settings");
    let rerun = || {
        let model = MilpModel::build(&instance).expect("fixture is a valid instance");
        solve(&model, &exhaustive_params()).expect("fixture solves")
    };
    let first = rerun();
    let second = rerun();
    if first.termination != second.termination || !same_search(&first.stats, &second.stats) {
        failures.push(format!(
            "repeated solve diverged: {:?} vs {:?}",
            first.stats, second.stats
        ));
    }

    // A capped solve run twice: stopping on a node budget is just as
    // reproducible because the budget counts nodes, not seconds.
    let capped = SearchParams {
        time_limit: f64::INFINITY,
        node_limit: Some(25),
        ..SearchParams::default()
    };
    let rerun_capped = || {
        let model = MilpModel::build(&instance).expect("fixture is a valid instance");
        solve(&model, &capped).expect("warm start guarantees an incumbent")
    };
    let first = rerun_capped();
    let second = rerun_capped();
    if first.termination != second.termination || !same_search(&first.stats, &second.stats) {
        failures.push(format!(
            "repeated capped solve diverged: {:?} vs {:?}",
            first.stats, second.stats
        ));
    }

    // A small grid run twice.
    let config = GridConfig {
        request_counts: vec![6, 8],
        capacities: vec![6, 10],
        seed_base: 7,
        time_limit: 60.0,
        ..GridConfig::default()
    };
    let first = run_grid(&config).expect("grid settings are valid");
    let second = run_grid(&config).expect("grid settings are valid");
    for (a, b) in first.iter().zip(&second) {
        let matches = a.requests == b.requests
            && a.capacity == b.capacity
            && match (&a.result, &b.result) {
                (Ok(x), Ok(y)) => same_search(x, y),
                (Err(x), Err(y)) => x == y,
                _ => false,
            };
        if !matches {
            failures.push(format!(
                "grid cell n={} Q={} diverged between runs",
                a.requests, a.capacity
            ));
        }
    }

    report(8, "identical seeds reproduce identical searches", &failures);
}
