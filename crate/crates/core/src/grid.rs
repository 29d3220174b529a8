//! Scenario sweeps: solve a cartesian product of request counts and vehicle
//! capacities, render the results as a CSV table, and extract per-axis trend
//! files (cost versus capacity at fixed fleet demand, and vice versa).
//!
//! Cells are independent: each gets its own instance seeded by a stable hash
//! of the grid seed and the cell coordinates, so the sweep can run in
//! parallel and any subset of cells can be reproduced in isolation.

use crate::branch_bound::{self, SearchParams, SolveStats};
use crate::instance::{GeneratorConfig, Instance};
use crate::milp::MilpModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column header of the scenario table, in report order.
pub const GRID_CSV_HEADER: &str =
    "n,Q,nodes_explored,simplex_iterations,run_time_s,objective_cost,gap_percent";

/// Marker written in place of every statistic column when a cell fails.
pub const ERROR_MARKER: &str = "error";

/// A full sweep description: which cells to run and how to run each one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    /// Request counts, one per table block (outer loop).
    pub request_counts: Vec<u32>,
    /// Vehicle capacities crossed with every request count (inner loop).
    pub capacities: Vec<u32>,
    /// Root seed; each cell derives its own seed from this and its coordinates.
    pub seed_base: u64,
    /// Per-cell solve budget in seconds.
    pub time_limit: f64,
    /// Shared generator settings; `request_count` and `capacity` are
    /// overridden per cell.
    pub generator: GeneratorConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            request_counts: vec![10, 15, 20, 30, 40],
            capacities: vec![10, 15, 20],
            seed_base: 0,
            time_limit: 30.0,
            generator: GeneratorConfig::default(),
        }
    }
}

impl GridConfig {
    fn validate(&self) -> Result<(), GridError> {
        if self.request_counts.is_empty() {
            return Err(GridError::EmptyAxis { axis: "request_counts" });
        }
        if self.capacities.is_empty() {
            return Err(GridError::EmptyAxis { axis: "capacities" });
        }
        if self.request_counts.iter().any(|&n| n == 0) {
            return Err(GridError::NonPositive { axis: "request_counts" });
        }
        if self.capacities.iter().any(|&q| q == 0) {
            return Err(GridError::NonPositive { axis: "capacities" });
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return Err(GridError::BadTimeLimit {
                value: self.time_limit,
            });
        }
        Ok(())
    }
}

/// Outcome of one (requests, capacity) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub requests: u32,
    pub capacity: u32,
    /// Solve statistics, or the failure text when the cell could not finish.
    pub result: Result<SolveStats, String>,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{axis} must list at least one value")]
    EmptyAxis { axis: &'static str },
    #[error("{axis} values must be positive")]
    NonPositive { axis: &'static str },
    #[error("time limit must be a positive number of seconds, got {value}")]
    BadTimeLimit { value: f64 },
    #[error("expected header {GRID_CSV_HEADER:?}, found {found:?}")]
    HeaderMismatch { found: String },
    #[error("line {line}: {details}")]
    BadCsvRow { line: usize, details: String },
}

/// Stable 64-bit mix (splitmix64 finalizer).
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for the instance at one grid cell. Chained mixing keeps cells
/// independent: swapping the roles of `requests` and `capacity` or nudging
/// the base produces an unrelated stream.
pub fn cell_seed(seed_base: u64, requests: u32, capacity: u32) -> u64 {
    let mut s = splitmix64(seed_base);
    s = splitmix64(s ^ u64::from(requests));
    splitmix64(s ^ u64::from(capacity))
}

fn run_cell(config: &GridConfig, requests: u32, capacity: u32) -> GridRow {
    let generator = GeneratorConfig {
        request_count: requests,
        capacity,
        ..config.generator.clone()
    };
    let params = SearchParams {
        time_limit: config.time_limit,
        ..SearchParams::default()
    };
    let result = Instance::generate(&generator, cell_seed(config.seed_base, requests, capacity))
        .map_err(|e| e.to_string())
        .and_then(|instance| MilpModel::build(&instance).map_err(|e| e.to_string()))
        .and_then(|model| branch_bound::solve(&model, &params).map_err(|e| e.to_string()))
        .map(|solved| solved.stats);
    GridRow {
        requests,
        capacity,
        result,
    }
}

/// Run every cell of the sweep. Rows come back in axis order (request counts
/// outer, capacities inner) regardless of which cells finish first; a failed
/// cell is recorded in its row and does not stop the rest of the sweep.
pub fn run_grid(config: &GridConfig) -> Result<Vec<GridRow>, GridError> {
    config.validate()?;
    let cells: Vec<(u32, u32)> = config
        .request_counts
        .iter()
        .flat_map(|&n| config.capacities.iter().map(move |&q| (n, q)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(n, q)| run_cell(config, n, q))
        .collect())
}

fn format_objective(value: f64) -> String {
    format!("{value:.7}")
}

/// Render rows as the scenario table, one CSV line per cell. Failed cells
/// carry [`ERROR_MARKER`] in every statistic column; the failure text itself
/// lives on the [`GridRow`] for log output.
pub fn grid_to_csv(rows: &[GridRow]) -> String {
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for row in rows {
        match &row.result {
            Ok(stats) => {
                out.push_str(&format!(
                    "{},{},{},{},{:.2},{},{:.4}\n",
                    row.requests,
                    row.capacity,
                    stats.nodes_explored,
                    stats.simplex_iterations,
                    stats.run_time,
                    format_objective(stats.objective),
                    stats.gap_percent,
                ));
            }
            Err(_) => {
                out.push_str(&format!(
                    "{},{},{m},{m},{m},{m},{m}\n",
                    row.requests,
                    row.capacity,
                    m = ERROR_MARKER,
                ));
            }
        }
    }
    out
}

/// Parse a table produced by [`grid_to_csv`] back into rows.
///
/// The bound column is not stored in the table, so it is reconstructed from
/// the objective and the gap; trend extraction never reads it.
pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>, GridError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == GRID_CSV_HEADER => {}
        other => {
            return Err(GridError::HeaderMismatch {
                found: other.map(|(_, h)| h.to_string()).unwrap_or_default(),
            })
        }
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let bad = |details: String| GridError::BadCsvRow {
            line: index + 1,
            details,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 columns, found {}", fields.len())));
        }
        let requests: u32 = fields[0]
            .parse()
            .map_err(|e| bad(format!("bad request count {:?}: {e}", fields[0])))?;
        let capacity: u32 = fields[1]
            .parse()
            .map_err(|e| bad(format!("bad capacity {:?}: {e}", fields[1])))?;
        let result = if fields[2] == ERROR_MARKER {
            Err(ERROR_MARKER.to_string())
        } else {
            let parse_f64 = |field: &str, what: &str| {
                field
                    .parse::<f64>()
                    .map_err(|e| bad(format!("bad {what} {field:?}: {e}")))
            };
            let nodes_explored: u64 = fields[2]
                .parse()
                .map_err(|e| bad(format!("bad node count {:?}: {e}", fields[2])))?;
            let simplex_iterations: u64 = fields[3]
                .parse()
                .map_err(|e| bad(format!("bad iteration count {:?}: {e}", fields[3])))?;
            let run_time = parse_f64(fields[4], "run time")?;
            let objective = parse_f64(fields[5], "objective")?;
            let gap_percent = parse_f64(fields[6], "gap")?;
            Ok(SolveStats {
                nodes_explored,
                simplex_iterations,
                run_time,
                objective,
                best_bound: objective * (1.0 - gap_percent / 100.0),
                gap_percent,
            })
        };
        rows.push(GridRow {
            requests,
            capacity,
            result,
        });
    }
    Ok(rows)
}

/// One trend file: its suggested file name and CSV body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrendFile {
    pub name: String,
    pub csv: String,
}

fn unique_in_order(values: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut seen = Vec::new();
    for v in values {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

/// Slice the table along each axis: one cost-versus-capacity file per request
/// count and one cost-versus-requests file per capacity. Failed cells are
/// simply absent from the affected files.
pub fn emit_trends(rows: &[GridRow]) -> Vec<TrendFile> {
    let request_counts = unique_in_order(rows.iter().map(|r| r.requests));
    let capacities = unique_in_order(rows.iter().map(|r| r.capacity));
    let mut files = Vec::new();
    for &n in &request_counts {
        let mut csv = String::from("Q,objective_cost\n");
        for row in rows.iter().filter(|r| r.requests == n) {
            if let Ok(stats) = &row.result {
                csv.push_str(&format!(
                    "{},{}\n",
                    row.capacity,
                    format_objective(stats.objective)
                ));
            }
        }
        files.push(TrendFile {
            name: format!("cost_vs_capacity_n{n}.csv"),
            csv,
        });
    }
    for &q in &capacities {
        let mut csv = String::from("n,objective_cost\n");
        for row in rows.iter().filter(|r| r.capacity == q) {
            if let Ok(stats) = &row.result {
                csv.push_str(&format!(
                    "{},{}\n",
                    row.requests,
                    format_objective(stats.objective)
                ));
            }
        }
        files.push(TrendFile {
            name: format!("cost_vs_requests_Q{q}.csv"),
            csv,
        });
    }
    files
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DemandMode;

    fn fake_stats(objective: f64) -> SolveStats {
        SolveStats {
            nodes_explored: 3,
            simplex_iterations: 41,
            run_time: 0.0125,
            objective,
            best_bound: objective,
            gap_percent: 0.0,
        }
    }

    fn fake_default_rows() -> Vec<GridRow> {
        let config = GridConfig::default();
        let mut rows = Vec::new();
        for &n in &config.request_counts {
            for &q in &config.capacities {
                rows.push(GridRow {
                    requests: n,
                    capacity: q,
                    result: Ok(fake_stats(0.01 * f64::from(n) / f64::from(q))),
                });
            }
        }
        rows
    }

    fn small_config() -> GridConfig {
        GridConfig {
            request_counts: vec![3, 4],
            capacities: vec![2, 3],
            seed_base: 11,
            time_limit: 10.0,
            generator: GeneratorConfig {
                demand_mode: DemandMode::Unit,
                max_group: 1,
                ..GeneratorConfig::default()
            },
        }
    }

    #[test]
    fn default_config_names_fifteen_cells() {
        let config = GridConfig::default();
        assert_eq!(config.request_counts, vec![10, 15, 20, 30, 40]);
        assert_eq!(config.capacities, vec![10, 15, 20]);
        assert_eq!(config.time_limit, 30.0);
        assert_eq!(
            config.request_counts.len() * config.capacities.len(),
            15
        );
    }

    #[test]
    fn rejects_degenerate_configs() {
        let empty = GridConfig {
            request_counts: vec![],
            ..small_config()
        };
        assert!(matches!(
            run_grid(&empty),
            Err(GridError::EmptyAxis { axis: "request_counts" })
        ));
        let zero = GridConfig {
            capacities: vec![2, 0],
            ..small_config()
        };
        assert!(matches!(
            run_grid(&zero),
            Err(GridError::NonPositive { axis: "capacities" })
        ));
        let bad_time = GridConfig {
            time_limit: 0.0,
            ..small_config()
        };
        assert!(matches!(
            run_grid(&bad_time),
            Err(GridError::BadTimeLimit { .. })
        ));
    }

    #[test]
    fn cell_seeds_distinguish_coordinates_and_base() {
        assert_eq!(cell_seed(7, 10, 15), cell_seed(7, 10, 15));
        assert_ne!(cell_seed(7, 10, 15), cell_seed(7, 15, 10));
        assert_ne!(cell_seed(7, 10, 15), cell_seed(8, 10, 15));
        assert_ne!(cell_seed(7, 10, 15), cell_seed(7, 10, 16));
    }

    #[test]
    fn rows_follow_axis_order() {
        let rows = run_grid(&small_config()).unwrap();
        let coordinates: Vec<(u32, u32)> =
            rows.iter().map(|r| (r.requests, r.capacity)).collect();
        assert_eq!(coordinates, vec![(3, 2), (3, 3), (4, 2), (4, 3)]);
        for row in &rows {
            let stats = row.result.as_ref().expect("cell should solve");
            assert!(stats.objective > 0.0);
            assert_eq!(stats.gap_percent, 0.0);
        }
    }

    #[test]
    fn reruns_reproduce_everything_but_wall_time() {
        let config = small_config();
        let first = run_grid(&config).unwrap();
        let second = run_grid(&config).unwrap();
        for (a, b) in first.iter().zip(&second) {
            let (sa, sb) = (a.result.as_ref().unwrap(), b.result.as_ref().unwrap());
            assert_eq!(sa.objective, sb.objective);
            assert_eq!(sa.gap_percent, sb.gap_percent);
            assert_eq!(sa.nodes_explored, sb.nodes_explored);
            assert_eq!(sa.simplex_iterations, sb.simplex_iterations);
        }
    }

    #[test]
    fn failing_cell_is_marked_and_skipped_by_trends() {
        // Parties of up to four cannot be generated for a one-seat vehicle,
        // so the Q=1 cell fails while Q=10 still solves.
        let config = GridConfig {
            request_counts: vec![4],
            capacities: vec![1, 10],
            seed_base: 0,
            time_limit: 10.0,
            generator: GeneratorConfig {
                demand_mode: DemandMode::Grouped,
                max_group: 4,
                ..GeneratorConfig::default()
            },
        };
        let rows = run_grid(&config).unwrap();
        let failure = rows[0].result.as_ref().unwrap_err();
        assert!(failure.contains("max_group"), "unexpected failure: {failure}");
        assert!(rows[1].result.is_ok());
        let csv = grid_to_csv(&rows);
        let error_line = csv.lines().nth(1).unwrap();
        assert_eq!(error_line, "4,1,error,error,error,error,error");
        let trends = emit_trends(&rows);
        let fixed_n = trends.iter().find(|f| f.name == "cost_vs_capacity_n4.csv").unwrap();
        assert_eq!(fixed_n.csv.lines().count(), 2, "header plus the Q=10 point");
    }

    #[test]
    fn csv_header_and_formats_are_fixed() {
        let rows = vec![GridRow {
            requests: 40,
            capacity: 15,
            result: Ok(SolveStats {
                nodes_explored: 1379,
                simplex_iterations: 250133,
                run_time: 30.00492,
                objective: 0.0496514,
                best_bound: 0.0450752,
                gap_percent: 9.2159,
            }),
        }];
        let csv = grid_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,Q,nodes_explored,simplex_iterations,run_time_s,objective_cost,gap_percent"
        );
        assert_eq!(lines.next().unwrap(), "40,15,1379,250133,30.00,0.0496514,9.2159");
    }

    #[test]
    fn csv_round_trips_through_parse() {
        let mut rows = fake_default_rows();
        rows[4].result = Err("solver gave up".to_string());
        let parsed = parse_grid_csv(&grid_to_csv(&rows)).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (orig, back) in rows.iter().zip(&parsed) {
            assert_eq!(orig.requests, back.requests);
            assert_eq!(orig.capacity, back.capacity);
            match (&orig.result, &back.result) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.nodes_explored, b.nodes_explored);
                    assert_eq!(a.simplex_iterations, b.simplex_iterations);
                    assert!((a.objective - b.objective).abs() < 1e-7);
                    assert!((a.gap_percent - b.gap_percent).abs() < 1e-4);
                }
                (Err(_), Err(marker)) => assert_eq!(marker, ERROR_MARKER),
                other => panic!("row changed shape: {other:?}"),
            }
        }
    }

    #[test]
    fn parse_rejects_foreign_tables() {
        let wrong_header = "a,b,c\n1,2,3\n";
        assert!(matches!(
            parse_grid_csv(wrong_header),
            Err(GridError::HeaderMismatch { .. })
        ));
        let short_row = format!("{GRID_CSV_HEADER}\n10,15,3\n");
        assert!(matches!(
            parse_grid_csv(&short_row),
            Err(GridError::BadCsvRow { line: 2, .. })
        ));
        let bad_number = format!("{GRID_CSV_HEADER}\n10,15,3,41,x,0.05,0.0\n");
        assert!(matches!(
            parse_grid_csv(&bad_number),
            Err(GridError::BadCsvRow { line: 2, .. })
        ));
    }

    #[test]
    fn default_shape_yields_eight_trend_files() {
        let trends = emit_trends(&fake_default_rows());
        let names: Vec<&str> = trends.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "cost_vs_capacity_n10.csv",
                "cost_vs_capacity_n15.csv",
                "cost_vs_capacity_n20.csv",
                "cost_vs_capacity_n30.csv",
                "cost_vs_capacity_n40.csv",
                "cost_vs_requests_Q10.csv",
                "cost_vs_requests_Q15.csv",
                "cost_vs_requests_Q20.csv",
            ]
        );
        for file in trends.iter().take(5) {
            assert_eq!(file.csv.lines().next().unwrap(), "Q,objective_cost");
            assert_eq!(file.csv.lines().count(), 1 + 3);
        }
        for file in trends.iter().skip(5) {
            assert_eq!(file.csv.lines().next().unwrap(), "n,objective_cost");
            assert_eq!(file.csv.lines().count(), 1 + 5);
        }
    }
}
