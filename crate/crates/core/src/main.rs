//! Command-line front end: instance generation, exact solves, brute-force
//! reference solves, scenario sweeps, trend extraction, and the
//! edge-prediction model's training/decoding/gradient-check workflows.

use clap::{Args, Parser, Subcommand, ValueEnum};
use pararoute::branch_bound::{self, SearchParams, SolutionFile, SolveError, Termination};
use pararoute::gcn::{
    make_training_example, oracle_labeled_dataset, GcnConfig, GcnError, GcnModel, TrainConfig,
    FEATURE_DIM, GRADIENT_CHECK_TOL,
};
use pararoute::grid::{self, GridConfig, GridError, GridRow};
use pararoute::instance::{DemandMode, GeneratorConfig, Instance, InstanceError};
use pararoute::milp::{check_feasibility, MilpModel, ModelError, Routes};
use pararoute::oracle::{self, OracleError};
use serde::Deserialize;
use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

/// The run stopped at a limit but still carries a feasible plan.
const EXIT_STOPPED_WITH_INCUMBENT: u8 = 2;
/// No feasible plan exists for the input.
const EXIT_INFEASIBLE: u8 = 3;
/// The run stopped at a limit before finding any feasible plan.
const EXIT_NO_INCUMBENT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pararoute",
    version,
    about = "Capacity-constrained pickup routing: generate instances, solve them exactly, \
             sweep request/capacity scenarios, and train an edge-prediction model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Root random seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file, or directory for commands that write several files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// How result tables are printed.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Solve budget in seconds per instance or grid cell.
    #[arg(long, global = true, default_value_t = 30.0)]
    time_limit: f64,
    /// Progress chatter on stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it as JSON.
    Generate(GenerateArgs),
    /// Solve an instance to proven optimality by branch-and-bound.
    Solve {
        /// Instance JSON file.
        instance: PathBuf,
    },
    /// Solve a small instance by exhaustive partition enumeration.
    Oracle {
        /// Instance JSON file.
        instance: PathBuf,
    },
    /// Solve the full request-count x capacity scenario sweep.
    Grid(GridArgs),
    /// Slice a saved grid table into per-axis trend files.
    Trends {
        /// Grid CSV produced by the grid command.
        table: PathBuf,
    },
    /// Train the edge-prediction model on optimally-solved instances.
    TrainGcn(TrainGcnArgs),
    /// Predict routes for an instance with a trained model.
    Decode(DecodeArgs),
    /// Compare analytic model gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct GeneratorArgs {
    /// Total passengers requesting pickup.
    #[arg(long, default_value_t = 10)]
    requests: u32,
    /// Vehicle capacity in seats.
    #[arg(long, default_value_t = 10)]
    capacity: u32,
    /// One passenger per pickup point instead of grouped parties.
    #[arg(long)]
    unit: bool,
    /// Largest party size when drawing grouped pickups.
    #[arg(long, default_value_t = 4)]
    max_group: u32,
}

impl GeneratorArgs {
    fn to_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            request_count: self.requests,
            capacity: self.capacity,
            demand_mode: if self.unit {
                DemandMode::Unit
            } else {
                DemandMode::Grouped
            },
            max_group: if self.unit { 1 } else { self.max_group },
            ..GeneratorConfig::default()
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
}

#[derive(Args)]
struct GridArgs {
    /// Request counts, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [10u32, 15, 20, 30, 40])]
    requests: Vec<u32>,
    /// Vehicle capacities, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [10u32, 15, 20])]
    capacities: Vec<u32>,
    /// One passenger per pickup point instead of grouped parties.
    #[arg(long)]
    unit: bool,
    /// Largest party size when drawing grouped pickups.
    #[arg(long, default_value_t = 4)]
    max_group: u32,
}

#[derive(Args)]
struct TrainGcnArgs {
    /// Number of self-generated training instances (ignored with --manifest).
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Passengers per self-generated training instance.
    #[arg(long, default_value_t = 10)]
    requests: u32,
    /// Vehicle capacity for self-generated training instances.
    #[arg(long, default_value_t = 10)]
    capacity: u32,
    /// JSON file listing instance and solution files to train on instead.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Passes over the training set.
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Adam step size.
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    /// Examples per parameter update; omit for full-batch steps.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Positive-edge weight in the loss; omit to balance classes per example.
    #[arg(long)]
    pos_weight: Option<f64>,
    /// Graph convolution layers.
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Node embedding width.
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    /// Hidden units in the edge-scoring head.
    #[arg(long, default_value_t = 32)]
    head_hidden: usize,
}

#[derive(Args)]
struct DecodeArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// Trained model checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Partial plans kept per search level; 1 decodes greedily.
    #[arg(long, default_value_t = 3)]
    beam: usize,
    /// Keep only this many nearest neighbors per node in the input graph.
    #[arg(long)]
    knn: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Independent model/instance draws to test.
    #[arg(long, default_value_t = 10)]
    trials: u64,
    /// Passengers per test instance.
    #[arg(long, default_value_t = 5)]
    requests: u32,
    /// Vehicle capacity per test instance.
    #[arg(long, default_value_t = 3)]
    capacity: u32,
}

/// Instance and solution files that together form a training set.
#[derive(Deserialize)]
struct Manifest {
    instances: Vec<PathBuf>,
    solutions: Vec<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot {action} {path}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}")]
    BadInstance {
        path: PathBuf,
        #[source]
        source: InstanceError,
    },
    #[error("manifest lists {instances} instances but {solutions} solutions")]
    ManifestMismatch { instances: usize, solutions: usize },
    #[error("{path}: solution does not fit the instance: {details}")]
    BadSolution { path: PathBuf, details: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Gcn(#[from] GcnError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::Generate(args) => generate(cli, args),
        Command::Solve { instance } => solve(cli, instance),
        Command::Oracle { instance } => oracle_solve(cli, instance),
        Command::Grid(args) => run_grid(cli, args),
        Command::Trends { table } => trends(cli, table),
        Command::TrainGcn(args) => train_gcn(cli, args),
        Command::Decode(args) => decode(cli, args),
        Command::Gradcheck(args) => gradcheck(cli, args),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

/// Write to the file when one is given, otherwise print to stdout.
fn emit(target: Option<&Path>, text: &str) -> Result<(), CliError> {
    match target {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    Instance::from_json_str(&read_text(path)?).map_err(|source| CliError::BadInstance {
        path: path.to_path_buf(),
        source,
    })
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<ExitCode, CliError> {
    let instance = Instance::generate(&args.generator.to_config(), cli.seed)?;
    emit(cli.output.as_deref(), &instance.to_json_string())?;
    if cli.verbose {
        eprintln!(
            "generated {} pickup points totalling {} passengers, capacity {}",
            instance.n_customers(),
            instance.total_demand(),
            instance.capacity()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn print_stats(cli: &Cli, instance: &Instance, row: &GridRow) -> Result<(), CliError> {
    match cli.format {
        OutputFormat::Csv => print!("{}", grid::grid_to_csv(std::slice::from_ref(row))),
        OutputFormat::Json => {
            let stats = row.result.as_ref().expect("only solved rows are printed");
            println!(
                "{}",
                serde_json::to_string(&serde_json::json!({
                    "n": instance.total_demand(),
                    "Q": instance.capacity(),
                    "nodes_explored": stats.nodes_explored,
                    "simplex_iterations": stats.simplex_iterations,
                    "run_time_s": stats.run_time,
                    "objective_cost": stats.objective,
                    "gap_percent": stats.gap_percent,
                }))?
            );
        }
    }
    Ok(())
}

fn solve(cli: &Cli, instance_path: &Path) -> Result<ExitCode, CliError> {
    let instance = load_instance(instance_path)?;
    let model = MilpModel::build(&instance)?;
    let params = SearchParams {
        time_limit: cli.time_limit,
        verbose: cli.verbose,
        ..SearchParams::default()
    };
    let solved = match branch_bound::solve(&model, &params) {
        Ok(solved) => solved,
        Err(SolveError::Infeasible) => {
            eprintln!("no feasible plan exists for this instance");
            return Ok(ExitCode::from(EXIT_INFEASIBLE));
        }
        Err(SolveError::NoIncumbent { best_bound }) => {
            eprintln!(
                "stopped at the limit before finding any feasible plan; \
                 cost is at least {best_bound:.7}"
            );
            return Ok(ExitCode::from(EXIT_NO_INCUMBENT));
        }
        Err(other) => return Err(other.into()),
    };
    let solution = SolutionFile::new(&solved, instance.demands());
    let destination = cli
        .output
        .clone()
        .unwrap_or_else(|| instance_path.with_extension("solution.json"));
    write_text(&destination, &serde_json::to_string_pretty(&solution)?)?;
    if cli.verbose {
        eprintln!(
            "terminated: {}, wrote {}",
            solved.termination,
            destination.display()
        );
    }
    let row = GridRow {
        requests: u32::try_from(instance.total_demand()).unwrap_or(u32::MAX),
        capacity: instance.capacity(),
        result: Ok(solved.stats),
    };
    print_stats(cli, &instance, &row)?;
    Ok(match solved.termination {
        Termination::Optimal => ExitCode::SUCCESS,
        Termination::TimeLimit | Termination::NodeLimit | Termination::GapTarget => {
            ExitCode::from(EXIT_STOPPED_WITH_INCUMBENT)
        }
    })
}

fn oracle_solve(cli: &Cli, instance_path: &Path) -> Result<ExitCode, CliError> {
    let instance = load_instance(instance_path)?;
    let result = match oracle::exact_cvrp(&instance) {
        Ok(result) => result,
        Err(err @ OracleError::Infeasible { .. }) => {
            eprintln!("{err}");
            return Ok(ExitCode::from(EXIT_INFEASIBLE));
        }
        Err(other) => return Err(other.into()),
    };
    match cli.format {
        OutputFormat::Csv => {
            println!("objective_cost,route_count,partitions_evaluated");
            println!(
                "{:.7},{},{}",
                result.objective,
                result.routes.route_count(),
                result.partitions_evaluated
            );
        }
        OutputFormat::Json => println!("{}", serde_json::to_string(&result)?),
    }
    if let Some(path) = &cli.output {
        write_text(path, &serde_json::to_string_pretty(&result)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_grid(cli: &Cli, args: &GridArgs) -> Result<ExitCode, CliError> {
    let config = GridConfig {
        request_counts: args.requests.clone(),
        capacities: args.capacities.clone(),
        seed_base: cli.seed,
        time_limit: cli.time_limit,
        generator: GeneratorConfig {
            demand_mode: if args.unit {
                DemandMode::Unit
            } else {
                DemandMode::Grouped
            },
            max_group: if args.unit { 1 } else { args.max_group },
            ..GeneratorConfig::default()
        },
    };
    if cli.verbose {
        eprintln!(
            "running {} cells with a {}s budget each",
            config.request_counts.len() * config.capacities.len(),
            config.time_limit
        );
    }
    let rows = grid::run_grid(&config)?;
    for row in &rows {
        if let Err(message) = &row.result {
            eprintln!(
                "cell n={} Q={} failed: {message}",
                row.requests, row.capacity
            );
        }
    }
    let rendered = match cli.format {
        OutputFormat::Csv => grid::grid_to_csv(&rows),
        OutputFormat::Json => serde_json::to_string_pretty(&rows)?,
    };
    emit(cli.output.as_deref(), &rendered)?;
    Ok(ExitCode::SUCCESS)
}

fn trends(cli: &Cli, table: &Path) -> Result<ExitCode, CliError> {
    let rows = grid::parse_grid_csv(&read_text(table)?)?;
    let directory = cli.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&directory).map_err(|source| CliError::Io {
        action: "create directory",
        path: directory.clone(),
        source,
    })?;
    for file in grid::emit_trends(&rows) {
        let path = directory.join(&file.name);
        write_text(&path, &file.csv)?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn load_manifest_examples(
    manifest_path: &Path,
) -> Result<Vec<pararoute::gcn::Example>, CliError> {
    let manifest: Manifest = serde_json::from_str(&read_text(manifest_path)?)?;
    if manifest.instances.len() != manifest.solutions.len() {
        return Err(CliError::ManifestMismatch {
            instances: manifest.instances.len(),
            solutions: manifest.solutions.len(),
        });
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let mut examples = Vec::with_capacity(manifest.instances.len());
    for (instance_path, solution_path) in manifest.instances.iter().zip(&manifest.solutions) {
        let instance = load_instance(&resolve(instance_path))?;
        let solution_path = resolve(solution_path);
        let solution: SolutionFile = serde_json::from_str(&read_text(&solution_path)?)?;
        let violations = check_feasibility(&instance, &solution.routes);
        if !violations.is_empty() {
            return Err(CliError::BadSolution {
                path: solution_path,
                details: violations.join("; "),
            });
        }
        examples.push(make_training_example(&instance, &solution.routes));
    }
    Ok(examples)
}

fn train_gcn(cli: &Cli, args: &TrainGcnArgs) -> Result<ExitCode, CliError> {
    let examples = match &args.manifest {
        Some(path) => load_manifest_examples(path)?,
        None => {
            let generator = GeneratorConfig {
                request_count: args.requests,
                capacity: args.capacity,
                ..GeneratorConfig::default()
            };
            oracle_labeled_dataset(args.count, &generator, cli.seed)?
                .into_iter()
                .map(|(_, _, example)| example)
                .collect()
        }
    };
    let arch = GcnConfig {
        layers: args.layers,
        hidden: args.hidden,
        head_hidden: args.head_hidden,
    };
    let mut model = GcnModel::new(FEATURE_DIM, &arch, cli.seed)?;
    let config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        seed: cli.seed,
        pos_weight: args.pos_weight,
        verbose: cli.verbose,
    };
    let report = pararoute::gcn::train(&mut model, &examples, &config)?;
    let first = report.loss_trace.first().copied().unwrap_or(f64::NAN);
    let last = report.loss_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} examples for {} epochs: loss {first:.6} -> {last:.6}",
        examples.len(),
        args.epochs
    );
    let destination = cli
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("gcn-checkpoint.json"));
    model.save_checkpoint(&destination)?;
    if cli.verbose {
        eprintln!("wrote {}", destination.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn decode(cli: &Cli, args: &DecodeArgs) -> Result<ExitCode, CliError> {
    let instance = load_instance(&args.instance)?;
    let model = GcnModel::load_checkpoint(&args.checkpoint)?;
    let routes = pararoute::gcn::predict_routes(&model, &instance, args.beam, args.knn)?;
    let violations = check_feasibility(&instance, &routes);
    if !violations.is_empty() {
        eprintln!("decoded plan is infeasible: {}", violations.join("; "));
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    let cost = routes.cost(instance.costs());
    report_routes(cli, &instance, &routes, cost)?;
    Ok(ExitCode::SUCCESS)
}

fn report_routes(
    cli: &Cli,
    instance: &Instance,
    routes: &Routes,
    cost: f64,
) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(&serde_json::json!({
        "objective_cost": cost,
        "routes": routes,
        "loads": routes.loads(instance.demands()),
    }))?;
    match cli.format {
        OutputFormat::Csv => println!("objective_cost,route_count\n{:.7},{}", cost, routes.route_count()),
        OutputFormat::Json => println!("{body}"),
    }
    if let Some(path) = &cli.output {
        write_text(path, &body)?;
    }
    Ok(())
}

fn gradcheck(cli: &Cli, args: &GradcheckArgs) -> Result<ExitCode, CliError> {
    let generator = GeneratorConfig {
        request_count: args.requests,
        capacity: args.capacity,
        max_group: args.capacity.min(4),
        ..GeneratorConfig::default()
    };
    let arch = GcnConfig {
        layers: 2,
        hidden: 6,
        head_hidden: 5,
    };
    let mut all_pass = true;
    for trial in 0..args.trials {
        let seed = cli.seed.wrapping_add(trial);
        let labeled = oracle_labeled_dataset(1, &generator, seed)?;
        let (_, _, example) = &labeled[0];
        let model = GcnModel::new(FEATURE_DIM, &arch, seed)?;
        let worst = pararoute::gcn::gradient_check(&model, example, None)?;
        let pass = worst < GRADIENT_CHECK_TOL;
        all_pass &= pass;
        println!(
            "trial {trial}: worst relative error {worst:.3e} ({})",
            if pass { "ok" } else { "MISMATCH" }
        );
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
