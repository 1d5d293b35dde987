//! Command-line front end: loads scenario files, dispatches the requested
//! task, and emits deterministic JSON or CSV reports.
//!
//! Exit codes: 0 for OK/SOLUTION, 2 for NONEXISTENT/MISMATCH, 3 for
//! INDETERMINATE, 1 for operational errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curvbench_core::catalog;
use curvbench_core::grid::Grid;
use curvbench_core::report::{Format, Report};
use curvbench_core::scenario::{load_scenario, run, Scenario, Task};

#[derive(Parser)]
#[command(
    name = "curvbench",
    version,
    about = "Verification workbench for prescribed curvature tensors under conformal change"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a given conformal factor against a tensor on a grid
    Verify(RunArgs),
    /// Decide solvability and reconstruct the conformal factor
    Solve(RunArgs),
    /// Detect and classify a quadratic-family tensor
    Classify(RunArgs),
    /// Tabulate scalar, Ricci and sectional curvature over a grid
    Curvature(RunArgs),
    /// Run a built-in example with its reference assertions
    Example(ExampleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json or csv (csv needs a point table)
    #[arg(long, default_value = "json")]
    format: String,
    /// Override grid.points_per_axis (odd integer >= 3)
    #[arg(long)]
    grid_points: Option<usize>,
    /// Override the acceptance tolerance
    #[arg(long)]
    tol_accept: Option<f64>,
    /// Override the rejection threshold
    #[arg(long)]
    tol_reject: Option<f64>,
    /// Suppress the human-readable summary on stderr
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ExampleArgs {
    /// Catalog id (see --list)
    #[arg(long)]
    id: Option<String>,
    /// List available examples and exit
    #[arg(long)]
    list: bool,
    /// Scenario file with task = "example"
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    quiet: bool,
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("CURVBENCH_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        } else {
            eprintln!("warning: ignoring non-numeric CURVBENCH_THREADS={value}");
        }
    }
}

fn apply_overrides(scenario: &mut Scenario, args: &RunArgs) -> Result<(), String> {
    if let Some(points) = args.grid_points {
        if points < 3 || points % 2 == 0 {
            return Err("--grid-points must be an odd integer >= 3".to_string());
        }
        scenario.grid = Grid::new(
            scenario.grid.center().to_vec(),
            scenario.grid.half_width(),
            points,
        );
    }
    if let Some(accept) = args.tol_accept {
        scenario.tolerances.accept = accept;
    }
    if let Some(reject) = args.tol_reject {
        scenario.tolerances.reject = reject;
    }
    if !(scenario.tolerances.accept > 0.0
        && scenario.tolerances.reject > scenario.tolerances.accept)
    {
        return Err("tolerances must satisfy 0 < accept < reject".to_string());
    }
    Ok(())
}

fn print_summary(report: &Report) {
    eprintln!("task:    {}", report.task);
    eprintln!("verdict: {}", report.verdict.as_str());
    if let Some(c) = report.recovered_c {
        eprintln!("recovered C: {c}");
    }
    if let Some(fam) = &report.recovered_family {
        eprintln!(
            "recovered family: a = {}, b = {:?}, c = {}, lambda = {}",
            fam.a, fam.b, fam.c, fam.lambda
        );
    }
    if let Some(set) = &report.singular_set {
        eprintln!("singular set: {}", set.kind);
    }
    if let Some(completeness) = &report.completeness {
        eprintln!("completeness: {completeness}");
    }
    if let Some(w) = &report.witness {
        eprintln!(
            "witness: {} (magnitude {:e} at {:?})",
            w.witness, w.magnitude, w.location
        );
    }
    for r in &report.residuals {
        eprintln!(
            "residual {:<14} max {:>12.5e}  mean {:>12.5e}  ({} samples)",
            r.name, r.max, r.mean, r.count
        );
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    for error in &report.errors {
        eprintln!("error: {error}");
    }
}

fn emit_report(
    report: &Report,
    out: Option<&PathBuf>,
    format: &str,
    quiet: bool,
) -> Result<(), String> {
    let format: Format = format.parse().map_err(|e| format!("{e}"))?;
    if !quiet {
        print_summary(report);
    }
    match out {
        Some(path) => {
            curvbench_core::report::emit(report, format, path).map_err(|e| e.to_string())?
        }
        None => {
            let payload = match format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv().map_err(|e| e.to_string())?,
            };
            print!("{payload}");
        }
    }
    Ok(())
}

fn exit_for(report: &Report) -> ExitCode {
    if !report.errors.is_empty() {
        return ExitCode::from(1);
    }
    ExitCode::from(report.verdict.exit_code() as u8)
}

fn run_task(expected: Task, args: &RunArgs) -> ExitCode {
    let mut scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if scenario.task != expected {
        eprintln!(
            "error: scenario declares task `{}` but the `{}` subcommand was invoked",
            scenario.task.as_str(),
            expected.as_str()
        );
        return ExitCode::from(1);
    }
    if let Err(message) = apply_overrides(&mut scenario, args) {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let report = run(&scenario);
    if let Err(message) = emit_report(&report, args.out.as_ref(), &args.format, args.quiet) {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    exit_for(&report)
}

fn run_example_command(args: &ExampleArgs) -> ExitCode {
    if args.list {
        for entry in catalog::entries() {
            println!(
                "{:<28} {:<24} {}",
                entry.id, entry.source_tag, entry.description
            );
        }
        return ExitCode::SUCCESS;
    }
    let report = if let Some(id) = &args.id {
        catalog::run_example(id)
    } else if let Some(path) = &args.scenario {
        let scenario = match load_scenario(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        };
        if scenario.task != Task::Example {
            eprintln!("error: scenario is not an example task");
            return ExitCode::from(1);
        }
        run(&scenario)
    } else {
        eprintln!("error: the example subcommand needs --id, --scenario or --list");
        return ExitCode::from(1);
    };
    if let Err(message) = emit_report(&report, args.out.as_ref(), &args.format, args.quiet) {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    exit_for(&report)
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify(args) => run_task(Task::Verify, args),
        Command::Solve(args) => run_task(Task::Solve, args),
        Command::Classify(args) => run_task(Task::Classify, args),
        Command::Curvature(args) => run_task(Task::Curvature, args),
        Command::Example(args) => run_example_command(args),
    }
}
