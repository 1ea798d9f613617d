use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use markov_approx::harness::{run_scenario, verify, RunOptions, Scenario};
use markov_approx::Error;

/// Scenario runner for rational approximation of Markov functions on
/// several intervals.
#[derive(Parser)]
#[command(name = "markov-approx", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its ratio report as CSV.
    Run {
        /// Scenario file (key=value format, see the bundled scenarios/).
        scenario: PathBuf,
        /// Output directory for `<stem>-report.csv` (default: alongside the
        /// scenario file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Quadrature order for band integrals.
        #[arg(long)]
        quad_order: Option<usize>,
        /// Node count for the unit-circle error integral.
        #[arg(long)]
        circle_nodes: Option<usize>,
        /// Print the worst |ratio - 1| per degree after the run.
        #[arg(long)]
        tol_report: bool,
    },
    /// Run the built-in invariant suite and print one line per check.
    Verify {
        /// Include the two slow convergence studies.
        #[arg(long)]
        full: bool,
    },
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("MARKOV_APPROX_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => markov_approx::configure_threads(n),
            _ => {
                eprintln!("error: MARKOV_APPROX_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            quad_order,
            circle_nodes,
            tol_report,
        } => run(&scenario, out.as_deref(), quad_order, circle_nodes, tol_report),
        Command::Verify { full } => run_verify(full),
    }
}

fn run(
    scenario: &Path,
    out: Option<&Path>,
    quad_order: Option<usize>,
    circle_nodes: Option<usize>,
    tol_report: bool,
) -> ExitCode {
    let sc = match Scenario::from_file(scenario) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut opts = RunOptions::default();
    if let Some(q) = quad_order {
        opts.quad_order = q;
    }
    if let Some(c) = circle_nodes {
        opts.circle_nodes = c;
    }
    let report = match run_scenario(&sc, opts) {
        Ok(r) => r,
        Err(e @ Error::Scenario(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(3);
        }
    };

    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| scenario.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let stem = scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let path = dir.join(format!("{stem}-report.csv"));
    if let Err(e) = std::fs::create_dir_all(&dir).and_then(|()| std::fs::write(&path, report.to_csv())) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return ExitCode::from(2);
    }
    println!("wrote {}", path.display());

    if tol_report {
        for &n in &sc.n_list {
            println!("n={n:3}  worst |ratio-1| = {:.6e}", report.worst_at(n));
        }
    }
    if report.tolerances_met(&sc.n_list) {
        println!("tolerances met (tol {})", sc.ratio_tol);
        ExitCode::SUCCESS
    } else {
        println!("tolerances NOT met (tol {})", sc.ratio_tol);
        ExitCode::from(1)
    }
}

fn run_verify(full: bool) -> ExitCode {
    let mut all = true;
    for it in verify(full) {
        println!(
            "{} {:<24} {}",
            if it.pass { "PASS" } else { "FAIL" },
            it.name,
            it.detail
        );
        all &= it.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
