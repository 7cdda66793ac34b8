use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use staruav::experiment::{
    atomic_write, profile_csv, run_single, splitting_profile, sweep_csv, sweep_elements, write_run,
};
use staruav::scenario::{load_experiment, render_experiment, ExperimentFile};
use staruav::{Error, Method};

#[derive(Parser)]
#[command(name = "staruav", version, about = "Joint surface, trajectory and power optimisation runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Replace the scenario's fading seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One optimisation run.
    Run {
        #[command(flatten)]
        common: Common,
        /// es, ms or conventional; defaults to the file's `method`, then es.
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
    },
    /// Final sum rate per element count and method.
    SweepElements {
        #[command(flatten)]
        common: Common,
        /// Comma-separated element counts.
        #[arg(long, value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        /// Methods to run, repeatable or comma-separated; all three by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        method: Vec<Method>,
    },
    /// Per-slot mean amplitudes of the energy-splitting run.
    SplittingProfile {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method `{s}` (es, ms, conventional)"))
}

enum Failure {
    Validation(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Conic(_) => Failure::Solver(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentFile, Failure> {
    let mut file = load_experiment(&common.scenario).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(seed) = common.seed_override {
        file.scenario.seed = seed;
    }
    file.settings.validate().map_err(Failure::Validation)?;
    Ok(file)
}

fn report_flags(label: &str, sol: &staruav::driver::JointSolution) {
    for (name, r) in [
        ("beamforming", &sol.beam_report),
        ("trajectory", &sol.trajectory_report),
        ("power", &sol.power_report),
    ] {
        if r.first_solve_failed || r.chain_slack_left || r.solver_failures > 0 {
            eprintln!(
                "{label}: {name}: {} solver failures, first solve failed: {}, ordering slack left: {}",
                r.solver_failures, r.first_solve_failed, r.chain_slack_left
            );
        }
        for w in &r.warnings {
            eprintln!("{label}: {name}: {w}");
        }
    }
    if sol.monotonicity_violations > 0 {
        eprintln!("{label}: sum rate fell in {} cycles", sol.monotonicity_violations);
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Validation(format!("{}: {e}", dir.display())))
}

// Outputs are still written so the failing run can be inspected.
fn solver_check(failed: bool) -> Result<(), Failure> {
    if failed {
        return Err(Failure::Solver("a subproblem's first convex solve failed; outputs hold the unimproved iterate".into()));
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { common, method } => {
            let file = load(&common)?;
            let method = method.or(file.method).unwrap_or(Method::EnergySplitting);
            let sol = run_single(&file.scenario, method, &file.settings)?;
            report_flags(method.name(), &sol);
            write_run(&common.out, &file.scenario, &file.settings, method, &sol)?;
            println!("{} sum rate {:.6} bits/s/Hz", method.name(), sol.sum_rate());
            solver_check(sol.solver_failed())?;
        }
        Command::SweepElements { common, m_list, method } => {
            let file = load(&common)?;
            let methods = if method.is_empty() { Method::ALL.to_vec() } else { method };
            ensure_dir(&common.out)?;
            let mut manifest = render_experiment(&file.scenario, &file.settings, None);
            let list: Vec<String> = m_list.iter().map(|m| m.to_string()).collect();
            let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
            manifest.push_str(&format!("# m_list = {}\n# methods = {}\n", list.join(","), names.join(",")));
            atomic_write(&common.out.join("manifest.txt"), &manifest)?;
            let sweep_path = common.out.join("sweep.csv");
            let rows = sweep_elements(&file.scenario, &m_list, &methods, &file.settings, |rows| {
                atomic_write(&sweep_path, &sweep_csv(rows))
            })?;
            for r in &rows {
                println!("M = {:3} {:12} {:.6}", r.elements, r.method.name(), r.sum_rate);
            }
            solver_check(rows.iter().any(|r| r.solver_failed))?;
        }
        Command::SplittingProfile { common } => {
            let file = load(&common)?;
            let sol = run_single(&file.scenario, Method::EnergySplitting, &file.settings)?;
            report_flags("es", &sol);
            ensure_dir(&common.out)?;
            atomic_write(&common.out.join("profile.csv"), &profile_csv(&splitting_profile(&sol)))?;
            atomic_write(
                &common.out.join("manifest.txt"),
                &render_experiment(&file.scenario, &file.settings, Some(Method::EnergySplitting)),
            )?;
            solver_check(sol.solver_failed())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver error: {m}");
            ExitCode::from(2)
        }
    }
}
