use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use denitrify::harness::{
    run_scenario, run_sweep, write_plot_files, write_run_files, write_sweep_summary, HarnessError,
    RunReport, RunStatus, Scenario,
};

const EXIT_INVALID: u8 = 1;
const EXIT_FAULT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "denitrify",
    version,
    about = "Biofilter denitrification simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory and metrics.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Set a scenario key, e.g. controller.s2_target=0.8 (repeatable).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write gnuplot data and script files.
        #[arg(long)]
        plot: bool,
    },
    /// Run the scenario once per nitrite target, in parallel.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        plot: bool,
    },
    /// Parse and check a scenario without running it.
    Validate {
        scenario: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<Scenario, ExitCode> {
    let mut sc = Scenario::load(path, overrides).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_INVALID)
    })?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    if let Err(e) = sc.validate() {
        eprintln!("error: {e}");
        return Err(ExitCode::from(EXIT_INVALID));
    }
    for w in sc.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(sc)
}

fn harness_exit(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        HarnessError::Scenario(_) => ExitCode::from(EXIT_INVALID),
        _ => ExitCode::from(EXIT_FAULT),
    }
}

fn emit(report: &RunReport, out: &Path, stem: &str, plot: bool) -> Result<bool, HarnessError> {
    let (csv, json) = write_run_files(report, out, stem)?;
    println!("wrote {} and {}", csv.display(), json.display());
    if plot {
        let (dat, gp) = write_plot_files(report, out, stem)?;
        println!("wrote {} and {}", dat.display(), gp.display());
    }
    if report.influent_exhausted {
        eprintln!("warning: influent series ended early; last value was held");
    }
    match (&report.status, &report.metrics) {
        (RunStatus::Completed, Ok(m)) => {
            println!(
                "{stem}: rmse_s2={:.4} mean_sc_in={:.3} in_band={:.3} max_s2={:.3} clip_events={}",
                m.rmse_s2, m.mean_sc_in, m.pct_time_in_band, m.max_s2, m.clip_events
            );
            Ok(true)
        }
        (RunStatus::Completed, Err(e)) => {
            eprintln!("{stem}: {e}");
            Ok(true)
        }
        (RunStatus::Failed { at_days, reason }, _) => {
            eprintln!("{stem}: simulation fault at t = {at_days} days: {reason}");
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate {
            scenario,
            overrides,
        } => match load(&scenario, &overrides, None) {
            Ok(sc) => {
                println!("{}: ok ({} samples)", sc.name, sc.n_samples());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run {
            scenario,
            out,
            seed,
            overrides,
            plot,
        } => {
            let sc = match load(&scenario, &overrides, seed) {
                Ok(sc) => sc,
                Err(code) => return code,
            };
            let report = match run_scenario(&sc) {
                Ok(r) => r,
                Err(e) => return harness_exit(&e),
            };
            match emit(&report, &out, &sc.name, plot) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_FAULT),
                Err(e) => harness_exit(&e),
            }
        }
        Command::Sweep {
            scenario,
            targets,
            out,
            seed,
            overrides,
            plot,
        } => {
            let sc = match load(&scenario, &overrides, seed) {
                Ok(sc) => sc,
                Err(code) => return code,
            };
            let mut reports = Vec::new();
            let mut all_ok = true;
            for result in run_sweep(&sc, &targets) {
                let report = match result {
                    Ok(r) => r,
                    Err(e) => return harness_exit(&e),
                };
                let stem = format!("{}_s2-{}", sc.name, report.scenario.controller.s2_target);
                match emit(&report, &out, &stem, plot) {
                    Ok(ok) => all_ok &= ok,
                    Err(e) => return harness_exit(&e),
                }
                reports.push(report);
            }
            let path = out.join(format!("{}_sweep.csv", sc.name));
            let written = std::fs::File::create(&path)
                .map_err(|e| HarnessError::io(format!("creating {}", path.display()), e))
                .and_then(|f| write_sweep_summary(&reports, f));
            if let Err(e) = written {
                return harness_exit(&e);
            }
            println!("wrote {}", path.display());
            if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAULT)
            }
        }
    }
}
