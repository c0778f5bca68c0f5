use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pelastic::flow::Outcome;
use pelastic::verify::{property_suite, variation_suite};
use pelastic_cli::{parse_config, run_scenario, CliError, ScenarioSpec};
use rayon::prelude::*;

/// Overrides `output.dir` of every scenario.
const OUTPUT_ENV: &str = "PELASTIC_OUTPUT_DIR";
const VERIFY_RESOLUTIONS: [usize; 2] = [128, 256];
const VERIFY_MAX_ERROR: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "pelastic", version, about = "Elastic flows of closed curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output root; takes precedence over PELASTIC_OUTPUT_DIR and output.dir.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Scenarios run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the finite-difference oracles and the property checks.
    Verify {
        #[arg(long)]
        quiet: bool,
    },
}

fn output_root(spec: &ScenarioSpec, flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| spec.output_dir.clone())
}

fn run(configs: &[PathBuf], output: &Option<PathBuf>, jobs: usize, quiet: bool) -> u8 {
    let mut specs = Vec::new();
    for path in configs {
        match parse_config(path) {
            Ok(spec) => specs.push(spec),
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
    }
    let mut seen = HashSet::new();
    for (spec, path) in specs.iter().zip(configs) {
        let dir = output_root(spec, output).join(&spec.run_name);
        if !seen.insert(dir.clone()) {
            eprintln!("error: {}: output directory {} is used by another scenario", path.display(), dir.display());
            return 1;
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let results: Vec<Result<_, CliError>> =
        pool.install(|| specs.par_iter().map(|spec| run_scenario(spec, &output_root(spec, output))).collect());
    let mut code = 0;
    for (result, path) in results.iter().zip(configs) {
        match result {
            Ok(report) => {
                let s = &report.summary;
                if !quiet {
                    eprintln!(
                        "{}: {:?} after {} steps, t = {:.4}, energy {:.6}, residual {:.3e} -> {}",
                        path.display(),
                        s.outcome,
                        s.steps,
                        s.final_time,
                        s.final_energy,
                        s.final_residual,
                        report.dir.display()
                    );
                }
                if s.outcome == Outcome::StepFailure {
                    if let Some(m) = &s.message {
                        eprintln!("{}: {m}", path.display());
                    }
                    code = code.max(3);
                }
            }
            Err(e) => {
                match e {
                    CliError::Numerical(_) => eprintln!("error: {}: {e}", path.display()),
                    _ => eprintln!("error: {e}"),
                }
                code = match (code, e.exit_code()) {
                    (1, _) | (_, 1) => 1,
                    (a, b) => a.max(b),
                };
            }
        }
    }
    code
}

fn verify(quiet: bool) -> u8 {
    let mut violations = 0;
    match variation_suite(&VERIFY_RESOLUTIONS) {
        Ok(cases) => {
            for c in cases {
                let (err, ratio) = (c.max_error_at_finest(), c.convergence_ratio());
                let ok = err <= VERIFY_MAX_ERROR && (ratio - 4.0).abs() <= 0.5;
                violations += usize::from(!ok);
                if !quiet || !ok {
                    println!(
                        "{} variation {:?} p={} {}: error {err:.2e}, ratio {ratio:.3}",
                        if ok { "ok  " } else { "FAIL" },
                        c.family,
                        c.p,
                        c.curve
                    );
                }
            }
        }
        Err(e) => {
            println!("FAIL variation suite: {e}");
            violations += 1;
        }
    }
    match property_suite() {
        Ok(checks) => {
            for c in checks {
                violations += usize::from(!c.passed);
                if !quiet || !c.passed {
                    println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
            }
        }
        Err(e) => {
            println!("FAIL property suite: {e}");
            violations += 1;
        }
    }
    println!("{violations} violation(s)");
    if violations == 0 {
        0
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { configs, output, jobs, quiet } => run(&configs, &output, jobs, quiet),
        Command::Verify { quiet } => verify(quiet),
    };
    ExitCode::from(code)
}
