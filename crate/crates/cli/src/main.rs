use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kinetic_uq::harness::verify::{run_criterion, Scale, CRITERIA};
use kinetic_uq::harness::{emit_report, parse_scenario, run_experiment, ExperimentReport};
use kinetic_uq::models::describe;
use kinetic_uq::Error;

const THREADS_VAR: &str = "KINETIC_UQ_THREADS";

#[derive(Parser)]
#[command(name = "kinetic-uq", version, about = "Uncertainty quantification for kinetic models of collective behavior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory (overrides `[output] directory`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Worker threads; falls back to KINETIC_UQ_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the model catalog.
    Catalog,
    /// Run the acceptance checks.
    Verify {
        /// Rerun the statistical checks at the scale of the published figures.
        #[arg(long)]
        full: bool,
        /// Only these criteria (1-10).
        #[arg(long = "criterion", value_name = "ID")]
        criteria: Vec<u8>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Configuration(_) => 2,
        Error::Numeric(_) | Error::Stability(_) | Error::InvariantViolation(_) | Error::Domain(_) => 3,
        _ => 1,
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Error> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_VAR) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Configuration(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Configuration("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Configuration(format!("cannot configure {t} threads: {e}")))?;
    }
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<7} {:>6} {:>8} {:<12} {:>12} {:>10}", "kind", "M", "t", "qoi", "error", "stderr");
    for p in &report.points {
        println!(
            "{:<7} {:>6} {:>8} {:<12} {:>12.4e} {:>10.2e}",
            p.kind, p.m, p.t, p.qoi, p.error, p.stderr
        );
    }
}

fn run(
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    replications: Option<usize>,
    threads: Option<usize>,
) -> Result<(), Error> {
    configure_threads(threads)?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    let mut spec = parse_scenario(&text)?;
    if let Some(s) = seed {
        spec.uq.seed = s;
    }
    if let Some(r) = replications {
        spec.uq.replications = r;
    }
    if let Some(o) = out {
        spec.output.directory = o;
    }
    spec.resolve()?;
    eprintln!("# resolved scenario (config hash {})\n{}", spec.config_hash(), spec.to_toml());
    let dir = spec.output.directory.clone();
    match run_experiment(&spec) {
        Ok(report) => {
            emit_report(&report, &dir)?;
            print_summary(&report);
            eprintln!("report written to {}", dir.display());
            Ok(())
        }
        Err(failure) => {
            if let Some(partial) = &failure.partial {
                emit_report(partial, &dir)?;
                eprintln!("partial report written to {}", dir.display());
            }
            Err(failure.error)
        }
    }
}

fn verify(full: bool, criteria: Vec<u8>, threads: Option<usize>) -> Result<bool, Error> {
    configure_threads(threads)?;
    let scale = if full { Scale::Full } else { Scale::Desk };
    let ids: Vec<u8> = if criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        criteria
    };
    let mut all = true;
    for id in ids {
        if !CRITERIA.iter().any(|c| c.0 == id) {
            return Err(Error::Configuration(format!("no acceptance criterion {id}; expected 1-10")));
        }
        let outcome = run_criterion(id, scale);
        println!("{outcome}");
        all &= outcome.passed;
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            replications,
            threads,
        } => run(scenario, out, seed, replications, threads).map(|_| true),
        Command::Catalog => {
            for entry in describe() {
                println!("{:<20} {}", entry.key, entry.summary);
            }
            Ok(true)
        }
        Command::Verify { full, criteria, threads } => verify(full, criteria, threads),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
