use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reservoir_lattice::lab::{configure_threads, run_experiment, ExperimentConfig, ExperimentKind, Report, THREADS_ENV};

#[derive(Parser)]
#[command(name = "rlab", version, about = "Lattice reservoir experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Walk eigenvalues across eps against box closed forms.
    SpectralConvergence(RunArgs),
    /// Harmonic profiles against regime references.
    HarmonicConvergence(RunArgs),
    /// Killed semigroups against the finest lattice, and domination across beta.
    SemigroupConvergence(RunArgs),
    /// Replica means of the density field against the mild solution.
    Hydrodynamic(RunArgs),
    /// Stationary densities against the harmonic profile.
    Hydrostatic(RunArgs),
    /// Stationary fluctuation variances and gaussianity.
    Fluctuations(RunArgs),
    /// Monte Carlo moments against dual-walk semigroups.
    DualityAudit(RunArgs),
    /// Every experiment in turn, each under `<out>/<experiment>`.
    All(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML file overriding the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "rlab-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the environment variable.
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Coarser lattices and fewer replicas.
    #[arg(long)]
    quick: bool,
}

fn run_one(kind: ExperimentKind, args: &RunArgs, out: PathBuf) -> Result<Report, String> {
    let mut cfg = ExperimentConfig::load(kind, args.config.as_deref(), args.quick).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    eprintln!("== {kind} (config {})", &cfg.hash()[..12]);
    let report = run_experiment(&cfg, Some(&out)).map_err(|e| format!("{kind}: {e}"))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in report.checks.iter().filter(|c| c.asserted) {
        println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let notes = report.checks.iter().filter(|c| !c.asserted).count();
    if notes > 0 {
        let ok = report.checks.iter().filter(|c| !c.asserted && c.pass).count();
        println!("({ok} of {notes} informational checks pass; see summary.json)");
    }
    println!("{kind}: {}", if report.passed() { "passed" } else { "FAILED" });
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kinds, args, nested): (Vec<ExperimentKind>, RunArgs, bool) = match cli.command {
        Command::SpectralConvergence(a) => (vec![ExperimentKind::SpectralConvergence], a, false),
        Command::HarmonicConvergence(a) => (vec![ExperimentKind::HarmonicConvergence], a, false),
        Command::SemigroupConvergence(a) => (vec![ExperimentKind::SemigroupConvergence], a, false),
        Command::Hydrodynamic(a) => (vec![ExperimentKind::Hydrodynamic], a, false),
        Command::Hydrostatic(a) => (vec![ExperimentKind::Hydrostatic], a, false),
        Command::Fluctuations(a) => (vec![ExperimentKind::Fluctuations], a, false),
        Command::DualityAudit(a) => (vec![ExperimentKind::DualityAudit], a, false),
        Command::All(a) => {
            if a.config.is_some() {
                eprintln!("error: --config applies to a single experiment");
                return ExitCode::from(2);
            }
            (ExperimentKind::ALL.to_vec(), a, true)
        }
    };
    if let Err(e) = configure_threads(args.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let mut failed = false;
    for kind in kinds {
        let out = if nested { args.out.join(kind.name()) } else { args.out.clone() };
        match run_one(kind, &args, out) {
            Ok(r) => failed |= !r.passed(),
            Err(e) => {
                eprintln!("error: {e}");
                failed = true;
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
