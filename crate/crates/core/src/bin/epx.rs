//! Command-line front end for the projection experiments.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epx::harness::config::{parse_list, parse_override};
use epx::harness::{self, csv, ExperimentConfig, Scheme};
use epx::Error;

#[derive(Parser)]
#[command(name = "epx", version, about = "Energy-preserving projected Runge-Kutta experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    config: PathBuf,
    /// Override a config key (repeatable), e.g. `--set tau=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: $EPX_OUT_DIR, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate to t_end, tracking the invariant and writing snapshots.
    Evolve(Common),
    /// Convergence study against the exact solution.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step sizes.
        #[arg(long)]
        taus: String,
    },
    /// Error, residual and wall time for every (scheme, tau) pair.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scheme names.
        #[arg(long)]
        schemes: String,
        #[arg(long)]
        taus: String,
    },
    /// Evolve and write field snapshots at the given times.
    Snapshot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        times: String,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Error> {
    let text = fs::read_to_string(&common.config).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", common.config.display()))
    })?;
    let overrides = common
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = ExperimentConfig::parse(&text, &overrides)?;
    let dir = common.out.clone().unwrap_or_else(harness::output_dir);
    Ok((cfg, dir))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn evolve(cfg: &ExperimentConfig, dir: &Path) -> Result<(), Error> {
    let problem = harness::build_problem(cfg)?;
    let record = harness::run::evolve_problem(cfg, &problem)?;
    let paths = csv::write_run(dir, &cfg.name, problem.model.as_ref(), &record)?;
    report(&paths);
    eprintln!(
        "{}: {} steps, max RM {:.3e}{}",
        cfg.name,
        record.steps,
        record.max_rm(),
        if record.absolute_residual { " (absolute)" } else { "" }
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Evolve(common) => {
            let (cfg, dir) = load(&common)?;
            evolve(&cfg, &dir)
        }
        Command::Snapshot { common, times } => {
            let (mut cfg, dir) = load(&common)?;
            cfg.snapshot_times = parse_list(&times)?;
            cfg.validate()?;
            evolve(&cfg, &dir)
        }
        Command::Converge { common, taus } => {
            let (cfg, dir) = load(&common)?;
            let rows = harness::run_convergence(&cfg, &parse_list(&taus)?)?;
            let path = dir.join(format!("{}_convergence.csv", cfg.name));
            csv::write_file(&path, &csv::convergence_csv(&rows))?;
            report(&[path]);
            Ok(())
        }
        Command::Compare {
            common,
            schemes,
            taus,
        } => {
            let (cfg, dir) = load(&common)?;
            let schemes = schemes
                .split(',')
                .map(|s| s.trim().parse::<Scheme>())
                .collect::<Result<Vec<_>, _>>()?;
            let rows = harness::compare_schemes(&cfg, &schemes, &parse_list(&taus)?)?;
            let path = dir.join(format!("{}_compare.csv", cfg.name));
            csv::write_file(&path, &csv::compare_csv(&rows))?;
            report(&[path]);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() || matches!(e, Error::Io(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
