//! Command-line experiment driver for the coarse-measurement SBM engine.
//!
//! Subcommands: `bound-sweep` (failure-bound tables with ambiguity bands),
//! `mc` (Monte Carlo recovery trials), `regimes` (scaling-regime verdict
//! tables), `gen` (sample one instance to files), `selftest` (built-in
//! consistency battery). Exit codes: 0 success, 2 configuration error, 3
//! infeasible model, 1 anything else (I/O). Outputs are byte-deterministic
//! given config and seed; wall times go to stderr only. Thread count
//! follows the standard `RAYON_NUM_THREADS` environment variable.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use coarse_sbm::Error;

use coarse_bench::config::{load_config, ExperimentConfig};
use coarse_bench::ops;

#[derive(Parser)]
#[command(
    name = "coarse-bench",
    about = "Experiment driver: recovery bounds, Monte Carlo trials, and regime reports for coarsely measured block models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a TOML experiment manifest (flat dotted keys).
    #[arg(long)]
    config: PathBuf,
    /// Override one manifest key, e.g. --set model.rho=0.002 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the recovery failure bound across the configured sweep.
    BoundSweep(ConfigArgs),
    /// Run Monte Carlo recovery trials across the configured sweep.
    Mc(ConfigArgs),
    /// Emit the scaling-regime verdict table (config optional: with one,
    /// magnitude conditions are evaluated at its parameter point).
    Regimes {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory when no config supplies output.dir.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Sample one coarse instance and write it to the output directory.
    Gen(ConfigArgs),
    /// Run the built-in consistency battery.
    Selftest,
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Parse(_) | Error::PriorInvalid(_) => 2,
        Error::Io(_) | Error::Json(_) => 1,
        _ => 3,
    }
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    load_config(&args.config, &args.overrides)
}

fn write_table(
    config_dir: &std::path::Path,
    name: &str,
    bytes: &[u8],
) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(config_dir)?;
    let path = config_dir.join(name);
    std::fs::write(&path, bytes)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::BoundSweep(args) => {
            let config = load(&args)?;
            let started = Instant::now();
            let table = ops::run_bound_sweep(&config)?;
            let path = write_table(&config.out_dir, "bound_sweep.csv", &table.to_bytes())?;
            eprintln!(
                "wrote {} in {:.3}s",
                path.display(),
                started.elapsed().as_secs_f64()
            );
        }
        Command::Mc(args) => {
            let config = load(&args)?;
            let started = Instant::now();
            let table = ops::run_mc_experiment(&config)?;
            let path = write_table(&config.out_dir, "mc.csv", &table.to_bytes())?;
            eprintln!(
                "wrote {} in {:.3}s",
                path.display(),
                started.elapsed().as_secs_f64()
            );
        }
        Command::Regimes {
            config,
            overrides,
            out_dir,
        } => {
            let loaded = match config {
                Some(path) => Some(load_config(&path, &overrides)?),
                None => None,
            };
            let started = Instant::now();
            let (table, json) = ops::run_regime_report(loaded.as_ref())?;
            let dir = loaded.map(|c| c.out_dir).unwrap_or(out_dir);
            let csv_path = write_table(&dir, "regimes.csv", &table.to_bytes())?;
            let json_path = dir.join("regimes.json");
            std::fs::write(&json_path, serde_json::to_string_pretty(&json)? + "\n")?;
            eprintln!(
                "wrote {} and {} in {:.3}s",
                csv_path.display(),
                json_path.display(),
                started.elapsed().as_secs_f64()
            );
        }
        Command::Gen(args) => {
            let config = load(&args)?;
            let started = Instant::now();
            let paths = ops::run_gen(&config)?;
            for path in &paths {
                eprintln!("wrote {}", path.display());
            }
            eprintln!("generated in {:.3}s", started.elapsed().as_secs_f64());
        }
        Command::Selftest => {
            let started = Instant::now();
            let checks = ops::run_selftest()?;
            for check in &checks {
                println!("[PASS] {check}");
            }
            eprintln!(
                "selftest: {} checks in {:.3}s",
                checks.len(),
                started.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
