//! Command-line front end of the kanlab experiments.

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kanlab::lab::{self, ExperimentKind, LabError, RunConfig, RunStatus};

/// Environment variable holding the log filter, e.g. `debug` or `kanlab=info`.
const LOG_ENV: &str = "KANLAB_LOG";

#[derive(Debug, Parser)]
#[command(name = "kanlab", version, about = "Skew products over toral automorphisms: exponents, interconnection, basins")]
struct Cli {
    /// JSON run configuration; the bundled default when omitted.
    #[arg(long, global = true, env = "KANLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Experiments to run, in order; replaces the configured list.
    #[arg(long = "experiment", global = true, num_args = 1..)]
    experiments: Vec<ExperimentKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the configuration and the domination condition.
    Validate,
    /// Print rates, margins, boundary integrals and short-period exponents.
    Describe {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the configured experiments.
    Run,
    /// Central exponents of boundary periodic orbits.
    Exponents,
    /// Search for a boundary interconnection witness.
    Interconnect,
    /// Single-orbit cell coverage and reachability.
    Transitivity,
    /// Classify grid samples into the basins of the two boundaries.
    Basins,
    /// Density of periodic Birkhoff sums.
    Density,
    /// Periodic orbits with shrinking independence values.
    Ari,
    /// Compose a boundary flow and measure the exponent shifts.
    Perturb,
    /// Symbolic skew product that is interconnected but not transitive.
    Counterexample,
}

impl Command {
    fn experiment(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Exponents => ExperimentKind::Exponents,
            Command::Interconnect => ExperimentKind::Interconnect,
            Command::Transitivity => ExperimentKind::Transitivity,
            Command::Basins => ExperimentKind::Basins,
            Command::Density => ExperimentKind::Density,
            Command::Ari => ExperimentKind::Ari,
            Command::Perturb => ExperimentKind::Perturb,
            Command::Counterexample => ExperimentKind::Counterexample,
            Command::Validate | Command::Describe { .. } | Command::Run => return None,
        })
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, LabError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| LabError::Io { path: path.clone(), source })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::bundled(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(kind) = cli.command.experiment() {
        config.experiments = vec![kind];
    } else if !cli.experiments.is_empty() {
        config.experiments = cli.experiments.clone();
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn report(e: &dyn Error) {
    let mut last = e.to_string();
    eprintln!("error: {last}");
    let mut source = e.source();
    while let Some(s) = source {
        let text = s.to_string();
        if !last.contains(&text) {
            eprintln!("  caused by: {text}");
        }
        last = text;
        source = s.source();
    }
}

fn execute(cli: &Cli) -> Result<(), LabError> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Validate => {
            let f = config.validate()?;
            let m = f.margins();
            println!("ok: config hash {}", config.hash());
            println!("domination margins: stable {:+.6}, unstable {:+.6}", m.stable, m.unstable);
        }
        Command::Describe { json } => {
            let summary = lab::describe(&config)?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                print!("{summary}");
            }
        }
        _ => {
            let out = config.out.clone().unwrap_or_else(|| PathBuf::from("kanlab-out"));
            let result = lab::run(&config, &out);
            if let Ok(manifest) = &result {
                print_manifest(manifest, &out);
            }
            result?;
        }
    }
    Ok(())
}

fn print_manifest(m: &lab::Manifest, out: &Path) {
    println!("config {} seed {} threads {}", &m.config_hash[..12], m.seed, m.threads);
    for e in &m.experiments {
        let status = match &e.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed { error } => format!("failed: {error}"),
        };
        println!("{:<15} {status:<6} {:>9.2} s  {}", e.name, e.wall_seconds, e.files.join(", "));
    }
    println!("wrote {} files and {} to {}", m.files.len(), lab::MANIFEST_FILE, out.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            report(&e);
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            match e {
                LabError::ConfigInvalid { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
