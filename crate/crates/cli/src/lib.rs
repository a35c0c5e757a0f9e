//! Command-line harness: each subcommand runs one verification from a JSON
//! config and writes a machine-readable artifact.

pub mod commands;
pub mod config;
pub mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{Artifact, Outcome};
pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "snnss", version, about = "Verification harness for nearest-neighbor spin systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Artifact path; stdout when absent. CSV artifacts also get `<out>.meta.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "SNNSS_THREADS")]
    pub threads: Option<usize>,

    /// Overrides the command's tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the counting identities (or the second-order identity with `lemma`).
    VerifyIdentities,
    /// Fit g2 = A1 g1 + A0 |η| + B and compare with the known coefficients.
    Closure,
    /// Closed-form mean coverage against the exact solver and Monte Carlo.
    McfCompare,
    /// Exact spectral gap against ε - M and the decay rates.
    Gap,
    /// Mean density from a product measure on two graph sizes.
    Prop2,
    /// Random tables whose gap equals ε - M.
    ConjectureProbe,
    /// Dump one trajectory.
    Simulate,
}

impl Command {
    pub fn run(self, cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
        match self {
            Command::VerifyIdentities => commands::verify_identities(cfg),
            Command::Closure => commands::closure(cfg),
            Command::McfCompare => commands::mcf_compare(cfg),
            Command::Gap => commands::gap(cfg),
            Command::Prop2 => commands::prop2(cfg),
            Command::ConjectureProbe => commands::conjecture_probe(cfg),
            Command::Simulate => commands::simulate_cmd(cfg),
        }
    }
}

/// Loads the config, applies flag overrides and runs the command.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
        cfg.tolerance = Some(tol);
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let outcome = cli.command.run(&mut cfg)?;
    write_outcome(&outcome, out.as_deref())?;
    Ok(outcome)
}

fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Writes the artifact to `out` (and the summary to stdout), or the artifact
/// to stdout and the summary to stderr.
pub fn write_outcome(outcome: &Outcome, out: Option<&Path>) -> Result<(), CliError> {
    let body = match &outcome.artifact {
        Artifact::Json(v) => pretty(v),
        Artifact::Csv { table, .. } => table.clone(),
    };
    match out {
        Some(path) => {
            fs::write(path, body).map_err(|e| CliError::io(path, e))?;
            if let Artifact::Csv { meta, .. } = &outcome.artifact {
                let mp = meta_path(path);
                fs::write(&mp, pretty(meta)).map_err(|e| CliError::io(&mp, e))?;
            }
            println!("{}", outcome.summary);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            eprintln!("{}", outcome.summary);
        }
    }
    Ok(())
}
