//! Command-line front end for the quadsle experiments.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<quadsle::Error> for CliError {
    fn from(e: quadsle::Error) -> Self {
        use quadsle::Error as E;
        match e {
            E::Config(_) | E::Parameter(_) | E::Order(_) | E::Topology(_) | E::Geometry(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Experiment {
    /// Branch endpoints: KS and 2D χ² against ρ_K.
    Endpoints,
    /// Crossing probabilities at probe cells against Re f.
    Crossing,
    /// Peano-curve drivers and their quadratic variation.
    Driver,
    /// hSLE₈ drivers: quadratic variation and observable martingale.
    Hsle,
    /// Discrete observable: holomorphicity residual and count ratio.
    Observable,
    /// Convergence order of the Poisson-kernel PDE residual.
    Pde,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Endpoints => "endpoints",
            Experiment::Crossing => "crossing",
            Experiment::Driver => "driver",
            Experiment::Hsle => "hsle",
            Experiment::Observable => "observable",
            Experiment::Pde => "pde",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "quadsle", version, about = "Spanning-tree and hypergeometric SLE experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub experiment: Experiment,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `out` in the config; defaults to out/<experiment>.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Serialize)]
struct Provenance<'a> {
    experiment: &'a str,
    git_describe: String,
    seed: u64,
    version: &'a str,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
    passed: bool,
}

/// Runs one experiment and writes its artifacts; returns whether the
/// statistical checks passed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let name = cli.experiment.name();
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    cfg.out = Some(out.clone());
    cfg.validate(name)?;
    cfg.experiment = Some(name.into());

    let work = || match cli.experiment {
        Experiment::Endpoints => commands::cmd_endpoints(&cfg),
        Experiment::Crossing => commands::cmd_crossing(&cfg),
        Experiment::Driver => commands::cmd_driver(&cfg),
        Experiment::Hsle => commands::cmd_hsle(&cfg),
        Experiment::Observable => commands::cmd_observable(&cfg),
        Experiment::Pde => commands::cmd_pde(&cfg),
    };
    let outcome = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let mut artifacts = outcome.artifacts;
    let outputs: Vec<String> = artifacts.names().map(String::from).collect();
    let prov = Provenance {
        experiment: name,
        git_describe: output::git_describe(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        outputs,
        passed: outcome.passed,
    };
    artifacts.json("config.json", &prov)?;
    artifacts.commit(&out)?;
    let verdict = if outcome.passed { "PASS" } else { "FAIL" };
    output::append_log(&out, &format!("{name} seed={} {verdict}: {}", cfg.seed, outcome.summary))?;
    println!("{name}: {}", outcome.summary);
    println!("{verdict} -> {}", out.display());
    Ok(outcome.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        let c: CliError = quadsle::Error::Topology("x".into()).into();
        assert_eq!(c.exit_code(), 2);
        let n: CliError = quadsle::Error::Integration { t: 0.1, msg: "x".into() }.into();
        assert_eq!(n.exit_code(), 3);
        let d: CliError = quadsle::Error::Domain("x".into()).into();
        assert_eq!(d.exit_code(), 3);
    }

    #[test]
    fn cli_parses_global_flags_after_subcommand() {
        let c = Cli::try_parse_from(["quadsle", "pde", "--config", "a.toml", "--seed", "4", "--threads", "2"]).unwrap();
        assert_eq!(c.experiment, Experiment::Pde);
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.threads, Some(2));
        assert!(Cli::try_parse_from(["quadsle", "bogus"]).is_err());
    }
}
