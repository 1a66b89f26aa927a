use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mz_core::{GameParams, ParamSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "mz-lab",
    version,
    about = "Sniping-game analytics, simulation and compliance monitoring"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thresholds, regime and indifference point for one parameter set.
    Analyze(AnalyzeArgs),
    /// Tabulate thresholds, regimes or utility lines over a grid.
    Sweep(SweepArgs),
    /// Simulate the repeated game for one or more seeds.
    Simulate(SimulateArgs),
    /// Run the sequential compliance test on a utility stream.
    Monitor(MonitorArgs),
    /// Print the per-event payoff table.
    PayoffTable(PayoffArgs),
    /// Repeat a run recorded in a manifest.
    Rerun(RerunArgs),
}

/// Model parameters. Flags override values read from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Parameter file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of traders.
    #[arg(long = "H")]
    pub h: Option<u32>,
    /// News arrival rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Liquidity trader arrival rate.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Exchange latency.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Risk aversion (at least 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// News jump size.
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl ParamArgs {
    /// File values overlaid by flag values, not yet validated.
    pub fn spec(&self) -> CliResult<ParamSpec> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read config {}: {e}", path.display()))
                })?;
                ParamSpec::parse(&text)?
            }
            None => ParamSpec::default(),
        };
        Ok(base.overlay(&ParamSpec {
            h: self.h,
            alpha: self.alpha,
            mu: self.mu,
            delta: self.delta,
            gamma: self.gamma,
            sigma: self.sigma,
        }))
    }

    pub fn resolve(&self) -> CliResult<GameParams> {
        Ok(self.spec()?.resolve()?)
    }
}

/// Flags reproducing `spec`, skipping unset keys.
pub fn spec_argv(spec: &ParamSpec) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(h) = spec.h {
        out.extend(["--H".to_string(), h.to_string()]);
    }
    for (flag, v) in [
        ("--alpha", spec.alpha),
        ("--mu", spec.mu),
        ("--delta", spec.delta),
        ("--gamma", spec.gamma),
        ("--sigma", spec.sigma),
    ] {
        if let Some(v) = v {
            out.extend([flag.to_string(), v.to_string()]);
        }
    }
    out
}

pub fn params_argv(p: &GameParams) -> Vec<String> {
    spec_argv(&ParamSpec::from_params(p))
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutArgs {
    /// Directory for CSV outputs and the run manifest; omit to print to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    Gamma,
    Alpha,
    Mu,
    Delta,
    #[value(name = "H")]
    H,
    P,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Gamma => "gamma",
            SweepVar::Alpha => "alpha",
            SweepVar::Mu => "mu",
            SweepVar::Delta => "delta",
            SweepVar::H => "H",
            SweepVar::P => "p",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Variable to sweep.
    #[arg(long = "var", value_enum)]
    pub var: SweepVar,
    /// Grid as start:stop:step.
    #[arg(long)]
    pub grid: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Trustworthy agents (default: H minus deceptive).
    #[arg(long)]
    pub ht: Option<u32>,
    /// Deceptive agents, who always snipe.
    #[arg(long, default_value_t = 0)]
    pub hd: u32,
    /// Sniping probability of trustworthy agents (default: the optimal one).
    #[arg(long)]
    pub p: Option<f64>,
    /// Spread posted by every agent (default: the indifference spread).
    #[arg(long)]
    pub spread: Option<f64>,
    /// Stages per run.
    #[arg(long, default_value_t = 10_000)]
    pub stages: u64,
    /// Comma-separated seeds, one run each.
    #[arg(
        long = "seeds",
        alias = "seed",
        value_delimiter = ',',
        default_value = "1"
    )]
    pub seeds: Vec<u64>,
    /// Skip the per-stage stream files.
    #[arg(long)]
    pub summary_only: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MonitorArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Stream CSV written by `simulate`; without it a stream is simulated.
    #[arg(long)]
    pub stream: Option<PathBuf>,
    /// Agent whose utilities are tested (with `--stream`).
    #[arg(long, default_value_t = 0)]
    pub agent: usize,
    /// Trustworthy agents in the simulated market.
    #[arg(long)]
    pub ht: Option<u32>,
    /// Deceptive agents in the simulated market.
    #[arg(long, default_value_t = 0)]
    pub hd: u32,
    /// Deceptive agents assumed by the alternative hypothesis.
    #[arg(long, default_value_t = 1)]
    pub assumed_hd: u32,
    /// Agreed sniping probability (default: the optimal one).
    #[arg(long)]
    pub p: Option<f64>,
    /// Agreed spread (default: the indifference spread).
    #[arg(long)]
    pub spread: Option<f64>,
    /// Stages to simulate.
    #[arg(long, default_value_t = 10_000)]
    pub stages: u64,
    #[arg(long = "seed", alias = "seeds", default_value_t = 1)]
    pub seed: u64,
    /// Probability of flagging a compliant market.
    #[arg(long, default_value_t = 0.05)]
    pub err1: f64,
    /// Probability of clearing a market with deceptive agents.
    #[arg(long, default_value_t = 0.05)]
    pub err2: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PayoffArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Evaluate the table at this spread (needs the parameters).
    #[arg(long)]
    pub spread: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Output directory (default: the manifest's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
