//! `impactlab` batch driver: replay order flow, extract impact features,
//! calibrate the impact models and write reports.
//!
//! Settings come from an optional `--config` file of `key = value` lines,
//! overridden by flags. On failure a JSON object
//! `{"error":{"kind":..,"message":..}}` goes to stderr and the exit status
//! is nonzero.

mod commands;
mod config;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{config_hash, parse_config_file, RunConfig, Settings};
use output::Artifacts;

#[derive(Debug, Serialize)]
pub struct CliError {
    kind: String,
    message: String,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new("input", message)
    }
}

impl From<impactlab::Error> for CliError {
    fn from(e: impactlab::Error) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("json", e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "impactlab", version, about = "Trade-level immediate price impact toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Replay order flow into classified trades.
    Replay,
    /// Per-instrument mean returns by trade type and the partial-fill fraction.
    Stats,
    /// Write normalized impact observations per instrument and type.
    Extract,
    /// Calibrate each instrument and trade type separately.
    Calibrate,
    /// Calibrate on observations pooled across all instruments.
    Pool,
    /// Fit both models and regress logarithmic on scaled power-law depth coefficients.
    Compare,
    /// Generate synthetic order flow, model observations or scripted scenarios.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
    },
    /// Significance matrices, asymmetry tables and plot data from calibration output.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthKind {
    Flow,
    Observations,
    Scenarios,
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input files or directories (repeat or separate with commas).
    #[arg(long, global = true, value_delimiter = ',')]
    input: Vec<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// Only process these instrument codes (comma-separated).
    #[arg(long, global = true)]
    instruments: Option<String>,
    /// Book levels L entering the regressions.
    #[arg(long, global = true)]
    levels: Option<String>,
    #[arg(long, global = true, value_parser = ["pl", "ln", "both"])]
    model: Option<String>,
    /// Spacing of the exponent grid; must divide 1.
    #[arg(long = "grid-step", global = true)]
    grid_step: Option<String>,
    /// Average observations sharing a trade size before fitting.
    #[arg(long, global = true, overrides_with = "no_agg")]
    agg: bool,
    #[arg(long = "no-agg", global = true, overrides_with = "agg")]
    no_agg: bool,
    /// Weight aggregated rows by their group size.
    #[arg(long, global = true)]
    weighted: bool,
    /// Drop the intraday bucket dummies.
    #[arg(long = "no-dummies", global = true)]
    no_dummies: bool,
    #[arg(long, global = true, value_parser = ["rel", "raw"])]
    norm: Option<String>,
    /// Significance level for reports.
    #[arg(long = "alpha-level", global = true)]
    alpha_level: Option<String>,
    /// Price increment, e.g. 0.01.
    #[arg(long, global = true)]
    tick: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Events per instrument for `synth flow`.
    #[arg(long, global = true)]
    events: Option<String>,
    /// Observation count for `synth observations`.
    #[arg(long, global = true)]
    obs: Option<String>,
    #[arg(long = "true-model", global = true, value_parser = ["pl", "ln"])]
    true_model: Option<String>,
    #[arg(long = "true-alpha", global = true)]
    true_alpha: Option<String>,
    #[arg(long = "true-beta", global = true)]
    true_beta: Option<String>,
    /// Noise standard deviation for `synth observations`.
    #[arg(long, global = true)]
    sigma: Option<String>,
    /// Depth distribution: lognormal:SIGMA or uniform:LO:HI.
    #[arg(long, global = true)]
    depth: Option<String>,
    /// One scripted scenario for `synth scenarios`; default all.
    #[arg(long, global = true)]
    scenario: Option<String>,
}

impl Flags {
    fn overlay(&self, s: &mut Settings) {
        let mut set = |k: &str, v: Option<&String>| {
            if let Some(v) = v {
                s.insert(k.to_string(), v.clone());
            }
        };
        set("out", self.out.as_ref());
        set("instruments", self.instruments.as_ref());
        set("levels", self.levels.as_ref());
        set("model", self.model.as_ref());
        set("grid-step", self.grid_step.as_ref());
        set("norm", self.norm.as_ref());
        set("alpha-level", self.alpha_level.as_ref());
        set("tick", self.tick.as_ref());
        set("seed", self.seed.as_ref());
        set("events", self.events.as_ref());
        set("obs", self.obs.as_ref());
        set("true-model", self.true_model.as_ref());
        set("true-alpha", self.true_alpha.as_ref());
        set("true-beta", self.true_beta.as_ref());
        set("sigma", self.sigma.as_ref());
        set("depth", self.depth.as_ref());
        set("scenario", self.scenario.as_ref());
        if !self.input.is_empty() {
            s.insert("input".into(), self.input.join(","));
        }
        if self.agg {
            s.insert("agg".into(), "true".into());
        }
        if self.no_agg {
            s.insert("agg".into(), "false".into());
        }
        if self.weighted {
            s.insert("weighted".into(), "true".into());
        }
        if self.no_dummies {
            s.insert("dummies".into(), "false".into());
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("IMPACTLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::config(format!("IMPACTLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = chrono::Utc::now();
    init_threads()?;
    let mut settings = match &cli.flags.config {
        Some(p) => parse_config_file(&std::fs::read_to_string(p)?)?,
        None => Settings::new(),
    };
    cli.flags.overlay(&mut settings);
    let cfg = RunConfig::from_settings(&settings)?;
    let name = match cli.command {
        Command::Replay => "replay",
        Command::Stats => "stats",
        Command::Extract => "extract",
        Command::Calibrate => "calibrate",
        Command::Pool => "pool",
        Command::Compare => "compare",
        Command::Synth { kind: SynthKind::Flow } => "synth-flow",
        Command::Synth { kind: SynthKind::Observations } => "synth-observations",
        Command::Synth { kind: SynthKind::Scenarios } => "synth-scenarios",
        Command::Report => "report",
    };
    let mut out = Artifacts::new(&cfg.out, config_hash(name, &cfg)?)?;
    match cli.command {
        Command::Replay => commands::replay_cmd(&cfg, &mut out)?,
        Command::Stats => commands::stats_cmd(&cfg, &mut out)?,
        Command::Extract => commands::extract_cmd(&cfg, &mut out)?,
        Command::Calibrate => commands::calibrate_cmd(&cfg, &mut out)?,
        Command::Pool => commands::pool_cmd(&cfg, &mut out)?,
        Command::Compare => commands::compare_cmd(&cfg, &mut out)?,
        Command::Synth { kind } => commands::synth_cmd(kind, &cfg, &mut out)?,
        Command::Report => commands::report_cmd(&cfg, &mut out)?,
    }
    out.metadata(name, &cfg, started)
}

fn report_error(e: &CliError) {
    let body = serde_json::json!({ "error": e });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error(&CliError::new("usage", e.to_string().trim_end()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::FAILURE
        }
    }
}
