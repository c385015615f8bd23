//! Run configuration: a flat `key = value` file overlaid by command-line
//! flags, then parsed into [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use impactlab::regression::ModelKind;
use impactlab::synth::DepthDist;
use impactlab::{NormMode, TickSize};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Keys accepted in config files; each has a `--key` flag of the same name.
pub const KEYS: &[&str] = &[
    "input",
    "out",
    "instruments",
    "levels",
    "model",
    "grid-step",
    "agg",
    "weighted",
    "dummies",
    "norm",
    "alpha-level",
    "tick",
    "seed",
    "events",
    "obs",
    "true-model",
    "true-alpha",
    "true-beta",
    "sigma",
    "depth",
    "scenario",
];

pub type Settings = BTreeMap<String, String>;

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_file(text: &str) -> Result<Settings, CliError> {
    let mut out = Settings::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip)]
    pub inputs: Vec<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
    /// Restricts processing to these codes; empty means all.
    pub instruments: Vec<String>,
    pub levels: usize,
    pub models: Vec<ModelKind>,
    pub grid_step: f64,
    pub aggregate: bool,
    pub weighted: bool,
    pub dummies: bool,
    pub norm: NormMode,
    pub alpha_level: f64,
    pub tick: TickSize,
    pub seed: u64,
    pub events: usize,
    pub obs: usize,
    pub true_model: ModelKind,
    pub true_alpha: f64,
    pub true_beta: f64,
    pub sigma: f64,
    pub depth: DepthDist,
    pub scenario: Option<String>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_models(v: &str) -> Result<Vec<ModelKind>, CliError> {
    match v {
        "both" => Ok(vec![ModelKind::PowerLaw, ModelKind::Logarithmic]),
        other => Ok(vec![other.parse().map_err(CliError::from)?]),
    }
}

fn parse_norm(v: &str) -> Result<NormMode, CliError> {
    match v {
        "rel" | "relative" => Ok(NormMode::Relative),
        "raw" => Ok(NormMode::Raw),
        _ => Err(CliError::config(format!("norm: expected rel or raw, got {v:?}"))),
    }
}

/// `lognormal:SIGMA` or `uniform:LO:HI`.
fn parse_depth(v: &str) -> Result<DepthDist, CliError> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        ["lognormal", s] => Ok(DepthDist::LogNormal { sigma: parse("depth", s)? }),
        ["uniform", lo, hi] => Ok(DepthDist::Uniform {
            lo: parse("depth", lo)?,
            hi: parse("depth", hi)?,
        }),
        _ => Err(CliError::config(format!(
            "depth: expected lognormal:SIGMA or uniform:LO:HI, got {v:?}"
        ))),
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let get = |k: &str| s.get(k).map(String::as_str);
        let cfg = RunConfig {
            inputs: get("input").map(list).unwrap_or_default().into_iter().map(PathBuf::from).collect(),
            out: PathBuf::from(get("out").unwrap_or("out")),
            instruments: get("instruments").map(list).unwrap_or_default(),
            levels: get("levels").map_or(Ok(5), |v| parse("levels", v))?,
            models: get("model").map_or(Ok(vec![ModelKind::PowerLaw]), parse_models)?,
            grid_step: get("grid-step").map_or(Ok(0.05), |v| parse("grid-step", v))?,
            aggregate: get("agg").map_or(Ok(true), |v| parse_bool("agg", v))?,
            weighted: get("weighted").map_or(Ok(false), |v| parse_bool("weighted", v))?,
            dummies: get("dummies").map_or(Ok(true), |v| parse_bool("dummies", v))?,
            norm: get("norm").map_or(Ok(NormMode::Relative), parse_norm)?,
            alpha_level: get("alpha-level").map_or(Ok(0.05), |v| parse("alpha-level", v))?,
            tick: get("tick").map_or(Ok(TickSize::CENT), |v| v.parse().map_err(CliError::from))?,
            seed: get("seed").map_or(Ok(1), |v| parse("seed", v))?,
            events: get("events").map_or(Ok(10_000), |v| parse("events", v))?,
            obs: get("obs").map_or(Ok(10_000), |v| parse("obs", v))?,
            true_model: get("true-model").map_or(Ok(ModelKind::PowerLaw), |v| v.parse().map_err(CliError::from))?,
            true_alpha: get("true-alpha").map_or(Ok(0.55), |v| parse("true-alpha", v))?,
            true_beta: get("true-beta").map_or(Ok(0.10), |v| parse("true-beta", v))?,
            sigma: get("sigma").map_or(Ok(0.05), |v| parse("sigma", v))?,
            depth: get("depth").map_or(Ok(DepthDist::LogNormal { sigma: 1.0 }), parse_depth)?,
            scenario: get("scenario").map(String::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.levels == 0 {
            return Err(CliError::config("levels must be at least 1"));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(CliError::config(format!("alpha-level {} outside (0, 1)", self.alpha_level)));
        }
        impactlab::regression::grid_axis(self.grid_step)?;
        Ok(())
    }

    pub fn calibration_options(&self) -> impactlab::pipeline::CalibrationOptions {
        impactlab::pipeline::CalibrationOptions {
            levels: self.levels,
            models: self.models.clone(),
            grid_step: self.grid_step,
            aggregate: self.aggregate,
            weighted: self.weighted,
            include_dummies: self.dummies,
        }
    }

    pub fn wants(&self, instrument: &str) -> bool {
        self.instruments.is_empty() || self.instruments.iter().any(|i| i == instrument)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a file, or of every file under a directory in name order.
fn digest_path(h: &mut Sha256, path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for e in entries {
            h.update(e.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default().as_bytes());
            digest_path(h, &e)?;
        }
    } else {
        h.update(std::fs::read(path)?);
    }
    Ok(())
}

/// Hash of the subcommand, the resolved configuration and the input
/// contents. Paths do not enter, so moving inputs or outputs keeps it.
pub fn config_hash(subcommand: &str, cfg: &RunConfig) -> Result<String, CliError> {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update([0]);
    h.update(serde_json::to_vec(cfg)?);
    for p in &cfg.inputs {
        let mut f = Sha256::new();
        digest_path(&mut f, p)?;
        h.update(f.finalize());
    }
    Ok(hex(&h.finalize()))
}
