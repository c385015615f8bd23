//! Input discovery. Order-flow files are recognized by their header;
//! feature files by the `<instrument>_<TYPE>.csv` name written by `extract`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use impactlab::features::{read_feature_csv, FeatureSet};
use impactlab::flow::{open_events, split_by_instrument, FLOW_CSV_HEADER};
use impactlab::{ImpactObservation, OrderEvent, TickTable, TradeType};

use crate::config::RunConfig;
use crate::CliError;

pub enum Inputs {
    /// Per-instrument event streams, sorted by code.
    Flow(Vec<(String, Vec<OrderEvent>)>),
    /// Normalized observations per instrument, sorted by code.
    Features(Vec<(String, Vec<ImpactObservation>)>),
}

enum Kind {
    Flow,
    Features(String, TradeType),
}

fn feature_name(path: &Path) -> Option<(String, TradeType)> {
    let stem = path.file_name()?.to_str()?.strip_suffix(".csv")?;
    let (inst, kind) = stem.rsplit_once('_')?;
    Some((inst.to_string(), kind.parse().ok()?))
}

fn sniff(path: &Path) -> Result<Kind, CliError> {
    let name = path.to_string_lossy();
    if name.ends_with(".csv.gz") {
        return Ok(Kind::Flow);
    }
    let first = BufReader::new(File::open(path)?)
        .lines()
        .map_while(Result::ok)
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .unwrap_or_default();
    if first.trim_end() == FLOW_CSV_HEADER {
        return Ok(Kind::Flow);
    }
    if first.starts_with("r_norm,") {
        if let Some((inst, kind)) = feature_name(path) {
            return Ok(Kind::Features(inst, kind));
        }
        return Err(CliError::input(format!(
            "{}: feature files must be named <instrument>_<TYPE>.csv",
            path.display()
        )));
    }
    Err(CliError::input(format!("{}: neither an order-flow nor a feature file", path.display())))
}

/// Expands directories: an `extract` output directory contributes its
/// `features/` files, any other directory its `*.csv` files.
fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if !p.is_dir() {
            out.push(p.clone());
            continue;
        }
        let dir = if p.join("features").is_dir() { p.join("features") } else { p.clone() };
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .filter(|f| {
                let n = f.to_string_lossy();
                n.ends_with(".csv") || n.ends_with(".csv.gz")
            })
            .collect();
        files.sort();
        out.extend(files);
    }
    Ok(out)
}

pub fn load(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let files = expand(&cfg.inputs)?;
    if files.is_empty() {
        return Err(CliError::input("no input files (use --input)"));
    }
    let ticks = TickTable::uniform(cfg.tick);
    let mut flow: BTreeMap<String, Vec<OrderEvent>> = BTreeMap::new();
    let mut feats: BTreeMap<String, Vec<ImpactObservation>> = BTreeMap::new();
    for f in &files {
        match sniff(f)? {
            Kind::Flow => {
                let events = open_events(f, ticks.clone())?.collect::<impactlab::Result<Vec<_>>>()?;
                for (inst, evs) in split_by_instrument(events) {
                    if cfg.wants(&inst) {
                        flow.entry(inst).or_default().extend(evs);
                    }
                }
            }
            Kind::Features(inst, kind) => {
                if cfg.wants(&inst) {
                    let obs = read_feature_csv(BufReader::new(File::open(f)?), &inst, kind)?;
                    feats.entry(inst).or_default().extend(obs);
                }
            }
        }
    }
    match (flow.is_empty(), feats.is_empty()) {
        (false, true) => Ok(Inputs::Flow(flow.into_iter().collect())),
        (true, false) => Ok(Inputs::Features(
            feats
                .into_iter()
                .map(|(inst, mut obs)| {
                    // Stable regrouping so types appear in PB, PS, FB, FS order.
                    obs.sort_by_key(|o| o.kind);
                    (inst, obs)
                })
                .collect(),
        )),
        (true, true) => Err(CliError::input("inputs hold no data for the selected instruments")),
        (false, false) => Err(CliError::input("cannot mix order-flow and feature inputs")),
    }
}

/// Wraps loaded observations as a feature set without trade statistics.
pub fn feature_set(instrument: &str, obs: Vec<ImpactObservation>, cfg: &RunConfig) -> FeatureSet {
    FeatureSet {
        instrument: instrument.to_string(),
        levels: obs.first().map_or(cfg.levels, ImpactObservation::levels),
        mode: cfg.norm,
        stats: None,
        counters: Default::default(),
        warnings: Vec::new(),
        observations: obs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_names() {
        assert_eq!(feature_name(Path::new("d/000001_PB.csv")), Some(("000001".into(), TradeType::PB)));
        assert_eq!(feature_name(Path::new("a_b_FS.csv")), Some(("a_b".into(), TradeType::FS)));
        assert_eq!(feature_name(Path::new("000001_XX.csv")), None);
        assert_eq!(feature_name(Path::new("flow.csv")), None);
    }
}
