use std::collections::BTreeMap;

use impactlab::classify::write_stats_csv;
use impactlab::features::{write_feature_csv, FeatureSet};
use impactlab::flow::{format_event, ReplayStats, FLOW_CSV_HEADER};
use impactlab::pipeline::{calibrate_features, FitFailure};
use impactlab::regression::report::{write_asymmetry_tsv, write_grid_tsv};
use impactlab::regression::{
    asymmetry_compare, significance_pattern, taylor_linkage, AsymmetryRow, CalibrationResult, ModelKind,
    Parallelism, SignificanceMatrix, TaylorLinkage,
};
use impactlab::synth::{
    event_digest, model_observations, scripted_scenario, zero_intelligence_flow, FlowConfig, ObservationConfig,
    Truth, SCENARIOS,
};
use impactlab::{extract_instrument, replay, stock_stats, OrderEvent, StockStats, TradeRecord, TradeType};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::inputs::{self, Inputs};
use crate::output::Artifacts;
use crate::{CliError, SynthKind};

struct Replayed {
    instrument: String,
    trades: Vec<TradeRecord>,
    stats: ReplayStats,
}

fn replay_all(cfg: &RunConfig, flows: &[(String, Vec<OrderEvent>)]) -> Result<Vec<Replayed>, CliError> {
    flows
        .par_iter()
        .map(|(inst, events)| {
            let (trades, stats) = replay(inst, events, cfg.levels + 1)?;
            Ok(Replayed {
                instrument: inst.clone(),
                trades,
                stats,
            })
        })
        .collect()
}

fn flows_only(cfg: &RunConfig, what: &str) -> Result<Vec<(String, Vec<OrderEvent>)>, CliError> {
    match inputs::load(cfg)? {
        Inputs::Flow(f) => Ok(f),
        Inputs::Features(_) => Err(CliError::input(format!("{what} needs order-flow input"))),
    }
}

fn feature_sets(cfg: &RunConfig) -> Result<Vec<FeatureSet>, CliError> {
    match inputs::load(cfg)? {
        Inputs::Flow(flows) => Ok(replay_all(cfg, &flows)?
            .par_iter()
            .map(|r| extract_instrument(&r.instrument, &r.trades, cfg.levels, cfg.norm, cfg.tick))
            .collect()),
        Inputs::Features(groups) => Ok(groups
            .into_iter()
            .map(|(inst, obs)| inputs::feature_set(&inst, obs, cfg))
            .collect()),
    }
}

#[derive(Serialize)]
struct InstrumentReplay<'a> {
    instrument: &'a str,
    stats: &'a ReplayStats,
}

pub fn replay_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let runs = replay_all(cfg, &flows_only(cfg, "replay")?)?;
    out.text("trades.csv", |w| {
        writeln!(
            w,
            "instrument,timestamp,seq,type,limit_price,size,omega,remainder,levels_eaten,r_num,r_den,r"
        )?;
        for run in &runs {
            for t in &run.trades {
                let (num, den, r) = match t.ret {
                    Some(ret) => (ret.num.to_string(), ret.den.to_string(), ret.to_f64().to_string()),
                    None => Default::default(),
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{num},{den},{r}",
                    t.instrument,
                    t.timestamp.format("%Y-%m-%dT%H:%M:%S%.f"),
                    t.seq,
                    t.kind,
                    cfg.tick.format(t.limit_price),
                    t.size.0,
                    t.omega.0,
                    t.remainder.0,
                    t.n_levels_eaten
                )?;
            }
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Body<'a> {
        instruments: Vec<InstrumentReplay<'a>>,
    }
    out.json(
        "replay.json",
        &Body {
            instruments: runs
                .iter()
                .map(|r| InstrumentReplay {
                    instrument: &r.instrument,
                    stats: &r.stats,
                })
                .collect(),
        },
    )
}

pub fn stats_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let runs = replay_all(cfg, &flows_only(cfg, "stats")?)?;
    let mut stats: Vec<StockStats> = Vec::new();
    let mut skipped = Vec::new();
    for r in &runs {
        match stock_stats(&r.instrument, &r.trades) {
            Ok(s) => stats.push(s),
            Err(e) => skipped.push(format!("{}: {e}", r.instrument)),
        }
    }
    out.text("stats.csv", |w| Ok(write_stats_csv(w, &stats)?))?;
    #[derive(Serialize)]
    struct Body<'a> {
        stats: &'a [StockStats],
        skipped: &'a [String],
    }
    out.json(
        "stats.json",
        &Body {
            stats: &stats,
            skipped: &skipped,
        },
    )
}

fn write_features(sets: &[FeatureSet], out: &mut Artifacts) -> Result<(), CliError> {
    for set in sets {
        for kind in TradeType::ALL {
            let obs = set.of_type(kind);
            if !obs.is_empty() {
                out.text(&format!("features/{}_{kind}.csv", set.instrument), |w| {
                    Ok(write_feature_csv(w, &obs, set.levels)?)
                })?;
            }
        }
    }
    Ok(())
}

pub fn extract_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let sets = feature_sets(cfg)?;
    write_features(&sets, out)?;
    #[derive(Serialize)]
    struct Body<'a> {
        sets: &'a [FeatureSet],
    }
    out.json("features.json", &Body { sets: &sets })
}

#[derive(Serialize, Deserialize)]
struct Calibration {
    results: Vec<CalibrationResult>,
    failures: Vec<FitFailure>,
}

fn calibrate_sets(cfg: &RunConfig, sets: &[FeatureSet]) -> Result<Calibration, CliError> {
    let opts = cfg.calibration_options();
    let per: Vec<_> = sets
        .par_iter()
        .map(|s| calibrate_features(s, &opts, Parallelism::Parallel))
        .collect::<impactlab::Result<_>>()?;
    let (mut results, mut failures) = (Vec::new(), Vec::new());
    for (r, f) in per {
        results.extend(r);
        failures.extend(f);
    }
    Ok(Calibration { results, failures })
}

fn label(r: &CalibrationResult) -> String {
    let inst = r.instrument.as_deref().unwrap_or("all");
    let kind = r.trade_type.map_or("all", TradeType::as_str);
    format!("{inst}_{kind}_{}", r.model.short())
}

fn write_grids(results: &[CalibrationResult], out: &mut Artifacts) -> Result<(), CliError> {
    for r in results {
        out.text(&format!("grid/{}.tsv", label(r)), |w| Ok(write_grid_tsv(w, r)?))?;
    }
    Ok(())
}

pub fn calibrate_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let cal = calibrate_sets(cfg, &feature_sets(cfg)?)?;
    write_grids(&cal.results, out)?;
    out.json("calibration.json", &cal)
}

/// Label given to fits on observations pooled across instruments.
pub const POOLED: &str = "POOLED";

/// Concatenates every instrument's observations, in code order, into one
/// set. Aggregation by size still happens within each instrument.
pub fn pool_sets(sets: Vec<FeatureSet>, cfg: &RunConfig) -> FeatureSet {
    let obs = sets.into_iter().flat_map(|s| s.observations).collect();
    inputs::feature_set(POOLED, obs, cfg)
}

pub fn pool_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let sets = feature_sets(cfg)?;
    let instruments: Vec<String> = sets.iter().map(|s| s.instrument.clone()).collect();
    let pooled = pool_sets(sets, cfg);
    let n_obs = pooled.observations.len();
    let cal = calibrate_sets(cfg, std::slice::from_ref(&pooled))?;
    write_grids(&cal.results, out)?;
    #[derive(Serialize)]
    struct Body<'a> {
        instruments: &'a [String],
        n_observations: usize,
        #[serde(flatten)]
        calibration: &'a Calibration,
    }
    out.json(
        "pooled.json",
        &Body {
            instruments: &instruments,
            n_observations: n_obs,
            calibration: &cal,
        },
    )
}

#[derive(Serialize, Deserialize)]
struct Pair {
    instrument: Option<String>,
    trade_type: Option<TradeType>,
    power_law: CalibrationResult,
    logarithmic: CalibrationResult,
}

fn pair_up(results: &[CalibrationResult]) -> Vec<Pair> {
    let key = |r: &CalibrationResult| (r.instrument.clone(), r.trade_type);
    let ln: BTreeMap<_, &CalibrationResult> = results
        .iter()
        .filter(|r| r.model == ModelKind::Logarithmic)
        .map(|r| (key(r), r))
        .collect();
    results
        .iter()
        .filter(|r| r.model == ModelKind::PowerLaw)
        .filter_map(|pl| {
            ln.get(&key(pl)).map(|l| Pair {
                instrument: pl.instrument.clone(),
                trade_type: pl.trade_type,
                power_law: pl.clone(),
                logarithmic: (*l).clone(),
            })
        })
        .collect()
}

fn linkage_of(pairs: &[Pair]) -> Result<TaylorLinkage, CliError> {
    let refs: Vec<_> = pairs.iter().map(|p| (&p.power_law, &p.logarithmic)).collect();
    Ok(taylor_linkage(&refs)?)
}

pub fn compare_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    cfg.models = vec![ModelKind::PowerLaw, ModelKind::Logarithmic];
    let cal = calibrate_sets(&cfg, &feature_sets(&cfg)?)?;
    let pairs = pair_up(&cal.results);
    if pairs.is_empty() {
        return Err(CliError::new("calibration", "no instrument and type calibrated under both models"));
    }
    let linkage = linkage_of(&pairs)?;
    out.text("linkage.tsv", |w| Ok(linkage.write_tsv(w)?))?;
    #[derive(Serialize)]
    struct Body<'a> {
        pairs: &'a [Pair],
        linkage: &'a TaylorLinkage,
        failures: &'a [FitFailure],
    }
    out.json(
        "compare.json",
        &Body {
            pairs: &pairs,
            linkage: &linkage,
            failures: &cal.failures,
        },
    )
}

/// Runs every instrument's generator and merges the streams by time,
/// renumbering `seq` across the merged file.
fn merged_flow(cfg: &RunConfig) -> Result<(Vec<OrderEvent>, Vec<(FlowConfig, String)>), CliError> {
    let codes = if cfg.instruments.is_empty() {
        vec!["000001".to_string()]
    } else {
        cfg.instruments.clone()
    };
    let mut streams = Vec::new();
    let mut configs = Vec::new();
    for (i, code) in codes.iter().enumerate() {
        let fc = FlowConfig {
            seed: cfg.seed + i as u64,
            instrument: code.clone(),
            tick: cfg.tick,
            events: cfg.events,
            ..Default::default()
        };
        let events = zero_intelligence_flow(&fc)?;
        let digest = event_digest(&events, events.len(), cfg.tick);
        streams.push(events);
        configs.push((fc, digest));
    }
    let mut all: Vec<(usize, OrderEvent)> = streams
        .into_iter()
        .enumerate()
        .flat_map(|(i, evs)| evs.into_iter().map(move |e| (i, e)))
        .collect();
    all.sort_by(|(i, a), (j, b)| (a.timestamp, i, a.seq).cmp(&(b.timestamp, j, b.seq)));
    let merged = all
        .into_iter()
        .enumerate()
        .map(|(k, (_, mut e))| {
            e.seq = k as u64 + 1;
            e
        })
        .collect();
    Ok((merged, configs))
}

pub fn synth_cmd(kind: SynthKind, cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    match kind {
        SynthKind::Flow => {
            let (events, configs) = merged_flow(cfg)?;
            out.plain("flow.csv", |w| {
                writeln!(w, "{FLOW_CSV_HEADER}")?;
                for e in &events {
                    writeln!(w, "{}", format_event(e, cfg.tick))?;
                }
                Ok(())
            })?;
            #[derive(Serialize)]
            struct Stream<'a> {
                config: &'a FlowConfig,
                sha256: &'a str,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                file: &'a str,
                events: usize,
                streams: Vec<Stream<'a>>,
            }
            out.json(
                "synth.json",
                &Body {
                    file: "flow.csv",
                    events: events.len(),
                    streams: configs
                        .iter()
                        .map(|(c, d)| Stream { config: c, sha256: d })
                        .collect(),
                },
            )
        }
        SynthKind::Observations => {
            let truth = Truth::example(cfg.true_model, cfg.levels, cfg.true_alpha, cfg.true_beta, cfg.sigma);
            let mut oc = ObservationConfig::new(cfg.seed, cfg.obs, truth);
            oc.depth = cfg.depth;
            if let Some(code) = cfg.instruments.first() {
                oc.instrument = code.clone();
            }
            let (obs, record) = model_observations(&oc)?;
            out.text(&format!("features/{}_{}.csv", oc.instrument, oc.kind), |w| {
                Ok(write_feature_csv(w, &obs, cfg.levels)?)
            })?;
            #[derive(Serialize)]
            struct Body<'a> {
                config: &'a ObservationConfig,
                record: &'a impactlab::synth::TruthRecord,
            }
            out.json(
                "truth.json",
                &Body {
                    config: &oc,
                    record: &record,
                },
            )
        }
        SynthKind::Scenarios => {
            let names: Vec<&str> = match &cfg.scenario {
                Some(n) => vec![n.as_str()],
                None => SCENARIOS.to_vec(),
            };
            #[derive(Serialize)]
            struct View {
                name: &'static str,
                tick: String,
                book: impactlab::BookSnapshot,
                side: impactlab::Side,
                price: impactlab::Price,
                size: impactlab::Volume,
                expected: impactlab::MechanicalOutcome,
            }
            let scenarios = names
                .iter()
                .map(|n| {
                    scripted_scenario(n).map(|s| View {
                        name: s.name,
                        tick: s.tick.to_string(),
                        book: s.snapshot(),
                        side: s.side,
                        price: s.price,
                        size: s.size,
                        expected: s.expected,
                    })
                })
                .collect::<impactlab::Result<Vec<_>>>()?;
            #[derive(Serialize)]
            struct Body<'a> {
                scenarios: &'a [View],
            }
            out.json("scenarios.json", &Body { scenarios: &scenarios })
        }
    }
}

/// Fits gathered from `calibration.json`, `pooled.json` or `compare.json`.
fn load_results(cfg: &RunConfig) -> Result<Vec<CalibrationResult>, CliError> {
    #[derive(Deserialize)]
    struct Any {
        #[serde(default)]
        results: Vec<CalibrationResult>,
        #[serde(default)]
        pairs: Vec<Pair>,
    }
    if cfg.inputs.is_empty() {
        return Err(CliError::input("no input files (use --input)"));
    }
    let mut out = Vec::new();
    for p in &cfg.inputs {
        let text = std::fs::read_to_string(p)?;
        let any: Any = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: not a calibration artifact ({e})", p.display())))?;
        out.extend(any.results);
        for pair in any.pairs {
            out.push(pair.power_law);
            out.push(pair.logarithmic);
        }
    }
    if out.is_empty() {
        return Err(CliError::input("inputs contain no calibration results"));
    }
    Ok(out)
}

pub fn report_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let results = load_results(cfg)?;
    let mut significance: BTreeMap<&str, SignificanceMatrix> = BTreeMap::new();
    let mut asymmetry: BTreeMap<&str, Vec<AsymmetryRow>> = BTreeMap::new();
    for model in [ModelKind::PowerLaw, ModelKind::Logarithmic] {
        let fits: Vec<CalibrationResult> = results.iter().filter(|r| r.model == model).cloned().collect();
        if fits.is_empty() {
            continue;
        }
        let m = significance_pattern(&fits, cfg.alpha_level)?;
        out.text(&format!("significance_{}.csv", model.short()), |w| Ok(m.write_csv(w)?))?;
        significance.insert(model.short(), m);
        let rows = asymmetry_compare(&fits);
        out.text(&format!("asymmetry_{}.tsv", model.short()), |w| Ok(write_asymmetry_tsv(w, &rows)?))?;
        asymmetry.insert(model.short(), rows);
    }
    write_grids(&results, out)?;
    let pairs = pair_up(&results);
    let linkage = if pairs.is_empty() { None } else { Some(linkage_of(&pairs)?) };
    if let Some(l) = &linkage {
        out.text("linkage.tsv", |w| Ok(l.write_tsv(w)?))?;
    }
    #[derive(Serialize)]
    struct Body<'a> {
        alpha_level: f64,
        significance: &'a BTreeMap<&'a str, SignificanceMatrix>,
        asymmetry: &'a BTreeMap<&'a str, Vec<AsymmetryRow>>,
        linkage: Option<&'a TaylorLinkage>,
    }
    out.json(
        "report.json",
        &Body {
            alpha_level: cfg.alpha_level,
            significance: &significance,
            asymmetry: &asymmetry,
            linkage: linkage.as_ref(),
        },
    )
}
