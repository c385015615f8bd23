//! End-to-end driver: order flow to trades, features and calibrated models.

use serde::{Deserialize, Serialize};

use crate::classify::TradeType;
use crate::error::Result;
use crate::features::{extract_instrument, FeatureSet, NormMode};
use crate::flow::{replay, ReplayStats, TickSize};
use crate::regression::{grid_calibrate_with, prepare_rows, CalibrationResult, ModelKind, ModelSpec, Parallelism};
use crate::synth::{zero_intelligence_flow, FlowConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub levels: usize,
    pub models: Vec<ModelKind>,
    pub grid_step: f64,
    pub aggregate: bool,
    pub weighted: bool,
    pub include_dummies: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            levels: 5,
            models: vec![ModelKind::PowerLaw],
            grid_step: 0.05,
            aggregate: true,
            weighted: false,
            include_dummies: true,
        }
    }
}

impl CalibrationOptions {
    pub fn spec(&self, kind: ModelKind) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(kind, self.levels).with_grid_step(self.grid_step)?;
        spec.weighted = self.weighted;
        spec.include_dummies = self.include_dummies;
        spec.validate()?;
        Ok(spec)
    }
}

/// A fit that could not be produced, kept alongside the successes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub instrument: String,
    pub trade_type: Option<TradeType>,
    pub model: ModelKind,
    pub kind: String,
    pub message: String,
}

/// Calibrates every requested model for each trade type present in
/// `features`. Types are visited in PB, PS, FB, FS order.
pub fn calibrate_features(
    features: &FeatureSet,
    opts: &CalibrationOptions,
    par: Parallelism,
) -> Result<(Vec<CalibrationResult>, Vec<FitFailure>)> {
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for kind in TradeType::ALL {
        let obs = features.of_type(kind);
        if obs.is_empty() {
            continue;
        }
        let rows = prepare_rows(&obs, opts.aggregate);
        for &model in &opts.models {
            let spec = opts.spec(model)?;
            match grid_calibrate_with(&rows, &spec, par) {
                Ok(r) => results.push(r.with_label(Some(features.instrument.clone()), Some(kind))),
                Err(e) => failures.push(FitFailure {
                    instrument: features.instrument.clone(),
                    trade_type: Some(kind),
                    model,
                    kind: e.kind().into(),
                    message: e.to_string(),
                }),
            }
        }
    }
    Ok((results, failures))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub replay: ReplayStats,
    pub features: FeatureSet,
    pub results: Vec<CalibrationResult>,
    pub failures: Vec<FitFailure>,
}

/// Zero-intelligence flow, replay, extraction and calibration in one go.
pub fn run_synthetic(
    flow: &FlowConfig,
    mode: NormMode,
    opts: &CalibrationOptions,
    par: Parallelism,
) -> Result<PipelineOutput> {
    let events = zero_intelligence_flow(flow)?;
    run_events(&flow.instrument, &events, flow.tick, mode, opts, par)
}

pub fn run_events(
    instrument: &str,
    events: &[crate::flow::OrderEvent],
    tick: TickSize,
    mode: NormMode,
    opts: &CalibrationOptions,
    par: Parallelism,
) -> Result<PipelineOutput> {
    let (trades, stats) = replay(instrument, events, opts.levels + 1)?;
    let features = extract_instrument(instrument, &trades, opts.levels, mode, tick);
    let (results, failures) = calibrate_features(&features, opts, par)?;
    Ok(PipelineOutput {
        replay: stats,
        features,
        results,
        failures,
    })
}
