use impactlab::flow::{replay, write_events, TickTable};
use impactlab::pipeline::{run_events, run_synthetic, CalibrationOptions};
use impactlab::regression::{significance_pattern, ModelKind, Parallelism};
use impactlab::synth::{zero_intelligence_flow, FlowConfig};
use impactlab::{NormMode, TradeType};

fn both_models() -> CalibrationOptions {
    CalibrationOptions {
        models: vec![ModelKind::PowerLaw, ModelKind::Logarithmic],
        ..Default::default()
    }
}

fn flow() -> FlowConfig {
    FlowConfig {
        events: 40_000,
        ..Default::default()
    }
}

#[test]
fn every_type_and_model_calibrates() {
    let out = run_synthetic(&flow(), NormMode::Relative, &both_models(), Parallelism::Parallel).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert_eq!(out.results.len(), 8);
    for r in &out.results {
        assert_eq!(r.instrument.as_deref(), Some("000001"));
        assert!(r.trade_type.is_some());
        assert!(r.r2_adj.is_finite() && r.r2_adj <= 1.0);
        assert!(r.alpha > 0.0 && r.alpha < 1.0);
        assert_eq!(r.beta.is_some(), r.model == ModelKind::PowerLaw);
        assert_eq!(r.grid_trace.len(), if r.model == ModelKind::PowerLaw { 361 } else { 19 });
        assert_eq!(r.coef.len(), r.n_params);
        assert!(r.n_obs > r.n_params);
    }
    let order: Vec<TradeType> = out.results.iter().step_by(2).map(|r| r.trade_type.unwrap()).collect();
    assert_eq!(order, TradeType::ALL);
}

#[test]
fn trade_counts_agree_across_stages() {
    let out = run_synthetic(&flow(), NormMode::Relative, &both_models(), Parallelism::Sequential).unwrap();
    let c = &out.features.counters;
    assert_eq!(c.trades, out.replay.trades);
    assert_eq!(
        c.kept + c.thin_book + c.undefined_return + c.outside_session + c.zero_mean_return,
        c.trades
    );
    assert_eq!(out.features.observations.len(), c.kept);
}

#[test]
fn events_and_synthetic_entry_points_agree() {
    let cfg = FlowConfig {
        events: 15_000,
        seed: 5,
        ..Default::default()
    };
    let opts = CalibrationOptions::default();
    let events = zero_intelligence_flow(&cfg).unwrap();
    let a = run_synthetic(&cfg, NormMode::Raw, &opts, Parallelism::Parallel).unwrap();
    let b = run_events(&cfg.instrument, &events, cfg.tick, NormMode::Raw, &opts, Parallelism::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_round_trip_preserves_the_pipeline() {
    let cfg = FlowConfig {
        events: 15_000,
        seed: 8,
        ..Default::default()
    };
    let events = zero_intelligence_flow(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.csv");
    let table = TickTable::uniform(cfg.tick);
    write_events(std::fs::File::create(&path).unwrap(), &events, &table).unwrap();
    let back = impactlab::flow::read_events(&path, table).unwrap();
    assert_eq!(back, events);
    let (t1, s1) = replay(&cfg.instrument, &events, 6).unwrap();
    let (t2, s2) = replay(&cfg.instrument, &back, 6).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(s1, s2);
}

#[test]
fn significance_matrix_covers_all_fits() {
    let out = run_synthetic(&flow(), NormMode::Relative, &CalibrationOptions::default(), Parallelism::Parallel).unwrap();
    let m = significance_pattern(&out.results, 0.05).unwrap();
    assert_eq!(m.rows.len(), 4);
    assert!(m.cells.iter().all(|row| row.len() == m.columns.len()));
    // The size term carries most of the signal in zero-intelligence flow.
    let a = m.columns.iter().position(|c| c == "a").unwrap();
    let positive = m.cells.iter().filter(|row| row[a].map(|s| s.cell()) == Some("+*")).count();
    assert!(positive >= 3, "{m:?}");
}
