use impactlab::features::{extract_instrument, read_feature_csv, write_feature_csv, NormMode};
use impactlab::synth::{zero_intelligence_flow, FlowConfig};
use impactlab::{replay, Action, Price, TickSize, TradeType};

fn trades(seed: u64, scale: i64) -> Vec<impactlab::TradeRecord> {
    let cfg = FlowConfig {
        seed,
        events: 12_000,
        ..Default::default()
    };
    let mut events = zero_intelligence_flow(&cfg).unwrap();
    for ev in &mut events {
        if let Action::Submit { price, .. } = &mut ev.action {
            *price = Price(price.0 * scale);
        }
    }
    replay(&cfg.instrument, &events, 6).unwrap().0
}

#[test]
fn normalized_means_are_one_per_type() {
    let t = trades(31, 1);
    let fs = extract_instrument("000001", &t, 5, NormMode::Relative, TickSize::CENT);
    assert!(fs.counters.kept > 1000);
    for kind in TradeType::ALL {
        let obs = fs.of_type(kind);
        let n = obs.len() as f64;
        let mr = obs.iter().map(|o| o.r_norm).sum::<f64>() / n;
        let mo = obs.iter().map(|o| o.omega_norm).sum::<f64>() / n;
        assert!((mr - 1.0).abs() <= 1e-12, "{kind}: {mr}");
        assert!((mo - 1.0).abs() <= 1e-12, "{kind}: {mo}");
        assert!(obs.iter().all(|o| o.omega_norm > 0.0 && o.ga.iter().chain(&o.gb).all(|g| *g > 0.0)));
    }
}

#[test]
fn relative_features_are_scale_invariant() {
    let base = extract_instrument("000001", &trades(32, 1), 5, NormMode::Relative, TickSize::CENT);
    let scaled = extract_instrument("000001", &trades(32, 7), 5, NormMode::Relative, TickSize::CENT);
    assert_eq!(base.observations, scaled.observations);
    // Raw gaps and spread scale with the price unit.
    let raw = extract_instrument("000001", &trades(32, 1), 5, NormMode::Raw, TickSize::CENT);
    let raw7 = extract_instrument("000001", &trades(32, 7), 5, NormMode::Raw, TickSize::CENT);
    for (a, b) in raw.observations.iter().zip(&raw7.observations) {
        assert!((b.spread_rel - 7.0 * a.spread_rel).abs() < 1e-12);
        assert_eq!(a.r_norm, b.r_norm);
    }
}

#[test]
fn feature_files_round_trip() {
    let fs = extract_instrument("000001", &trades(33, 1), 3, NormMode::Relative, TickSize::CENT);
    let obs = fs.of_type(TradeType::PS);
    let mut buf = b"# config_hash: abc\n".to_vec();
    write_feature_csv(&mut buf, &obs, 3).unwrap();
    let back = read_feature_csv(buf.as_slice(), "000001", TradeType::PS).unwrap();
    assert_eq!(back, obs);
    let json = serde_json::to_string(&fs).unwrap();
    assert!(json.contains("\"thin_book\""));
}
