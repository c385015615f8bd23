//! First-16-event digests of the zero-intelligence generator. Regenerate
//! with `IMPACTLAB_BLESS=1 cargo test --test golden` after an intended
//! change to the generator.

use std::path::PathBuf;

use impactlab::synth::{event_digest, zero_intelligence_flow, FlowConfig};

fn golden_path(seed: u64) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/zi_seed_{seed}.sha256"))
}

#[test]
fn zero_intelligence_digests() {
    for seed in [1u64, 42, 20030602] {
        let cfg = FlowConfig {
            seed,
            events: 64,
            ..Default::default()
        };
        let events = zero_intelligence_flow(&cfg).unwrap();
        let digest = event_digest(&events, 16, cfg.tick);
        let path = golden_path(seed);
        if std::env::var_os("IMPACTLAB_BLESS").is_some() {
            std::fs::write(&path, format!("{digest}\n")).unwrap();
        }
        let expected = std::fs::read_to_string(&path).unwrap();
        assert_eq!(digest, expected.trim(), "seed {seed}");
    }
}
