use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use impactlab::features::{extract_instrument, NormMode};
use impactlab::replay;
use impactlab::synth::{zero_intelligence_flow, FlowConfig};

fn replay_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("replay");
    for events in [10_000usize, 100_000] {
        let cfg = FlowConfig {
            events,
            ..Default::default()
        };
        let flow = zero_intelligence_flow(&cfg).unwrap();
        group.throughput(Throughput::Elements(events as u64));
        group.bench_with_input(BenchmarkId::from_parameter(events), &flow, |b, flow| {
            b.iter(|| replay(&cfg.instrument, flow, 6).unwrap())
        });
    }
    group.finish();
}

fn extract(c: &mut Criterion) {
    let cfg = FlowConfig {
        events: 100_000,
        ..Default::default()
    };
    let flow = zero_intelligence_flow(&cfg).unwrap();
    let (trades, _) = replay(&cfg.instrument, &flow, 6).unwrap();
    c.bench_function("extract_instrument", |b| {
        b.iter(|| extract_instrument(&cfg.instrument, &trades, 5, NormMode::Relative, cfg.tick))
    });
}

criterion_group!(benches, replay_flow, extract);
criterion_main!(benches);
