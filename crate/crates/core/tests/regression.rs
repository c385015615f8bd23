use impactlab::features::ImpactObservation;
use impactlab::regression::{
    build_design, grid_calibrate, grid_calibrate_with, grid_trace_direct, ols_fit, prepare_rows, taylor_linkage,
    CalibrationResult, ModelKind, ModelSpec, Parallelism, RegressionRow,
};
use impactlab::synth::{model_observations, DepthDist, ObservationConfig, Truth};
use impactlab::Error;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn observations(seed: u64, n: usize, truth: Truth) -> Vec<ImpactObservation> {
    model_observations(&ObservationConfig::new(seed, n, truth)).unwrap().0
}

fn rows(seed: u64, n: usize, truth: Truth) -> Vec<RegressionRow> {
    prepare_rows(&observations(seed, n, truth), false)
}

fn assert_trace_matches(rows: &[RegressionRow], spec: &ModelSpec) {
    let fast = grid_calibrate(rows, spec).unwrap();
    let direct = grid_trace_direct(rows, spec).unwrap();
    assert_eq!(fast.grid_trace.len(), direct.len());
    for (f, d) in fast.grid_trace.iter().zip(&direct) {
        assert_eq!((f.alpha, f.beta), (d.alpha, d.beta));
        let (f, d) = (f.r2_adj.unwrap(), d.r2_adj.unwrap());
        assert!((f - d).abs() < 1e-10, "{:?}: {f} vs {d}", spec.kind);
    }
}

#[test]
fn fast_trace_matches_direct_fits() {
    for kind in [ModelKind::PowerLaw, ModelKind::Logarithmic] {
        let rows = rows(5, 600, Truth::example(kind, 2, 0.4, 0.3, 0.1));
        assert_trace_matches(&rows, &ModelSpec::new(kind, 2));
    }
}

#[test]
fn fast_trace_matches_direct_fits_weighted() {
    let mut obs = observations(8, 900, Truth::example(ModelKind::PowerLaw, 2, 0.6, 0.2, 0.1));
    // Force repeated sizes so aggregation has work to do.
    for o in &mut obs {
        o.omega_norm = (o.omega_norm * 40.0).round().max(1.0) / 40.0;
    }
    let rows = prepare_rows(&obs, true);
    assert!(rows.len() < obs.len() && rows.len() > 60);
    let mut spec = ModelSpec::new(ModelKind::PowerLaw, 2).with_grid_step(0.1).unwrap();
    spec.weighted = true;
    spec.include_dummies = false;
    assert_trace_matches(&rows, &spec);
}

#[test]
fn parallel_equals_sequential() {
    let rows = rows(2, 3000, Truth::example(ModelKind::PowerLaw, 3, 0.25, 0.15, 0.05));
    let spec = ModelSpec::new(ModelKind::PowerLaw, 3);
    let par = grid_calibrate_with(&rows, &spec, Parallelism::Parallel).unwrap();
    let seq = grid_calibrate_with(&rows, &spec, Parallelism::Sequential).unwrap();
    assert_eq!(par, seq);
    assert_eq!(par.to_json().unwrap(), seq.to_json().unwrap());
}

#[test]
fn permutation_invariance() {
    let mut obs = observations(3, 2000, Truth::example(ModelKind::PowerLaw, 2, 0.55, 0.10, 0.05));
    let spec = ModelSpec::new(ModelKind::PowerLaw, 2);
    let a = grid_calibrate(&prepare_rows(&obs, false), &spec).unwrap();
    obs.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
    let b = grid_calibrate(&prepare_rows(&obs, false), &spec).unwrap();
    assert_eq!((a.alpha, a.beta), (b.alpha, b.beta));
    for (x, y) in a.coef.iter().zip(&b.coef) {
        assert!((x.estimate - y.estimate).abs() <= 1e-12 * x.estimate.abs().max(1.0), "{}", x.name);
    }
}

#[test]
fn chosen_point_maximizes_trace_and_matches_invariants() {
    let rows = rows(4, 1500, Truth::example(ModelKind::PowerLaw, 2, 0.25, 0.15, 0.2));
    let r = grid_calibrate(&rows, &ModelSpec::new(ModelKind::PowerLaw, 2)).unwrap();
    let best = r
        .grid_trace
        .iter()
        .filter_map(|p| p.r2_adj)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = r
        .grid_trace
        .iter()
        .find(|p| p.alpha == r.alpha && p.beta == r.beta)
        .unwrap();
    assert!(chosen.r2_adj.unwrap() >= best - 1e-12);
    assert!((chosen.r2_adj.unwrap() - r.r2_adj).abs() < 1e-10);
    assert!(r.r2_adj <= r.r2);
    assert!(r.n_obs > r.n_params);
    assert_eq!(r.grid_trace.len(), 361);
    let back: CalibrationResult = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
}

#[test]
fn noise_free_data_is_recovered_exactly() {
    for (kind, beta) in [(ModelKind::PowerLaw, 0.10), (ModelKind::Logarithmic, 0.0)] {
        let truth = Truth::example(kind, 3, 0.55, beta, 0.0);
        let rows = rows(6, 800, truth.clone());
        let r = grid_calibrate(&rows, &ModelSpec::new(kind, 3)).unwrap();
        assert_eq!(r.alpha, 0.55);
        if kind == ModelKind::PowerLaw {
            assert_eq!(r.beta, Some(0.10));
        }
        assert!(r.r2_adj >= 1.0 - 1e-9);
        for (name, value) in truth.named() {
            let est = r.estimate(&name).unwrap();
            assert!((est - value).abs() < 1e-7 * value.abs().max(1.0), "{name}: {est} vs {value}");
        }
    }
}

#[test]
fn off_grid_exponent_lands_on_a_neighbour() {
    let rows = rows(12, 10_000, Truth::example(ModelKind::PowerLaw, 2, 0.33, 0.10, 0.05));
    let r = grid_calibrate(&rows, &ModelSpec::new(ModelKind::PowerLaw, 2)).unwrap();
    assert!(r.alpha == 0.30 || r.alpha == 0.35, "alpha {}", r.alpha);
}

#[test]
fn equal_trace_resolves_to_smallest_exponents() {
    // Two-valued sizes and depths: every power spans the same column space,
    // so every grid point fits equally well.
    let mut obs = observations(13, 400, Truth::example(ModelKind::PowerLaw, 1, 0.5, 0.5, 0.1));
    for (i, o) in obs.iter_mut().enumerate() {
        o.omega_norm = if i % 2 == 0 { 1.0 } else { 3.0 };
        o.va[0] = if i % 3 == 0 { 1.0 } else { 2.0 };
        o.vb[0] = if i % 5 == 0 { 0.5 } else { 1.0 };
    }
    let r = grid_calibrate(&prepare_rows(&obs, false), &ModelSpec::new(ModelKind::PowerLaw, 1)).unwrap();
    let vals: Vec<f64> = r.grid_trace.iter().map(|p| p.r2_adj.unwrap()).collect();
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-12, "trace spread {spread}");
    assert_eq!((r.alpha, r.beta), (0.05, Some(0.05)));
}

#[test]
fn aggregation_matches_group_mean_oracle() {
    let mut obs = observations(14, 600, Truth::example(ModelKind::PowerLaw, 2, 0.5, 0.2, 0.1));
    for o in &mut obs {
        o.omega_norm = (o.omega_norm * 10.0).ceil() / 10.0;
    }
    // Independent group means.
    let mut keys: Vec<f64> = obs.iter().map(|o| o.omega_norm).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let oracle: Vec<RegressionRow> = keys
        .iter()
        .map(|&k| {
            let g: Vec<&ImpactObservation> = obs.iter().filter(|o| o.omega_norm == k).collect();
            let n = g.len() as f64;
            let avg = |f: &dyn Fn(&ImpactObservation) -> f64| g.iter().map(|o| f(o)).sum::<f64>() / n;
            let mut buckets = [0.0; 24];
            for b in 0..24 {
                buckets[b] = g.iter().filter(|o| o.bucket as usize == b).count() as f64 / n;
            }
            RegressionRow {
                y: avg(&|o| o.r_norm),
                omega: k,
                spread: avg(&|o| o.spread_rel),
                va: (0..2).map(|i| avg(&|o| o.va[i])).collect(),
                vb: (0..2).map(|i| avg(&|o| o.vb[i])).collect(),
                ga: (0..2).map(|i| avg(&|o| o.ga[i])).collect(),
                gb: (0..2).map(|i| avg(&|o| o.gb[i])).collect(),
                buckets,
                weight: n,
            }
        })
        .collect();
    let agg = prepare_rows(&obs, true);
    assert_eq!(agg.len(), oracle.len());
    let mut spec = ModelSpec::new(ModelKind::PowerLaw, 2);
    spec.include_dummies = false;
    let d1 = build_design(&agg, &spec, 0.5, 0.2).unwrap();
    let d2 = build_design(&oracle, &spec, 0.5, 0.2).unwrap();
    let f1 = ols_fit(&d1.x, &d1.y, &d1.names).unwrap();
    let f2 = ols_fit(&d2.x, &d2.y, &d2.names).unwrap();
    for (a, b) in f1.coef.iter().zip(&f2.coef) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
    }
    let raw = prepare_rows(&obs, false);
    let d3 = build_design(&raw, &spec, 0.5, 0.2).unwrap();
    let f3 = ols_fit(&d3.x, &d3.y, &d3.names).unwrap();
    assert!(f3.n > f1.n);
    assert!((f3.coef[1] - f1.coef[1]).abs() > 1e-9);
}

#[test]
fn extra_levels_never_hurt_and_uninformative_levels_do_not_move_exponents() {
    let truth = Truth::example(ModelKind::PowerLaw, 5, 0.45, 0.20, 0.05);
    let obs = observations(15, 6000, truth.clone());
    let rows5 = prepare_rows(&obs, false);
    let r5 = grid_calibrate(&rows5, &ModelSpec::new(ModelKind::PowerLaw, 5)).unwrap();
    let r2 = grid_calibrate(&rows5, &ModelSpec::new(ModelKind::PowerLaw, 2)).unwrap();
    assert!(r5.r2_adj >= r2.r2_adj - 1e-12);

    let mut two = truth;
    for v in [&mut two.c, &mut two.d, &mut two.e, &mut two.f] {
        for x in v.iter_mut().skip(2) {
            *x = 0.0;
        }
    }
    let rows = prepare_rows(&observations(16, 6000, two), false);
    let a = grid_calibrate(&rows, &ModelSpec::new(ModelKind::PowerLaw, 5)).unwrap();
    let b = grid_calibrate(&rows, &ModelSpec::new(ModelKind::PowerLaw, 2)).unwrap();
    assert_eq!((a.alpha, a.beta), (b.alpha, b.beta));
}

#[test]
fn ols_monte_carlo_recovery() {
    let beta = [1.0, -0.5, 0.25, 2.0, 0.0, -1.5];
    let k = beta.len();
    let mut hits = vec![0usize; k];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = 5000;
        let x = DMatrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { rng.sample::<f64, _>(StandardNormal) });
        let noise = DVector::from_fn(n, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal));
        let y = &x * DVector::from_column_slice(&beta) + noise;
        let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let fit = ols_fit(&x, &y, &names).unwrap();
        for j in 0..k {
            if (fit.coef[j] - beta[j]).abs() <= 3.0 * fit.se[j] {
                hits[j] += 1;
            }
        }
    }
    assert!(hits.iter().all(|&h| h >= 95), "{hits:?}");
}

#[test]
fn taylor_regime_links_the_two_models() {
    let truth = Truth::example(ModelKind::PowerLaw, 5, 0.45, 0.05, 0.05);
    let mut cfg = ObservationConfig::new(17, 10_000, truth);
    cfg.depth = DepthDist::Uniform { lo: 0.5, hi: 2.0 };
    let rows = prepare_rows(&model_observations(&cfg).unwrap().0, false);
    let pl = grid_calibrate(&rows, &ModelSpec::new(ModelKind::PowerLaw, 5)).unwrap();
    let ln = grid_calibrate(&rows, &ModelSpec::new(ModelKind::Logarithmic, 5)).unwrap();
    let link = taylor_linkage(&[(&pl, &ln)]).unwrap();
    assert_eq!(link.points.len(), 10);
    assert!((0.9..=1.1).contains(&link.slope), "{link:?}");
    assert!(link.intercept.abs() <= 0.02, "{link:?}");
    assert_eq!(pl.alpha, ln.alpha);
}

#[test]
fn rank_deficient_everywhere_fails_calibration() {
    let mut obs = observations(18, 300, Truth::example(ModelKind::PowerLaw, 1, 0.5, 0.5, 0.1));
    for o in &mut obs {
        o.gb[0] = o.ga[0];
    }
    let err = grid_calibrate(&prepare_rows(&obs, false), &ModelSpec::new(ModelKind::PowerLaw, 1)).unwrap_err();
    assert!(matches!(err, Error::Calibration(_)), "{err:?}");
    assert!(err.to_string().contains("e1") && err.to_string().contains("f1"), "{err}");
}

#[test]
fn too_few_observations_is_an_error() {
    let rows = rows(19, 20, Truth::example(ModelKind::PowerLaw, 5, 0.5, 0.5, 0.1));
    assert!(grid_calibrate(&rows, &ModelSpec::new(ModelKind::PowerLaw, 5)).is_err());
}
