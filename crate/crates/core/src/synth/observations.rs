//! Normalized observations drawn from the impact models themselves, with
//! the generating coefficients kept for comparison.
//!
//! Regressors: `ω` lognormal with unit median; depths lognormal or uniform;
//! relative spread uniform on `spread`; normalized gaps uniform on `gap`;
//! bucket uniform on 0..=23. The response adds `N(0, σ²)` noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::classify::TradeType;
use crate::error::{Error, Result};
use crate::features::{ImpactObservation, BUCKETS};
use crate::regression::ModelKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub model: ModelKind,
    pub alpha: f64,
    /// Ignored by the logarithmic model.
    pub beta: f64,
    pub a0: f64,
    pub a: f64,
    pub b: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    /// Bucket effects for buckets 1..=23.
    pub g: Vec<f64>,
    pub sigma: f64,
}

impl Truth {
    /// A fixed coefficient set with clearly identifiable exponents.
    pub fn example(model: ModelKind, levels: usize, alpha: f64, beta: f64, sigma: f64) -> Self {
        let lv = |scale: f64, sign: f64| -> Vec<f64> {
            (1..=levels).map(|i| sign * scale / i as f64).collect()
        };
        Truth {
            model,
            alpha,
            beta,
            a0: 0.3,
            a: 1.0,
            b: 20.0,
            c: lv(-2.0, 1.0),
            d: lv(1.5, 1.0),
            e: lv(0.05, 1.0),
            f: lv(0.08, -1.0),
            g: (1..BUCKETS).map(|i| 0.02 * ((i as f64) * 0.7).sin()).collect(),
            sigma,
        }
    }

    pub fn levels(&self) -> usize {
        self.c.len()
    }

    /// Coefficients keyed by the names used in calibration results.
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut out = vec![("a0".to_string(), self.a0), ("a".into(), self.a), ("b".into(), self.b)];
        for (prefix, v) in [("c", &self.c), ("d", &self.d), ("e", &self.e), ("f", &self.f)] {
            out.extend(v.iter().enumerate().map(|(i, x)| (format!("{prefix}{}", i + 1), *x)));
        }
        out.extend(self.g.iter().enumerate().map(|(i, x)| (format!("g{}", i + 1), *x)));
        out
    }

    fn validate(&self) -> Result<()> {
        let l = self.levels();
        if l == 0 || self.d.len() != l || self.e.len() != l || self.f.len() != l {
            return Err(Error::Invalid("level coefficient vectors must share a nonzero length".into()));
        }
        if self.g.len() != BUCKETS - 1 {
            return Err(Error::Invalid(format!("need {} bucket effects", BUCKETS - 1)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Invalid("noise sigma must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum DepthDist {
    /// Unit median, log-scale `sigma`.
    LogNormal { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub seed: u64,
    pub n: usize,
    pub instrument: String,
    pub kind: TradeType,
    pub truth: Truth,
    /// Log-scale spread of the normalized size.
    pub omega_sigma: f64,
    pub depth: DepthDist,
    pub spread: (f64, f64),
    pub gap: (f64, f64),
}

impl ObservationConfig {
    pub fn new(seed: u64, n: usize, truth: Truth) -> Self {
        ObservationConfig {
            seed,
            n,
            instrument: "SYN".into(),
            kind: TradeType::FB,
            truth,
            omega_sigma: 1.0,
            depth: DepthDist::LogNormal { sigma: 1.0 },
            spread: (0.0005, 0.005),
            gap: (0.2, 3.0),
        }
    }
}

/// The generating law and the seed, written next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub seed: u64,
    pub n: usize,
    pub levels: usize,
    pub truth: Truth,
    pub coefficients: Vec<(String, f64)>,
}

fn invalid<E: std::fmt::Display>(e: E) -> Error {
    Error::Invalid(e.to_string())
}

pub fn model_observations(cfg: &ObservationConfig) -> Result<(Vec<ImpactObservation>, TruthRecord)> {
    let t = &cfg.truth;
    t.validate()?;
    let l = t.levels();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let omega = LogNormal::new(0.0, cfg.omega_sigma).map_err(invalid)?;
    let spread = Uniform::new_inclusive(cfg.spread.0, cfg.spread.1).map_err(invalid)?;
    let gap = Uniform::new_inclusive(cfg.gap.0, cfg.gap.1).map_err(invalid)?;
    let noise = Normal::new(0.0, t.sigma).map_err(invalid)?;
    enum Depth {
        Log(LogNormal<f64>),
        Flat(Uniform<f64>),
    }
    let depth = match cfg.depth {
        DepthDist::LogNormal { sigma } => Depth::Log(LogNormal::new(0.0, sigma).map_err(invalid)?),
        DepthDist::Uniform { lo, hi } if lo > 0.0 => Depth::Flat(Uniform::new_inclusive(lo, hi).map_err(invalid)?),
        DepthDist::Uniform { .. } => return Err(Error::Invalid("depths must be positive".into())),
    };
    let term = |v: f64| match t.model {
        ModelKind::PowerLaw => v.powf(t.beta),
        ModelKind::Logarithmic => v.ln(),
    };

    let mut out = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let w = omega.sample(&mut rng);
        let s = spread.sample(&mut rng);
        let draw_depth = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..l)
                .map(|_| match &depth {
                    Depth::Log(d) => d.sample(rng),
                    Depth::Flat(d) => d.sample(rng),
                })
                .collect()
        };
        let va = draw_depth(&mut rng);
        let vb = draw_depth(&mut rng);
        let ga: Vec<f64> = (0..l).map(|_| gap.sample(&mut rng)).collect();
        let gb: Vec<f64> = (0..l).map(|_| gap.sample(&mut rng)).collect();
        let bucket: u8 = rng.random_range(0..BUCKETS as u8);

        let mut y = t.a0 + t.a * w.powf(t.alpha) + t.b * s;
        for i in 0..l {
            y += t.c[i] * term(va[i]) + t.d[i] * term(vb[i]) + t.e[i] * ga[i] + t.f[i] * gb[i];
        }
        if bucket > 0 {
            y += t.g[bucket as usize - 1];
        }
        y += noise.sample(&mut rng);

        out.push(ImpactObservation {
            instrument: cfg.instrument.clone(),
            kind: cfg.kind,
            r_norm: y,
            omega_norm: w,
            spread_rel: s,
            va,
            vb,
            ga,
            gb,
            bucket,
        });
    }
    let record = TruthRecord {
        seed: cfg.seed,
        n: cfg.n,
        levels: l,
        truth: t.clone(),
        coefficients: t.named(),
    };
    Ok((out, record))
}
