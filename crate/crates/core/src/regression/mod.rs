//! Power-law and logarithmic impact models: design construction, OLS,
//! the (α, β) grid scan and the reports built on calibrated coefficients.

pub mod design;
pub mod grid;
pub mod ols;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::classify::TradeType;
use crate::error::{Error, Result};

pub use design::{aggregate_by_size, build_design, prepare_rows, Design, RegressionRow};
pub use grid::{grid_calibrate, grid_calibrate_with, grid_trace_direct, Parallelism};
pub use ols::{ols_fit, wls_fit, OlsFit, RCOND_THRESHOLD};
pub use report::{
    asymmetry_compare, significance_pattern, taylor_linkage, AsymmetryRow, Significance,
    SignificanceMatrix, TaylorLinkage,
};

/// Two grid points whose adjusted R² differ by no more than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Depth enters as `V^β`.
    PowerLaw,
    /// Depth enters as `ln V`.
    Logarithmic,
}

impl ModelKind {
    pub fn short(self) -> &'static str {
        match self {
            ModelKind::PowerLaw => "pl",
            ModelKind::Logarithmic => "ln",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pl" | "power_law" => Ok(ModelKind::PowerLaw),
            "ln" | "logarithmic" => Ok(ModelKind::Logarithmic),
            _ => Err(Error::Invalid(format!("unknown model {s:?}"))),
        }
    }
}

/// Exponent values `k / m` for `k = 1..m`, where `m = 1 / step`.
pub fn grid_axis(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Invalid(format!("grid step {step} outside (0, 1)")));
    }
    let m = (1.0 / step).round();
    if m < 2.0 || (m * step - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("grid step {step} does not divide 1")));
    }
    let m = m as u32;
    Ok((1..m).map(|k| k as f64 / m as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub levels: usize,
    pub alphas: Vec<f64>,
    /// Unused by the logarithmic model.
    pub betas: Vec<f64>,
    pub include_dummies: bool,
    /// Weight aggregated rows by group size.
    pub weighted: bool,
}

impl ModelSpec {
    /// Default grid 0.05, 0.10, ..., 0.95 with dummies, unweighted.
    pub fn new(kind: ModelKind, levels: usize) -> Self {
        let axis = grid_axis(0.05).expect("valid step");
        ModelSpec {
            kind,
            levels,
            betas: match kind {
                ModelKind::PowerLaw => axis.clone(),
                ModelKind::Logarithmic => Vec::new(),
            },
            alphas: axis,
            include_dummies: true,
            weighted: false,
        }
    }

    pub fn with_grid_step(mut self, step: f64) -> Result<Self> {
        let axis = grid_axis(step)?;
        if self.kind == ModelKind::PowerLaw {
            self.betas = axis.clone();
        }
        self.alphas = axis;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Invalid("levels must be at least 1".into()));
        }
        let in_unit = |v: &f64| *v > 0.0 && *v < 1.0;
        if self.alphas.is_empty() || !self.alphas.iter().all(in_unit) {
            return Err(Error::Invalid("alpha grid must be nonempty and inside (0, 1)".into()));
        }
        if self.kind == ModelKind::PowerLaw
            && (self.betas.is_empty() || !self.betas.iter().all(in_unit))
        {
            return Err(Error::Invalid("beta grid must be nonempty and inside (0, 1)".into()));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> usize {
        match self.kind {
            ModelKind::PowerLaw => self.alphas.len() * self.betas.len(),
            ModelKind::Logarithmic => self.alphas.len(),
        }
    }

    /// Names of the regressors in design order; `dummies` lists the
    /// buckets that get a column.
    pub fn column_names(&self, dummies: &[usize]) -> Vec<String> {
        let l = self.levels;
        let mut names = vec!["a0".to_string(), "a".into(), "b".into()];
        for prefix in ["c", "d", "e", "f"] {
            names.extend((1..=l).map(|i| format!("{prefix}{i}")));
        }
        names.extend(dummies.iter().map(|b| format!("g{b}")));
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    #[serde(with = "float_or_null")]
    pub se: f64,
    #[serde(with = "float_or_null")]
    pub t: f64,
    #[serde(with = "float_or_null")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: Option<f64>,
    /// `None` where the design is rank-deficient.
    pub r2_adj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub instrument: Option<String>,
    pub trade_type: Option<TradeType>,
    pub model: ModelKind,
    pub levels: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub coef: Vec<Coefficient>,
    #[serde(with = "float_or_null")]
    pub r2: f64,
    #[serde(with = "float_or_null")]
    pub r2_adj: f64,
    #[serde(with = "float_or_null")]
    pub f_stat: f64,
    #[serde(with = "float_or_null")]
    pub f_pvalue: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub rcond: f64,
    pub weighted: bool,
    pub grid_trace: Vec<GridPoint>,
}

impl CalibrationResult {
    pub fn coef(&self, name: &str) -> Option<&Coefficient> {
        self.coef.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.coef(name).map(|c| c.estimate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn with_label(mut self, instrument: Option<String>, kind: Option<TradeType>) -> Self {
        self.instrument = instrument;
        self.trade_type = kind;
        self
    }
}

/// Serializes non-finite floats as `null` and reads `null` back as NaN.
pub mod float_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
