//! Summaries over calibrated fits: sign/significance matrices, coefficient
//! magnitudes across trade types, and the power-law versus logarithmic
//! coefficient linkage.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CalibrationResult, ModelKind};
use crate::classify::TradeType;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Significance {
    /// -1, 0 or 1.
    pub sign: i8,
    pub significant: bool,
}

impl Significance {
    pub fn new(estimate: f64, p: f64, level: f64) -> Self {
        let sign = if estimate > 0.0 {
            1
        } else if estimate < 0.0 {
            -1
        } else {
            0
        };
        Significance { sign, significant: p < level }
    }

    pub fn cell(self) -> &'static str {
        match (self.sign, self.significant) {
            (1, true) => "+*",
            (1, false) => "+",
            (-1, true) => "-*",
            (-1, false) => "-",
            _ => "0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub level: f64,
    pub columns: Vec<String>,
    /// (instrument, type) labels, one per fit.
    pub rows: Vec<(String, String)>,
    pub cells: Vec<Vec<Option<Significance>>>,
}

/// Sign and significance of every coefficient of every fit. Columns follow
/// the first fit's coefficient order, extended by names first seen later.
pub fn significance_pattern(results: &[CalibrationResult], level: f64) -> Result<SignificanceMatrix> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!("significance level {level} outside (0, 1)")));
    }
    let mut columns: Vec<String> = Vec::new();
    for r in results {
        for c in &r.coef {
            if !columns.contains(&c.name) {
                columns.push(c.name.clone());
            }
        }
    }
    let rows = results.iter().map(label).collect();
    let cells = results
        .iter()
        .map(|r| {
            columns
                .iter()
                .map(|name| r.coef(name).map(|c| Significance::new(c.estimate, c.p, level)))
                .collect()
        })
        .collect();
    Ok(SignificanceMatrix {
        level,
        columns,
        rows,
        cells,
    })
}

fn label(r: &CalibrationResult) -> (String, String) {
    (
        r.instrument.clone().unwrap_or_default(),
        r.trade_type.map(|t| t.to_string()).unwrap_or_default(),
    )
}

impl SignificanceMatrix {
    /// Cells are `+*`, `-*` (significant), `+`, `-`, `0`, or empty when the
    /// fit has no such coefficient.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "instrument,type,{}", self.columns.join(","))?;
        for ((inst, kind), cells) in self.rows.iter().zip(&self.cells) {
            let body: Vec<&str> = cells.iter().map(|c| c.map_or("", Significance::cell)).collect();
            writeln!(w, "{inst},{kind},{}", body.join(","))?;
        }
        Ok(())
    }
}

pub const ASYMMETRY_COLUMNS: [&str; 6] = ["a", "b", "c1", "d1", "e1", "f1"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryRow {
    pub instrument: String,
    pub trade_type: TradeType,
    pub present: bool,
    /// Absolute values in [`ASYMMETRY_COLUMNS`] order.
    pub values: Vec<Option<f64>>,
}

/// Absolute coefficient magnitudes per instrument across the four types.
/// Types without a fit appear with `present = false`.
pub fn asymmetry_compare(results: &[CalibrationResult]) -> Vec<AsymmetryRow> {
    let mut by_inst: BTreeMap<String, [Option<&CalibrationResult>; 4]> = BTreeMap::new();
    for r in results {
        let (Some(inst), Some(kind)) = (&r.instrument, r.trade_type) else {
            continue;
        };
        by_inst.entry(inst.clone()).or_default()[kind.index()] = Some(r);
    }
    let mut out = Vec::new();
    for (inst, fits) in by_inst {
        for kind in TradeType::ALL {
            let fit = fits[kind.index()];
            out.push(AsymmetryRow {
                instrument: inst.clone(),
                trade_type: kind,
                present: fit.is_some(),
                values: ASYMMETRY_COLUMNS
                    .iter()
                    .map(|name| fit.and_then(|f| f.estimate(name)).map(f64::abs))
                    .collect(),
            });
        }
    }
    out
}

pub fn write_asymmetry_tsv<W: Write>(mut w: W, rows: &[AsymmetryRow]) -> Result<()> {
    writeln!(w, "instrument\ttype\tpresent\t{}", ASYMMETRY_COLUMNS.join("\t"))?;
    for r in rows {
        let vals: Vec<String> = r.values.iter().map(|v| v.map_or(String::new(), |x| x.to_string())).collect();
        writeln!(w, "{}\t{}\t{}\t{}", r.instrument, r.trade_type, r.present as u8, vals.join("\t"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkagePoint {
    pub name: String,
    /// `β · c_i` or `β · d_i` from the power-law fit.
    pub x: f64,
    /// `c_i` or `d_i` from the logarithmic fit.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorLinkage {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<LinkagePoint>,
}

/// Regresses the logarithmic depth coefficients on β times the power-law
/// ones, pooling every (power-law, logarithmic) pair given.
pub fn taylor_linkage(pairs: &[(&CalibrationResult, &CalibrationResult)]) -> Result<TaylorLinkage> {
    let mut points = Vec::new();
    for (pl, ln) in pairs {
        if pl.model != ModelKind::PowerLaw || ln.model != ModelKind::Logarithmic {
            return Err(Error::Invalid("linkage needs a power-law and a logarithmic fit".into()));
        }
        if pl.levels != ln.levels {
            return Err(Error::Invalid(format!(
                "level mismatch: {} vs {}",
                pl.levels, ln.levels
            )));
        }
        let beta = pl.beta.ok_or_else(|| Error::Invalid("power-law fit without beta".into()))?;
        let (inst, kind) = label(pl);
        for prefix in ["c", "d"] {
            for i in 1..=pl.levels {
                let name = format!("{prefix}{i}");
                let (Some(x), Some(y)) = (pl.estimate(&name), ln.estimate(&name)) else {
                    return Err(Error::Invalid(format!("coefficient {name} missing")));
                };
                let tag = [inst.as_str(), kind.as_str(), name.as_str()]
                    .iter()
                    .filter(|s| !s.is_empty())
                    .copied()
                    .collect::<Vec<_>>()
                    .join(":");
                points.push(LinkagePoint { name: tag, x: beta * x, y });
            }
        }
    }
    let (slope, intercept) = simple_regression(&points)?;
    Ok(TaylorLinkage {
        slope,
        intercept,
        points,
    })
}

fn simple_regression(points: &[LinkagePoint]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Invalid("linkage needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.x - mx) * (p.x - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("linkage abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

impl TaylorLinkage {
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# slope={} intercept={}", self.slope, self.intercept)?;
        writeln!(w, "name\tx\ty")?;
        for p in &self.points {
            writeln!(w, "{}\t{}\t{}", p.name, p.x, p.y)?;
        }
        Ok(())
    }
}

/// Adjusted R² over the grid, one line per point; rank-deficient points
/// have an empty value.
pub fn write_grid_tsv<W: Write>(mut w: W, result: &CalibrationResult) -> Result<()> {
    writeln!(w, "alpha\tbeta\tr2_adj")?;
    for p in &result.grid_trace {
        let beta = p.beta.map_or(String::new(), |b| b.to_string());
        let v = p.r2_adj.map_or(String::new(), |v| v.to_string());
        writeln!(w, "{}\t{beta}\t{v}", p.alpha)?;
    }
    Ok(())
}
