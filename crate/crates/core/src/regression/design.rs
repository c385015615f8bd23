use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelSpec};
use crate::classify::TradeType;
use crate::error::{Error, Result};
use crate::features::{ImpactObservation, BUCKETS};

/// One regression row: a single trade, or the mean of trades sharing a size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub y: f64,
    pub omega: f64,
    pub spread: f64,
    pub va: Vec<f64>,
    pub vb: Vec<f64>,
    pub ga: Vec<f64>,
    pub gb: Vec<f64>,
    /// Share of the row's trades in each intraday bucket.
    pub buckets: [f64; BUCKETS],
    /// Number of trades behind the row.
    pub weight: f64,
}

impl From<&ImpactObservation> for RegressionRow {
    fn from(o: &ImpactObservation) -> Self {
        let mut buckets = [0.0; BUCKETS];
        buckets[o.bucket as usize] = 1.0;
        RegressionRow {
            y: o.r_norm,
            omega: o.omega_norm,
            spread: o.spread_rel,
            va: o.va.clone(),
            vb: o.vb.clone(),
            ga: o.ga.clone(),
            gb: o.gb.clone(),
            buckets,
            weight: 1.0,
        }
    }
}

/// Averages every variable over trades with the same size. Input must come
/// from one instrument and trade type, where equal normalized sizes mean
/// equal raw sizes. Output is sorted by size.
pub fn aggregate_by_size(obs: &[ImpactObservation]) -> Vec<RegressionRow> {
    let mut groups: BTreeMap<u64, Vec<&ImpactObservation>> = BTreeMap::new();
    for o in obs {
        groups.entry(o.omega_norm.to_bits()).or_default().push(o);
    }
    groups
        .into_values()
        .map(|members| {
            let n = members.len() as f64;
            let mean = |f: &dyn Fn(&ImpactObservation) -> f64| members.iter().map(|o| f(o)).sum::<f64>() / n;
            let mean_vec = |f: &dyn Fn(&ImpactObservation) -> &Vec<f64>| -> Vec<f64> {
                let len = f(members[0]).len();
                (0..len)
                    .map(|i| members.iter().map(|o| f(o)[i]).sum::<f64>() / n)
                    .collect()
            };
            let mut buckets = [0.0; BUCKETS];
            for o in &members {
                buckets[o.bucket as usize] += 1.0;
            }
            for b in &mut buckets {
                *b /= n;
            }
            RegressionRow {
                y: mean(&|o| o.r_norm),
                omega: members[0].omega_norm,
                spread: mean(&|o| o.spread_rel),
                va: mean_vec(&|o| &o.va),
                vb: mean_vec(&|o| &o.vb),
                ga: mean_vec(&|o| &o.ga),
                gb: mean_vec(&|o| &o.gb),
                buckets,
                weight: n,
            }
        })
        .collect()
}

/// Rows for a fit. With `aggregate`, observations are averaged by size
/// within each instrument and type, and the groups are concatenated in
/// (instrument, type) order.
pub fn prepare_rows(obs: &[ImpactObservation], aggregate: bool) -> Vec<RegressionRow> {
    if !aggregate {
        return obs.iter().map(RegressionRow::from).collect();
    }
    let mut by_key: BTreeMap<(&str, TradeType), Vec<ImpactObservation>> = BTreeMap::new();
    for o in obs {
        by_key.entry((o.instrument.as_str(), o.kind)).or_default().push(o.clone());
    }
    by_key.values().flat_map(|g| aggregate_by_size(g)).collect()
}

/// Buckets that receive a dummy column. The earliest bucket present is the
/// baseline (bucket 0 whenever it occurs); absent buckets get no column.
pub fn dummy_buckets(rows: &[RegressionRow], include: bool) -> Vec<usize> {
    if !include {
        return Vec::new();
    }
    let present: Vec<usize> = (0..BUCKETS)
        .filter(|&b| rows.iter().any(|r| r.buckets[b] != 0.0))
        .collect();
    present.into_iter().skip(1).collect()
}

#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub weights: Option<DVector<f64>>,
    pub names: Vec<String>,
    pub dummies: Vec<usize>,
}

pub(crate) fn check_rows(rows: &[RegressionRow], levels: usize) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Invalid("no observations".into()));
    }
    for r in rows {
        if [&r.va, &r.vb, &r.ga, &r.gb].iter().any(|v| v.len() < levels) {
            return Err(Error::Invalid(format!(
                "observation carries {} levels, model needs {levels}",
                r.va.len().min(r.vb.len()).min(r.ga.len()).min(r.gb.len())
            )));
        }
    }
    Ok(())
}

pub(crate) fn depth_term(kind: ModelKind, v: f64, beta: f64) -> Result<f64> {
    match kind {
        ModelKind::PowerLaw => Ok(v.powf(beta)),
        ModelKind::Logarithmic if v > 0.0 => Ok(v.ln()),
        ModelKind::Logarithmic => Err(Error::Invalid(format!(
            "nonpositive depth {v} under the logarithm"
        ))),
    }
}

/// Design matrix with columns `[1, ω^α, S, VA, VB, GA, GB, dummies]`,
/// depth entering as `V^β` or `ln V` according to the model.
pub fn build_design(rows: &[RegressionRow], spec: &ModelSpec, alpha: f64, beta: f64) -> Result<Design> {
    check_rows(rows, spec.levels)?;
    let l = spec.levels;
    let dummies = dummy_buckets(rows, spec.include_dummies);
    let names = spec.column_names(&dummies);
    let k = names.len();
    let n = rows.len();
    let mut x = DMatrix::zeros(n, k);
    for (i, r) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = r.omega.powf(alpha);
        x[(i, 2)] = r.spread;
        for j in 0..l {
            x[(i, 3 + j)] = depth_term(spec.kind, r.va[j], beta)?;
            x[(i, 3 + l + j)] = depth_term(spec.kind, r.vb[j], beta)?;
            x[(i, 3 + 2 * l + j)] = r.ga[j];
            x[(i, 3 + 3 * l + j)] = r.gb[j];
        }
        for (m, &b) in dummies.iter().enumerate() {
            x[(i, 3 + 4 * l + m)] = r.buckets[b];
        }
    }
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.y));
    let weights = spec
        .weighted
        .then(|| DVector::from_iterator(n, rows.iter().map(|r| r.weight)));
    Ok(Design {
        x,
        y,
        weights,
        names,
        dummies,
    })
}
