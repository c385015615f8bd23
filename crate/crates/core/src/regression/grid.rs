//! Grid scan over the exponents.
//!
//! Only the `ω^α` column and, for the power-law model, the `V^β` block move
//! with the grid. The remaining columns are factored once, the depth block
//! is projected off them once per β and each `ω^α` column once per α, so a
//! grid point costs one projection against the depth block. The adjusted R²
//! at every point equals that of a direct fit; the chosen point is refitted
//! directly for inference.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::design::{build_design, check_rows, depth_term, dummy_buckets, RegressionRow};
use super::ols::{adjusted_r2, condition, ols_fit, r2_from, unit_scale, weighted_tss, wls_fit};
use super::{CalibrationResult, Coefficient, GridPoint, ModelKind, ModelSpec, TIE_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Work items spread over the rayon pool.
    #[default]
    Parallel,
    Sequential,
}

/// Scans the grid, keeps the point with the largest adjusted R² (ties to
/// the smallest α, then the smallest β) and refits there.
pub fn grid_calibrate(rows: &[RegressionRow], spec: &ModelSpec) -> Result<CalibrationResult> {
    grid_calibrate_with(rows, spec, Parallelism::Parallel)
}

pub fn grid_calibrate_with(
    rows: &[RegressionRow],
    spec: &ModelSpec,
    par: Parallelism,
) -> Result<CalibrationResult> {
    spec.validate()?;
    check_rows(rows, spec.levels)?;
    let trace = scan(rows, spec, par)?;
    let best = select(&trace).ok_or_else(|| {
        let detail = match direct_fit(rows, spec, &trace[0]) {
            Err(e) => e.to_string(),
            Ok(_) => "no usable grid point".into(),
        };
        Error::Calibration(format!("every grid point is rank-deficient ({detail})"))
    })?;
    let point = &trace[best];
    let (fit, names) = direct_fit(rows, spec, point)?;
    let coef = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| Coefficient {
            name,
            estimate: fit.coef[j],
            se: fit.se[j],
            t: fit.t[j],
            p: fit.p[j],
        })
        .collect();
    Ok(CalibrationResult {
        instrument: None,
        trade_type: None,
        model: spec.kind,
        levels: spec.levels,
        alpha: point.alpha,
        beta: point.beta,
        coef,
        r2: fit.r2,
        r2_adj: fit.r2_adj,
        f_stat: fit.f_stat,
        f_pvalue: fit.f_pvalue,
        n_obs: fit.n,
        n_params: fit.k,
        rcond: fit.rcond,
        weighted: spec.weighted,
        grid_trace: trace,
    })
}

fn direct_fit(
    rows: &[RegressionRow],
    spec: &ModelSpec,
    point: &GridPoint,
) -> Result<(super::OlsFit, Vec<String>)> {
    let d = build_design(rows, spec, point.alpha, point.beta.unwrap_or(f64::NAN))?;
    let fit = match &d.weights {
        Some(w) => wls_fit(&d.x, &d.y, w, &d.names)?,
        None => ols_fit(&d.x, &d.y, &d.names)?,
    };
    Ok((fit, d.names))
}

/// Reference trace: a full design and fit at every grid point.
pub fn grid_trace_direct(rows: &[RegressionRow], spec: &ModelSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    check_rows(rows, spec.levels)?;
    grid_points(spec)
        .into_iter()
        .map(|(alpha, beta)| {
            let mut point = GridPoint { alpha, beta, r2_adj: None };
            match direct_fit(rows, spec, &point) {
                Ok((fit, _)) => point.r2_adj = Some(fit.r2_adj),
                Err(Error::RankDeficient { .. }) => {}
                Err(e) => return Err(e),
            }
            Ok(point)
        })
        .collect()
}

/// Grid points in trace order: α major, β minor.
fn grid_points(spec: &ModelSpec) -> Vec<(f64, Option<f64>)> {
    match spec.kind {
        ModelKind::PowerLaw => spec
            .alphas
            .iter()
            .flat_map(|&a| spec.betas.iter().map(move |&b| (a, Some(b))))
            .collect(),
        ModelKind::Logarithmic => spec.alphas.iter().map(|&a| (a, None)).collect(),
    }
}

fn select(trace: &[GridPoint]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in trace.iter().enumerate() {
        let Some(v) = p.r2_adj else { continue };
        match best {
            Some((_, b)) if v <= b + TIE_TOLERANCE => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Two Gram-Schmidt passes of `v` against the orthonormal columns of `q`.
/// Returns the accumulated coefficients.
fn project_out(q: &DMatrix<f64>, v: &mut DVector<f64>) -> DVector<f64> {
    let mut coef = q.tr_mul(v);
    v.gemv(-1.0, q, &coef, 1.0);
    let again = q.tr_mul(v);
    v.gemv(-1.0, q, &again, 1.0);
    coef += again;
    coef
}

fn project_out_block(q: &DMatrix<f64>, m: &mut DMatrix<f64>) -> DMatrix<f64> {
    let mut coef = q.tr_mul(m);
    m.gemm(-1.0, q, &coef, 1.0);
    let again = q.tr_mul(m);
    m.gemm(-1.0, q, &again, 1.0);
    coef += again;
    coef
}

/// A unit-norm `ω^α` column with its components along the fixed block.
struct OmegaColumn {
    r1: DVector<f64>,
    resid: DVector<f64>,
}

fn scan(rows: &[RegressionRow], spec: &ModelSpec, par: Parallelism) -> Result<Vec<GridPoint>> {
    let n = rows.len();
    let l = spec.levels;
    let dummies = dummy_buckets(rows, spec.include_dummies);
    let names = spec.column_names(&dummies);
    let k = names.len();
    if n <= k {
        return Err(Error::Invalid(format!(
            "need more observations than parameters: {n} rows, {k} parameters"
        )));
    }
    let sw: Option<Vec<f64>> = spec
        .weighted
        .then(|| rows.iter().map(|r| r.weight.sqrt()).collect());
    let row_scale = |i: usize| sw.as_ref().map_or(1.0, |s| s[i]);

    // Fixed block: intercept, spread, [ln VA, ln VB], GA, GB, dummies.
    let mut fixed_names = vec![names[0].clone(), names[2].clone()];
    if spec.kind == ModelKind::Logarithmic {
        fixed_names.extend(names[3..3 + 2 * l].iter().cloned());
    }
    fixed_names.extend(names[3 + 2 * l..].iter().cloned());
    let k1 = fixed_names.len();
    let mut x1 = DMatrix::zeros(n, k1);
    for (i, r) in rows.iter().enumerate() {
        let mut vals = vec![1.0, r.spread];
        if spec.kind == ModelKind::Logarithmic {
            for v in r.va[..l].iter().chain(&r.vb[..l]) {
                vals.push(depth_term(ModelKind::Logarithmic, *v, 0.0)?);
            }
        }
        vals.extend(r.ga[..l].iter().chain(&r.gb[..l]).copied());
        vals.extend(dummies.iter().map(|&b| r.buckets[b]));
        let s = row_scale(i);
        for (j, v) in vals.into_iter().enumerate() {
            x1[(i, j)] = v * s;
        }
    }
    let points = grid_points(spec);
    let none_trace = || {
        points
            .iter()
            .map(|&(alpha, beta)| GridPoint { alpha, beta, r2_adj: None })
            .collect::<Vec<_>>()
    };
    if x1.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("design contains non-finite values".into()));
    }
    if unit_scale(&mut x1, &fixed_names).is_err() {
        return Ok(none_trace());
    }
    let qr1 = x1.qr();
    let q1 = qr1.q();
    let r11 = qr1.r();

    let y = DVector::from_iterator(n, rows.iter().map(|r| r.y));
    let w = spec
        .weighted
        .then(|| DVector::from_iterator(n, rows.iter().map(|r| r.weight)));
    let tss = weighted_tss(&y, w.as_ref());
    let mut e1 = DVector::from_iterator(n, rows.iter().enumerate().map(|(i, r)| r.y * row_scale(i)));
    project_out(&q1, &mut e1);

    let omegas: Vec<Option<OmegaColumn>> = spec
        .alphas
        .iter()
        .map(|&a| {
            let mut c = DVector::from_iterator(n, rows.iter().enumerate().map(|(i, r)| r.omega.powf(a) * row_scale(i)));
            let norm = c.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return None;
            }
            c /= norm;
            let r1 = project_out(&q1, &mut c);
            Some(OmegaColumn { r1, resid: c })
        })
        .collect();

    let evaluate = |depth: Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>| -> Vec<Option<f64>> {
        // depth: (Q_V, R12, R22) for the power-law block.
        let mut e2 = e1.clone();
        if let Some((qv, _, _)) = &depth {
            project_out(qv, &mut e2);
        }
        let kv = depth.as_ref().map_or(0, |d| d.0.ncols());
        omegas
            .iter()
            .map(|om| {
                let om = om.as_ref()?;
                let mut c = om.resid.clone();
                let r2v = depth.as_ref().map(|(qv, _, _)| project_out(qv, &mut c));
                let r33 = c.norm();
                if !(r33 > 0.0) {
                    return None;
                }
                c /= r33;
                let mut resid = e2.clone();
                resid.axpy(-c.dot(&e2), &c, 1.0);
                let rss = resid.norm_squared();

                let mut r = DMatrix::zeros(k, k);
                r.view_mut((0, 0), (k1, k1)).copy_from(&r11);
                if let Some((_, r12, r22)) = &depth {
                    r.view_mut((0, k1), (k1, kv)).copy_from(r12);
                    r.view_mut((k1, k1), (kv, kv)).copy_from(r22);
                    r.view_mut((k1, k - 1), (kv, 1)).copy_from(r2v.as_ref().unwrap());
                }
                r.view_mut((0, k - 1), (k1, 1)).copy_from(&om.r1);
                r[(k - 1, k - 1)] = r33;
                condition(&r, &[]).ok()?;
                Some(adjusted_r2(r2_from(rss, tss), n, k))
            })
            .collect()
    };

    let depth_block = |beta: f64| -> Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let mut v = DMatrix::zeros(n, 2 * l);
        for (i, r) in rows.iter().enumerate() {
            let s = row_scale(i);
            for j in 0..l {
                v[(i, j)] = r.va[j].powf(beta) * s;
                v[(i, l + j)] = r.vb[j].powf(beta) * s;
            }
        }
        if v.iter().any(|x| !x.is_finite()) {
            return None;
        }
        unit_scale(&mut v, &[]).ok()?;
        let r12 = project_out_block(&q1, &mut v);
        let qr = v.qr();
        Some((qr.q(), r12, qr.r()))
    };

    let trace_values: Vec<Option<f64>> = match spec.kind {
        ModelKind::Logarithmic => evaluate(None),
        ModelKind::PowerLaw => {
            let per_beta = |&beta: &f64| -> Vec<Option<f64>> {
                match depth_block(beta) {
                    Some(block) => evaluate(Some(block)),
                    None => vec![None; spec.alphas.len()],
                }
            };
            let by_beta: Vec<Vec<Option<f64>>> = match par {
                Parallelism::Parallel => spec.betas.par_iter().map(per_beta).collect(),
                Parallelism::Sequential => spec.betas.iter().map(per_beta).collect(),
            };
            (0..spec.alphas.len())
                .flat_map(|ia| by_beta.iter().map(move |col| col[ia]))
                .collect()
        }
    };

    Ok(points
        .into_iter()
        .zip(trace_values)
        .map(|((alpha, beta), r2_adj)| GridPoint { alpha, beta, r2_adj })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(alpha: f64, beta: Option<f64>, v: Option<f64>) -> GridPoint {
        GridPoint { alpha, beta, r2_adj: v }
    }

    #[test]
    fn selection_prefers_earliest_on_ties() {
        let trace = vec![
            gp(0.05, Some(0.05), None),
            gp(0.05, Some(0.10), Some(0.5)),
            gp(0.10, Some(0.05), Some(0.5 + 5e-13)),
            gp(0.10, Some(0.10), Some(0.4)),
        ];
        assert_eq!(select(&trace), Some(1));
        let trace = vec![gp(0.05, None, Some(0.1)), gp(0.10, None, Some(0.2))];
        assert_eq!(select(&trace), Some(1));
        assert_eq!(select(&[gp(0.05, None, None)]), None);
    }
}
