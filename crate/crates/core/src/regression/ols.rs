//! Ordinary least squares through a Householder QR of the column-scaled
//! design, with classical homoskedastic inference.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

/// Designs whose scaled reciprocal condition number falls below this are
/// rejected.
pub const RCOND_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub r2: f64,
    pub r2_adj: f64,
    pub f_stat: f64,
    pub f_pvalue: f64,
    pub rss: f64,
    pub tss: f64,
    /// `RSS / (n - k)`.
    pub sigma2: f64,
    /// Reciprocal condition number of the column-scaled design.
    pub rcond: f64,
    pub n: usize,
    pub k: usize,
    /// `y - X b`, unweighted.
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

/// Fits `y = X b + u`. The first column of `X` is taken to be the
/// intercept: R² is centered and the F-test has `k - 1` numerator degrees
/// of freedom. `names` label columns in rank-deficiency errors.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<OlsFit> {
    fit(x, y, None, names)
}

/// Weighted least squares with nonnegative row weights.
pub fn wls_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: &DVector<f64>,
    names: &[String],
) -> Result<OlsFit> {
    if w.len() != y.len() {
        return Err(Error::Invalid(format!("{} weights for {} rows", w.len(), y.len())));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("weights must be finite and nonnegative".into()));
    }
    fit(x, y, Some(w), names)
}

fn column_name(names: &[String], j: usize) -> String {
    names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
}

/// Scales columns to unit Euclidean norm. Zero columns are reported.
pub(crate) fn unit_scale(x: &mut DMatrix<f64>, names: &[String]) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(x.ncols());
    let mut zero = Vec::new();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            zero.push(column_name(names, j));
        } else {
            col /= norm;
        }
        norms.push(norm);
    }
    if !zero.is_empty() {
        return Err(Error::RankDeficient { rcond: 0.0, columns: zero });
    }
    Ok(norms)
}

/// `sigma_min / sigma_max` of an upper-triangular factor, plus the columns
/// loading on the weakest direction when it is below threshold.
pub(crate) fn condition(r: &DMatrix<f64>, names: &[String]) -> Result<f64> {
    let svd = r.clone().svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let (imin, smin) = sv.argmin();
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if rcond.is_nan() || rcond < RCOND_THRESHOLD {
        let v = svd.v_t.as_ref().expect("right singular vectors requested").row(imin).transpose();
        let vmax = v.amax();
        let columns = v
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() >= 0.1 * vmax)
            .map(|(j, _)| column_name(names, j))
            .collect();
        return Err(Error::RankDeficient { rcond, columns });
    }
    Ok(rcond)
}

pub(crate) fn adjusted_r2(r2: f64, n: usize, k: usize) -> f64 {
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64
}

pub(crate) fn weighted_tss(y: &DVector<f64>, w: Option<&DVector<f64>>) -> f64 {
    match w {
        None => {
            let mean = y.mean();
            y.iter().map(|v| (v - mean).powi(2)).sum()
        }
        Some(w) => {
            let sw = w.sum();
            if sw == 0.0 {
                return 0.0;
            }
            let mean = y.dot(w) / sw;
            y.iter().zip(w.iter()).map(|(v, wi)| wi * (v - mean).powi(2)).sum()
        }
    }
}

pub(crate) fn r2_from(rss: f64, tss: f64) -> f64 {
    if tss > 0.0 {
        1.0 - rss / tss
    } else {
        0.0
    }
}

fn fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: Option<&DVector<f64>>,
    names: &[String],
) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::Invalid(format!("design has {n} rows, response has {}", y.len())));
    }
    if k == 0 {
        return Err(Error::Invalid("design has no columns".into()));
    }
    if n <= k {
        return Err(Error::Invalid(format!(
            "need more rows than columns: {n} rows, {k} columns"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("design or response contains non-finite values".into()));
    }

    let mut xs = x.clone();
    let mut ys = y.clone();
    if let Some(w) = w {
        for (i, wi) in w.iter().enumerate() {
            let s = wi.sqrt();
            xs.row_mut(i).scale_mut(s);
            ys[i] *= s;
        }
    }
    let norms = unit_scale(&mut xs, names)?;

    let qr = xs.qr();
    let r = qr.r();
    let rcond = condition(&r, names)?;

    let mut qty = ys.clone();
    qr.q_tr_mul(&mut qty);
    let z = r
        .solve_upper_triangular(&qty.rows(0, k).into_owned())
        .ok_or_else(|| Error::RankDeficient { rcond, columns: vec![] })?;
    let coef: Vec<f64> = z.iter().zip(&norms).map(|(zj, cj)| zj / cj).collect();
    let b = DVector::from_column_slice(&coef);

    let residuals = y - x * &b;
    let rss = match w {
        None => residuals.norm_squared(),
        Some(w) => residuals.iter().zip(w.iter()).map(|(u, wi)| wi * u * u).sum(),
    };
    let tss = weighted_tss(y, w);
    let dof = (n - k) as f64;
    let sigma2 = rss / dof;

    // Rows of R^-1 give the scaled covariance diagonal.
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient { rcond, columns: vec![] })?;
    let se: Vec<f64> = (0..k)
        .map(|j| sigma2.sqrt() * rinv.row(j).norm() / norms[j])
        .collect();

    let tdist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Invalid(e.to_string()))?;
    let (t, p): (Vec<f64>, Vec<f64>) = coef
        .iter()
        .zip(&se)
        .map(|(&c, &s)| {
            if s > 0.0 {
                let t = c / s;
                (t, 2.0 * tdist.sf(t.abs()))
            } else if c == 0.0 {
                (0.0, 1.0)
            } else {
                (c.signum() * f64::INFINITY, 0.0)
            }
        })
        .unzip();

    let r2 = r2_from(rss, tss);
    let r2_adj = adjusted_r2(r2, n, k);
    let (f_stat, f_pvalue) = if k < 2 {
        (f64::NAN, f64::NAN)
    } else {
        let df1 = (k - 1) as f64;
        let explained = (tss - rss).max(0.0) / df1;
        if rss > 0.0 {
            let f = explained / sigma2;
            let fd = FisherSnedecor::new(df1, dof).map_err(|e| Error::Invalid(e.to_string()))?;
            (f, fd.sf(f))
        } else if explained > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NAN, f64::NAN)
        }
    };

    Ok(OlsFit {
        coef,
        se,
        t,
        p,
        r2,
        r2_adj,
        f_stat,
        f_pvalue,
        rss,
        tss,
        sigma2,
        rcond,
        n,
        k,
        residuals: residuals.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn exact_linear_fit() {
        let x = DMatrix::from_fn(20, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => ((i * i) % 7) as f64,
        });
        let beta = DVector::from_vec(vec![0.5, -2.0, 3.25]);
        let y = &x * &beta;
        let fit = ols_fit(&x, &y, &names(3)).unwrap();
        for (c, b) in fit.coef.iter().zip(beta.iter()) {
            assert!((c - b).abs() < 1e-12, "{c} vs {b}");
        }
        assert!(fit.rss < 1e-20);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.f_pvalue, 0.0);
    }

    #[test]
    fn simple_regression_matches_textbook_formulas() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = [1.1, 1.9, 3.2, 3.9, 5.1, 5.8];
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let icept = my - slope * mx;
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        let se_slope = (s2 / sxx).sqrt();
        let se_icept = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();

        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let fit = ols_fit(&x, &DVector::from_column_slice(&ys), &names(2)).unwrap();
        assert!((fit.coef[1] - slope).abs() < 1e-12);
        assert!((fit.coef[0] - icept).abs() < 1e-12);
        assert!((fit.se[1] - se_slope).abs() < 1e-12);
        assert!((fit.se[0] - se_icept).abs() < 1e-12);
        // With one slope, F = t^2 and the p-values coincide.
        assert!((fit.f_stat - fit.t[1].powi(2)).abs() < 1e-6 * fit.f_stat);
        assert!((fit.f_pvalue - fit.p[1]).abs() < 1e-9);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let x = DMatrix::from_fn(30, 4, |i, j| match j {
            0 => 1.0,
            1 | 3 => (i as f64).sin(),
            _ => (i as f64).cos(),
        });
        let y = DVector::from_fn(30, |i, _| i as f64);
        let err = ols_fit(&x, &y, &names(4)).unwrap_err();
        match err {
            Error::RankDeficient { columns, rcond } => {
                assert!(rcond < RCOND_THRESHOLD);
                assert!(columns.contains(&"x1".to_string()));
                assert!(columns.contains(&"x3".to_string()));
                assert!(!columns.contains(&"x2".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let x = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { 0.0 * i as f64 });
        let y = DVector::from_element(10, 1.0);
        assert!(matches!(
            ols_fit(&x, &y, &names(2)),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_element(2, 1.0);
        assert!(matches!(ols_fit(&x, &y, &names(2)), Err(Error::Invalid(_))));
    }

    #[test]
    fn residuals_are_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let x = DMatrix::from_fn(n, 5, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.sample::<f64, _>(StandardNormal) * 10f64.powi(j as i32 - 2)
            }
        });
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let fit = ols_fit(&x, &y, &names(5)).unwrap();
        let u = DVector::from_column_slice(&fit.residuals);
        let xtu = x.tr_mul(&u);
        for j in 0..5 {
            let scale = x.column(j).norm() * y.norm();
            assert!(xtu[j].abs() < 1e-8 * scale, "column {j}: {}", xtu[j]);
        }
        assert!(fit.r2_adj <= fit.r2);
    }

    #[test]
    fn integer_weights_match_row_replication() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let x = DMatrix::from_fn(n, 3, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() });
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>());
        let w = DVector::from_fn(n, |i, _| (1 + i % 3) as f64);
        let wfit = wls_fit(&x, &y, &w, &names(3)).unwrap();

        let reps: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat(i).take(1 + i % 3)).collect();
        let xr = DMatrix::from_fn(reps.len(), 3, |r, j| x[(reps[r], j)]);
        let yr = DVector::from_fn(reps.len(), |r, _| y[reps[r]]);
        let rfit = ols_fit(&xr, &yr, &names(3)).unwrap();
        for j in 0..3 {
            assert!((wfit.coef[j] - rfit.coef[j]).abs() < 1e-10);
        }
        assert!((wfit.rss - rfit.rss).abs() < 1e-10);
        assert!((wfit.r2 - rfit.r2).abs() < 1e-10);
    }

    #[test]
    fn pvalue_threshold_examples() {
        let tdist = StudentsT::new(0.0, 1.0, 1e6).unwrap();
        assert!((2.0 * tdist.sf(1.96) - 0.05).abs() < 1e-3);
    }
}
