//! Unpenalized maximum-likelihood refit on a fixed column subset.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::likelihood::{gradient, hessian, neg_log_likelihood, Coefficients};
use crate::error::{Error, Result};
use crate::ingestion::Outcome;

/// Standardized slopes beyond this are taken as a sign of separation.
const SEPARATION_BOUND: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitResult {
    pub coefficients: Coefficients,
    pub std_errors: Coefficients,
    pub log_likelihood: f64,
    pub iterations: usize,
}

pub fn aic(log_likelihood: f64, n_selected: usize) -> f64 {
    let k = 2 * (n_selected + 1);
    2.0 * k as f64 - 2.0 * log_likelihood
}

fn column_transform(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut center = vec![0.0; x.ncols()];
    let mut scale = vec![1.0; x.ncols()];
    for (j, col) in x.column_iter().enumerate() {
        if col.iter().all(|v| *v == 0.0 || *v == 1.0) {
            continue;
        }
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            center[j] = mean;
            scale[j] = sd;
        }
    }
    (center, scale)
}

/// Columns that are (numerically) linear combinations of the intercept and
/// earlier columns, by modified Gram-Schmidt.
fn dependent_columns(z: &DMatrix<f64>) -> Vec<usize> {
    let n = z.nrows();
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
    let mut out = Vec::new();
    for j in 0..z.ncols() {
        let mut v = z.column(j).into_owned();
        let norm0 = v.norm();
        for b in &basis {
            let c = b.dot(&v);
            v.axpy(-c, b, 1.0);
        }
        let r = v.norm();
        if norm0 == 0.0 || r <= 1e-9 * norm0.max(1.0) {
            out.push(j);
        } else {
            basis.push(v / r);
        }
    }
    out
}

/// Newton-Raphson MLE on the given columns (raw scale in, raw scale out).
/// `names` label the columns in error messages.
pub fn refit_mle(x: &DMatrix<f64>, y: &[Outcome], names: &[String]) -> Result<RefitResult> {
    let (n, m) = (x.nrows(), x.ncols());
    if n == 0 || y.len() != n || names.len() != m {
        return Err(Error::Contract("refit dimensions disagree".into()));
    }
    let (center, scale) = column_transform(x);
    let z = DMatrix::from_fn(n, m, |i, j| (x[(i, j)] - center[j]) / scale[j]);
    let culprits = dependent_columns(&z);
    if !culprits.is_empty() {
        return Err(Error::SingularRefit {
            columns: culprits.iter().map(|&j| names[j].clone()).collect(),
        });
    }
    let q = m + 1;
    let mut theta = Coefficients::zeros(m);
    let mut f = neg_log_likelihood(&theta, &z, y);
    let mut iterations = 0;
    let mut hess = hessian(&theta, &z);
    for _ in 0..200 {
        iterations += 1;
        let g = DVector::from_vec(gradient(&theta, &z, y).to_flat());
        let chol = hess.clone().cholesky().ok_or_else(|| Error::SingularRefit {
            columns: large_columns(&theta, names, SEPARATION_BOUND / 5.0),
        })?;
        let step = chol.solve(&g);
        let mut t = 1.0;
        let flat = DVector::from_vec(theta.to_flat());
        let mut next = None;
        for _ in 0..40 {
            let cand = Coefficients::from_flat((&flat - &step * t).as_slice());
            let fc = neg_log_likelihood(&cand, &z, y);
            if fc <= f + 1e-12 * f.abs().max(1.0) {
                next = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = next else { break };
        let moved = step.amax() * t;
        let gain = f - fc;
        theta = cand;
        f = fc;
        hess = hessian(&theta, &z);
        if theta.win[1..]
            .iter()
            .chain(&theta.loss[1..])
            .any(|b| b.abs() > SEPARATION_BOUND)
        {
            return Err(Error::SingularRefit {
                columns: large_columns(&theta, names, SEPARATION_BOUND / 5.0),
            });
        }
        if moved < 1e-10 || gain < 1e-14 * f.abs().max(1.0) {
            break;
        }
    }
    if !theta.is_finite() || !f.is_finite() {
        return Err(Error::Numerical("refit produced non-finite values".into()));
    }
    let cov_std = hess
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularRefit {
            columns: large_columns(&theta, names, SEPARATION_BOUND / 5.0),
        })?
        .inverse();
    // Raw = T · std, blockwise per equation.
    let mut t = DMatrix::<f64>::zeros(2 * q, 2 * q);
    for b in 0..2 {
        let o = b * q;
        t[(o, o)] = 1.0;
        for j in 0..m {
            t[(o + j + 1, o + j + 1)] = 1.0 / scale[j];
            t[(o, o + j + 1)] = -center[j] / scale[j];
        }
    }
    let raw = &t * DVector::from_vec(theta.to_flat());
    let cov = &t * cov_std * t.transpose();
    let se: Vec<f64> = (0..2 * q).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    Ok(RefitResult {
        coefficients: Coefficients::from_flat(raw.as_slice()),
        std_errors: Coefficients::from_flat(&se),
        log_likelihood: -f,
        iterations,
    })
}

/// Supremum of the log-likelihood over the given columns. Unlike
/// [`refit_mle`] this also works under separation, where the maximum is
/// only approached as coefficients diverge.
pub fn sup_log_likelihood(x: &DMatrix<f64>, y: &[Outcome]) -> Result<f64> {
    let (n, m) = (x.nrows(), x.ncols());
    if n == 0 || y.len() != n {
        return Err(Error::Contract("likelihood dimensions disagree".into()));
    }
    let (center, scale) = column_transform(x);
    let z = DMatrix::from_fn(n, m, |i, j| (x[(i, j)] - center[j]) / scale[j]);
    let mut theta = Coefficients::zeros(m);
    let mut f = neg_log_likelihood(&theta, &z, y);
    let mut mu = 1e-6;
    let mut stalled = 0;
    for _ in 0..2000 {
        let g = DVector::from_vec(gradient(&theta, &z, y).to_flat());
        let mut h = hessian(&theta, &z);
        let scale_h = h.diagonal().amax().max(1e-300);
        for i in 0..h.nrows() {
            h[(i, i)] += mu * scale_h;
        }
        let Some(chol) = h.cholesky() else {
            mu *= 10.0;
            continue;
        };
        let step = chol.solve(&g);
        let flat = DVector::from_vec(theta.to_flat());
        let cand = Coefficients::from_flat((&flat - &step).as_slice());
        let fc = neg_log_likelihood(&cand, &z, y);
        if fc.is_finite() && fc < f {
            let gain = f - fc;
            theta = cand;
            f = fc;
            mu = (mu / 3.0).max(1e-12);
            if gain < 1e-10 * (1.0 + f.abs()) {
                stalled += 1;
                if stalled >= 5 {
                    break;
                }
            } else {
                stalled = 0;
            }
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    Ok(-f)
}

fn large_columns(theta: &Coefficients, names: &[String], bound: f64) -> Vec<String> {
    let mut out: Vec<String> = (0..names.len())
        .filter(|&j| theta.win[j + 1].abs() > bound || theta.loss[j + 1].abs() > bound)
        .map(|j| names[j].clone())
        .collect();
    if out.is_empty() {
        out = names.to_vec();
    }
    out
}
