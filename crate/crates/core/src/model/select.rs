//! Choosing the penalty weight by K-fold cross-validated deviance under a
//! cap on model size.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lasso::{fit_lasso_path, ColumnRole, LassoPath, PathConfig};
use super::likelihood::neg_log_likelihood;
use crate::error::{Error, Result};
use crate::ingestion::Outcome;

pub const DEFAULT_MAX_VARS: usize = 20;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub max_vars: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: DEFAULT_FOLDS,
            max_vars: DEFAULT_MAX_VARS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Index into the path.
    pub index: usize,
    pub lambda: f64,
    pub active_sizes: Vec<usize>,
    pub cv_deviance: Vec<f64>,
    pub warning: Option<String>,
}

/// Among points with `sizes[i] <= cap`, the one with least deviance; ties
/// go to the earlier (larger-λ) point. `None` if no point fits the cap.
pub fn choose_lambda(sizes: &[usize], deviances: &[f64], cap: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&s, &d)) in sizes.iter().zip(deviances).enumerate() {
        if s > cap || d.is_nan() {
            continue;
        }
        if best.is_none_or(|b| d < deviances[b]) {
            best = Some(i);
        }
    }
    best
}

/// Seeded assignment of `n` rows to `k` folds of near-equal size.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    fold
}

/// Held-out deviance summed over folds for every λ on the path.
pub fn cross_validate(
    path: &LassoPath,
    x: &DMatrix<f64>,
    y: &[Outcome],
    roles: &[ColumnRole],
    path_cfg: &PathConfig,
    cv: &CvConfig,
) -> Result<Vec<f64>> {
    let n = x.nrows();
    let k = cv.folds.min(n);
    if k < 2 {
        return Err(Error::Validation(format!(
            "cross-validation needs at least 2 rows, got {n}"
        )));
    }
    let folds = fold_assignment(n, k, cv.seed);
    let cfg = PathConfig {
        lambdas: Some(path.lambdas()),
        max_active: None,
        ..path_cfg.clone()
    };
    let per_fold: Vec<Result<Vec<f64>>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
            let xt = x.select_rows(train.iter());
            let yt: Vec<Outcome> = train.iter().map(|&i| y[i]).collect();
            let xv = x.select_rows(test.iter());
            let yv: Vec<Outcome> = test.iter().map(|&i| y[i]).collect();
            let fold_path = fit_lasso_path(&xt, &yt, roles, &cfg)?;
            Ok(fold_path
                .points
                .iter()
                .map(|p| 2.0 * neg_log_likelihood(&p.coefficients, &xv, &yv))
                .collect())
        })
        .collect();
    let mut total = vec![0.0; path.points.len()];
    for r in per_fold {
        for (t, d) in total.iter_mut().zip(r?) {
            *t += d;
        }
    }
    Ok(total)
}

pub fn select_lambda(
    path: &LassoPath,
    x: &DMatrix<f64>,
    y: &[Outcome],
    roles: &[ColumnRole],
    path_cfg: &PathConfig,
    cv: &CvConfig,
) -> Result<Selection> {
    if path.points.is_empty() {
        return Err(Error::Contract("empty path".into()));
    }
    let sizes: Vec<usize> = path.points.iter().map(|p| p.active.len()).collect();
    let deviance = cross_validate(path, x, y, roles, path_cfg, cv)?;
    let (index, warning) = match choose_lambda(&sizes, &deviance, cv.max_vars) {
        Some(i) => (i, None),
        None => (
            0,
            Some(format!(
                "no path point has at most {} active features; using the largest λ",
                cv.max_vars
            )),
        ),
    };
    Ok(Selection {
        index,
        lambda: path.points[index].lambda,
        active_sizes: sizes,
        cv_deviance: deviance,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_excludes_large_models() {
        assert_eq!(choose_lambda(&[8, 14, 22], &[100.0, 90.0, 80.0], 20), Some(1));
    }

    #[test]
    fn ties_go_to_larger_lambda() {
        assert_eq!(choose_lambda(&[8, 10, 12], &[90.0, 90.0, 95.0], 20), Some(0));
    }

    #[test]
    fn nothing_under_cap() {
        assert_eq!(choose_lambda(&[21, 22], &[1.0, 0.5], 20), None);
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(23, 10, 7);
        assert_eq!(a, fold_assignment(23, 10, 7));
        for f in 0..10 {
            let c = a.iter().filter(|&&v| v == f).count();
            assert!(c == 2 || c == 3);
        }
    }
}
