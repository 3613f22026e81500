//! Three-outcome logit with Draw as the reference category.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::Outcome;

/// Win and loss equations, each `[intercept, slope_1, ..., slope_m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub win: Vec<f64>,
    pub loss: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(m: usize) -> Self {
        Coefficients {
            win: vec![0.0; m + 1],
            loss: vec![0.0; m + 1],
        }
    }

    /// Number of features (excluding the intercept).
    pub fn n_features(&self) -> usize {
        self.win.len() - 1
    }

    /// `[win..., loss...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.win.iter().chain(&self.loss).copied().collect()
    }

    pub fn from_flat(theta: &[f64]) -> Self {
        let half = theta.len() / 2;
        Coefficients {
            win: theta[..half].to_vec(),
            loss: theta[half..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.win.iter().chain(&self.loss).all(|v| v.is_finite())
    }

    pub fn linear_predictors(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() + 1 != self.win.len() {
            return Err(Error::Contract(format!(
                "feature row has {} entries, model expects {}",
                x.len(),
                self.win.len() - 1
            )));
        }
        let eta = |b: &[f64]| b[0] + b[1..].iter().zip(x).map(|(c, v)| c * v).sum::<f64>();
        Ok((eta(&self.win), eta(&self.loss)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probs {
    pub win: f64,
    pub draw: f64,
    pub loss: f64,
}

impl Probs {
    pub fn of(&self, o: Outcome) -> f64 {
        match o {
            Outcome::Win => self.win,
            Outcome::Draw => self.draw,
            Outcome::Loss => self.loss,
        }
    }

    pub fn expected_points(&self) -> f64 {
        3.0 * self.win + self.draw
    }
}

/// Probabilities from the two linear predictors, via a shifted
/// log-sum-exp so that any finite input stays finite.
pub fn probs_from_eta(eta_win: f64, eta_loss: f64) -> Probs {
    let m = eta_win.max(eta_loss).max(0.0);
    let (ew, ed, el) = ((eta_win - m).exp(), (-m).exp(), (eta_loss - m).exp());
    let z = ew + ed + el;
    Probs {
        win: ew / z,
        draw: ed / z,
        loss: el / z,
    }
}

/// log(1 + e^a + e^b), stable.
pub fn log_normalizer(a: f64, b: f64) -> f64 {
    let m = a.max(b).max(0.0);
    m + ((-m).exp() + (a - m).exp() + (b - m).exp()).ln()
}

pub fn predict_probs(coeffs: &Coefficients, x: &[f64]) -> Result<Probs> {
    let (w, l) = coeffs.linear_predictors(x)?;
    Ok(probs_from_eta(w, l))
}

fn eta_vectors(coeffs: &Coefficients, x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let m = x.ncols();
    let bw = DVector::from_column_slice(&coeffs.win[1..=m]);
    let bl = DVector::from_column_slice(&coeffs.loss[1..=m]);
    let mut ew = x * bw;
    let mut el = x * bl;
    ew.add_scalar_mut(coeffs.win[0]);
    el.add_scalar_mut(coeffs.loss[0]);
    (ew, el)
}

fn eta_of(o: Outcome, w: f64, l: f64) -> f64 {
    match o {
        Outcome::Win => w,
        Outcome::Draw => 0.0,
        Outcome::Loss => l,
    }
}

/// Negative log-likelihood of outcomes `y` given rows of `x`.
pub fn neg_log_likelihood(coeffs: &Coefficients, x: &DMatrix<f64>, y: &[Outcome]) -> f64 {
    let (ew, el) = eta_vectors(coeffs, x);
    y.iter()
        .enumerate()
        .map(|(i, o)| log_normalizer(ew[i], el[i]) - eta_of(*o, ew[i], el[i]))
        .sum()
}

/// Gradient of [`neg_log_likelihood`] in the layout of [`Coefficients`].
pub fn gradient(coeffs: &Coefficients, x: &DMatrix<f64>, y: &[Outcome]) -> Coefficients {
    let m = x.ncols();
    let (ew, el) = eta_vectors(coeffs, x);
    let mut g = Coefficients::zeros(m);
    for (i, o) in y.iter().enumerate() {
        let p = probs_from_eta(ew[i], el[i]);
        let rw = p.win - f64::from(u8::from(*o == Outcome::Win));
        let rl = p.loss - f64::from(u8::from(*o == Outcome::Loss));
        g.win[0] += rw;
        g.loss[0] += rl;
        for j in 0..m {
            let v = x[(i, j)];
            g.win[j + 1] += rw * v;
            g.loss[j + 1] += rl * v;
        }
    }
    g
}

/// Observed information (Hessian of the negative log-likelihood) over the
/// flat `[win, loss]` parameter vector.
pub fn hessian(coeffs: &Coefficients, x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.ncols();
    let q = m + 1;
    let (ew, el) = eta_vectors(coeffs, x);
    let mut h = DMatrix::<f64>::zeros(2 * q, 2 * q);
    let mut row = vec![0.0; q];
    for i in 0..x.nrows() {
        let p = probs_from_eta(ew[i], el[i]);
        let (aww, awl, all) = (p.win * (1.0 - p.win), -p.win * p.loss, p.loss * (1.0 - p.loss));
        row[0] = 1.0;
        for j in 0..m {
            row[j + 1] = x[(i, j)];
        }
        for a in 0..q {
            if row[a] == 0.0 {
                continue;
            }
            for b in 0..q {
                let xab = row[a] * row[b];
                h[(a, b)] += aww * xab;
                h[(q + a, q + b)] += all * xab;
                h[(a, q + b)] += awl * xab;
                h[(q + a, b)] += awl * xab;
            }
        }
    }
    h
}
