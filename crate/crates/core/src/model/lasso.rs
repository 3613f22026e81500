//! L1-penalized fit of the three-outcome logit along a decreasing grid of
//! penalty weights.
//!
//! Each grid point is solved by proximal Newton: the smooth part is replaced
//! by its second-order expansion (full Hessian, including the coupling
//! between the win and loss equations), the penalized quadratic is
//! minimized by coordinate descent, and a backtracking line search on the
//! true objective makes every outer iteration a descent step.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use tracing::debug;

use super::likelihood::{log_normalizer, probs_from_eta, Coefficients};
use crate::error::{Error, Result};
use crate::ingestion::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Penalized,
    /// Always in the model, never penalized.
    Free,
    /// Coefficient pinned at zero (e.g. a constant column).
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of the largest.
    pub min_ratio: f64,
    /// Explicit grid; overrides `n_lambda`/`min_ratio` when set.
    pub lambdas: Option<Vec<f64>>,
    /// Stop on relative objective change below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stop the path after the first point whose active set exceeds this.
    pub max_active: Option<usize>,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            n_lambda: 100,
            min_ratio: 1e-3,
            lambdas: None,
            tolerance: 1e-9,
            max_iterations: 10_000,
            max_active: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub coefficients: Coefficients,
    /// Feature indices with a nonzero win or loss coefficient, plus every
    /// free column.
    pub active: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Penalized objective after each outer iteration, starting value first.
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    pub lambda_max: f64,
    pub points: Vec<PathPoint>,
    pub diagnostics: Vec<String>,
}

impl LassoPath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }
}

/// Internal problem on a (partly) reparametrized copy of the columns.
struct Problem {
    n: usize,
    cols: Vec<Vec<f64>>,
    yw: Vec<f64>,
    yl: Vec<f64>,
    roles: Vec<ColumnRole>,
    /// Free non-binary columns are centered and scaled internally; this is
    /// an exact reparametrization since they carry no penalty.
    center: Vec<f64>,
    scale: Vec<f64>,
}

#[derive(Clone)]
struct State {
    w: Vec<f64>,
    l: Vec<f64>,
    eta_w: Vec<f64>,
    eta_l: Vec<f64>,
}

impl Problem {
    fn new(x: &DMatrix<f64>, y: &[Outcome], roles: &[ColumnRole]) -> Result<Self> {
        let (n, m) = (x.nrows(), x.ncols());
        if n == 0 {
            return Err(Error::Contract("empty design matrix".into()));
        }
        if roles.len() != m || y.len() != n {
            return Err(Error::Contract("roles/outcomes do not match the matrix".into()));
        }
        let mut center = vec![0.0; m];
        let mut scale = vec![1.0; m];
        let mut cols = Vec::with_capacity(m);
        for j in 0..m {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            if roles[j] == ColumnRole::Free && !col.iter().all(|v| *v == 0.0 || *v == 1.0) {
                let mean = col.iter().sum::<f64>() / n as f64;
                let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
                if sd > 0.0 {
                    center[j] = mean;
                    scale[j] = sd;
                }
            }
            cols.push(col.iter().map(|v| (v - center[j]) / scale[j]).collect());
        }
        Ok(Problem {
            n,
            cols,
            yw: y.iter().map(|o| f64::from(u8::from(*o == Outcome::Win))).collect(),
            yl: y.iter().map(|o| f64::from(u8::from(*o == Outcome::Loss))).collect(),
            roles: roles.to_vec(),
            center,
            scale,
        })
    }

    fn m(&self) -> usize {
        self.cols.len()
    }

    fn state(&self, w: Vec<f64>, l: Vec<f64>) -> State {
        let mut eta_w = vec![w[0]; self.n];
        let mut eta_l = vec![l[0]; self.n];
        for (j, col) in self.cols.iter().enumerate() {
            let (bw, bl) = (w[j + 1], l[j + 1]);
            if bw == 0.0 && bl == 0.0 {
                continue;
            }
            for i in 0..self.n {
                eta_w[i] += bw * col[i];
                eta_l[i] += bl * col[i];
            }
        }
        State { w, l, eta_w, eta_l }
    }

    fn nll(&self, s: &State) -> f64 {
        (0..self.n)
            .map(|i| log_normalizer(s.eta_w[i], s.eta_l[i]) - self.yw[i] * s.eta_w[i] - self.yl[i] * s.eta_l[i])
            .sum()
    }

    fn l1(&self, w: &[f64], l: &[f64]) -> f64 {
        (0..self.m())
            .filter(|&j| self.roles[j] == ColumnRole::Penalized)
            .map(|j| w[j + 1].abs() + l[j + 1].abs())
            .sum()
    }

    fn penalty(&self, lambda: f64, w: &[f64], l: &[f64]) -> f64 {
        let norm = self.l1(w, l);
        if norm == 0.0 {
            0.0
        } else {
            lambda * norm
        }
    }

    fn objective(&self, lambda: f64, s: &State) -> f64 {
        self.nll(s) + self.penalty(lambda, &s.w, &s.l)
    }

    /// Gradient of the negative log-likelihood as (win, loss) vectors.
    fn gradient(&self, s: &State) -> (Vec<f64>, Vec<f64>) {
        let m = self.m();
        let mut gw = vec![0.0; m + 1];
        let mut gl = vec![0.0; m + 1];
        let mut rw = vec![0.0; self.n];
        let mut rl = vec![0.0; self.n];
        for i in 0..self.n {
            let p = probs_from_eta(s.eta_w[i], s.eta_l[i]);
            rw[i] = p.win - self.yw[i];
            rl[i] = p.loss - self.yl[i];
        }
        gw[0] = rw.iter().sum();
        gl[0] = rl.iter().sum();
        for (j, col) in self.cols.iter().enumerate() {
            if self.roles[j] == ColumnRole::Excluded {
                continue;
            }
            gw[j + 1] = col.iter().zip(&rw).map(|(x, r)| x * r).sum();
            gl[j + 1] = col.iter().zip(&rl).map(|(x, r)| x * r).sum();
        }
        (gw, gl)
    }

    fn col(&self, j: usize) -> Option<&[f64]> {
        if j == 0 {
            None
        } else {
            Some(&self.cols[j - 1])
        }
    }

    /// Solves one grid point from the warm start `s`.
    fn solve(&self, lambda: f64, mut s: State, cfg: &PathConfig) -> (State, usize, bool, Vec<f64>) {
        let m = self.m();
        let n = self.n;
        let mut f = self.objective(lambda, &s);
        let mut trace = vec![f];
        let mut converged = false;
        let mut iterations = 0;
        // Coordinates: (class, index) with index 0 the intercept.
        let coords: Vec<(usize, usize)> = (0..2)
            .flat_map(|k| (0..=m).map(move |j| (k, j)))
            .filter(|&(_, j)| j == 0 || self.roles[j - 1] != ColumnRole::Excluded)
            .collect();
        let penalized = |j: usize| j > 0 && self.roles[j - 1] == ColumnRole::Penalized;

        let mut aww = vec![0.0; n];
        let mut awl = vec![0.0; n];
        let mut all = vec![0.0; n];
        let mut last_decrease = f64::INFINITY;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let (gw, gl) = self.gradient(&s);
            for i in 0..n {
                let p = probs_from_eta(s.eta_w[i], s.eta_l[i]);
                aww[i] = p.win * (1.0 - p.win);
                awl[i] = -p.win * p.loss;
                all[i] = p.loss * (1.0 - p.loss);
            }
            let hdiag = |k: usize, j: usize| -> f64 {
                let a = if k == 0 { &aww } else { &all };
                match self.col(j) {
                    None => a.iter().sum(),
                    Some(c) => c.iter().zip(a).map(|(x, a)| x * x * a).sum(),
                }
            };
            let h: Vec<[f64; 2]> = (0..=m)
                .map(|j| {
                    if j > 0 && self.roles[j - 1] == ColumnRole::Excluded {
                        [0.0, 0.0]
                    } else {
                        [hdiag(0, j), hdiag(1, j)]
                    }
                })
                .collect();

            // Coordinate descent on the penalized quadratic model in d.
            let mut dw = vec![0.0; m + 1];
            let mut dl = vec![0.0; m + 1];
            let mut uw = vec![0.0; n];
            let mut ul = vec![0.0; n];
            // Loose inner solves early, tightening as the outer steps shrink.
            let inner_tol = (1e-3 * last_decrease).clamp(1e-15 * (1.0 + f.abs()), 1e-11 * (1.0 + f.abs()));
            let update = |k: usize, j: usize, dw: &mut [f64], dl: &mut [f64], uw: &mut [f64], ul: &mut [f64]| -> f64 {
                let hh = h[j][k];
                if hh <= 1e-300 {
                    return 0.0;
                }
                let (g0, theta, d) = if k == 0 {
                    (gw[j], s.w[j], dw[j])
                } else {
                    (gl[j], s.l[j], dl[j])
                };
                let curv: f64 = match self.col(j) {
                    None => (0..n)
                        .map(|i| {
                            if k == 0 {
                                aww[i] * uw[i] + awl[i] * ul[i]
                            } else {
                                awl[i] * uw[i] + all[i] * ul[i]
                            }
                        })
                        .sum(),
                    Some(c) => (0..n)
                        .map(|i| {
                            c[i] * if k == 0 {
                                aww[i] * uw[i] + awl[i] * ul[i]
                            } else {
                                awl[i] * uw[i] + all[i] * ul[i]
                            }
                        })
                        .sum(),
                };
                let grad = g0 + curv;
                let cur = theta + d;
                let new = if penalized(j) {
                    soft_threshold(hh * cur - grad, lambda) / hh
                } else {
                    cur - grad / hh
                };
                let delta = new - cur;
                if delta == 0.0 {
                    return 0.0;
                }
                let u = if k == 0 { &mut *uw } else { &mut *ul };
                match self.col(j) {
                    None => u.iter_mut().for_each(|v| *v += delta),
                    Some(c) => u.iter_mut().zip(c).for_each(|(v, x)| *v += delta * x),
                }
                if k == 0 {
                    dw[j] += delta;
                } else {
                    dl[j] += delta;
                }
                hh * delta * delta
            };
            let mut sweeps = 0;
            let mut exact = false;
            'outer: loop {
                let mut max_change = 0.0f64;
                for &(k, j) in &coords {
                    max_change = max_change.max(update(k, j, &mut dw, &mut dl, &mut uw, &mut ul));
                }
                sweeps += 1;
                if max_change < inner_tol || sweeps >= 1000 {
                    break;
                }
                // Once the sign pattern is right, the quadratic model is
                // minimized in closed form; CD alone crawls when the Hessian
                // is ill-conditioned.
                if let Some((ew, el)) = self.exact_step(lambda, &s, (&gw, &gl), (&dw, &dl), (&aww, &awl, &all)) {
                    dw = ew;
                    dl = el;
                    let z = self.state(dw.clone(), dl.clone());
                    uw = z.eta_w;
                    ul = z.eta_l;
                    exact = true;
                    break;
                }
                for _ in 0..20 {
                    let active: Vec<(usize, usize)> = coords
                        .iter()
                        .copied()
                        .filter(|&(k, j)| {
                            !penalized(j)
                                || if k == 0 {
                                    s.w[j] + dw[j] != 0.0
                                } else {
                                    s.l[j] + dl[j] != 0.0
                                }
                        })
                        .collect();
                    let mut max_change = 0.0f64;
                    for &(k, j) in &active {
                        max_change = max_change.max(update(k, j, &mut dw, &mut dl, &mut uw, &mut ul));
                    }
                    sweeps += 1;
                    if max_change < inner_tol {
                        break;
                    }
                    if sweeps >= 1000 {
                        break 'outer;
                    }
                }
            }

            let new_w: Vec<f64> = s.w.iter().zip(&dw).map(|(a, b)| a + b).collect();
            let new_l: Vec<f64> = s.l.iter().zip(&dl).map(|(a, b)| a + b).collect();
            let lin: f64 = gw.iter().zip(&dw).chain(gl.iter().zip(&dl)).map(|(g, d)| g * d).sum();
            let decrement = lin + self.penalty(lambda, &new_w, &new_l) - self.penalty(lambda, &s.w, &s.l);
            if !(decrement < -1e-15 * (1.0 + f.abs())) {
                converged = true;
                break;
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let w: Vec<f64> = s.w.iter().zip(&dw).map(|(a, b)| a + t * b).collect();
                let l: Vec<f64> = s.l.iter().zip(&dl).map(|(a, b)| a + t * b).collect();
                let cand = State {
                    eta_w: s.eta_w.iter().zip(&uw).map(|(e, u)| e + t * u).collect(),
                    eta_l: s.eta_l.iter().zip(&ul).map(|(e, u)| e + t * u).collect(),
                    w,
                    l,
                };
                let fc = self.objective(lambda, &cand);
                if fc <= f + 1e-4 * t * decrement {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, fc)) = accepted else {
                // No descent possible at machine precision.
                converged = true;
                break;
            };
            // Recompute predictors from scratch now and then to shed drift.
            s = if iterations % 20 == 0 {
                self.state(cand.w, cand.l)
            } else {
                cand
            };
            last_decrease = f - fc;
            let rel = (f - fc) / f.abs().max(1.0);
            f = if iterations % 20 == 0 {
                self.objective(lambda, &s)
            } else {
                fc
            };
            trace.push(f);
            // A loose inner solve can stall the objective early; only a tight
            // one counts towards convergence.
            if rel < cfg.tolerance && (exact || inner_tol <= 1e-14 * (1.0 + f.abs())) {
                converged = true;
                break;
            }
        }
        (s, iterations, converged, trace)
    }

    /// Minimizer of the penalized quadratic model, assuming the sign pattern
    /// of `theta + d`. `None` when the Hessian block is singular or the
    /// result breaks the sign pattern or the optimality conditions.
    fn exact_step(
        &self,
        lambda: f64,
        s: &State,
        (gw, gl): (&[f64], &[f64]),
        (dw, dl): (&[f64], &[f64]),
        (aww, awl, all): (&[f64], &[f64], &[f64]),
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = self.m();
        let n = self.n;
        let theta = |k: usize, j: usize| if k == 0 { s.w[j] } else { s.l[j] };
        let d0 = |k: usize, j: usize| if k == 0 { dw[j] } else { dl[j] };
        let excluded = |j: usize| j > 0 && self.roles[j - 1] == ColumnRole::Excluded;
        let penalized = |j: usize| j > 0 && self.roles[j - 1] == ColumnRole::Penalized;
        let x = |j: usize, i: usize| self.col(j).map_or(1.0, |c| c[i]);
        let a = |k: usize, k2: usize, i: usize| match (k, k2) {
            (0, 0) => aww[i],
            (1, 1) => all[i],
            _ => awl[i],
        };
        let mut free = Vec::new();
        let mut zeroed = Vec::new();
        for k in 0..2 {
            for j in (0..=m).filter(|&j| !excluded(j)) {
                if penalized(j) && theta(k, j) + d0(k, j) == 0.0 {
                    zeroed.push((k, j));
                } else {
                    free.push((k, j));
                }
            }
        }
        let sign = |k: usize, j: usize| {
            if penalized(j) {
                (theta(k, j) + d0(k, j)).signum()
            } else {
                0.0
            }
        };

        // Zeroed coordinates move to exactly zero: d = -theta.
        let mut fixed = [vec![0.0; n], vec![0.0; n]];
        for &(k, j) in &zeroed {
            let d = -theta(k, j);
            if d != 0.0 {
                for (i, v) in fixed[k].iter_mut().enumerate() {
                    *v += d * x(j, i);
                }
            }
        }
        let p = free.len();
        let mut h = DMatrix::zeros(p, p);
        let mut r = nalgebra::DVector::zeros(p);
        for (c, &(k, j)) in free.iter().enumerate() {
            let g = if k == 0 { gw[j] } else { gl[j] };
            let cross: f64 = (0..n)
                .map(|i| x(j, i) * (a(k, 0, i) * fixed[0][i] + a(k, 1, i) * fixed[1][i]))
                .sum();
            let pen = if penalized(j) { lambda * sign(k, j) } else { 0.0 };
            r[c] = -(g + pen) - cross;
            for (c2, &(k2, j2)) in free.iter().enumerate().skip(c) {
                let v: f64 = (0..n).map(|i| x(j, i) * x(j2, i) * a(k, k2, i)).sum();
                h[(c, c2)] = v;
                h[(c2, c)] = v;
            }
        }
        let sol = h.cholesky()?.solve(&r);
        let mut nw: Vec<f64> = s.w.iter().map(|t| -t).collect();
        let mut nl: Vec<f64> = s.l.iter().map(|t| -t).collect();
        for j in (0..=m).filter(|&j| excluded(j)) {
            nw[j] = 0.0;
            nl[j] = 0.0;
        }
        for (c, &(k, j)) in free.iter().enumerate() {
            if !sol[c].is_finite() {
                return None;
            }
            if penalized(j) && (theta(k, j) + sol[c]) * sign(k, j) <= 0.0 {
                return None;
            }
            if k == 0 {
                nw[j] = sol[c];
            } else {
                nl[j] = sol[c];
            }
        }
        // Subgradient condition at the zeroed coordinates.
        let mut u = [vec![0.0; n], vec![0.0; n]];
        for k in 0..2 {
            let d = if k == 0 { &nw } else { &nl };
            for j in 0..=m {
                if d[j] != 0.0 {
                    for (i, v) in u[k].iter_mut().enumerate() {
                        *v += d[j] * x(j, i);
                    }
                }
            }
        }
        for &(k, j) in &zeroed {
            let g = if k == 0 { gw[j] } else { gl[j] };
            let q: f64 = g
                + (0..n)
                    .map(|i| x(j, i) * (a(k, 0, i) * u[0][i] + a(k, 1, i) * u[1][i]))
                    .sum::<f64>();
            if q.abs() > lambda * (1.0 + 1e-9) {
                return None;
            }
        }
        Some((nw, nl))
    }

    /// Coefficients on the caller's column scale.
    fn export(&self, s: &State) -> Coefficients {
        let map = |b: &[f64]| {
            let mut out = b.to_vec();
            for j in 0..self.m() {
                out[j + 1] = b[j + 1] / self.scale[j];
                out[0] -= out[j + 1] * self.center[j];
            }
            out
        };
        Coefficients {
            win: map(&s.w),
            loss: map(&s.l),
        }
    }

    fn active(&self, s: &State) -> Vec<usize> {
        (0..self.m())
            .filter(|&j| match self.roles[j] {
                ColumnRole::Free => true,
                ColumnRole::Excluded => false,
                ColumnRole::Penalized => s.w[j + 1] != 0.0 || s.l[j + 1] != 0.0,
            })
            .collect()
    }

    /// Start: intercepts at the empirical log-odds.
    fn initial_state(&self) -> State {
        let m = self.m();
        let n = self.n as f64;
        let (cw, cl) = (self.yw.iter().sum::<f64>(), self.yl.iter().sum::<f64>());
        let cd = n - cw - cl;
        let lo = |a: f64| ((a + 0.5) / (cd + 0.5)).ln();
        let mut w = vec![0.0; m + 1];
        let mut l = vec![0.0; m + 1];
        w[0] = lo(cw);
        l[0] = lo(cl);
        self.state(w, l)
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Smallest penalty at which every penalized coefficient is zero, with the
/// matching unpenalized-part solution.
fn null_fit(problem: &Problem, cfg: &PathConfig) -> (f64, State) {
    let (s, _, _, _) = problem.solve(f64::INFINITY, problem.initial_state(), cfg);
    let (gw, gl) = problem.gradient(&s);
    let lambda_max = (0..problem.m())
        .filter(|&j| problem.roles[j] == ColumnRole::Penalized)
        .map(|j| gw[j + 1].abs().max(gl[j + 1].abs()))
        .fold(0.0, f64::max);
    (lambda_max, s)
}

pub fn lambda_max(x: &DMatrix<f64>, y: &[Outcome], roles: &[ColumnRole]) -> Result<f64> {
    let p = Problem::new(x, y, roles)?;
    Ok(null_fit(&p, &PathConfig::default()).0)
}

pub fn lambda_grid(lambda_max: f64, cfg: &PathConfig) -> Vec<f64> {
    if let Some(l) = &cfg.lambdas {
        return l.clone();
    }
    if lambda_max <= 0.0 || cfg.n_lambda <= 1 {
        return vec![lambda_max.max(0.0)];
    }
    let k = cfg.n_lambda - 1;
    (0..cfg.n_lambda)
        .map(|i| lambda_max * cfg.min_ratio.powf(i as f64 / k as f64))
        .collect()
}

/// Fits the penalized model at every grid value, largest first, warm
/// starting each point from the previous solution.
pub fn fit_lasso_path(x: &DMatrix<f64>, y: &[Outcome], roles: &[ColumnRole], cfg: &PathConfig) -> Result<LassoPath> {
    let problem = Problem::new(x, y, roles)?;
    let (lmax, start) = null_fit(&problem, cfg);
    let grid = lambda_grid(lmax, cfg);
    let mut points = Vec::with_capacity(grid.len());
    let mut diagnostics = Vec::new();
    let mut state = start;
    for (idx, &lambda) in grid.iter().enumerate() {
        let (s, iterations, converged, trace) = problem.solve(lambda, state, cfg);
        if !converged {
            diagnostics.push(format!(
                "grid point {idx} (lambda = {lambda:.6e}) did not converge in {iterations} iterations"
            ));
        }
        let active = problem.active(&s);
        let n_active = active.len();
        points.push(PathPoint {
            lambda,
            coefficients: problem.export(&s),
            active,
            iterations,
            converged,
            objective: *trace.last().expect("trace starts non-empty"),
            objective_trace: trace,
        });
        state = s;
        if cfg.max_active.is_some_and(|cap| n_active > cap) {
            debug!(idx, n_active, "active set exceeds cap; truncating path");
            break;
        }
    }
    Ok(LassoPath {
        lambda_max: lmax,
        points,
        diagnostics,
    })
}

/// Single penalized fit. Cold start, except at or above `lambda_max`,
/// where the unpenalized-part fit is already the solution.
pub fn fit_at(
    x: &DMatrix<f64>,
    y: &[Outcome],
    roles: &[ColumnRole],
    lambda: f64,
    cfg: &PathConfig,
) -> Result<PathPoint> {
    let problem = Problem::new(x, y, roles)?;
    let (lmax, null) = null_fit(&problem, cfg);
    let start = if lambda >= lmax { null } else { problem.initial_state() };
    let (s, iterations, converged, trace) = problem.solve(lambda, start, cfg);
    Ok(PathPoint {
        lambda,
        coefficients: problem.export(&s),
        active: problem.active(&s),
        iterations,
        converged,
        objective: *trace.last().expect("trace starts non-empty"),
        objective_trace: trace,
    })
}

/// Penalized objective at given coefficients (caller's scale).
pub fn penalized_objective(
    x: &DMatrix<f64>,
    y: &[Outcome],
    roles: &[ColumnRole],
    lambda: f64,
    c: &Coefficients,
) -> f64 {
    let nll = super::likelihood::neg_log_likelihood(c, x, y);
    let l1: f64 = (0..x.ncols())
        .filter(|&j| roles[j] == ColumnRole::Penalized)
        .map(|j| c.win[j + 1].abs() + c.loss[j + 1].abs())
        .sum();
    if l1 == 0.0 {
        nll
    } else {
        nll + lambda * l1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn grid_is_geometric() {
        let g = lambda_grid(
            10.0,
            &PathConfig {
                n_lambda: 3,
                ..Default::default()
            },
        );
        assert_eq!(g.len(), 3);
        assert!((g[0] - 10.0).abs() < 1e-12);
        assert!((g[2] - 0.01).abs() < 1e-12);
        assert!((g[1] - 10.0 * 1e-1f64.powf(1.5)).abs() < 1e-12);
    }

    fn toy(n: usize, m: usize, seed: u64) -> (DMatrix<f64>, Vec<Outcome>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        let y = (0..n)
            .map(|i| {
                let ew = 0.8 * x[(i, 0)] - 0.5 * x[(i, 1 % m)];
                let el = -0.6 * x[(i, 0)];
                let p = probs_from_eta(ew, el);
                let u: f64 = rng.gen();
                if u < p.win {
                    Outcome::Win
                } else if u < p.win + p.draw {
                    Outcome::Draw
                } else {
                    Outcome::Loss
                }
            })
            .collect();
        (x, y)
    }

    #[test]
    fn unpenalized_endpoint_matches_newton() {
        let (x, y) = toy(200, 4, 3);
        let roles = vec![ColumnRole::Penalized; 4];
        let cfg = PathConfig {
            lambdas: Some(vec![1.0, 0.0]),
            ..Default::default()
        };
        let path = fit_lasso_path(&x, &y, &roles, &cfg).unwrap();
        let names: Vec<String> = (0..4).map(|j| j.to_string()).collect();
        let mle = crate::model::refit::refit_mle(&x, &y, &names).unwrap();
        let end = &path.points[1].coefficients;
        for (a, b) in end.to_flat().iter().zip(mle.coefficients.to_flat()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = toy(150, 6, 9);
        let mut roles = vec![ColumnRole::Penalized; 6];
        roles[0] = ColumnRole::Free;
        let path = fit_lasso_path(
            &x,
            &y,
            &roles,
            &PathConfig {
                n_lambda: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(path.diagnostics.is_empty());
        for p in &path.points {
            for w in p.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-10);
            }
        }
        assert_eq!(path.points[0].active, vec![0]);
    }
}
