use lineup_core::domain::{Formation, Lineup, PlayerId, Position, Squad};
use lineup_core::ingestion::Outcome;
use lineup_core::optimizer::Objective;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Every lineup of `formation` the squad can field, by brute force.
pub fn enumerate_lineups(squad: &Squad, formation: Formation) -> Vec<Lineup> {
    let needs: Vec<(Position, usize)> = Position::ALL.iter().map(|&p| (p, formation.count(p))).collect();
    let mut out = Vec::new();
    let mut used = vec![false; squad.players().len()];
    let mut chosen = Vec::with_capacity(11);
    extend(
        squad,
        formation,
        &needs,
        0,
        0,
        needs[0].1,
        &mut used,
        &mut chosen,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    squad: &Squad,
    formation: Formation,
    needs: &[(Position, usize)],
    level: usize,
    start: usize,
    left: usize,
    used: &mut [bool],
    chosen: &mut Vec<(PlayerId, Position)>,
    out: &mut Vec<Lineup>,
) {
    if left == 0 {
        if level + 1 == needs.len() {
            out.push(Lineup::new(chosen.iter().cloned(), formation));
        } else {
            extend(
                squad,
                formation,
                needs,
                level + 1,
                0,
                needs[level + 1].1,
                used,
                chosen,
                out,
            );
        }
        return;
    }
    let pos = needs[level].0;
    let players = squad.players();
    for i in start..players.len() {
        if used[i] || !players[i].is_eligible(pos) {
            continue;
        }
        used[i] = true;
        chosen.push((players[i].player_id.clone(), pos));
        extend(squad, formation, needs, level, i + 1, left - 1, used, chosen, out);
        chosen.pop();
        used[i] = false;
    }
}

/// Best lineup over `formations` by exhaustive enumeration.
pub fn enumeration_optimum(
    objective: &dyn Objective,
    squad: &Squad,
    formations: &[Formation],
) -> Option<(Lineup, f64)> {
    let mut best: Option<(Lineup, f64)> = None;
    for &f in formations {
        for l in enumerate_lineups(squad, f) {
            let v = objective.evaluate(&l).expect("objective evaluates");
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((l, v));
            }
        }
    }
    best
}

fn row_probs(theta: &[f64], row: &[f64]) -> (f64, f64, f64) {
    let q = row.len();
    let ew: f64 = theta[..q].iter().zip(row).map(|(b, x)| b * x).sum();
    let el: f64 = theta[q..].iter().zip(row).map(|(b, x)| b * x).sum();
    let m = ew.max(el).max(0.0);
    let (d, w, l) = ((-m).exp(), (ew - m).exp(), (el - m).exp());
    let s = d + w + l;
    (w / s, d / s, l / s)
}

fn log_likelihood(theta: &[f64], rows: &[Vec<f64>], y: &[Outcome]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(r, o)| {
            let (w, d, l) = row_probs(theta, r);
            match o {
                Outcome::Win => w.ln(),
                Outcome::Draw => d.ln(),
                Outcome::Loss => l.ln(),
            }
        })
        .sum()
}

/// Unpenalized draw-pivot multinomial logit by damped full Newton.
/// Returns `[win intercept, win slopes..., loss intercept, loss slopes...]`.
pub fn newton_mle(x: &DMatrix<f64>, y: &[Outcome]) -> Vec<f64> {
    let (n, m) = x.shape();
    let q = m + 1;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| std::iter::once(1.0).chain((0..m).map(|j| x[(i, j)])).collect())
        .collect();
    let mut theta = vec![0.0; 2 * q];
    let mut ll = log_likelihood(&theta, &rows, y);
    for _ in 0..200 {
        let mut g = DVector::<f64>::zeros(2 * q);
        let mut h = DMatrix::<f64>::zeros(2 * q, 2 * q);
        for (r, o) in rows.iter().zip(y) {
            let (pw, _, pl) = row_probs(&theta, r);
            let (yw, yl) = (
                f64::from(u8::from(*o == Outcome::Win)),
                f64::from(u8::from(*o == Outcome::Loss)),
            );
            for a in 0..q {
                g[a] += (yw - pw) * r[a];
                g[q + a] += (yl - pl) * r[a];
                for b in 0..q {
                    let rr = r[a] * r[b];
                    h[(a, b)] += pw * (1.0 - pw) * rr;
                    h[(q + a, q + b)] += pl * (1.0 - pl) * rr;
                    h[(a, q + b)] -= pw * pl * rr;
                    h[(q + a, b)] -= pw * pl * rr;
                }
            }
        }
        let step = h.lu().solve(&g).expect("information matrix is invertible");
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let cl = log_likelihood(&cand, &rows, y);
            if cl >= ll - 1e-12 || t < 1e-10 {
                theta = cand;
                ll = cl;
                break;
            }
            t *= 0.5;
        }
        if step.amax() * t < 1e-12 {
            break;
        }
    }
    theta
}

/// First principal component of the correlation matrix via a dense
/// symmetric eigensolver, sign-fixed (majority positive, ties by sum) and
/// rescaled to sum to one.
pub fn pca_weights(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let means = x.row_mean();
    let centered = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered;
    let sd: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    let corr = DMatrix::from_fn(p, p, |a, b| cov[(a, b)] / (sd[a] * sd[b]));
    let eig = SymmetricEigen::new(corr);
    let k = eig.eigenvalues.imax();
    let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let pos = v.iter().filter(|x| **x > 0.0).count();
    let neg = v.iter().filter(|x| **x < 0.0).count();
    if neg > pos || (neg == pos && v.iter().sum::<f64>() < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lineup_core::domain::{count_lineups, enumerate_formations, PlayerRecord, PositionCounts};

    fn squad(sizes: [usize; 4]) -> Squad {
        let mut players = Vec::new();
        for (p, &k) in Position::ALL.iter().zip(&sizes) {
            for i in 0..k {
                players.push(PlayerRecord::natural(format!("{}{i}", p.letter()), "x", *p));
            }
        }
        Squad::new("S", players, chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()).unwrap()
    }

    #[test]
    fn enumeration_agrees_with_closed_form() {
        let s = squad([2, 5, 5, 4]);
        for f in enumerate_formations() {
            let n = enumerate_lineups(&s, f).len() as u64;
            assert_eq!(Ok(n), count_lineups(PositionCounts::new(2, 5, 5, 4), f).map_err(|_| ()));
        }
    }

    #[test]
    fn pca_of_equicorrelated_block_is_uniform() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64;
                vec![t + (t * 1.3).sin(), t + (t * 2.1).sin(), t + (t * 0.7).sin()]
            })
            .collect();
        let w = pca_weights(&rows);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 0.01));
    }

    #[test]
    fn newton_recovers_saturated_frequencies() {
        // Intercept-only: fitted probabilities equal observed frequencies.
        let x = DMatrix::<f64>::zeros(6, 0);
        let y = [
            Outcome::Win,
            Outcome::Win,
            Outcome::Win,
            Outcome::Draw,
            Outcome::Loss,
            Outcome::Loss,
        ];
        let t = newton_mle(&x, &y);
        assert!((t[0] - 3f64.ln()).abs() < 1e-9);
        assert!((t[1] - 2f64.ln()).abs() < 1e-9);
    }
}
