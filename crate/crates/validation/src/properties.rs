use std::collections::BTreeSet;

use crate::instances::{day, random_squad, SMALLEST};
use crate::oracles::enumerate_lineups;
use lineup_core::analytics::plus_minus;
use lineup_core::domain::{
    count_lineups, enumerate_formations, Formation, Lineup, PlayerId, PlayerRecord, Position, PositionCounts, Squad,
};
use lineup_core::ingestion::{AttributeSnapshot, DataStore, Outcome, ATTRIBUTE_COUNT};
use lineup_core::model::lasso::{fit_at, fit_lasso_path, ColumnRole, PathConfig};
use lineup_core::model::likelihood::{neg_log_likelihood, probs_from_eta, Coefficients};
use lineup_core::optimizer::{neighbors, optimize_lineup, random_feasible_lineup, OptimizerConfig};
use lineup_core::skills::{
    eligible_positions, leading_component, lineup_strengths, skills_from_snapshot, AggregationMode, SkillCategory,
    SkillVector, WeightSet,
};
use lineup_core::synth::{generate_league, LeagueConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn natural_squad(sizes: [usize; 4]) -> Squad {
    let players = Position::ALL
        .iter()
        .zip(sizes)
        .flat_map(|(&p, k)| (0..k).map(move |i| PlayerRecord::natural(format!("{}{i}", p.letter()), "x", p)))
        .collect();
    Squad::new("S", players, day()).unwrap()
}

fn outcome(k: u8) -> Outcome {
    [Outcome::Win, Outcome::Draw, Outcome::Loss][usize::from(k % 3)]
}

fn flip(o: Outcome) -> Outcome {
    match o {
        Outcome::Win => Outcome::Loss,
        Outcome::Draw => Outcome::Draw,
        Outcome::Loss => Outcome::Win,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_matches_enumeration(g in 1usize..=2, d in 0usize..=6, m in 0usize..=6, f in 0usize..=4) {
        let squad = natural_squad([g, d, m, f]);
        for formation in enumerate_formations() {
            let enumerated = enumerate_lineups(&squad, formation).len() as u64;
            match count_lineups(PositionCounts::new(g, d, m, f), formation) {
                Ok(counted) => prop_assert_eq!(counted, enumerated),
                Err(_) => prop_assert_eq!(enumerated, 0),
            }
        }
    }

    #[test]
    fn generated_lineups_are_valid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let squad = random_squad(&mut rng, SMALLEST, [3, 8, 8, 6], 0.3);
        let none = BTreeSet::new();
        for f in squad.feasible_formations() {
            let l = random_feasible_lineup(&squad, f, &mut rng, &none, &none).unwrap();
            prop_assert!(squad.validate_lineup(&l).is_ok());
            for n in neighbors(&l, &squad, &none, &none) {
                prop_assert!(squad.validate_lineup(&n).is_ok());
            }
        }
    }

    #[test]
    fn search_trace_respects_constraints(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let squad = random_squad(&mut rng, [1, 4, 4, 2], [3, 8, 8, 6], 0.3);
        let f = squad.feasible_formations()[0];
        let ids: Vec<PlayerId> = squad.players().iter().map(|p| p.player_id.clone()).collect();
        let base = random_feasible_lineup(&squad, f, &mut rng, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        let pinned: BTreeSet<PlayerId> = base.slots().iter().take(2).map(|s| s.player_id.clone()).collect();
        let excluded: BTreeSet<PlayerId> =
            ids.iter().filter(|p| !base.contains(p)).take(1).cloned().collect();
        let weights: Vec<f64> = (0..ids.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let objective = |l: &Lineup| -> lineup_core::Result<f64> {
            Ok(l.slots().iter().map(|s| weights[ids.iter().position(|p| *p == s.player_id).unwrap()]).sum::<f64>() + 0.1)
        };
        let cfg = OptimizerConfig { seed, pinned: pinned.clone(), excluded: excluded.clone(), ..OptimizerConfig::default() };
        let trace = optimize_lineup(&objective, &squad, f, &cfg, std::slice::from_ref(&base)).unwrap();
        let mut best = f64::NEG_INFINITY;
        for r in &trace.iterations {
            prop_assert!(squad.validate_lineup(&r.lineup).is_ok());
            prop_assert!(pinned.iter().all(|p| r.lineup.contains(p)));
            prop_assert!(!excluded.iter().any(|p| r.lineup.contains(p)));
            prop_assert!(r.best_so_far >= best);
            best = best.max(r.value);
            prop_assert_eq!(r.best_so_far, best);
        }
        prop_assert_eq!(trace.best_value, best);
        prop_assert!(trace.best_value >= objective(&base).unwrap());
    }

    #[test]
    fn weights_sum_to_one_and_loadings_are_eigenvectors(seed in any::<u64>(), p in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| {
                let f: f64 = rng.gen_range(-1.0..1.0);
                (0..p).map(|j| 50.0 + (5.0 + j as f64) * f + rng.gen_range(-4.0..4.0)).collect()
            })
            .collect();
        let names: Vec<String> = (0..p).map(|j| format!("a{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let lc = leading_component(&rows, &names).unwrap();
        prop_assert!((lc.weights.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        for (i, row) in lc.correlation.iter().enumerate() {
            let cv: f64 = row.iter().zip(&lc.loadings).map(|(a, b)| a * b).sum();
            prop_assert!((cv - lc.eigenvalue * lc.loadings[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn skills_are_linear_in_ratings(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> { (0..ATTRIBUTE_COUNT).map(|_| rng.gen_range(1.0..99.0)).collect() };
        let (r1, r2) = (draw(), draw());
        let mix: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let snap = |r: Vec<f64>| AttributeSnapshot::new(PlayerId::new("p"), day(), r);
        let w = WeightSet::published();
        let (s1, s2) = (skills_from_snapshot(&snap(r1).unwrap(), &w), skills_from_snapshot(&snap(r2).unwrap(), &w));
        // Mixed ratings may leave the 1..99 scale; build the snapshot directly.
        let s = skills_from_snapshot(&AttributeSnapshot { ratings: mix, ..snap(vec![50.0; ATTRIBUTE_COUNT]).unwrap() }, &w);
        for cat in SkillCategory::ALL {
            prop_assert!((s.get(cat) - (a * s1.get(cat) + b * s2.get(cat))).abs() < 1e-9);
        }
    }

    #[test]
    fn strengths_ignore_order_and_scale_with_duplication(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let squad = natural_squad([1, 5, 5, 3]);
        let f = Formation::new(4, 4, 2).unwrap();
        let l = random_feasible_lineup(&squad, f, &mut rng, &BTreeSet::new(), &BTreeSet::new()).unwrap();
        let skills: std::collections::BTreeMap<PlayerId, SkillVector> = squad
            .players()
            .iter()
            .map(|p| (p.player_id.clone(), SkillVector::new(rng.gen(), rng.gen(), rng.gen(), rng.gen())))
            .collect();
        let base = |p: &PlayerId| Ok(skills[&PlayerId::new(p.as_str().trim_end_matches('\''))]);
        let mut slots: Vec<(PlayerId, Position)> = l.slots().iter().map(|s| (s.player_id.clone(), s.position)).collect();
        let original = lineup_strengths(&l, base, AggregationMode::Mean).unwrap();
        slots.reverse();
        let shuffled = Lineup::from_assignments(slots.clone());
        prop_assert_eq!(lineup_strengths(&shuffled, base, AggregationMode::Mean).unwrap().values, original.values);

        let doubled = Lineup::from_assignments(
            slots.iter().cloned().chain(slots.iter().map(|(p, pos)| (PlayerId::new(format!("{p}'")), *pos))),
        );
        let single = lineup_strengths(&l, base, AggregationMode::Sum).unwrap();
        let double = lineup_strengths(&doubled, base, AggregationMode::Sum).unwrap();
        for k in 0..10 {
            prop_assert!((double.values[k] - 2.0 * single.values[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn eligibility_keeps_the_natural_position(g in 0.0f64..99.0, d in 0.0f64..99.0, a in 0.0f64..99.0, n in 0.0f64..99.0, k in 0usize..4) {
        let rec = PlayerRecord::natural("p", "p", Position::ALL[k]);
        let set = eligible_positions(&rec, &SkillVector::new(g, d, a, n));
        prop_assert!(set.contains(&Position::ALL[k]));
    }

    #[test]
    fn probabilities_are_a_monotone_simplex(w in -30.0f64..30.0, l in -30.0f64..30.0, dw in 0.01f64..5.0) {
        let p = probs_from_eta(w, l);
        prop_assert!((p.win + p.draw + p.loss - 1.0).abs() < 1e-12);
        prop_assert!([p.win, p.draw, p.loss].iter().all(|v| *v > 0.0 && *v < 1.0));
        prop_assert!(probs_from_eta(w + dw, l).win > p.win);
        prop_assert!(probs_from_eta(w, l + dw).loss > p.loss);
    }

    #[test]
    fn label_swap_leaves_likelihood_unchanged(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(30, 4, |_, _| rng.gen_range(-2.0..2.0));
        let y: Vec<Outcome> = (0..30).map(|_| outcome(rng.gen())).collect();
        let c = Coefficients { win: (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect(), loss: (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let swapped = Coefficients { win: c.loss.clone(), loss: c.win.clone() };
        let flipped: Vec<Outcome> = y.iter().copied().map(flip).collect();
        let a = neg_log_likelihood(&c, &x, &y);
        prop_assert!((a - neg_log_likelihood(&swapped, &x, &flipped)).abs() < 1e-9 * a.max(1.0));
    }

    #[test]
    fn plus_minus_negates_with_perspective(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<PlayerId> = (0..6).map(|i| PlayerId::new(format!("p{i}"))).collect();
        let rows: Vec<(BTreeSet<PlayerId>, f64)> = (0..12)
            .map(|_| (ids.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect(), f64::from(rng.gen_range(-3i8..=3))))
            .collect();
        let negated: Vec<_> = rows.iter().map(|(s, g)| (s.clone(), -g)).collect();
        for (a, b) in plus_minus(&rows).iter().zip(plus_minus(&negated)) {
            prop_assert_eq!(a.rating.map(|r| -r), b.rating);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn warm_and_cold_starts_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(120, 5, |_, _| rng.gen_range(-1.0..1.0));
        let y: Vec<Outcome> = (0..120)
            .map(|i| {
                let p = probs_from_eta(x[(i, 0)] - 0.5 * x[(i, 1)], 0.8 * x[(i, 2)]);
                let u: f64 = rng.gen();
                if u < p.win { Outcome::Win } else if u < p.win + p.draw { Outcome::Draw } else { Outcome::Loss }
            })
            .collect();
        let roles = [ColumnRole::Free, ColumnRole::Penalized, ColumnRole::Penalized, ColumnRole::Penalized, ColumnRole::Penalized];
        let cfg = PathConfig { n_lambda: 12, ..PathConfig::default() };
        let path = fit_lasso_path(&x, &y, &roles, &cfg).unwrap();
        for p in &path.points {
            prop_assert!(p.active.contains(&0));
            let cold = fit_at(&x, &y, &roles, p.lambda, &cfg).unwrap();
            prop_assert!((cold.objective - p.objective).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_round_trip(seed in 0u64..1000) {
        let league = generate_league(&LeagueConfig { teams: 4, seasons: 1, seed, ..LeagueConfig::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        league.store.write_dir(dir.path()).unwrap();
        let back = DataStore::load_dir(dir.path()).unwrap();
        prop_assert!(league.store.players().eq(back.players()));
        prop_assert!(league.store.snapshots().eq(back.snapshots()));
        prop_assert_eq!(league.store.matches(), back.matches());
    }
}

#[test]
fn formations_match_the_constraint_predicate() {
    let brute: Vec<Formation> = (0u8..=10)
        .flat_map(|d| (0u8..=10 - d).map(move |m| (d, m, 10 - d - m)))
        .filter(|&(d, m, f)| (3..=5).contains(&d) && m <= 5 && (1..=3).contains(&f))
        .map(|(d, m, f)| Formation::new(d, m, f).unwrap())
        .collect();
    assert_eq!(enumerate_formations(), brute);
    assert_eq!(enumerate_formations(), enumerate_formations());
}
