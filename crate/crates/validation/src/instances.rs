use chrono::NaiveDate;
use lineup_core::domain::{Formation, Lineup, PlayerId, PlayerRecord, Position, Squad};
use lineup_core::features::{Combo, Feature, FeatureKind, FeatureSpec};
use lineup_core::model::{FittedModel, ModelContext};
use lineup_core::optimizer::{ModelObjective, ObjectiveKind};
use lineup_core::skills::{SkillTable, SkillVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 3, 1).expect("valid date")
}

/// Fewest players per natural position that can still field a standard
/// formation once extra eligibility is added.
pub const SMALLEST: [usize; 4] = [1, 3, 2, 1];

/// A random squad with between `min` and `max` players per natural position
/// and at least one feasible standard formation. Each outfield player picks
/// up a second outfield position with probability `extra`.
pub fn random_squad(rng: &mut impl Rng, min: [usize; 4], max: [usize; 4], extra: f64) -> Squad {
    loop {
        let mut players = Vec::new();
        for (k, &p) in Position::ALL.iter().enumerate() {
            let n = rng.gen_range(min[k]..=max[k].max(min[k]));
            for i in 0..n {
                let mut rec = PlayerRecord::natural(format!("{}{i}", p.letter()), format!("{p} {i}"), p);
                if p != Position::Goalkeeper && rng.gen_bool(extra) {
                    let other = *Position::OUTFIELD.choose(rng).expect("non-empty");
                    rec.eligible_positions.insert(other);
                }
                players.push(rec);
            }
        }
        let squad = Squad::new("TOY", players, day()).expect("unique ids");
        if !squad.feasible_formations().is_empty() {
            return squad;
        }
    }
}

fn eleven(prefix: &str, shape: Formation) -> Lineup {
    Lineup::new(
        Position::ALL
            .iter()
            .flat_map(|&p| (0..shape.count(p)).map(move |i| (PlayerId::new(format!("{prefix}-{}{i}", p.letter())), p))),
        shape,
    )
}

fn random_skills(rng: &mut impl Rng) -> SkillVector {
    SkillVector::new(
        rng.gen_range(30.0..90.0),
        rng.gen_range(30.0..90.0),
        rng.gen_range(30.0..90.0),
        rng.gen_range(30.0..90.0),
    )
}

/// A squad, a model with random coefficients including a few player
/// effects, skills for everyone involved and a fixed opponent eleven.
pub struct ToyInstance {
    pub squad: Squad,
    pub model: FittedModel,
    pub skills: SkillTable,
    pub opponent: Lineup,
    pub home: bool,
}

impl ToyInstance {
    pub fn random(rng: &mut impl Rng, min: [usize; 4], max: [usize; 4], extra: f64) -> Self {
        let squad = random_squad(rng, min, max, extra);
        let mut skills = SkillTable::default();
        for p in squad.players() {
            skills.insert(p.player_id.clone(), random_skills(rng));
        }
        let opponent = eleven("opp", Formation::new(4, 4, 2).expect("standard"));
        for s in opponent.slots() {
            skills.insert(s.player_id.clone(), random_skills(rng));
        }

        let mut spec = FeatureSpec::strengths_only("TOY");
        let combos: Vec<Combo> = squad
            .players()
            .iter()
            .flat_map(|p| {
                p.eligible_positions
                    .iter()
                    .map(|&pos| Combo::new(p.player_id.clone(), pos))
            })
            .collect();
        let picked: Vec<&Combo> = combos.choose_multiple(rng, 4).collect();
        for c in &picked[..3] {
            spec.features.push(Feature {
                name: format!("fx_{}_{}", c.player_id, c.position.letter()),
                kind: FeatureKind::FixedEffect { combo: (*c).clone() },
                forced: false,
            });
        }
        if picked.len() == 4 && picked[2].player_id != picked[3].player_id {
            spec.features.push(Feature {
                name: "pair".into(),
                kind: FeatureKind::PairEffect {
                    first: picked[2].clone(),
                    second: picked[3].clone(),
                },
                forced: false,
            });
        }

        let m = spec.len();
        let mut model = FittedModel::zero(spec, ModelContext::default());
        let intercept = Normal::new(0.0, 0.3).expect("valid sd");
        let slope = Normal::new(0.0, 0.05).expect("valid sd");
        let effect = Normal::new(0.0, 0.5).expect("valid sd");
        // Skills average 60, so centring there keeps probabilities away
        // from 0 and 1.
        for eq in [&mut model.coefficients.win, &mut model.coefficients.loss] {
            eq[0] = intercept.sample(rng);
            for j in 0..m {
                eq[j + 1] = match model.spec.features[j].kind {
                    FeatureKind::FixedEffect { .. } | FeatureKind::PairEffect { .. } => effect.sample(rng),
                    FeatureKind::Home => intercept.sample(rng),
                    _ => {
                        let b = slope.sample(rng);
                        eq[0] -= 60.0 * b;
                        b
                    }
                };
            }
        }
        model.selected = (0..m).collect();
        model.selected_names = model.spec.names().map(str::to_owned).collect();
        ToyInstance {
            squad,
            model,
            skills,
            opponent,
            home: rng.gen_bool(0.5),
        }
    }

    pub fn objective(&self, kind: ObjectiveKind) -> ModelObjective<'_> {
        ModelObjective::new(&self.model, kind, self.home, &self.opponent, &self.skills)
            .expect("skills cover the opponent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lineup_core::optimizer::Objective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn squads_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = random_squad(&mut rng, SMALLEST, [2, 5, 5, 4], 0.3);
            assert!(s.players().len() <= 16);
            assert!(!s.feasible_formations().is_empty());
        }
    }

    #[test]
    fn toy_objective_is_a_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = ToyInstance::random(&mut rng, SMALLEST, [2, 5, 5, 4], 0.3);
        let f = t.squad.feasible_formations()[0];
        let l = crate::oracles::enumerate_lineups(&t.squad, f).remove(0);
        let v = t.objective(ObjectiveKind::MaxWin).evaluate(&l).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }
}
