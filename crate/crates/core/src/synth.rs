//! Synthetic leagues generated from known coefficients, for testing and
//! demos.
//!
//! Each match's outcome comes from a symmetric logit: with `D` the sum of
//! the generating strength effects applied to (home − away) measures plus
//! any team-specific player effects, the home side's win and loss
//! predictors are `base + home + D` and `base − home − D`. Seen from one
//! team, this is the three-outcome model with win coefficient `+b` and loss
//! coefficient `−b` on every own measure (opposite signs on the opponent's).

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{enumerate_formations, Formation, Lineup, PlayerId, PlayerRecord, Position};
use crate::error::Result;
use crate::features::Combo;
use crate::ingestion::{AttributeSnapshot, DataStore, MatchRecord, RosterEntry, ATTRIBUTE_COUNT};
use crate::model::probs_from_eta;
use crate::skills::{
    lineup_strengths, skills_from_snapshot, AggregationMode, SkillCategory, WeightSet, STRENGTH_NAMES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerEffect {
    pub team: String,
    pub combo: Combo,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEffectTruth {
    pub team: String,
    pub first: Combo,
    pub second: Combo,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeagueConfig {
    pub teams: usize,
    pub seasons: usize,
    pub first_season: i32,
    /// Squad composition per position.
    pub squad: [usize; 4],
    /// Spread of team quality, in rating points.
    pub team_sd: f64,
    /// Spread of player ability within a team, in rating points.
    pub player_sd: f64,
    /// Generating effect per rating point of (own − opponent) measure,
    /// indexed like the strength measures.
    pub strength_effects: [f64; 10],
    pub home_advantage: f64,
    pub base: f64,
    /// Chance a team's designated regulars start.
    pub regular_rate: f64,
    /// Chance a team lines up in its preferred formation.
    pub preferred_rate: f64,
    /// Player and pair effects for the first team, added to its side of `D`.
    pub fixed_effects: Vec<(usize, usize, f64)>,
    pub pair_effects: Vec<((usize, usize), (usize, usize), f64)>,
    pub seed: u64,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        let mut strength_effects = [0.0; 10];
        strength_effects[0] = 0.1;
        strength_effects[8] = 0.1;
        LeagueConfig {
            teams: 20,
            seasons: 2,
            first_season: 2020,
            squad: [3, 8, 8, 6],
            team_sd: 2.0,
            player_sd: 15.0,
            strength_effects,
            home_advantage: 0.2,
            base: -0.5,
            regular_rate: 0.85,
            preferred_rate: 0.7,
            fixed_effects: Vec::new(),
            pair_effects: Vec::new(),
            seed: 1,
        }
    }
}

impl LeagueConfig {
    /// Twenty seasons with stronger generating effects and more rotation:
    /// enough matches per team for every strength coefficient to be
    /// estimated well away from zero.
    pub fn long_history() -> Self {
        let mut strength_effects = [0.0; 10];
        strength_effects[0] = 0.2;
        strength_effects[8] = 0.2;
        LeagueConfig {
            seasons: 20,
            strength_effects,
            regular_rate: 0.5,
            ..LeagueConfig::default()
        }
    }

    /// Adds a fixed effect for the first team's regular forward and a pair
    /// effect for its regular defender and midfielder, rotating the
    /// regulars more so their absences are informative.
    pub fn with_player_effects(mut self) -> Self {
        // (group index, member index within the position group)
        self.fixed_effects = vec![(3, 0, 1.0)];
        self.pair_effects = vec![((1, 0), (2, 0), 1.0)];
        self.regular_rate = 0.7;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub strength_effects: [f64; 10],
    pub home_advantage: f64,
    pub base: f64,
    pub fixed_effects: Vec<PlayerEffect>,
    pub pair_effects: Vec<PairEffectTruth>,
}

impl Truth {
    /// Nonzero generating coefficients of one team's model as
    /// `(feature name, win coefficient, loss coefficient)`.
    pub fn strength_coefficients(&self) -> Vec<(String, f64, f64)> {
        let mut out = Vec::new();
        for (k, &b) in self.strength_effects.iter().enumerate() {
            if b != 0.0 {
                out.push((format!("own_{}", STRENGTH_NAMES[k]), b, -b));
                out.push((format!("opp_{}", STRENGTH_NAMES[k]), -b, b));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticLeague {
    pub store: DataStore,
    pub truth: Truth,
    pub teams: Vec<String>,
    pub weights: WeightSet,
}

fn team_id(t: usize) -> String {
    format!("T{:02}", t + 1)
}

fn player_id(t: usize, pos: Position, k: usize) -> PlayerId {
    PlayerId::new(format!("{}{}{:02}", team_id(t), pos.letter(), k + 1))
}

fn clamp_rating(v: f64) -> f64 {
    v.round().clamp(1.0, 99.0)
}

/// Ratings with the position's key category around `level`; the other
/// categories get their own independent levels, lower on average.
fn ratings(pos: Position, level: f64, rng: &mut impl Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, 2.0).expect("valid sd");
    let side = Normal::new(50.0, 8.0).expect("valid sd");
    let key = match pos {
        Position::Goalkeeper => SkillCategory::Goalkeeping,
        Position::Defender => SkillCategory::Defensive,
        Position::Midfielder => SkillCategory::General,
        Position::Forward => SkillCategory::Attacking,
    };
    let mut out = vec![0.0; ATTRIBUTE_COUNT];
    for cat in SkillCategory::ALL {
        let centre = if cat == key {
            level
        } else if pos == Position::Goalkeeper || cat == SkillCategory::Goalkeeping {
            15.0
        } else {
            side.sample(rng)
        };
        for i in 0..cat.attributes().len() {
            out[cat.offset() + i] = clamp_rating(centre + noise.sample(rng));
        }
    }
    out
}

/// Double round robin by the circle method: `(home, away)` per round.
fn fixtures(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut first = Vec::new();
    for r in 0..n - 1 {
        let mut round = Vec::new();
        for i in 0..n / 2 {
            let (a, b) = (idx[i], idx[n - 1 - i]);
            round.push(if (r + i) % 2 == 0 { (a, b) } else { (b, a) });
        }
        first.push(round);
        idx[1..].rotate_right(1);
    }
    let second: Vec<Vec<(usize, usize)>> = first
        .iter()
        .map(|round| round.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    first.into_iter().chain(second).collect()
}

struct TeamState {
    preferred: Formation,
}

fn pick_lineup(
    t: usize,
    cfg: &LeagueConfig,
    state: &TeamState,
    formations: &[Formation],
    rng: &mut impl Rng,
) -> Lineup {
    let formation = if rng.gen_bool(cfg.preferred_rate) {
        state.preferred
    } else {
        *formations.choose(rng).expect("eight formations")
    };
    let mut assignment = Vec::with_capacity(11);
    for pos in Position::ALL {
        let need = formation.count(pos);
        let mut pool: Vec<usize> = (0..cfg.squad[pos.index()]).collect();
        let mut chosen = Vec::with_capacity(need);
        // The first member of each outfield group is a regular.
        if pos != Position::Goalkeeper && need > 0 && rng.gen_bool(cfg.regular_rate) {
            chosen.push(0);
            pool.retain(|&k| k != 0);
        }
        pool.shuffle(rng);
        chosen.extend(pool.into_iter().take(need - chosen.len()));
        assignment.extend(chosen.into_iter().map(|k| (player_id(t, pos, k), pos)));
    }
    Lineup::new(assignment, formation)
}

fn goals(outcome: crate::ingestion::Outcome, rng: &mut impl Rng) -> (u32, u32) {
    use crate::ingestion::Outcome;
    match outcome {
        Outcome::Draw => {
            let g = rng.gen_range(0..=2);
            (g, g)
        }
        Outcome::Win => {
            let w = rng.gen_range(1..=3);
            (w, rng.gen_range(0..w))
        }
        Outcome::Loss => {
            let w = rng.gen_range(1..=3);
            (rng.gen_range(0..w), w)
        }
    }
}

pub fn generate_league(cfg: &LeagueConfig) -> Result<SyntheticLeague> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights = WeightSet::published();
    let formations = enumerate_formations();
    let team_quality = Normal::new(70.0, cfg.team_sd.max(1e-9)).expect("valid sd");
    let spread = Normal::new(0.0, cfg.player_sd.max(1e-9)).expect("valid sd");
    let drift = Normal::new(0.0, 1.0).expect("valid sd");

    let mut players = Vec::new();
    let mut snapshots = Vec::new();
    let mut rosters = Vec::new();
    let mut states = Vec::new();
    let mut levels: BTreeMap<PlayerId, f64> = BTreeMap::new();
    let season_start = |s: usize| NaiveDate::from_ymd_opt(cfg.first_season + s as i32, 8, 1).expect("valid date");
    let season_label = |s: usize| format!("{}/{}", cfg.first_season + s as i32, cfg.first_season + s as i32 + 1);
    for t in 0..cfg.teams {
        let q = team_quality.sample(&mut rng);
        for pos in Position::ALL {
            for k in 0..cfg.squad[pos.index()] {
                let id = player_id(t, pos, k);
                players.push(PlayerRecord::natural(
                    id.clone(),
                    format!("Player {} {}{}", team_id(t), pos.letter(), k + 1),
                    pos,
                ));
                levels.insert(id.clone(), (q + spread.sample(&mut rng)).clamp(35.0, 95.0));
                for s in 0..cfg.seasons {
                    rosters.push(RosterEntry {
                        team_id: team_id(t),
                        season: season_label(s),
                        player_id: id.clone(),
                    });
                }
            }
        }
        states.push(TeamState {
            preferred: *formations.choose(&mut rng).expect("eight formations"),
        });
    }
    for s in 0..cfg.seasons {
        for (id, level) in levels.iter_mut() {
            if s > 0 {
                *level += drift.sample(&mut rng);
            }
            let pos = players
                .iter()
                .find(|p: &&PlayerRecord| &p.player_id == id)
                .expect("player exists")
                .natural_position;
            snapshots.push(AttributeSnapshot::new(
                id.clone(),
                season_start(s),
                ratings(pos, *level, &mut rng),
            )?);
        }
    }
    let snapshot_skills: BTreeMap<(PlayerId, usize), crate::skills::SkillVector> = snapshots
        .iter()
        .map(|snap| {
            let s = (snap.snapshot_date.year() - cfg.first_season) as usize;
            ((snap.player_id.clone(), s), skills_from_snapshot(snap, &weights))
        })
        .collect();

    let ref_team = team_id(0);
    let combo = |(g, k): (usize, usize)| Combo::new(player_id(0, Position::ALL[g], k), Position::ALL[g]);
    let truth = Truth {
        strength_effects: cfg.strength_effects,
        home_advantage: cfg.home_advantage,
        base: cfg.base,
        fixed_effects: cfg
            .fixed_effects
            .iter()
            .map(|&(g, k, e)| PlayerEffect {
                team: ref_team.clone(),
                combo: combo((g, k)),
                effect: e,
            })
            .collect(),
        pair_effects: cfg
            .pair_effects
            .iter()
            .map(|&(a, b, e)| PairEffectTruth {
                team: ref_team.clone(),
                first: combo(a),
                second: combo(b),
                effect: e,
            })
            .collect(),
    };
    let player_bonus = |t: usize, lineup: &Lineup| -> f64 {
        if t != 0 {
            return 0.0;
        }
        let has = |c: &Combo| lineup.position_of(&c.player_id) == Some(c.position);
        truth
            .fixed_effects
            .iter()
            .filter(|f| has(&f.combo))
            .map(|f| f.effect)
            .sum::<f64>()
            + truth
                .pair_effects
                .iter()
                .filter(|p| has(&p.first) && has(&p.second))
                .map(|p| p.effect)
                .sum::<f64>()
    };

    let mut matches = Vec::new();
    let rounds = fixtures(cfg.teams);
    for s in 0..cfg.seasons {
        for (r, round) in rounds.iter().enumerate() {
            let date = season_start(s) + Duration::days(7 * (r as i64 + 1));
            for (k, &(h, a)) in round.iter().enumerate() {
                let hl = pick_lineup(h, cfg, &states[h], &formations, &mut rng);
                let al = pick_lineup(a, cfg, &states[a], &formations, &mut rng);
                let lookup = |p: &PlayerId| Ok(snapshot_skills[&(p.clone(), s)]);
                let hs = lineup_strengths(&hl, lookup, AggregationMode::Mean)?;
                let as_ = lineup_strengths(&al, lookup, AggregationMode::Mean)?;
                let d: f64 = (0..10)
                    .map(|m| cfg.strength_effects[m] * (hs.values[m] - as_.values[m]))
                    .sum::<f64>()
                    + player_bonus(h, &hl)
                    - player_bonus(a, &al);
                let p = probs_from_eta(cfg.base + cfg.home_advantage + d, cfg.base - cfg.home_advantage - d);
                let u: f64 = rng.gen();
                let outcome = if u < p.win {
                    crate::ingestion::Outcome::Win
                } else if u < p.win + p.draw {
                    crate::ingestion::Outcome::Draw
                } else {
                    crate::ingestion::Outcome::Loss
                };
                let (hg, ag) = goals(outcome, &mut rng);
                matches.push(MatchRecord {
                    match_id: format!("S{}R{:02}M{:02}", s + 1, r + 1, k + 1),
                    date,
                    season: season_label(s),
                    home_team_id: team_id(h),
                    away_team_id: team_id(a),
                    home_goals: hg,
                    away_goals: ag,
                    home_lineup: hl,
                    away_lineup: al,
                });
            }
        }
    }
    let mut store = DataStore::new(players, snapshots, matches)?;
    store.set_rosters(rosters)?;
    Ok(SyntheticLeague {
        store,
        truth,
        teams: (0..cfg.teams).map(team_id).collect(),
        weights,
    })
}
