//! Recursive test-period evaluation, selection efficiency, outcome tallies,
//! and the comparison models (plain strengths-only logit; plus-minus).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::domain::{Lineup, PlayerId, Position, Squad};
use crate::error::{Error, Result};
use crate::features::{DesignMatrix, Feature, FeatureKind, FeatureSpec, RowMeta};
use crate::ingestion::{DataStore, Outcome, TeamView};
use crate::model::{aic, refit_and_assess, sup_log_likelihood, FittedModel, ModelContext};
use crate::optimizer::{
    best_rated_lineup, opponent_assumption, optimize_over_formations, ModelObjective, Objective, ObjectiveKind,
    OpponentAssumption, OptimizerConfig, SearchTrace,
};
use crate::pipeline::{fit_matrix, fit_team_model, squad_from_pool, team_design, training_views, FitConfig};
use crate::skills::{SkillTable, WeightSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefitFrequency {
    #[default]
    PerMatch,
    PerGameweek,
    Once,
}

impl std::str::FromStr for RefitFrequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-match" => Ok(RefitFrequency::PerMatch),
            "per-gameweek" => Ok(RefitFrequency::PerGameweek),
            "once" => Ok(RefitFrequency::Once),
            _ => Err(Error::Validation(format!("unknown refit frequency `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    pub fit: FitConfig,
    pub optimizer: OptimizerConfig,
    pub objective: ObjectiveKind,
    pub opponent: OpponentAssumption,
    pub refit: RefitFrequency,
    /// Train on matches before this date for every test match.
    pub frozen_until: Option<NaiveDate>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            fit: FitConfig::default(),
            optimizer: OptimizerConfig::default(),
            objective: ObjectiveKind::MaxWin,
            opponent: OpponentAssumption::BestRated,
            refit: RefitFrequency::PerMatch,
            frozen_until: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub match_id: String,
    pub date: NaiveDate,
    pub opponent: String,
    pub home: bool,
    pub actual_prob: Option<f64>,
    pub optimal_prob: Option<f64>,
    pub ratio: Option<f64>,
    pub actual_lineup: Lineup,
    pub optimal_lineup: Option<Lineup>,
    /// Why the record could not be computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Actual-vs-optimal comparison on one fixture: the fielded lineup is
/// injected as a start, together with any `extra` lineups, and the search
/// always covers the fielded formation so the ratio cannot exceed one.
pub fn lineup_efficiency(
    objective: &dyn Objective,
    squad: &Squad,
    actual: &Lineup,
    config: &OptimizerConfig,
    extra: &[Lineup],
) -> Result<(f64, SearchTrace)> {
    let actual_value = objective.evaluate(actual)?;
    let mut cfg = config.clone();
    if cfg.formations.is_empty() {
        cfg.formations = vec![actual.formation()];
    } else if !cfg.formations.contains(&actual.formation()) {
        cfg.formations.push(actual.formation());
    }
    let mut inject = vec![actual.clone()];
    inject.extend(extra.iter().cloned());
    let trace = optimize_over_formations(objective, squad, &cfg, &inject)?;
    if !(trace.best_value > 0.0) {
        return Err(Error::Numerical(format!(
            "optimal objective {} is not positive",
            trace.best_value
        )));
    }
    Ok((actual_value, trace))
}

/// Squad for `team` on the day of `view`, widened by the fielded lineup
/// and made eligible at the recorded positions.
fn fixture_squad(
    store: &DataStore,
    team: &str,
    view: &TeamView<'_>,
    weights: &WeightSet,
) -> Result<(Squad, SkillTable)> {
    let date = view.record.date;
    let mut pool = store.season_pool(team, &view.record.season);
    pool.extend(view.own_lineup().slots().iter().map(|s| s.player_id.clone()));
    let (mut squad, skills) = squad_from_pool(store, team, &pool, date, weights)?;
    for s in view.own_lineup().slots() {
        squad.grant_eligibility(&s.player_id, s.position)?;
    }
    Ok((squad, skills))
}

pub fn evaluate_fixture(
    store: &DataStore,
    team: &str,
    view: &TeamView<'_>,
    model: &FittedModel,
    cfg: &EvaluateConfig,
) -> Result<EfficiencyRecord> {
    let date = view.record.date;
    let weights = &model.weights;
    let (squad, mut skills) = fixture_squad(store, team, view, weights)?;
    let opp_team = view.opponent();
    let opp_pool = store.season_pool(opp_team, &view.record.season);
    let (opp_squad, opp_skills) = squad_from_pool(store, opp_team, &opp_pool, date, weights)?;
    let opp_lineup = opponent_assumption(cfg.opponent, store, opp_team, date, &opp_squad, &opp_skills)?;
    for (p, s) in opp_skills.0 {
        skills.0.entry(p).or_insert(s);
    }
    let resolver = crate::skills::SkillResolver::new(store, weights);
    for slot in opp_lineup.slots() {
        if !skills.0.contains_key(&slot.player_id) {
            skills.insert(slot.player_id.clone(), resolver.player_skills(&slot.player_id, date)?);
        }
    }
    let objective = ModelObjective::new(model, cfg.objective, view.home, &opp_lineup, &skills)?;
    let actual = view.own_lineup();
    let extra: Vec<Lineup> = best_rated_lineup(&squad, actual.formation(), &skills)
        .into_iter()
        .collect();
    let (actual_value, trace) = lineup_efficiency(&objective, &squad, actual, &cfg.optimizer, &extra)?;
    Ok(EfficiencyRecord {
        match_id: view.record.match_id.clone(),
        date,
        opponent: opp_team.to_owned(),
        home: view.home,
        actual_prob: Some(actual_value),
        optimal_prob: Some(trace.best_value),
        ratio: Some(actual_value / trace.best_value),
        actual_lineup: actual.clone(),
        optimal_lineup: Some(trace.best_lineup),
        error: None,
    })
}

fn training_cutoff(date: NaiveDate, cfg: &EvaluateConfig, first: NaiveDate) -> NaiveDate {
    if let Some(f) = cfg.frozen_until {
        return f;
    }
    match cfg.refit {
        RefitFrequency::PerMatch => date,
        RefitFrequency::Once => first,
        RefitFrequency::PerGameweek => {
            // Monday of the match's ISO week.
            date - chrono::Duration::days(date.weekday().num_days_from_monday() as i64)
        }
    }
}

/// Evaluates each test match (in date order) with a model trained on the
/// matches before its cutoff.
pub fn recursive_evaluate(
    store: &DataStore,
    team: &str,
    test_from: NaiveDate,
    test_until: Option<NaiveDate>,
    weights: &WeightSet,
    cfg: &EvaluateConfig,
) -> Result<Vec<EfficiencyRecord>> {
    let tests: Vec<TeamView<'_>> = store
        .team_matches(team)
        .filter(|v| v.record.date >= test_from && test_until.is_none_or(|u| v.record.date <= u))
        .collect();
    let Some(first) = tests.first().map(|v| v.record.date) else {
        return Ok(Vec::new());
    };
    let cutoffs: Vec<NaiveDate> = tests
        .iter()
        .map(|v| training_cutoff(v.record.date, cfg, first))
        .collect();
    let distinct: BTreeSet<NaiveDate> = cutoffs.iter().copied().collect();
    let models: BTreeMap<NaiveDate, std::result::Result<FittedModel, String>> = distinct
        .into_par_iter()
        .map(|c| {
            let m = fit_team_model(store, team, Some(c), weights, &cfg.fit).map(|o| o.model);
            (c, m.map_err(|e| e.to_string()))
        })
        .collect();
    let records = tests
        .par_iter()
        .zip(cutoffs.par_iter())
        .map(|(view, cutoff)| {
            let result = match &models[cutoff] {
                Ok(model) => evaluate_fixture(store, team, view, model, cfg).map_err(|e| e.to_string()),
                Err(e) => Err(format!("fit failed: {e}")),
            };
            result.unwrap_or_else(|error| failed_record(team, view, error))
        })
        .collect();
    Ok(records)
}

fn failed_record(team: &str, view: &TeamView<'_>, error: String) -> EfficiencyRecord {
    warn!(team, match_id = %view.record.match_id, "{error}");
    EfficiencyRecord {
        match_id: view.record.match_id.clone(),
        date: view.record.date,
        opponent: view.opponent().to_owned(),
        home: view.home,
        actual_prob: None,
        optimal_prob: None,
        ratio: None,
        actual_lineup: view.own_lineup().clone(),
        optimal_lineup: None,
        error: Some(error),
    }
}

/// Efficiency of the model's team over `[from, until]` with one fixed model.
pub fn evaluate_with_model(
    store: &DataStore,
    model: &FittedModel,
    from: Option<NaiveDate>,
    until: Option<NaiveDate>,
    cfg: &EvaluateConfig,
) -> Vec<EfficiencyRecord> {
    let team = model.team_id.as_str();
    let tests: Vec<TeamView<'_>> = store
        .team_matches(team)
        .filter(|v| from.is_none_or(|f| v.record.date >= f) && until.is_none_or(|u| v.record.date <= u))
        .collect();
    tests
        .par_iter()
        .map(|view| {
            evaluate_fixture(store, team, view, model, cfg).unwrap_or_else(|e| failed_record(team, view, e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
}

/// Five-number description of a ratio series; `sd` uses `n - 1`.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Contract("cannot summarize an empty series".into()));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(Summary {
        n,
        min: sorted[0],
        max: sorted[n - 1],
        mean,
        sd,
        median,
    })
}

pub fn efficiency_summary(records: &[EfficiencyRecord]) -> Result<Summary> {
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    summarize(&ratios)
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[EfficiencyRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Io(e.into()))?;
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record([
        "match_id",
        "date",
        "opponent",
        "home",
        "actual_prob",
        "optimal_prob",
        "ratio",
        "error",
    ])
    .map_err(io)?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in records {
        w.write_record([
            r.match_id.clone(),
            r.date.to_string(),
            r.opponent.clone(),
            u8::from(r.home).to_string(),
            num(r.actual_prob),
            num(r.optimal_prob),
            num(r.ratio),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VenueSummary {
    pub n: usize,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub win_pct: f64,
    pub draw_pct: f64,
    pub loss_pct: f64,
}

impl VenueSummary {
    fn add(&mut self, o: Outcome) {
        self.n += 1;
        match o {
            Outcome::Win => self.wins += 1,
            Outcome::Draw => self.draws += 1,
            Outcome::Loss => self.losses += 1,
        }
    }

    fn finish(mut self) -> Self {
        let pct = |k: usize| {
            if self.n == 0 {
                0.0
            } else {
                (1000.0 * k as f64 / self.n as f64).round() / 10.0
            }
        };
        self.win_pct = pct(self.wins);
        self.draw_pct = pct(self.draws);
        self.loss_pct = pct(self.losses);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub overall: VenueSummary,
    pub home: VenueSummary,
    pub away: VenueSummary,
}

pub fn outcome_summary<'a>(views: impl IntoIterator<Item = TeamView<'a>>) -> OutcomeSummary {
    let mut s = OutcomeSummary::default();
    for v in views {
        s.overall.add(v.outcome());
        if v.home {
            s.home.add(v.outcome());
        } else {
            s.away.add(v.outcome());
        }
    }
    OutcomeSummary {
        overall: s.overall.finish(),
        home: s.home.finish(),
        away: s.away.finish(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlusMinusRating {
    pub player_id: PlayerId,
    /// `None` when the player was never absent (or never present).
    pub rating: Option<f64>,
    pub matches_in: usize,
    pub matches_out: usize,
}

/// Mean goal difference with the player fielded minus without, over
/// `(fielded players, goal difference)` rows.
pub fn plus_minus(rows: &[(BTreeSet<PlayerId>, f64)]) -> Vec<PlusMinusRating> {
    let players: BTreeSet<&PlayerId> = rows.iter().flat_map(|(s, _)| s.iter()).collect();
    let total: f64 = rows.iter().map(|(_, g)| g).sum();
    players
        .into_iter()
        .map(|p| {
            let (n_in, sum_in) = rows
                .iter()
                .filter(|(s, _)| s.contains(p))
                .fold((0usize, 0.0), |(n, t), (_, g)| (n + 1, t + g));
            let n_out = rows.len() - n_in;
            let rating = (n_in > 0 && n_out > 0).then(|| sum_in / n_in as f64 - (total - sum_in) / n_out as f64);
            PlusMinusRating {
                player_id: p.clone(),
                rating,
                matches_in: n_in,
                matches_out: n_out,
            }
        })
        .collect()
}

pub fn plus_minus_ratings<'a>(views: impl IntoIterator<Item = TeamView<'a>>) -> Vec<PlusMinusRating> {
    let rows: Vec<(BTreeSet<PlayerId>, f64)> = views
        .into_iter()
        .map(|v| {
            (
                v.own_lineup().slots().iter().map(|s| s.player_id.clone()).collect(),
                v.goal_difference(),
            )
        })
        .collect();
    plus_minus(&rows)
}

/// Per-position average rating of a lineup; undefined ratings count as 0.
/// Returns the averages and the number of imputed players.
pub fn group_ratings(lineup: &Lineup, ratings: &BTreeMap<PlayerId, Option<f64>>) -> ([f64; 4], usize) {
    let mut sum = [0.0; 4];
    let mut n = [0usize; 4];
    let mut imputed = 0;
    for s in lineup.slots() {
        let r = ratings.get(&s.player_id).copied().flatten();
        if r.is_none() {
            imputed += 1;
        }
        sum[s.position.index()] += r.unwrap_or(0.0);
        n[s.position.index()] += 1;
    }
    let mut avg = [0.0; 4];
    for g in 0..4 {
        if n[g] > 0 {
            avg[g] = sum[g] / n[g] as f64;
        }
    }
    (avg, imputed)
}

#[derive(Debug, Clone)]
pub struct PlusMinusFit {
    pub model: FittedModel,
    pub imputed: usize,
}

/// The comparison model built on plus-minus ratings: home, own and
/// opponent group-average ratings (forced), and the team's pair effects,
/// through the same selection and refit as the main model.
pub fn fit_plus_minus_model(
    store: &DataStore,
    team: &str,
    until: Option<NaiveDate>,
    weights: &WeightSet,
    cfg: &FitConfig,
) -> Result<PlusMinusFit> {
    let views = training_views(store, team, until);
    if views.is_empty() {
        return Err(Error::History(format!("{team} has no matches in the training window")));
    }
    let to_map = |r: Vec<PlusMinusRating>| -> BTreeMap<PlayerId, Option<f64>> {
        r.into_iter().map(|p| (p.player_id, p.rating)).collect()
    };
    let own_ratings = to_map(plus_minus_ratings(views.iter().copied()));
    let mut opp_ratings: BTreeMap<String, BTreeMap<PlayerId, Option<f64>>> = BTreeMap::new();
    for v in &views {
        let o = v.opponent();
        if !opp_ratings.contains_key(o) {
            opp_ratings.insert(
                o.to_owned(),
                to_map(plus_minus_ratings(training_views(store, o, until))),
            );
        }
    }

    let pairs = crate::pipeline::team_feature_spec(
        team,
        &views,
        &FitConfig {
            fixed_effects: false,
            ..cfg.clone()
        },
    );
    let mut features = vec![Feature {
        name: "home".into(),
        kind: FeatureKind::Home,
        forced: false,
    }];
    for (side, own) in [("own", true), ("opp", false)] {
        for p in Position::ALL {
            features.push(Feature {
                name: format!("{side}_pm_{}", p.code().to_lowercase()),
                kind: if own {
                    FeatureKind::RatingOwn { position: p }
                } else {
                    FeatureKind::RatingOpp { position: p }
                },
                forced: true,
            });
        }
    }
    features.extend(
        pairs
            .features
            .into_iter()
            .filter(|f| matches!(f.kind, FeatureKind::PairEffect { .. })),
    );
    let spec = FeatureSpec {
        team_id: team.to_owned(),
        features,
    };

    let mut imputed = 0;
    let mut rows = Vec::with_capacity(views.len());
    for v in &views {
        let (own, a) = group_ratings(v.own_lineup(), &own_ratings);
        let (opp, b) = group_ratings(v.opponent_lineup(), &opp_ratings[v.opponent()]);
        imputed += a + b;
        let combos: BTreeSet<(PlayerId, Position)> = v
            .own_lineup()
            .slots()
            .iter()
            .map(|s| (s.player_id.clone(), s.position))
            .collect();
        let has = |c: &crate::features::Combo| combos.contains(&(c.player_id.clone(), c.position));
        rows.push(
            spec.features
                .iter()
                .map(|f| match &f.kind {
                    FeatureKind::Home => f64::from(u8::from(v.home)),
                    FeatureKind::RatingOwn { position } => own[position.index()],
                    FeatureKind::RatingOpp { position } => opp[position.index()],
                    FeatureKind::PairEffect { first, second } => f64::from(u8::from(has(first) && has(second))),
                    _ => unreachable!("plus-minus spec has no other kinds"),
                })
                .collect::<Vec<f64>>(),
        );
    }
    let mut matrix = DesignMatrix::from_rows(
        spec.names().map(String::from).collect(),
        &rows,
        views.iter().map(|v| v.outcome()).collect(),
    )?;
    matrix.rows = views
        .iter()
        .map(|v| RowMeta {
            match_id: v.record.match_id.clone(),
            date: v.record.date,
        })
        .collect();
    let model = fit_matrix(&matrix, &spec, cfg, weights)?.model;
    Ok(PlusMinusFit { model, imputed })
}

fn plain_lr_columns(spec: &FeatureSpec) -> Vec<usize> {
    spec.features
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            matches!(
                f.kind,
                FeatureKind::Home | FeatureKind::StrengthOwn { .. } | FeatureKind::StrengthOpp { .. }
            )
        })
        .map(|(j, _)| j)
        .collect()
}

/// Unpenalized fit on home plus the twenty strength measures.
pub fn fit_plain_lr(matrix: &DesignMatrix, spec: &FeatureSpec, ctx: &ModelContext) -> Result<FittedModel> {
    let keep: BTreeSet<usize> = plain_lr_columns(spec).into_iter().collect();
    let sub_spec = spec.subset(&keep);
    let idx: Vec<usize> = keep.iter().copied().collect();
    let sub = matrix.select_columns(&idx);
    let all: BTreeSet<usize> = (0..sub_spec.len()).collect();
    refit_and_assess(&sub, &sub_spec, &all, ctx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub team: String,
    pub proposed_aic: f64,
    pub plain_lr_aic: f64,
    /// The plain fit is separated; its AIC uses the likelihood supremum.
    pub plain_lr_separated: bool,
    pub plus_minus_aic: Option<f64>,
    pub proposed_features: usize,
}

pub fn compare_models(
    store: &DataStore,
    team: &str,
    until: Option<NaiveDate>,
    weights: &WeightSet,
    cfg: &FitConfig,
) -> Result<ModelComparison> {
    let (spec, matrix) = team_design(store, team, until, weights, cfg)?;
    let proposed = fit_matrix(&matrix, &spec, cfg, weights)?.model;
    let ctx = ModelContext {
        lambda: None,
        aggregation_mode: cfg.aggregation_mode,
        weights: weights.clone(),
        seed: cfg.seed,
    };
    let (plain_lr_aic, plain_lr_separated) = match fit_plain_lr(&matrix, &spec, &ctx) {
        Ok(plain) => (plain.aic, false),
        Err(Error::SingularRefit { columns }) => {
            warn!(
                team,
                "plain logit separated ({}); using the likelihood supremum",
                columns.join(", ")
            );
            let idx = plain_lr_columns(&spec);
            let ll = sup_log_likelihood(&matrix.select_columns(&idx).x, &matrix.y)?;
            (aic(ll, idx.len()), true)
        }
        Err(e) => return Err(e),
    };
    let pm = fit_plus_minus_model(store, team, until, weights, cfg).ok();
    Ok(ModelComparison {
        team: team.to_owned(),
        proposed_aic: proposed.aic,
        plain_lr_aic,
        plain_lr_separated,
        plus_minus_aic: pm.map(|p| p.model.aic),
        proposed_features: proposed.selected.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_two() {
        let s = summarize(&[0.5, 1.0]).unwrap();
        assert_eq!(s.mean, 0.75);
        assert_eq!(s.median, 0.75);
        assert_eq!(summarize(&[0.4; 5]).unwrap().sd, 0.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn plus_minus_difference_of_means() {
        let a = PlayerId::new("a");
        let b = PlayerId::new("b");
        let rows = vec![
            (BTreeSet::from([a.clone(), b.clone()]), 1.0),
            (BTreeSet::from([a.clone(), b.clone()]), 1.0),
            (BTreeSet::from([b.clone()]), -1.0),
        ];
        let r = plus_minus(&rows);
        assert_eq!(r[0].rating, Some(2.0));
        assert_eq!(r[1].rating, None);
    }

    #[test]
    fn group_ratings_impute_zero() {
        let lineup = Lineup::from_assignments([
            (PlayerId::new("g"), Position::Goalkeeper),
            (PlayerId::new("d"), Position::Defender),
            (PlayerId::new("e"), Position::Defender),
        ]);
        let ratings = BTreeMap::from([(PlayerId::new("d"), Some(1.0)), (PlayerId::new("e"), None)]);
        let (avg, imputed) = group_ratings(&lineup, &ratings);
        assert_eq!(avg[1], 0.5);
        assert_eq!(imputed, 2);
    }
}
