//! End-to-end fitting: feature universe, penalized path, penalty selection
//! under the size cap, and refit.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::domain::{structural_violations, Lineup, PlayerId, Squad};
use crate::error::{Error, Result};
use crate::features::{
    build_design_matrix, build_feature_spec, standardize_columns, DesignMatrix, FeatureKind, FeatureSpec,
    StandardizeOptions, DEFAULT_MIN_MATCHES,
};
use crate::ingestion::{DataStore, TeamView};
use crate::model::{
    fit_lasso_path, refit_and_assess, select_lambda, ColumnRole, CvConfig, FittedModel, LassoPath, ModelContext,
    PathConfig, Probs, Selection,
};
use crate::optimizer::{
    best_rated_lineup, opponent_assumption, optimize_over_formations, ModelObjective, ObjectiveKind,
    OpponentAssumption, OptimizerConfig, SearchTrace,
};
use crate::skills::{eligible_positions, lineup_strengths, AggregationMode, SkillResolver, SkillTable, WeightSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub min_matches: usize,
    pub max_vars: usize,
    pub folds: usize,
    pub seed: u64,
    pub aggregation_mode: AggregationMode,
    pub fixed_effects: bool,
    pub pair_effects: bool,
    pub path: PathConfig,
    pub standardize: StandardizeOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            min_matches: DEFAULT_MIN_MATCHES,
            max_vars: crate::model::select::DEFAULT_MAX_VARS,
            folds: crate::model::select::DEFAULT_FOLDS,
            seed: 0,
            aggregation_mode: AggregationMode::Mean,
            fixed_effects: true,
            pair_effects: true,
            path: PathConfig::default(),
            standardize: StandardizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: FittedModel,
    pub path: LassoPath,
    pub selection: Selection,
}

/// Column roles for the solver: forced columns free, constant non-forced
/// columns excluded, the rest penalized.
pub fn column_roles(spec: &FeatureSpec, flagged: &[usize]) -> Vec<ColumnRole> {
    spec.features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if f.forced {
                ColumnRole::Free
            } else if flagged.contains(&j) {
                ColumnRole::Excluded
            } else {
                ColumnRole::Penalized
            }
        })
        .collect()
}

/// Path, cross-validated selection and refit on an assembled matrix. A
/// singular refit falls back to the next larger penalty on the path.
pub fn fit_matrix(
    matrix: &DesignMatrix,
    spec: &FeatureSpec,
    cfg: &FitConfig,
    weights: &WeightSet,
) -> Result<FitOutcome> {
    if matrix.n_rows() == 0 {
        return Err(Error::History(format!("no training matches for {}", spec.team_id)));
    }
    let forced: Vec<bool> = spec.features.iter().map(|f| f.forced).collect();
    let (z, st) = standardize_columns(matrix, &forced, cfg.standardize);
    let roles = column_roles(spec, &st.flagged);
    let path_cfg = PathConfig {
        max_active: Some(cfg.max_vars),
        ..cfg.path.clone()
    };
    let path = fit_lasso_path(&z.x, &z.y, &roles, &path_cfg)?;
    let cv = CvConfig {
        folds: cfg.folds,
        max_vars: cfg.max_vars,
        seed: cfg.seed,
    };
    let selection = select_lambda(&path, &z.x, &z.y, &roles, &path_cfg, &cv)?;
    let mut diagnostics = path.diagnostics.clone();
    if let Some(w) = &selection.warning {
        warn!(team = %spec.team_id, "{w}");
        diagnostics.push(w.clone());
    }
    let mut index = selection.index;
    loop {
        let point = &path.points[index];
        let selected: BTreeSet<usize> = point.active.iter().copied().collect();
        let ctx = ModelContext {
            lambda: Some(point.lambda),
            aggregation_mode: cfg.aggregation_mode,
            weights: weights.clone(),
            seed: cfg.seed,
        };
        match refit_and_assess(matrix, spec, &selected, &ctx) {
            Ok(mut model) => {
                model.diagnostics = diagnostics;
                info!(team = %spec.team_id, selected = model.selected.len(), aic = model.aic, "model fitted");
                return Ok(FitOutcome { model, path, selection });
            }
            Err(Error::SingularRefit { columns }) if index > 0 => {
                let msg = format!(
                    "refit at grid point {index} singular ({}); falling back to grid point {}",
                    columns.join(", "),
                    index - 1
                );
                warn!(team = %spec.team_id, "{msg}");
                diagnostics.push(msg);
                index -= 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// The team's matches strictly before `until` (all matches when `None`).
pub fn training_views<'a>(store: &'a DataStore, team: &'a str, until: Option<NaiveDate>) -> Vec<TeamView<'a>> {
    store
        .team_matches(team)
        .filter(|v| until.is_none_or(|u| v.record.date < u))
        .collect()
}

pub fn team_feature_spec(team: &str, views: &[TeamView<'_>], cfg: &FitConfig) -> FeatureSpec {
    let mut spec = build_feature_spec(team, views.iter().copied(), cfg.min_matches);
    spec.features.retain(|f| match f.kind {
        FeatureKind::FixedEffect { .. } => cfg.fixed_effects,
        FeatureKind::PairEffect { .. } => cfg.pair_effects,
        _ => true,
    });
    spec
}

pub fn team_design(
    store: &DataStore,
    team: &str,
    until: Option<NaiveDate>,
    weights: &WeightSet,
    cfg: &FitConfig,
) -> Result<(FeatureSpec, DesignMatrix)> {
    let views = training_views(store, team, until);
    if views.is_empty() {
        return Err(Error::History(format!("{team} has no matches in the training window")));
    }
    let spec = team_feature_spec(team, &views, cfg);
    let resolver = SkillResolver::new(store, weights);
    let matrix = build_design_matrix(&spec, views, &resolver, cfg.aggregation_mode)?;
    Ok((spec, matrix))
}

pub fn fit_team_model(
    store: &DataStore,
    team: &str,
    until: Option<NaiveDate>,
    weights: &WeightSet,
    cfg: &FitConfig,
) -> Result<FitOutcome> {
    let (spec, matrix) = team_design(store, team, until, weights, cfg)?;
    fit_matrix(&matrix, &spec, cfg, weights)
}

/// The team's squad for `season` with eligibility computed from skills at
/// `date`, plus those skills.
pub fn build_squad(
    store: &DataStore,
    team: &str,
    season: &str,
    date: NaiveDate,
    weights: &WeightSet,
) -> Result<(Squad, SkillTable)> {
    let pool = store.season_pool(team, season);
    squad_from_pool(store, team, &pool, date, weights)
}

pub fn squad_from_pool(
    store: &DataStore,
    team: &str,
    pool: &BTreeSet<PlayerId>,
    date: NaiveDate,
    weights: &WeightSet,
) -> Result<(Squad, SkillTable)> {
    if pool.is_empty() {
        return Err(Error::History(format!("no players known for {team}")));
    }
    let resolver = SkillResolver::new(store, weights);
    let skills = resolver.table(pool.iter(), date)?;
    let players = pool
        .iter()
        .map(|id| {
            let mut rec = store
                .player(id)
                .cloned()
                .ok_or_else(|| Error::Reference(format!("unknown player {id}")))?;
            rec.eligible_positions = eligible_positions(&rec, &skills.get(id)?);
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Squad::new(team, players, date)?, skills))
}

/// The season `team` is in on `date`: that of its latest match on or before
/// the date, else its first match after.
pub fn season_at(store: &DataStore, team: &str, date: NaiveDate) -> Option<String> {
    let views: Vec<TeamView<'_>> = store.team_matches(team).collect();
    views
        .iter()
        .rev()
        .find(|v| v.record.date <= date)
        .or_else(|| views.first())
        .map(|v| v.record.season.clone())
}

/// Skills for every player in `lineups` as of `date`.
pub fn lineup_skills<'a>(
    store: &DataStore,
    lineups: impl IntoIterator<Item = &'a Lineup>,
    date: NaiveDate,
    weights: &WeightSet,
) -> Result<SkillTable> {
    let ids: BTreeSet<PlayerId> = lineups
        .into_iter()
        .flat_map(|l| l.slots().iter().map(|s| s.player_id.clone()))
        .collect();
    for id in &ids {
        if store.player(id).is_none() {
            return Err(Error::Reference(format!("unknown player {id}")));
        }
    }
    SkillResolver::new(store, weights).table(ids.iter(), date)
}

/// Outcome probabilities for `own` against `opponent`, both validated as
/// well-formed lineups, with skills as of `date`.
pub fn predict_fixture(
    store: &DataStore,
    model: &FittedModel,
    own: &Lineup,
    opponent: &Lineup,
    home: bool,
    date: NaiveDate,
) -> Result<Probs> {
    for l in [own, opponent] {
        let v = structural_violations(l);
        if !v.is_empty() {
            return Err(Error::InvalidLineup(v));
        }
    }
    let skills = lineup_skills(store, [own, opponent], date, &model.weights)?;
    let s_own = lineup_strengths(own, |p| skills.get(p), model.aggregation_mode)?;
    let s_opp = lineup_strengths(opponent, |p| skills.get(p), model.aggregation_mode)?;
    model.predict(home, &s_own, &s_opp, own)
}

/// What the optimizer is asked to do for one upcoming fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureQuery {
    pub date: NaiveDate,
    pub home: bool,
    pub opponent: String,
    #[serde(default)]
    pub opponent_assumption: OpponentAssumption,
    /// Overrides the assumption when given.
    #[serde(default)]
    pub opponent_lineup: Option<Lineup>,
    #[serde(default)]
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub season: Option<String>,
}

/// Best lineup for the model's team in a fixture.
pub fn optimize_fixture(
    store: &DataStore,
    model: &FittedModel,
    query: &FixtureQuery,
    config: &OptimizerConfig,
) -> Result<SearchTrace> {
    let team = model.team_id.as_str();
    let season = match &query.season {
        Some(s) => s.clone(),
        None => season_at(store, team, query.date)
            .ok_or_else(|| Error::History(format!("{team} has no matches to place {} in a season", query.date)))?,
    };
    let (squad, mut skills) = build_squad(store, team, &season, query.date, &model.weights)?;
    let opp_lineup = match &query.opponent_lineup {
        Some(l) => {
            let v = structural_violations(l);
            if !v.is_empty() {
                return Err(Error::InvalidLineup(v));
            }
            l.clone()
        }
        None => {
            let opp_season = season_at(store, &query.opponent, query.date).unwrap_or(season.clone());
            let (opp_squad, opp_skills) = build_squad(store, &query.opponent, &opp_season, query.date, &model.weights)?;
            opponent_assumption(
                query.opponent_assumption,
                store,
                &query.opponent,
                query.date,
                &opp_squad,
                &opp_skills,
            )?
        }
    };
    for (p, s) in lineup_skills(store, [&opp_lineup], query.date, &model.weights)?.0 {
        skills.0.entry(p).or_insert(s);
    }
    let objective = ModelObjective::new(model, query.objective, query.home, &opp_lineup, &skills)?;
    let formations = if config.formations.is_empty() {
        squad.feasible_formations()
    } else {
        config.formations.clone()
    };
    let inject: Vec<Lineup> = formations
        .iter()
        .filter_map(|f| best_rated_lineup(&squad, *f, &skills).ok())
        .collect();
    optimize_over_formations(&objective, &squad, config, &inject)
}
