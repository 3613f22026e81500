use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{Duration, NaiveDate};
use lineup_core::analytics::{
    efficiency_summary, evaluate_with_model, recursive_evaluate, EfficiencyRecord, EvaluateConfig, Summary,
};
use lineup_core::domain::{Formation, Lineup, PlayerId, Position};
use lineup_core::model::{CoefficientRow, FittedModel, TrainingWindow};
use lineup_core::optimizer::{ObjectiveKind, OpponentAssumption, OptimizerConfig};
use lineup_core::pipeline::{
    build_squad, fit_team_model, optimize_fixture, predict_fixture, season_at, FitConfig, FixtureQuery,
};
use lineup_core::skills::{AggregationMode, SkillVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::info;

use crate::error::ApiError;
use crate::state::{AppState, JobKind, JobRecord};
use crate::SCHEMA_VERSION;

pub type Shared = Arc<AppState>;

/// JSON body whose decoding errors name the offending field.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::validation("", e.to_string()))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map(Body).map_err(|e| {
            let field = e.path().to_string();
            ApiError::validation(&field, e.inner().to_string())
        })
    }
}

/// Wraps a payload with the schema version.
#[derive(Serialize)]
pub struct Versioned<T> {
    pub schema_version: &'static str,
    #[serde(flatten)]
    pub body: T,
}

fn ok<T: Serialize>(body: T) -> Json<Versioned<T>> {
    Json(Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SlotBody {
    pub player_id: String,
    pub position: Position,
}

fn to_lineup(field: &str, slots: &[SlotBody]) -> Result<Lineup, ApiError> {
    let mut seen = BTreeSet::new();
    for (i, s) in slots.iter().enumerate() {
        if !seen.insert(&s.player_id) {
            return Err(ApiError::validation(
                &format!("{field}[{i}].player_id"),
                format!("player {} appears twice", s.player_id),
            ));
        }
    }
    Ok(Lineup::from_assignments(
        slots.iter().map(|s| (PlayerId::new(s.player_id.clone()), s.position)),
    ))
}

pub async fn health() -> impl IntoResponse {
    ok(json!({ "status": "ok" }))
}

#[derive(Serialize)]
pub struct TeamSummary {
    pub team_id: String,
    pub matches: usize,
    pub seasons: Vec<String>,
}

pub async fn teams(State(st): State<Shared>) -> impl IntoResponse {
    let teams: Vec<TeamSummary> = st
        .store
        .teams()
        .into_iter()
        .map(|t| {
            let views: Vec<_> = st.store.team_matches(&t).collect();
            let seasons: BTreeSet<String> = views.iter().map(|v| v.record.season.clone()).collect();
            TeamSummary {
                matches: views.len(),
                seasons: seasons.into_iter().collect(),
                team_id: t,
            }
        })
        .collect();
    ok(json!({ "teams": teams }))
}

#[derive(Deserialize)]
pub struct SquadQuery {
    pub date: Option<NaiveDate>,
    pub season: Option<String>,
}

#[derive(Serialize)]
pub struct SquadPlayer {
    pub player_id: PlayerId,
    pub name: String,
    pub natural_position: Position,
    pub eligible_positions: BTreeSet<Position>,
    pub skills: SkillVector,
}

fn require_team(st: &AppState, team: &str) -> Result<(), ApiError> {
    if st.store.team_matches(team).next().is_none() {
        return Err(ApiError::not_found("team", team));
    }
    Ok(())
}

pub async fn squad(
    State(st): State<Shared>,
    Path(team): Path<String>,
    Query(q): Query<SquadQuery>,
) -> Result<impl IntoResponse, ApiError> {
    require_team(&st, &team)?;
    let date = q
        .date
        .ok_or_else(|| ApiError::validation("date", "query parameter `date` is required"))?;
    let season = match q.season {
        Some(s) => s,
        None => season_at(&st.store, &team, date).ok_or_else(|| ApiError::not_found("team", &team))?,
    };
    let (squad, skills) = build_squad(&st.store, &team, &season, date, &st.weights)?;
    let players = squad
        .players()
        .iter()
        .map(|p| {
            Ok(SquadPlayer {
                player_id: p.player_id.clone(),
                name: p.name.clone(),
                natural_position: p.natural_position,
                eligible_positions: p.eligible_positions.clone(),
                skills: skills.get(&p.player_id)?,
            })
        })
        .collect::<Result<Vec<_>, lineup_core::Error>>()?;
    Ok(ok(json!({
        "team_id": team,
        "date": date,
        "season": season,
        "players": players,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub team: String,
    #[serde(default)]
    pub train_until: Option<NaiveDate>,
    #[serde(default)]
    pub config: FitConfig,
}

fn accepted(job_id: &str, extra: Value) -> Response {
    let mut body = json!({ "schema_version": SCHEMA_VERSION, "job_id": job_id, "status": "queued" });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    (StatusCode::ACCEPTED, Json(body)).into_response()
}

/// Runs blocking work as a job, recording its outcome.
fn spawn_job<F>(st: &Shared, job_id: String, work: F)
where
    F: FnOnce(&AppState) -> Result<Value, ApiError> + Send + 'static,
{
    let st = st.clone();
    tokio::spawn(async move {
        st.transition(&job_id, None);
        let inner = st.clone();
        let out = tokio::task::spawn_blocking(move || work(&inner))
            .await
            .unwrap_or_else(|e| Err(ApiError::internal(format!("job panicked: {e}"))));
        st.transition(&job_id, Some(out));
    });
}

pub async fn create_model(State(st): State<Shared>, Body(req): Body<FitRequest>) -> Result<Response, ApiError> {
    require_team(&st, &req.team)?;
    let model_id = st.model_id(&req.team, req.train_until, &req.config);
    let job_id = st.submit(JobKind::Fit);
    let result = json!({ "model_id": model_id });
    if st.has_model(&model_id) {
        st.transition(&job_id, Some(Ok(result)));
        return Ok(accepted(&job_id, json!({ "model_id": model_id })));
    }
    let shared = st.clone();
    let id = model_id.clone();
    let job = job_id.clone();
    tokio::spawn(async move {
        // One fit writes to the artifact store at a time.
        let _guard = shared.write_lock.lock().await;
        shared.transition(&job, None);
        let inner = shared.clone();
        let out = tokio::task::spawn_blocking(move || -> Result<Value, ApiError> {
            if !inner.has_model(&id) {
                let fit = fit_team_model(&inner.store, &req.team, req.train_until, &inner.weights, &req.config)?;
                inner.store_model(&id, fit.model)?;
                info!(model_id = %id, "model stored");
            }
            Ok(json!({ "model_id": id }))
        })
        .await
        .unwrap_or_else(|e| Err(ApiError::internal(format!("job panicked: {e}"))));
        shared.transition(&job, Some(out));
    });
    Ok(accepted(&job_id, json!({ "model_id": model_id })))
}

pub async fn job(State(st): State<Shared>, Path(id): Path<String>) -> Result<Json<Versioned<JobRecord>>, ApiError> {
    st.job(&id).map(ok).ok_or_else(|| ApiError::not_found("job", &id))
}

#[derive(Serialize)]
pub struct ModelView {
    pub model_id: String,
    pub team_id: String,
    pub selected_features: Vec<String>,
    pub coefficients: Vec<CoefficientRow>,
    pub aic: f64,
    pub log_likelihood: f64,
    pub lambda: Option<f64>,
    pub aggregation_mode: AggregationMode,
    pub training_window: TrainingWindow,
    pub home_effect: Option<CoefficientRow>,
    pub diagnostics: Vec<String>,
}

pub async fn get_model(State(st): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let m = st.model(&id)?;
    Ok(ok(ModelView {
        model_id: id,
        team_id: m.team_id.clone(),
        selected_features: m.selected_names.clone(),
        coefficients: m.coefficient_table(),
        aic: m.aic,
        log_likelihood: m.log_likelihood,
        lambda: m.lambda,
        aggregation_mode: m.aggregation_mode,
        training_window: m.training_window.clone(),
        home_effect: m.home_effect(),
        diagnostics: m.diagnostics.clone(),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub lineup: Vec<SlotBody>,
    pub opponent_lineup: Vec<SlotBody>,
    pub home: bool,
    /// Skills as of this date; defaults to the day after training ends.
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PredictResponse {
    pub model_id: String,
    #[serde(rename = "pWin")]
    pub p_win: f64,
    #[serde(rename = "pDraw")]
    pub p_draw: f64,
    #[serde(rename = "pLoss")]
    pub p_loss: f64,
    pub expected_points: f64,
}

fn default_date(m: &FittedModel) -> Option<NaiveDate> {
    m.training_window.until.map(|d| d + Duration::days(1))
}

pub async fn predict(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Body(req): Body<PredictRequest>,
) -> Result<impl IntoResponse, ApiError> {
    let m = st.model(&id)?;
    let own = to_lineup("lineup", &req.lineup)?;
    let opp = to_lineup("opponent_lineup", &req.opponent_lineup)?;
    let date = req
        .date
        .or_else(|| default_date(&m))
        .ok_or_else(|| ApiError::validation("date", "model has no training window; give a date"))?;
    let p = predict_fixture(&st.store, &m, &own, &opp, req.home, date)?;
    Ok(ok(PredictResponse {
        model_id: id,
        p_win: p.win,
        p_draw: p.draw,
        p_loss: p.loss,
        expected_points: ObjectiveKind::MaxExpectedPoints.value(&p),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub opponent: String,
    pub home: bool,
    pub seed: u64,
    #[serde(default)]
    pub date: Option<NaiveDate>,
    #[serde(default)]
    pub season: Option<String>,
    #[serde(default)]
    pub formations: Vec<String>,
    #[serde(default)]
    pub opponent_assumption: OpponentAssumption,
    #[serde(default)]
    pub opponent_lineup: Option<Vec<SlotBody>>,
    #[serde(default)]
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub pinned: Vec<String>,
    #[serde(default)]
    pub excluded: Vec<String>,
    #[serde(default)]
    pub min_iterations: Option<usize>,
    #[serde(default)]
    pub min_random_starts: Option<usize>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

impl OptimizeRequest {
    fn config(&self) -> Result<OptimizerConfig, ApiError> {
        let d = OptimizerConfig::default();
        let formations = self
            .formations
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.parse::<Formation>()
                    .map_err(|e| ApiError::validation(&format!("formations[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = OptimizerConfig {
            min_iterations: self.min_iterations.unwrap_or(d.min_iterations),
            min_random_starts: self.min_random_starts.unwrap_or(d.min_random_starts),
            delta: self.delta.unwrap_or(d.delta),
            seed: self.seed,
            pinned: self.pinned.iter().map(|p| PlayerId::new(p.clone())).collect(),
            excluded: self.excluded.iter().map(|p| PlayerId::new(p.clone())).collect(),
            formations,
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
        };
        cfg.validate().map_err(|e| ApiError::validation("", e.to_string()))?;
        Ok(cfg)
    }
}

pub async fn optimize(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Body(req): Body<OptimizeRequest>,
) -> Result<Response, ApiError> {
    let m = st.model(&id)?;
    require_team(&st, &req.opponent)?;
    let config = req.config()?;
    let opponent_lineup = req
        .opponent_lineup
        .as_deref()
        .map(|s| to_lineup("opponent_lineup", s))
        .transpose()?;
    let date = req
        .date
        .or_else(|| default_date(&m))
        .ok_or_else(|| ApiError::validation("date", "model has no training window; give a date"))?;
    let query = FixtureQuery {
        date,
        home: req.home,
        opponent: req.opponent.clone(),
        opponent_assumption: req.opponent_assumption,
        opponent_lineup,
        objective: req.objective,
        season: req.season.clone(),
    };
    let job_id = st.submit(JobKind::Optimize);
    spawn_job(&st, job_id.clone(), move |st| {
        let trace = optimize_fixture(&st.store, &m, &query, &config)?;
        serde_json::to_value(trace).map_err(|e| ApiError::internal(e.to_string()))
    });
    Ok(accepted(&job_id, json!({ "model_id": id })))
}

#[derive(Deserialize)]
pub struct EfficiencyQuery {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub seed: Option<u64>,
    pub objective: Option<ObjectiveKind>,
    pub opponent_assumption: Option<OpponentAssumption>,
}

#[derive(Serialize)]
pub struct EfficiencyView {
    pub model_id: Option<String>,
    pub records: Vec<EfficiencyRecord>,
    pub summary: Option<Summary>,
}

pub async fn efficiency(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<EfficiencyQuery>,
) -> Result<impl IntoResponse, ApiError> {
    let m = st.model(&id)?;
    if let (Some(f), Some(t)) = (q.from, q.to) {
        if f > t {
            return Err(ApiError::validation("from", "`from` is after `to`"));
        }
    }
    let mut cfg = EvaluateConfig::default();
    cfg.optimizer.seed = q.seed.unwrap_or(0);
    cfg.objective = q.objective.unwrap_or_default();
    cfg.opponent = q.opponent_assumption.unwrap_or_default();
    let shared = st.clone();
    let records = tokio::task::spawn_blocking(move || evaluate_with_model(&shared.store, &m, q.from, q.to, &cfg))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(ok(EfficiencyView {
        model_id: Some(id),
        summary: efficiency_summary(&records).ok(),
        records,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub team: String,
    pub from: NaiveDate,
    #[serde(default)]
    pub to: Option<NaiveDate>,
    #[serde(default)]
    pub config: EvaluateConfig,
}

/// Recursive test-window evaluation with refits, as a job.
pub async fn evaluate(State(st): State<Shared>, Body(req): Body<EvaluateRequest>) -> Result<Response, ApiError> {
    require_team(&st, &req.team)?;
    if req.to.is_some_and(|t| t < req.from) {
        return Err(ApiError::validation("to", "`to` is before `from`"));
    }
    let job_id = st.submit(JobKind::Evaluate);
    spawn_job(&st, job_id.clone(), move |st| {
        let records = recursive_evaluate(&st.store, &req.team, req.from, req.to, &st.weights, &req.config)?;
        let view = EfficiencyView {
            model_id: None,
            summary: efficiency_summary(&records).ok(),
            records,
        };
        serde_json::to_value(view).map_err(|e| ApiError::internal(e.to_string()))
    });
    Ok(accepted(&job_id, json!({})))
}
