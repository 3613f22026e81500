use std::sync::{Arc, OnceLock};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lineup_core::synth::{generate_league, LeagueConfig};
use lineup_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn schema(name: &str) -> jsonschema::Validator {
    let path = format!("{}/schemas/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&doc).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let s = schema(name);
    let errors: Vec<String> = s.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{v}");
}

fn small_league() -> LeagueConfig {
    LeagueConfig {
        seed: 3,
        ..LeagueConfig::default()
    }
}

struct Fixture {
    state: Arc<AppState>,
    _dir: tempfile::TempDir,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let league = generate_league(&small_league()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let state = Arc::new(AppState::new(league.store, league.weights, dir.path()).unwrap());
        Fixture { state, _dir: dir }
    })
}

fn app() -> Router {
    router(fixture().state.clone(), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

async fn wait_job(app: &Router, job_id: &str) -> Value {
    for _ in 0..600 {
        let (s, v) = call(app, "GET", &format!("/jobs/{job_id}"), None).await;
        assert_eq!(s, StatusCode::OK);
        assert_valid("job", &v);
        if v["status"] == "done" || v["status"] == "failed" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    panic!("job {job_id} did not finish");
}

async fn fitted_model(app: &Router) -> String {
    let (s, v) = call(
        app,
        "POST",
        "/models",
        Some(json!({ "team": "T01", "config": { "folds": 5 } })),
    )
    .await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    assert_valid("job_accepted", &v);
    let job = wait_job(app, v["job_id"].as_str().unwrap()).await;
    assert_eq!(job["status"], "done", "{job}");
    job["result"]["model_id"].as_str().unwrap().to_owned()
}

fn lineup_json(l: &lineup_core::domain::Lineup) -> Value {
    Value::Array(
        l.slots()
            .iter()
            .map(|s| json!({ "player_id": s.player_id.as_str(), "position": s.position }))
            .collect(),
    )
}

fn first_match() -> lineup_core::ingestion::MatchRecord {
    let st = &fixture().state;
    st.store.team_matches("T01").last().unwrap().record.clone()
}

#[tokio::test]
async fn health_and_teams() {
    let app = app();
    let (s, v) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_valid("health", &v);
    let (s, v) = call(&app, "GET", "/teams", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_valid("teams", &v);
    assert_eq!(v["teams"].as_array().unwrap().len(), 20);
}

#[tokio::test]
async fn squad_lists_eligibility_and_skills() {
    let app = app();
    let (s, v) = call(&app, "GET", "/teams/T02/squad?date=2021-01-01", None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_valid("squad", &v);
    assert_eq!(v["players"].as_array().unwrap().len(), 25);
    let (s, v) = call(&app, "GET", "/teams/T99/squad?date=2021-01-01", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_valid("error", &v);
    let (s, v) = call(&app, "GET", "/teams/T02/squad", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["field"], "date");
}

#[tokio::test]
async fn fit_then_predict_optimize_and_efficiency() {
    let app = app();
    let id = fitted_model(&app).await;
    // Same request, same content address; served from the store.
    assert_eq!(fitted_model(&app).await, id);

    let (s, v) = call(&app, "GET", &format!("/models/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_valid("model", &v);
    assert!(v["selected_features"].as_array().unwrap().len() >= 8);

    let m = first_match();
    let (own, opp, home) = if m.home_team_id == "T01" {
        (&m.home_lineup, &m.away_lineup, true)
    } else {
        (&m.away_lineup, &m.home_lineup, false)
    };
    let body = json!({ "lineup": lineup_json(own), "opponent_lineup": lineup_json(opp), "home": home, "date": m.date });
    let (s, v) = call(&app, "POST", &format!("/models/{id}/predict"), Some(body.clone())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_valid("predict_response", &v);
    let total = v["pWin"].as_f64().unwrap() + v["pDraw"].as_f64().unwrap() + v["pLoss"].as_f64().unwrap();
    assert!((total - 1.0).abs() < 1e-12);
    // Pure: the same body gives the same answer.
    let (_, again) = call(&app, "POST", &format!("/models/{id}/predict"), Some(body)).await;
    assert_eq!(v, again);

    let opponent = if home { &m.away_team_id } else { &m.home_team_id };
    let pinned = own.slots()[3].player_id.as_str().to_owned();
    let req = json!({ "opponent": opponent, "home": home, "seed": 11, "date": m.date, "pinned": [pinned], "formations": ["4-4-2"] });
    let mut traces = Vec::new();
    for _ in 0..2 {
        let (s, v) = call(&app, "POST", &format!("/models/{id}/optimize"), Some(req.clone())).await;
        assert_eq!(s, StatusCode::ACCEPTED, "{v}");
        let job = wait_job(&app, v["job_id"].as_str().unwrap()).await;
        assert_eq!(job["status"], "done", "{job}");
        assert_valid("search_trace", &job["result"]);
        traces.push(job["result"].clone());
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0]["seed"], 11);
    let best = &traces[0]["best_lineup"]["slots"];
    assert!(best.as_array().unwrap().iter().any(|s| s["player_id"] == pinned));

    let (s, v) = call(
        &app,
        "GET",
        &format!("/models/{id}/efficiency?from={}&to={}", m.date, m.date),
        None,
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_valid("efficiency", &v);
    let records = v["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    let ratio = records[0]["ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0);
}

#[tokio::test]
async fn predict_errors_carry_codes() {
    let app = app();
    let id = fitted_model(&app).await;
    let m = first_match();
    let mut short = lineup_json(&m.home_lineup);
    short.as_array_mut().unwrap().pop();
    let body = json!({ "lineup": short, "opponent_lineup": lineup_json(&m.away_lineup), "home": true });
    let (s, v) = call(&app, "POST", &format!("/models/{id}/predict"), Some(body)).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    assert_valid("error", &v);
    assert!(!v["detail"]["violations"].as_array().unwrap().is_empty());

    let body = json!({ "lineup": [{ "player_id": "x", "position": "STRIKER" }], "opponent_lineup": [], "home": true });
    let (s, v) = call(&app, "POST", &format!("/models/{id}/predict"), Some(body)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["field"], "lineup[0].position");

    let body =
        json!({ "lineup": lineup_json(&m.home_lineup), "opponent_lineup": lineup_json(&m.away_lineup), "home": true });
    let (s, v) = call(&app, "POST", "/models/abc123/predict", Some(body)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_valid("error", &v);

    let (s, _) = call(&app, "GET", "/jobs/job-999999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn optimize_requires_seed() {
    let app = app();
    let id = fitted_model(&app).await;
    let (s, v) = call(
        &app,
        "POST",
        &format!("/models/{id}/optimize"),
        Some(json!({ "opponent": "T02", "home": true })),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_valid("error", &v);
    let (s, v) = call(
        &app,
        "POST",
        &format!("/models/{id}/optimize"),
        Some(json!({ "opponent": "T02", "home": true, "seed": 1, "formations": ["9-0-1"] })),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["field"], "formations[0]");
}

#[tokio::test]
async fn static_bundle_is_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>board</html>").unwrap();
    let app = router(fixture().state.clone(), Some(dir.path().to_path_buf()));
    let (s, v) = call(&app, "GET", "/index.html", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, Value::String("<html>board</html>".into()));
    let (s, _) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
}
