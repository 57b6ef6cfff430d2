use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::Utc;
use decisive_core::scoring::Scenario;
use decisive_core::{run_session, ElicitationConfig, PreferenceVector, Question, Response, ScoringMatrix};
use decisive_service::{router, SessionStore};
use http_body_util::BodyExt;
use rand::SeedableRng;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (Router, Arc<SessionStore>) {
    let store = Arc::new(SessionStore::in_memory(chrono::Duration::hours(24)));
    (router(store.clone()), store)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn grid_scenario(m: usize, k: usize, salt: usize) -> Value {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..k).map(|j| ((i * 5 + j * 3 + salt) % 8) as f64 / 7.0).collect())
        .collect();
    let scenario = Scenario::from_matrix("which one?", ScoringMatrix::from_rows(rows).unwrap());
    serde_json::to_value(&scenario).unwrap()
}

fn truth(k: usize) -> PreferenceVector {
    let raw: Vec<f64> = (0..k).map(|j| ((j * 7) % k + 1) as f64).collect();
    let total: f64 = raw.iter().sum();
    PreferenceVector::new(raw.iter().map(|w| w / total).collect()).unwrap()
}

fn answer_for(w: &PreferenceVector, q: Question) -> Response {
    if w.weight(q.factor_a()) > w.weight(q.factor_b()) {
        Response::PreferA
    } else {
        Response::PreferB
    }
}

async fn create(app: &Router, scenario: Value, config: Value, seed: u64) -> String {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({ "scenario": scenario, "config": config, "seed": seed }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

/// Answers offered questions until the session stops; returns the transcript length.
async fn drive(app: &Router, id: &str, w: &PreferenceVector) -> usize {
    let mut asked = 0;
    loop {
        let (status, body) = call(app, "GET", &format!("/sessions/{id}/question"), None).await;
        assert_eq!(status, StatusCode::OK);
        if body["status"]["state"] == "stopped" {
            assert!(body["question"].is_null());
            return asked;
        }
        let q = Question::new(
            body["question"]["factor_a"].as_u64().unwrap() as usize,
            body["question"]["factor_b"].as_u64().unwrap() as usize,
        )
        .unwrap();
        let (status, reply) = call(
            app,
            "POST",
            &format!("/sessions/{id}/answer"),
            Some(json!({ "question": q, "response": answer_for(w, q) })),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{reply}");
        asked += 1;
        assert_eq!(reply["questions_asked"], asked);
    }
}

#[tokio::test]
async fn create_reports_prior_confidence_and_labels() {
    let (app, _) = app();
    let scenario = grid_scenario(10, 11, 0);
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({ "scenario": scenario }))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["status"]["state"], "active");
    assert_eq!(body["option_labels"].as_array().unwrap().len(), 10);
    assert_eq!(body["factor_labels"].as_array().unwrap().len(), 11);
    assert_eq!(body["question_budget"], 20);
    assert!(body["created_at"].as_str().unwrap().contains('T'));

    let seed = body["seed"].as_u64().unwrap();
    let parsed: Scenario = serde_json::from_value(grid_scenario(10, 11, 0)).unwrap();
    let mut rng = decisive_core::ChaCha8Rng::seed_from_u64(seed);
    let state = decisive_core::SessionState::new(parsed.matrix, ElicitationConfig::default(), &mut rng).unwrap();
    assert_eq!(body["confidence"].as_f64().unwrap(), state.confidence());
}

#[tokio::test]
async fn invalid_scenarios_name_the_field() {
    let (app, _) = app();
    let mut scenario = grid_scenario(3, 2, 0);
    scenario["matrix"][1][0] = json!(1.5);
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({ "scenario": scenario }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_scenario");
    assert_eq!(body["detail"]["field"], "matrix[1][0]");
    assert!(body["message"].as_str().unwrap().contains("1.5"));

    let (status, body) = call(&app, "POST", "/sessions", Some(json!({ "scenario": grid_scenario(3, 2, 0), "config": { "tau": 3 } }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_config");

    let request = Request::builder().method("POST").uri("/sessions").body(Body::from("{not json")).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn zero_tau_starts_stopped() {
    let (app, _) = app();
    let id = create(&app, grid_scenario(4, 3, 1), json!({ "tau": 0.0 }), 9).await;
    let (_, q) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
    assert_eq!(q["status"], json!({ "state": "stopped", "reason": "confidence_reached" }));
    let (_, rec) = call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await;
    assert_eq!(rec["questions_asked"], 0);
    assert_eq!(rec["ranking"].as_array().unwrap().len(), 4);
    for option in rec["ranking"].as_array().unwrap() {
        let u = option["expected_utility"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&u));
    }
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({ "question": { "factor_a": 0, "factor_b": 1 }, "response": "prefer_a" })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "session_stopped");
}

#[tokio::test]
async fn question_is_stable_and_stale_answers_conflict() {
    let (app, _) = app();
    let id = create(&app, grid_scenario(10, 6, 2), json!({}), 11).await;
    let (_, first) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
    let (_, again) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
    assert_eq!(first, again);

    let offered = (first["question"]["factor_a"].as_u64().unwrap(), first["question"]["factor_b"].as_u64().unwrap());
    let other = if offered == (0, 1) { (0, 2) } else { (0, 1) };
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({ "question": { "factor_a": other.0, "factor_b": other.1 }, "response": "prefer_a" })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "stale_question");

    let answer = json!({ "question": { "factor_a": offered.0, "factor_b": offered.1 }, "response": "neutral" });
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(answer.clone())).await;
    assert_eq!(status, StatusCode::OK);
    // Replaying the same answer is now stale.
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(answer)).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");

    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "response": "maybe" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_answer");
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let (app, _) = app();
    for uri in [
        format!("/sessions/{}/question", uuid::Uuid::new_v4()),
        "/sessions/not-a-uuid/recommendation".to_string(),
    ] {
        let (status, body) = call(&app, "GET", &uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(body["code"], "session_not_found");
    }
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn matches_in_process_sessions() {
    let (app, _) = app();
    for (m, k, seed) in [(10, 11, 1u64), (5, 11, 2), (4, 3, 3), (10, 6, 4)] {
        let scenario = grid_scenario(m, k, seed as usize);
        let w = truth(k);
        let id = create(&app, scenario.clone(), json!({}), seed).await;
        let asked = drive(&app, &id, &w).await;
        let (_, rec) = call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await;

        let parsed: Scenario = serde_json::from_value(scenario).unwrap();
        let mut rng = decisive_core::ChaCha8Rng::seed_from_u64(seed);
        let expected = run_session(
            &parsed.matrix,
            |q| Ok::<_, ()>(answer_for(&w, q)),
            &ElicitationConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(asked, expected.question_count);
        let ranking: Vec<usize> = rec["ranking"].as_array().unwrap().iter().map(|o| o["option"].as_u64().unwrap() as usize).collect();
        assert_eq!(ranking, expected.ranking);
        assert_eq!(rec["transcript"], serde_json::to_value(&expected.transcript).unwrap());
        assert!((rec["confidence"].as_f64().unwrap() - expected.final_distribution.confidence()).abs() < 1e-12);
        assert_eq!(rec["stop_reason"], serde_json::to_value(expected.stop_reason).unwrap());
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_do_not_interfere() {
    let (app, _) = app();
    let runs: Vec<(Value, u64)> = (0..6).map(|i| (grid_scenario(8, 7, i), 100 + i as u64)).collect();

    let mut alone = Vec::new();
    for (scenario, seed) in &runs {
        let id = create(&app, scenario.clone(), json!({}), *seed).await;
        drive(&app, &id, &truth(7)).await;
        alone.push(call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await.1);
    }

    let tasks: Vec<_> = runs
        .into_iter()
        .map(|(scenario, seed)| {
            let app = app.clone();
            tokio::spawn(async move {
                let id = create(&app, scenario, json!({}), seed).await;
                drive(&app, &id, &truth(7)).await;
                call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await.1
            })
        })
        .collect();
    for (task, expected) in tasks.into_iter().zip(alone) {
        let got = task.await.unwrap();
        assert_eq!(got["ranking"], expected["ranking"]);
        assert_eq!(got["transcript"], expected["transcript"]);
    }
}

#[tokio::test]
async fn journal_replays_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.jsonl");
    let store = Arc::new(SessionStore::with_journal(&path, chrono::Duration::hours(24)).unwrap());
    let app = router(store);
    let id = create(&app, grid_scenario(6, 5, 3), json!({ "particle_count": 80 }), 5).await;
    drive(&app, &id, &truth(5)).await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await;
    drop(app);

    let reopened = Arc::new(SessionStore::with_journal(&path, chrono::Duration::hours(24)).unwrap());
    let app = router(reopened);
    let (status, after) = call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after, before);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.jsonl");
    let store = Arc::new(SessionStore::with_journal(&path, chrono::Duration::minutes(5)).unwrap());
    let app = router(store.clone());
    let id = create(&app, grid_scenario(3, 3, 0), json!({}), 1).await;
    assert_eq!(store.purge_idle(Utc::now()), 0);
    assert_eq!(store.purge_idle(Utc::now() + chrono::Duration::minutes(6)), 1);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let reopened = SessionStore::with_journal(&path, chrono::Duration::minutes(5)).unwrap();
    assert!(reopened.is_empty());
}
