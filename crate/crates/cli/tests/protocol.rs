use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use gamelogic::files::{self, StructureFile};
use gamelogic::serve::router;
use gamelogic::session::{CreateRequest, Role, Session};
use gamelogic_core::ef::EfGame;
use gamelogic_core::kernel::{play, solve, FirstMove};

fn structure(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn ef_request(human: &str) -> String {
    json!({"game": "ef", "left": structure("L1.json"), "right": structure("L2.json"), "rounds": 2, "human": human})
        .to_string()
}

#[tokio::test]
async fn ef_session_matches_engine_play() {
    let app = router(None);
    let (status, created) = call(&app, "POST", "/session", Some(&ef_request("eloise"))).await;
    assert_eq!(status, StatusCode::OK);
    let id = created["id"].as_str().unwrap().to_string();
    let mut view = created;
    while view["status"] == "ongoing" {
        assert_eq!(view["to_move"], "eloise");
        let mv = view["legal_moves"][0].as_str().unwrap().to_string();
        let (status, next) =
            call(&app, "POST", &format!("/session/{id}/move"), Some(&json!({"move": mv}).to_string())).await;
        assert_eq!(status, StatusCode::OK);
        view = next;
    }
    assert_eq!(view["status"], "abelard_won");
    let (_, full) = call(&app, "GET", &format!("/session/{id}"), None).await;

    let left = StructureFile::parse(&structure("L1.json").to_string()).unwrap();
    let right = StructureFile::parse(&structure("L2.json").to_string()).unwrap();
    let vocab = files::vocabulary(&[&left, &right], &Default::default(), true).unwrap();
    let game =
        EfGame::new(Arc::new(left.to_structure(&vocab).unwrap()), Arc::new(right.to_structure(&vocab).unwrap()), 2)
            .unwrap();
    let sol = solve(&game, None).unwrap();
    let record = play(&game, &mut FirstMove, &mut sol.strategy.responder(), None).unwrap();
    let (steps, last) = record.transcript(&game);
    let expected: Vec<Value> =
        steps.iter().map(|(pos, mover, mv)| json!({"position": pos, "mover": mover.name(), "move": mv})).collect();
    assert_eq!(full["history"], Value::Array(expected));
    assert_eq!(full["position"], last);
}

#[tokio::test]
async fn illegal_moves_are_rejected_without_change() {
    let app = router(None);
    let (_, created) = call(&app, "POST", "/session", Some(&ef_request("eloise"))).await;
    let id = created["id"].as_str().unwrap();
    let (_, before) = call(&app, "GET", &format!("/session/{id}"), None).await;
    for body in [json!({"move": "reply:9"}), json!({"move": "left:0"})] {
        let (status, err) = call(&app, "POST", &format!("/session/{id}/move"), Some(&body.to_string())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert!(err["error"].is_string());
    }
    let (_, after) = call(&app, "GET", &format!("/session/{id}"), None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn malformed_requests_get_json_errors() {
    let app = router(None);
    let (status, err) = call(&app, "POST", "/session", Some("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(err["error"].is_string());
    let bad = json!({"game": "eval", "model": structure("p_partial.json"), "formula": "exists x.", "human": "eloise"});
    let (status, _) = call(&app, "POST", "/session", Some(&bad.to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, err) = call(&app, "GET", "/session/41", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(err["error"].is_string());
    let (_, created) = call(&app, "POST", "/session", Some(&ef_request("abelard"))).await;
    let id = created["id"].as_str().unwrap();
    let (status, _) = call(&app, "POST", &format!("/session/{id}/move"), Some(r#"{"mv": "left:0"}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn explain_labels_follow_the_solver() {
    let app = router(None);
    let (_, created) = call(&app, "POST", "/session", Some(&ef_request("abelard"))).await;
    assert_eq!(created["machine_moves"], json!([]));
    let id = created["id"].as_str().unwrap();
    let (status, ex) = call(&app, "GET", &format!("/session/{id}/explain"), None).await;
    assert_eq!(status, StatusCode::OK);
    let labels = ex["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 3);
    assert!(labels.iter().all(|l| l["winner"] == "abelard"));

    let meg = json!({"game": "meg", "formula": "exists x. P(x)", "human": "abelard"});
    let (status, created) = call(&app, "POST", "/session", Some(&meg.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "GET", &format!("/session/{}/explain", created["id"].as_str().unwrap()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn eval_session_plays_to_a_literal() {
    let app = router(None);
    let req =
        json!({"game": "eval", "model": structure("p_partial.json"), "formula": "forall x. P(x)", "human": "eloise"});
    let (_, created) = call(&app, "POST", "/session", Some(&req.to_string())).await;
    assert_eq!(created["machine_move"], "elem:a");
    assert_eq!(created["status"], "abelard_won");
    assert_eq!(created["legal_moves"], json!([]));
    assert_eq!(created["to_move"], Value::Null);
}

fn ef_session(human: Role) -> Session {
    let req: CreateRequest =
        serde_json::from_str(&ef_request(if human == Role::Eloise { "eloise" } else { "abelard" })).unwrap();
    Session::create(req).unwrap()
}

/// Every line of human play from `prefix` on, against the winning machine.
fn outcomes(prefix: &mut Vec<String>, out: &mut Vec<&'static str>) {
    let mut s = ef_session(Role::Eloise);
    for mv in prefix.iter() {
        s.human_move(mv).unwrap();
    }
    let view = s.view();
    if view.status != "ongoing" {
        out.push(view.status);
        return;
    }
    for mv in view.legal_moves {
        prefix.push(mv);
        outcomes(prefix, out);
        prefix.pop();
    }
}

#[test]
fn human_never_beats_the_winning_machine() {
    let mut out = Vec::new();
    outcomes(&mut Vec::new(), &mut out);
    assert!(!out.is_empty());
    assert!(out.iter().all(|&s| s == "abelard_won"), "{out:?}");
}
