use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use nelv_service::{http, Planner, PlannerConfig};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Harness {
    _dir: tempfile::TempDir,
    data: PathBuf,
    catalog: Option<PathBuf>,
    app: Router,
}

fn planner(data: &PathBuf, catalog: &Option<PathBuf>) -> Planner {
    let mut cfg = PlannerConfig::new(data);
    cfg.catalog_dir = catalog.clone();
    cfg.seed = 11;
    Planner::new(cfg).unwrap()
}

fn harness(catalog: Option<&str>) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sessions");
    let catalog = catalog.map(|c| fixtures().join(c));
    let app = http::router(Arc::new(planner(&data, &catalog)));
    Harness {
        _dir: dir,
        data,
        catalog,
        app,
    }
}

impl Harness {
    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let res = self.app.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.call(method, uri, body).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn new_session(&self) -> String {
        let (s, v) = self.json("POST", "/sessions", None).await;
        assert_eq!(s, StatusCode::CREATED);
        assert_eq!(v["stage"], Value::Null);
        v["id"].as_str().unwrap().to_string()
    }

    async fn say(&self, id: &str, text: &str) -> Value {
        let (s, v) = self
            .json("POST", &format!("/sessions/{id}/instructions"), Some(json!({ "text": text })))
            .await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }

    async fn stage(&self, id: &str, stage: &str, options: Value) -> (StatusCode, Value) {
        self.json(
            "POST",
            &format!("/sessions/{id}/stages"),
            Some(json!({ "stage": stage, "options": options })),
        )
        .await
    }
}

fn quick() -> Value {
    json!({ "population": 10, "generations": 15 })
}

#[tokio::test]
async fn sessions_get_distinct_ids_that_survive_a_restart() {
    let h = harness(None);
    let a = h.new_session().await;
    let b = h.new_session().await;
    assert_ne!(a, b);
    let restarted = planner(&h.data, &h.catalog);
    assert_eq!(restarted.session(&a).unwrap().id, a);
    let (s, v) = h.json("GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["id"], b.as_str());
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let h = harness(None);
    let (s, v) = h.json("GET", "/sessions/missing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["kind"], "not_found");
    let (s, _) = h
        .json("POST", "/sessions/missing/instructions", Some(json!({ "text": "hi" })))
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn uc1_dialogue_updates_the_fleet() {
    let h = harness(Some("uc1"));
    let id = h.new_session().await;
    let v = h
        .say(&id, "I would like to check all forests near Purdue University within 5 km.")
        .await;
    assert_eq!(v["outcome"]["spec"]["fleet_size"], 1);
    let v = h.say(&id, "I have 5 UAVs for the mission.").await;
    assert_eq!(v["outcome"]["status"], "ready");
    assert_eq!(v["outcome"]["spec"]["fleet_size"], 5);
    let (s, v) = h.stage(&id, "route", json!({})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["vehicles"].as_array().unwrap().len(), 5);
    let (_, overlay) = h.json("GET", &format!("/sessions/{id}/overlays/route"), None).await;
    assert_eq!(overlay["features"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn gibberish_needs_clarification() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    let v = h.say(&id, "blorp zzz").await;
    assert_eq!(v["outcome"]["status"], "needs_clarification");
    let missing: Vec<&str> = v["outcome"]["missing"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_str().unwrap())
        .collect();
    assert_eq!(missing, ["start", "end"]);
    let (s, v) = h.stage(&id, "route", json!({})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["kind"], "needs_clarification");
}

#[tokio::test]
async fn stages_run_in_order() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    h.say(&id, "Fly from New York to Los Angeles.").await;
    let (s, v) = h.stage(&id, "path", quick()).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["kind"], "stage_order");
    assert_eq!(v["missing"], "routed");
    let (s, v) = h.stage(&id, "trajectory", json!({})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["missing"], "pathed");
    let (s, _) = h.call("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn uc3_route_alternatives_and_cheapest_follow_up() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    h.say(&id, "Fly from New York to Los Angeles.").await;
    let (s, v) = h.stage(&id, "route", json!({})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["selected"], "balanced");
    let mut labels: Vec<String> = v["alternatives"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|a| a["labels"].as_array().unwrap().iter().map(|l| l.as_str().unwrap().to_string()))
        .collect();
    labels.sort();
    assert_eq!(labels, ["balanced", "cheapest", "fastest", "shortest"]);

    let v = h.say(&id, "Choose the cheapest option.").await;
    assert_eq!(v["outcome"]["spec"]["preference"], "cheapest");
    assert_eq!(v["stage"], "parsed");
    let (_, rec) = h.json("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(rec["routes"].as_array().unwrap().len(), 0);
    assert_eq!(rec["stage"], "parsed");
    let (_, v) = h.stage(&id, "route", json!({})).await;
    assert_eq!(v["selected"], "cheapest");
}

#[tokio::test]
async fn full_pipeline_overlays_export_and_freeze() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    h.say(&id, "Fly from New York to Los Angeles.").await;
    h.say(&id, "Choose the cheapest option.").await;
    let (s, _) = h.call("GET", &format!("/sessions/{id}/overlays/path"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, route) = h.stage(&id, "route", json!({})).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = h.stage(&id, "path", quick()).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["stage"], "pathed");
    let n = route["vehicles"][0]["nodes"].as_array().unwrap().len();
    let (s, overlay) = h.json("GET", &format!("/sessions/{id}/overlays/path"), None).await;
    assert_eq!(s, StatusCode::OK);
    let features = overlay["features"].as_array().unwrap();
    assert_eq!(features.len(), 1);
    assert_eq!(features[0]["geometry"]["type"], "LineString");
    assert_eq!(features[0]["geometry"]["coordinates"].as_array().unwrap().len(), n + (n - 1) * 8);
    let (_, airspace) = h.json("GET", &format!("/sessions/{id}/overlays/airspace"), None).await;
    assert!(!airspace["features"].as_array().unwrap().is_empty());
    let (s, pop) = h.json("GET", &format!("/sessions/{id}/overlays/population"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(pop["features"].as_array().unwrap().is_empty());
    let (s, _) = h.call("GET", &format!("/sessions/{id}/overlays/terrain"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, v) = h.stage(&id, "trajectory", json!({})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (s, first) = h.call("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(first.starts_with(b"NELV-MISSION 1\n"));
    let (_, again) = h.call("GET", &format!("/sessions/{id}/export?vehicle=0"), None).await;
    assert_eq!(first, again);
    let (s, _) = h.call("GET", &format!("/sessions/{id}/export?vehicle=3"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, v) = h.stage(&id, "upload", json!({})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["stage"], "uploaded");
    let (s, v) = h
        .json("POST", &format!("/sessions/{id}/instructions"), Some(json!({ "text": "Fly to Phoenix." })))
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["kind"], "frozen");
    let (s, _) = h.stage(&id, "route", json!({})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (_, after) = h.call("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(after, first);
}

#[tokio::test]
async fn rerunning_a_stage_drops_later_ones() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    h.say(&id, "Fly from New York to Los Angeles.").await;
    h.stage(&id, "route", json!({})).await;
    h.stage(&id, "path", quick()).await;
    let (s, v) = h.stage(&id, "route", json!({ "preference": "shortest" })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["stage"], "routed");
    assert_eq!(v["selected"], "shortest");
    let (_, rec) = h.json("GET", &format!("/sessions/{id}"), None).await;
    assert!(rec["paths"].as_array().unwrap().is_empty());
    let (s, _) = h.call("GET", &format!("/sessions/{id}/overlays/path"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn path_stage_can_switch_alternatives() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    h.say(&id, "Fly from New York to Los Angeles.").await;
    let (_, route) = h.stage(&id, "route", json!({})).await;
    let cheapest = route["alternatives"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["labels"].as_array().unwrap().contains(&json!("cheapest")))
        .unwrap()["nodes"]
        .clone();
    let mut opts = quick();
    opts["label"] = json!("cheapest");
    let (s, v) = h.stage(&id, "path", opts).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["selected"], "cheapest");
    assert_eq!(v["vehicles"][0]["nodes"], cheapest);
    let mut opts = quick();
    opts["label"] = json!("fastest");
    let known = route["alternatives"]
        .as_array()
        .unwrap()
        .iter()
        .any(|a| a["labels"].as_array().unwrap().contains(&json!("fastest")));
    let (s, _) = h.stage(&id, "path", opts).await;
    assert_eq!(s == StatusCode::OK, known);
}

#[tokio::test]
async fn weather_layer_is_a_risk_grid() {
    let h = harness(Some("uc2"));
    let id = h.new_session().await;
    let (s, v) = h.json("GET", &format!("/sessions/{id}/overlays/weather"), None).await;
    assert_eq!(s, StatusCode::OK);
    let f = v["features"].as_array().unwrap();
    assert!(!f.is_empty());
    assert_eq!(f[0]["geometry"]["type"], "Polygon");
    assert!(f[0]["properties"]["risk"].is_number());
}

#[tokio::test]
async fn empty_instructions_are_rejected() {
    let h = harness(None);
    let id = h.new_session().await;
    let (s, v) = h
        .json("POST", &format!("/sessions/{id}/instructions"), Some(json!({ "text": "   " })))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn swarm_time_budget_still_yields_a_path() {
    let h = harness(Some("uc3"));
    let id = h.new_session().await;
    h.say(&id, "Fly from New York to Los Angeles.").await;
    h.stage(&id, "route", json!({})).await;
    let (s, v) = h
        .stage(&id, "path", json!({ "generations": 100000, "time_budget_ms": 1 }))
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["stage"], "pathed");
    let (s, _) = h.stage(&id, "trajectory", json!({})).await;
    assert_eq!(s, StatusCode::OK);
}
