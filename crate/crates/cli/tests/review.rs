mod common;

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::validation_case;
use http_body_util::BodyExt;
use refwhy::review::{replay, router, ReviewApp, ReviewState, VerdictLog};
use refwhy_core::llm::{Alignment, ValidationCase};
use refwhy_core::reference::{AGREEMENT_LABELS, AGREEMENT_TABLE};
use refwhy_core::stats::{bowker_test, cohen_kappa, ContingencyTable};
use serde_json::{json, Value};
use tower::ServiceExt;

fn open(log: &Path, cases: Vec<ValidationCase>, reviewers: &[&str], reveal: bool) -> (Router, Arc<ReviewApp>) {
    let mut state = ReviewState::new(cases, reviewers.iter().map(|r| r.to_string()).collect());
    let (log, verdicts) = VerdictLog::open(log).unwrap();
    assert_eq!(replay(&mut state, verdicts), 0);
    let app = Arc::new(ReviewApp::new(state, log, reveal));
    (router(app.clone(), None), app)
}

fn batch(n: usize) -> Vec<ValidationCase> {
    (0..n).map(|i| validation_case(i, None)).collect()
}

async fn send(router: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(router: &Router, uri: &str) -> (StatusCode, Value) {
    send(router, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(router: &Router, body: Value) -> (StatusCode, Value) {
    let req = Request::post("/api/verdicts")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(router, req).await
}

fn verdict(case: &str, reviewer: &str, decision: &str) -> Value {
    json!({ "case_id": case, "reviewer": reviewer, "decision": decision })
}

#[tokio::test]
async fn case_requests_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = open(&dir.path().join("v.ndjson"), batch(3), &["ana", "ben"], false);

    assert_eq!(get(&r, "/api/cases").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&r, "/api/cases?reviewer=").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&r, "/api/cases?reviewer=ana&case=nope").await.0, StatusCode::NOT_FOUND);

    let (s, body) = post(&r, verdict("nope", "ana", "agree")).await;
    assert_eq!(s, StatusCode::NOT_FOUND, "{body}");
    assert_eq!(post(&r, verdict("case-000", "zed", "agree")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&r, verdict("case-000", "", "agree")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&r, verdict("case-000", "ana", "maybe")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(post(&r, json!({ "case_id": "case-000", "reviewer": "ana" })).await.0, StatusCode::BAD_REQUEST);
    let mut extra = verdict("case-000", "ana", "agree");
    extra["score"] = json!(3);
    assert_eq!(post(&r, extra).await.0, StatusCode::BAD_REQUEST);
    let bad = Request::post("/api/verdicts").body(Body::from("{not json")).unwrap();
    assert_eq!(send(&r, bad).await.0, StatusCode::BAD_REQUEST);

    let (_, p) = get(&r, "/api/progress").await;
    assert_eq!(p["verdicts_logged"], 0);
}

#[tokio::test]
async fn reviewers_step_through_the_batch_and_last_write_wins() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = open(&dir.path().join("v.ndjson"), batch(3), &[], false);

    let (s, view) = get(&r, "/api/cases?reviewer=ana").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(view["case"]["case_id"], "case-000");
    assert_eq!(view["remaining"], 3);
    assert_eq!(view["total"], 3);
    assert!(view["my_verdict"].is_null());
    assert!(view.get("others").is_none());

    let (s, body) = post(&r, verdict("case-000", "ana", "agree")).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(body["replaced"], false);
    assert!(body["verdict"]["timestamp"].as_u64().unwrap() > 0);

    // ana moves on; ben starts where nobody has been yet
    assert_eq!(get(&r, "/api/cases?reviewer=ana").await.1["case"]["case_id"], "case-001");
    assert_eq!(get(&r, "/api/cases?reviewer=ben").await.1["case"]["case_id"], "case-001");

    let mut change = verdict("case-000", "ana", "disagree");
    change["correct_models"] = json!(["V1", "V3"]);
    change["note"] = json!("misses the test extraction");
    let (s, body) = post(&r, change).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(body["replaced"], true);

    let (_, view) = get(&r, "/api/cases?reviewer=ana&case=case-000").await;
    assert_eq!(view["my_verdict"]["decision"], "disagree");
    assert_eq!(view["my_verdict"]["correct_models"], json!(["V1", "V3"]));
    assert_eq!(view["remaining"], 2);

    for c in ["case-001", "case-002"] {
        post(&r, verdict(c, "ana", "agree")).await;
    }
    let (_, view) = get(&r, "/api/cases?reviewer=ana").await;
    assert!(view["case"].is_null());
    assert_eq!(view["remaining"], 0);

    let (_, p) = get(&r, "/api/progress").await;
    assert_eq!(p["total"], 3);
    assert_eq!(p["reviewed"], 3);
    assert_eq!(p["verdicts_logged"], 4);
    assert_eq!(p["per_reviewer"]["ana"], 3);
}

#[tokio::test]
async fn identical_reviewers_agree_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = open(&dir.path().join("v.ndjson"), batch(10), &[], false);
    for i in 0..10 {
        let d = if i % 3 == 0 { "disagree" } else { "agree" };
        for who in ["ana", "ben"] {
            assert_eq!(post(&r, verdict(&format!("case-{i:03}"), who, d)).await.0, StatusCode::CREATED);
        }
    }
    let (_, a) = get(&r, "/api/agreement").await;
    let pair = &a["reviewer_pairs"][0];
    assert_eq!(pair["reviewers"], json!(["ana", "ben"]));
    assert_eq!(pair["shared_cases"], 10);
    assert_eq!(pair["summary"]["kappa"]["kappa"].as_f64().unwrap(), 1.0);
    assert_eq!(pair["summary"]["raw_agreement"].as_f64().unwrap(), 100.0);
}

fn reference_batch() -> (Vec<ValidationCase>, Vec<Alignment>) {
    let mut cases = Vec::new();
    let mut human = Vec::new();
    let pick = |i: usize| if i == 0 { Alignment::No } else { Alignment::Yes };
    for (llm, row) in AGREEMENT_TABLE.iter().enumerate() {
        for (hum, &n) in row.iter().enumerate() {
            for _ in 0..n {
                // "extends" counts as related on either side
                let llm_label = if llm == 1 && cases.len() % 5 == 0 { Alignment::Extends } else { pick(llm) };
                cases.push(validation_case(cases.len(), Some(llm_label)));
                human.push(pick(hum));
            }
        }
    }
    (cases, human)
}

#[tokio::test]
async fn replayed_reference_verdicts_reproduce_the_reported_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let (cases, human) = reference_batch();
    assert_eq!(cases.len(), 198);
    let ids: Vec<String> = cases.iter().map(|c| c.case_id.clone()).collect();
    let (r, _) = open(&dir.path().join("v.ndjson"), cases, &[], false);
    for (id, h) in ids.iter().zip(&human) {
        let mut v = verdict(id, "ana", if *h == Alignment::No { "disagree" } else { "agree" });
        v["alignment"] = json!(h.label());
        assert_eq!(post(&r, v).await.0, StatusCode::CREATED);
    }

    let (_, a) = get(&r, "/api/agreement").await;
    let s = &a["llm_vs_reviewer"][0]["summary"];
    assert_eq!(a["llm_vs_reviewer"][0]["rater"], "ana");
    assert_eq!(s["table"]["counts"], json!([[59, 8], [34, 97]]));
    assert_eq!(s["agreements"], 156);
    let kappa = s["kappa"]["kappa"].as_f64().unwrap();
    assert!((kappa - 0.567).abs() < 1e-3, "{kappa}");
    assert!((s["bowker"]["chi2"].as_f64().unwrap() - 16.095).abs() < 1e-3);

    let table = ContingencyTable::new(AGREEMENT_LABELS.to_vec(), AGREEMENT_TABLE.iter().map(|r| r.to_vec()).collect())
        .unwrap();
    assert_eq!(kappa, cohen_kappa(&table).unwrap().statistic);
    assert_eq!(s["bowker"]["chi2"].as_f64().unwrap(), bowker_test(&table).unwrap().statistic);
}

#[tokio::test]
async fn majority_vote_and_cases_needing_a_third_reviewer() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<_> = (0..3).map(|i| validation_case(i, Some(Alignment::Yes))).collect();
    let (r, _) = open(&dir.path().join("v.ndjson"), cases, &[], false);

    post(&r, verdict("case-000", "ana", "agree")).await;
    let (_, body) = post(&r, verdict("case-000", "ben", "disagree")).await;
    assert!(body["resolution"].is_null());
    let (_, p) = get(&r, "/api/progress").await;
    assert_eq!(p["needs_third"], json!(["case-000"]));
    assert_eq!(p["resolved"], 0);

    let (_, body) = post(&r, verdict("case-000", "cy", "disagree")).await;
    assert_eq!(body["resolution"], "disagree");
    // a third reviewer is routed to the least-reviewed case, not case-000
    assert_eq!(get(&r, "/api/cases?reviewer=dee").await.1["case"]["case_id"], "case-001");

    for (who, d) in [("ana", "agree"), ("ben", "agree"), ("cy", "disagree")] {
        let mut v = verdict("case-001", who, d);
        v["alignment"] = json!(if d == "agree" { "yes" } else { "no" });
        post(&r, v).await;
    }
    let (_, p) = get(&r, "/api/progress").await;
    assert_eq!(p["needs_third"], json!([]));
    assert_eq!(p["resolved"], 2);
    let (_, a) = get(&r, "/api/agreement").await;
    assert_eq!(a["majority"], json!({ "resolved": 2, "agree": 1, "disagree": 1, "tied": 0 }));
    assert_eq!(a["llm_vs_majority"]["summary"]["n"], 1);
    assert_eq!(a["reviewer_pairs"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn verdicts_survive_a_restart_and_a_torn_write() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("review/v.ndjson");
    {
        let (r, _) = open(&log, batch(3), &[], false);
        post(&r, verdict("case-000", "ana", "agree")).await;
        post(&r, verdict("case-001", "ana", "agree")).await;
        post(&r, verdict("case-001", "ana", "disagree")).await;
    }
    let intact = std::fs::read(&log).unwrap();
    assert_eq!(intact.iter().filter(|&&b| b == b'\n').count(), 3);
    let mut torn = intact.clone();
    torn.extend_from_slice(br#"{"case_id":"case-002","revi"#);
    std::fs::write(&log, torn).unwrap();

    let (r, app) = open(&log, batch(3), &[], false);
    assert_eq!(std::fs::read(&log).unwrap(), intact);
    let state = app.state();
    assert_eq!(state.verdict("case-001", "ana").unwrap().decision, refwhy_core::llm::Decision::Disagree);
    assert_eq!(state.progress().verdicts_logged, 3);
    assert_eq!(get(&r, "/api/cases?reviewer=ana").await.1["case"]["case_id"], "case-002");

    post(&r, verdict("case-002", "ana", "agree")).await;
    let (_, app) = open(&log, batch(3), &[], false);
    assert_eq!(app.state().progress().reviewed, 3);
}

#[tokio::test]
async fn other_verdicts_are_hidden_unless_revealed() {
    let dir = tempfile::tempdir().unwrap();
    for reveal in [false, true] {
        let (r, _) = open(&dir.path().join(format!("{reveal}.ndjson")), batch(1), &[], reveal);
        post(&r, verdict("case-000", "ana", "disagree")).await;
        let (_, view) = get(&r, "/api/cases?reviewer=ben").await;
        if reveal {
            assert_eq!(view["others"][0]["reviewer"], "ana");
        } else {
            assert!(view.get("others").is_none());
        }
    }
}

#[tokio::test]
async fn serves_the_bundled_page_or_a_static_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (r, _) = open(&dir.path().join("v.ndjson"), batch(1), &[], false);
    let resp = r.clone().oneshot(Request::get("/").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let html = resp.into_body().collect().await.unwrap().to_bytes();
    assert!(std::str::from_utf8(&html).unwrap().contains("/api/verdicts"));

    let site = dir.path().join("site");
    std::fs::create_dir(&site).unwrap();
    std::fs::write(site.join("index.html"), "<p>custom</p>").unwrap();
    std::fs::write(site.join("app.js"), "console.log(1)").unwrap();
    let mut state = ReviewState::new(batch(1), vec![]);
    let (log, v) = VerdictLog::open(&dir.path().join("w.ndjson")).unwrap();
    replay(&mut state, v);
    let r = router(Arc::new(ReviewApp::new(state, log, false)), Some(site));
    for (uri, want) in [("/", "<p>custom</p>"), ("/app.js", "console.log(1)")] {
        let resp = r.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK, "{uri}");
        assert_eq!(resp.into_body().collect().await.unwrap().to_bytes(), want.as_bytes());
    }
    assert_eq!(get(&r, "/missing.css").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&r, "/api/progress").await.1["total"], 1);
}
