use std::collections::BTreeMap;
use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use phishbook::agreement::{agreement_report, AnnotationSet};
use phishbook::autocoder::{code_email, Lexicons, Recipient};
use phishbook::codebook::{read_coded_csv, Code, CodebookSchema, CodedEmail};
use phishbook::corpus::{to_record, EmailId, EmailRecord, Origin, RawEmail};
use phishbook::jsonl::read_jsonl;
use phishbook::service::{router, Annotation, AnnotationStore, AppState};

fn jose() -> Recipient {
    Recipient { name: "Jose".into(), address: "jose@monkey.org".into() }
}

fn coders() -> BTreeMap<String, String> {
    [("ana", "tok-ana"), ("ben", "tok-ben")].map(|(c, t)| (c.to_string(), t.to_string())).into()
}

fn blank_records(n: usize) -> Vec<EmailRecord> {
    (1..=n).map(|i| EmailRecord::blank(EmailId::new(2020, i, 3))).collect()
}

fn app_with(records: Vec<EmailRecord>) -> (Router, AppState) {
    let store = AnnotationStore::new(records, CodebookSchema::default(), coders());
    let state = AppState::new(store, Lexicons::embedded(), jose());
    (router(state.clone()), state)
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(
    app: &Router,
    method: &str,
    uri: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, token, body).await;
    (s, serde_json::from_slice(&b).unwrap_or_else(|_| panic!("not json: {}", String::from_utf8_lossy(&b))))
}

fn coded(i: usize) -> CodedEmail {
    CodedEmail::empty(format!("2020_{i:03}"))
}

fn with_action(i: usize, action: &str) -> Value {
    let mut c = coded(i);
    c.actions_generic = [action.to_string()].into();
    serde_json::to_value(c).unwrap()
}

#[tokio::test]
async fn next_email_then_exhaustion() {
    let (app, _) = app_with(blank_records(3));
    let (s, v) = call_json(&app, "GET", "/api/emails/next?coder=ana", Some("tok-ana"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "assigned");
    assert_eq!(v["email"]["id"], "2020_001");
    assert_eq!(v["remaining"], 3);
    for i in 1..=3 {
        let (s, _) = call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!(coded(i)))).await;
        assert_eq!(s, StatusCode::OK);
    }
    let (_, v) = call_json(&app, "GET", "/api/emails/next", Some("tok-ana"), None).await;
    assert_eq!(v["status"], "exhausted");
}

#[tokio::test]
async fn auth_is_enforced() {
    let (app, _) = app_with(blank_records(1));
    let (s, v) = call_json(&app, "GET", "/api/emails/next?coder=ana", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNAUTHORIZED, Some("unauthorized")));
    let (s, _) = call_json(&app, "GET", "/api/emails/next?coder=ana", Some("wrong"), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, v) = call_json(&app, "GET", "/api/emails/next?coder=ben", Some("tok-ana"), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::FORBIDDEN, Some("forbidden")));
    let (s, v) = call_json(&app, "GET", "/api/agreement?a=ana&b=zed", Some("tok-ana"), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_coder")));
}

#[tokio::test]
async fn wetransfer_suggestions_match_the_autocoder() {
    let raw = RawEmail {
        source: std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wetransfer.eml")).unwrap(),
        origin: Origin { archive: "wetransfer.eml".into(), index: 0 },
    };
    let record = to_record(&raw, EmailId::new(2017, 1, 3)).unwrap();
    let expected = code_email(&record, &Lexicons::embedded(), &CodebookSchema::default(), &jose());
    let (app, _) = app_with(vec![record]);
    let (_, v) = call_json(&app, "GET", "/api/emails/next?coder=ben", Some("tok-ben"), None).await;
    let got: CodedEmail = serde_json::from_value(v["suggestions"].clone()).unwrap();
    assert_eq!(got, expected);
    assert_eq!(got.sector, "document share");
    assert!(v["email"].get("body_html").is_none());
}

#[tokio::test]
async fn invalid_submission_is_rejected_with_violations() {
    let (app, _) = app_with(blank_records(1));
    let mut c = coded(1);
    c.sector = "crypto".into();
    let (s, v) = call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!(c))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "invalid_annotation");
    assert_eq!(v["violations"][0]["field"], "sector");
    assert!(v["violations"][0]["message"].as_str().unwrap().contains("unknown sector"));

    let (s, v) = call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!({"email_id": 3}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));
    assert!(v["violations"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn resubmission_overwrites() {
    let (app, state) = app_with(blank_records(1));
    let (_, first) = call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!(coded(1)))).await;
    let mut c = coded(1);
    c.threat = "threat".into();
    c.main_topic = "Your Mailbox!".into();
    let (_, second) = call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!(c))).await;
    assert_eq!(second["coded"]["threat"], "threat");
    assert_eq!(second["coded"]["main_topic"], "your mailbox");
    assert!(second["at"].as_str().unwrap() > first["at"].as_str().unwrap());
    assert_eq!(state.store.read().unwrap().annotations().count(), 1);
}

#[tokio::test]
async fn live_agreement_on_the_five_item_sequences() {
    let (app, _) = app_with(blank_records(5));
    let a = ["click", "click", "download", "download", "click"];
    let b = ["click", "download", "download", "download", "click"];
    for i in 0..5 {
        call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(with_action(i + 1, a[i]))).await;
        call_json(&app, "POST", "/api/annotations", Some("tok-ben"), Some(with_action(i + 1, b[i]))).await;
    }
    let (s, v) = call_json(&app, "GET", "/api/agreement?a=ana&b=ben", Some("tok-ana"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["shared"], 5);
    let actions = &v["report"]["per_code"]["actions_generic"];
    assert!((actions["kappa"].as_f64().unwrap() - 0.6154).abs() < 1e-4);
    assert!((actions["alpha"].as_f64().unwrap() - 0.64).abs() < 1e-4);
    assert_eq!(v["report"]["per_code"]["threat"]["kappa"], 1.0);

    let (_, d) = call_json(&app, "GET", "/api/disagreements?a=ana&b=ben", Some("tok-ben"), None).await;
    assert_eq!(d.as_array().unwrap().len(), 1);
    assert_eq!(d[0]["email_id"], "2020_002");

    // live agreement equals the batch computation on the exported files
    let (_, csv_a) = call(&app, "GET", "/api/export?format=csv&coder=ana", Some("tok-ana"), None).await;
    let (_, csv_b) = call(&app, "GET", "/api/export?format=csv&coder=ben", Some("tok-ana"), None).await;
    let sa = AnnotationSet::from_coded("ana", &read_coded_csv(&csv_a[..]).unwrap());
    let sb = AnnotationSet::from_coded("ben", &read_coded_csv(&csv_b[..]).unwrap());
    let batch = serde_json::to_value(agreement_report(&sa, &sb, &Code::RELIABILITY).unwrap()).unwrap();
    assert_eq!(batch, v["report"]);
}

#[tokio::test]
async fn zero_overlap_gives_empty_marker() {
    let (app, _) = app_with(blank_records(2));
    call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!(coded(1)))).await;
    let (s, v) = call_json(&app, "GET", "/api/agreement?a=ana&b=ben", Some("tok-ana"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "empty");
}

#[tokio::test]
async fn export_import_round_trip() {
    let (app, state) = app_with(blank_records(3));
    for i in 1..=3 {
        call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(with_action(i, "click"))).await;
    }
    call_json(&app, "POST", "/api/annotations", Some("tok-ben"), Some(with_action(2, "call"))).await;
    let (s, body) = call(&app, "GET", "/api/export?format=jsonl", Some("tok-ben"), None).await;
    assert_eq!(s, StatusCode::OK);
    let exported: Vec<Annotation> = read_jsonl(&body[..]).unwrap();
    let mut fresh = AnnotationStore::new(blank_records(3), CodebookSchema::default(), coders());
    fresh.import(exported).unwrap();
    let original: Vec<Annotation> = state.store.read().unwrap().annotations().cloned().collect();
    assert_eq!(fresh.annotations().cloned().collect::<Vec<_>>(), original);

    let (s, v) = call_json(&app, "GET", "/api/export?format=csv", Some("tok-ben"), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));
    let (s, _) = call_json(&app, "GET", "/api/export?format=xml&coder=ana", Some("tok-ben"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn schema_lists_all_codes() {
    let (app, _) = app_with(blank_records(1));
    let (s, v) = call_json(&app, "GET", "/api/schema", None, None).await;
    assert_eq!(s, StatusCode::OK);
    let codes = v["codes"].as_array().unwrap();
    assert_eq!(codes.len(), 8);
    let sector = codes.iter().find(|c| c["key"] == "sector").unwrap();
    assert!(sector["vocabulary"].as_array().unwrap().iter().any(|s| s == "document share"));
    assert_eq!(codes.iter().find(|c| c["key"] == "main_topic").unwrap()["vocabulary"], Value::Null);
}

#[tokio::test]
async fn clusters_over_annotations() {
    let (app, _) = app_with(blank_records(5));
    let rows = [
        ("document share", "download", "wetransfer", "received file via wetransfer", "get file"),
        ("financial", "click", "paypal", "account notice", "verify account"),
        ("document share", "download", "wetransfer", "received file via wetransfer", "get file"),
        ("financial", "click", "usaa", "new security safeguard", "update personal information"),
        ("financial", "click", "paypal", "account notice", "verify account"),
    ];
    for (i, (sector, action, company, topic, specific)) in rows.into_iter().enumerate() {
        let mut c = coded(i + 1);
        c.sector = sector.into();
        c.actions_generic = [action.to_string()].into();
        c.company_names = vec![company.into()];
        c.main_topic = topic.into();
        c.action_specific = vec![specific.into()];
        call_json(&app, "POST", "/api/annotations", Some("tok-ana"), Some(json!(c))).await;
    }
    let (s, v) = call_json(&app, "GET", "/api/clusters?matcher=exact&min_size=1", Some("tok-ana"), None).await;
    assert_eq!(s, StatusCode::OK);
    let sizes: Vec<u64> = v["leaves"].as_array().unwrap().iter().map(|l| l["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![2, 2, 1]);
    let (s, v) = call_json(&app, "GET", "/api/clusters?matcher=levenshtein:40&coder=ana", Some("tok-ana"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["matcher"]["kind"], "levenshtein");
    let (s, _) = call_json(&app, "GET", "/api/clusters?matcher=fuzzy", Some("tok-ana"), None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_coders_do_not_interleave() {
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("journal.jsonl");
    let mut store = AnnotationStore::new(blank_records(40), CodebookSchema::default(), coders());
    store.open_journal(&journal).unwrap();
    let state = AppState::new(store, Lexicons::embedded(), jose());
    let app = router(state.clone());
    let mut tasks = Vec::new();
    for (coder, token, action) in [("ana", "tok-ana", "click"), ("ben", "tok-ben", "call")] {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            for i in 1..=40 {
                let (s, _) =
                    call_json(&app, "POST", "/api/annotations", Some(token), Some(with_action(i, action))).await;
                assert_eq!(s, StatusCode::OK, "{coder} {i}");
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let live: Vec<Annotation> = state.store.read().unwrap().annotations().cloned().collect();
    assert_eq!(live.len(), 80);
    let mut revisions: Vec<u64> = live.iter().map(|a| a.revision).collect();
    revisions.sort();
    assert_eq!(revisions, (1..=80).collect::<Vec<_>>());

    // the journal replays to the same state, in one serial order
    let mut replayed = AnnotationStore::new(blank_records(40), CodebookSchema::default(), coders());
    assert_eq!(replayed.open_journal(&journal).unwrap(), 80);
    assert_eq!(replayed.annotations().cloned().collect::<Vec<_>>(), live);
    let lines = std::fs::read_to_string(&journal).unwrap();
    let order: Vec<u64> = lines.lines().map(|l| serde_json::from_str::<Annotation>(l).unwrap().revision).collect();
    assert_eq!(order, (1..=80).collect::<Vec<_>>());
}
