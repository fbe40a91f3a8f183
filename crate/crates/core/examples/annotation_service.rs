//! The annotation HTTP API behind the coding workbench. By default two
//! coders annotate a small archive in-process and the example prints their
//! live agreement; with `--serve` it listens on 127.0.0.1:8080 instead.
//!
//! ```text
//! cargo run --example annotation_service
//! cargo run --example annotation_service -- --serve
//! curl -H 'Authorization: Bearer token-a' localhost:8080/api/emails/next
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use phishbook::autocoder::{Lexicons, Recipient};
use phishbook::codebook::CodebookSchema;
use phishbook::corpus::{assign_ids, parse_mailbox, to_record, ArchiveFormat};
use phishbook::service::{router, serve, AnnotationStore, AppState};
use serde_json::Value;
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, token: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("authorization", format!("Bearer {token}"))
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/five.mbox");
    let parsed = parse_mailbox(&std::fs::read(&path)?, ArchiveFormat::Mbox, "five.mbox")?;
    let ids = assign_ids(2018, parsed.emails.len());
    let records = parsed.emails.iter().zip(ids).map(|(raw, id)| to_record(raw, id)).collect::<Result<Vec<_>, _>>()?;

    let coders = BTreeMap::from([("a".to_string(), "token-a".to_string()), ("b".to_string(), "token-b".to_string())]);
    let store = AnnotationStore::new(records, CodebookSchema::default(), coders);
    let state = AppState::new(store, Lexicons::embedded(), Recipient::default());

    if std::env::args().any(|a| a == "--serve") {
        let addr = "127.0.0.1:8080".parse()?;
        println!("listening on http://{addr}");
        serve(addr, state).await?;
        return Ok(());
    }

    let app = router(state);
    for (coder, token) in [("a", "token-a"), ("b", "token-b")] {
        loop {
            let (_, next) = call(&app, "GET", "/api/emails/next", token, None).await;
            if next["status"] == "exhausted" {
                break;
            }
            // both accept the suggestions, except that coder b disagrees on the first email's urgency
            let mut coded = next["suggestions"].clone();
            if coder == "b" && next["email"]["id"] == "2018_001" {
                coded["urgency"] = if coded["urgency"] == "urgent" { "none" } else { "urgent" }.into();
            }
            let (status, stored) = call(&app, "POST", "/api/annotations", token, Some(coded)).await;
            println!("{coder} annotated {} -> {status} (revision {})", stored["coded"]["email_id"], stored["revision"]);
        }
    }
    let (_, agreement) = call(&app, "GET", "/api/agreement?a=a&b=b", "token-a", None).await;
    println!("{}", serde_json::to_string_pretty(&agreement)?);
    let (_, log) = call(&app, "GET", "/api/disagreements?a=a&b=b", "token-a", None).await;
    println!("disagreements: {log}");
    Ok(())
}
