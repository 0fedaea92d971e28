use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use credchain_core::{sha256, CallPayload, ChainConfig, Hash256};
use credchain_service::http::router;
use credchain_service::node::{InitParams, Node, NodeOptions};
use credchain_store::{FixedClock, OutboxNotifier};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

const ADMIN_EMAIL: &str = "admin@test.local";
const PASSWORD: &str = "correct horse";
const EPOCH: u64 = 1_700_000_000;

struct Harness {
    _dir: TempDir,
    node: Arc<Node>,
    app: Router,
    clock: Arc<FixedClock>,
}

fn harness() -> Harness {
    let dir = TempDir::new().unwrap();
    let clock = Arc::new(FixedClock::new(EPOCH));
    let chain = ChainConfig { difficulty: 6, ..ChainConfig::default() };
    let node = Node::init(
        dir.path(),
        InitParams { chain, seed: Some(11), admin_email: ADMIN_EMAIL.into(), admin_password: PASSWORD.into() },
        NodeOptions { clock: clock.clone(), session_ttl_secs: 3600 },
    )
    .unwrap();
    let node = Arc::new(node);
    Harness { app: router(node.clone()), _dir: dir, node, clock }
}

async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let req = match body {
        Some(b) => req.header(header::CONTENT_TYPE, "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    send(app, req).await
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn multipart(fields: &[(&str, &[u8])]) -> (String, Vec<u8>) {
    let boundary = "----credchain-test-boundary";
    let mut body = Vec::new();
    for (name, value) in fields {
        let filename = if *name == "file" { "; filename=\"doc.pdf\"" } else { "" };
        body.extend_from_slice(
            format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"{filename}\r\n\r\n").as_bytes(),
        );
        body.extend_from_slice(value);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}

async fn upload(app: &Router, token: &str, student_id: &str, doc_type: &str, file: &[u8]) -> (StatusCode, Value) {
    let (content_type, body) =
        multipart(&[("student_id", student_id.as_bytes()), ("doc_type", doc_type.as_bytes()), ("file", file)]);
    let req = Request::post("/university/documents")
        .header(header::AUTHORIZATION, format!("Bearer {token}"))
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .unwrap();
    send(app, req).await
}

async fn login(app: &Router, email: &str) -> String {
    let (status, body) =
        call(app, Method::POST, "/auth/login", None, Some(json!({"email": email, "password": PASSWORD}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["token"].as_str().unwrap().to_owned()
}

/// Admin, one confirmed university, one student with one confirmed document.
struct World {
    h: Harness,
    admin: String,
    uni: String,
    uni_id: String,
    student: String,
    student_id: String,
    other_student: String,
    doc_id: String,
    digest: String,
}

async fn add_university(h: &Harness, admin: &str, n: u32) -> (String, Value) {
    let (status, body) = call(
        &h.app,
        Method::POST,
        "/admin/universities",
        Some(admin),
        Some(json!({"name": format!("University {n}"), "country": "Jordan", "email": format!("u{n}@uni.edu"), "password": PASSWORD})),
    )
    .await;
    assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    (body["university_id"].as_str().unwrap().to_owned(), body)
}

async fn register(h: &Harness, uni_id: &str, email: &str) -> String {
    let (status, body) = call(
        &h.app,
        Method::POST,
        "/students/register",
        None,
        Some(json!({"name": "Sam", "email": email, "password": PASSWORD, "university_id": uni_id})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["student_id"].as_str().unwrap().to_owned()
}

async fn world() -> World {
    let h = harness();
    let admin = login(&h.app, ADMIN_EMAIL).await;
    let (uni_id, _) = add_university(&h, &admin, 1).await;
    h.node.mine_until_idle().unwrap();
    let uni = login(&h.app, "u1@uni.edu").await;
    let (s, _) =
        call(&h.app, Method::POST, "/university/doc-types", Some(&uni), Some(json!({"name": "Bachelor Degree"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let student_id = register(&h, &uni_id, "sam@example.com").await;
    register(&h, &uni_id, "kim@example.com").await;
    let student = login(&h.app, "sam@example.com").await;
    let other_student = login(&h.app, "kim@example.com").await;
    let (s, body) = upload(&h.app, &uni, &student_id, "Bachelor Degree", b"diploma of sam").await;
    assert_eq!(s, StatusCode::ACCEPTED, "{body}");
    h.node.mine_until_idle().unwrap();
    World {
        doc_id: body["doc_id"].as_str().unwrap().into(),
        digest: body["file_digest"].as_str().unwrap().into(),
        h,
        admin,
        uni,
        uni_id,
        student,
        student_id,
        other_student,
    }
}

#[tokio::test]
async fn login_rules() {
    let h = harness();
    let (s, body) =
        call(&h.app, Method::POST, "/auth/login", None, Some(json!({"email": ADMIN_EMAIL, "password": PASSWORD}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["role"], "Admin");
    assert_eq!(body["token"].as_str().unwrap().len(), 64);
    let token = body["token"].as_str().unwrap().to_owned();

    let (s, body) =
        call(&h.app, Method::POST, "/auth/login", None, Some(json!({"email": ADMIN_EMAIL, "password": "nope-nope"}))).await;
    assert_eq!((s, body), (StatusCode::UNAUTHORIZED, json!({"error": "Unauthorized"})));
    let (s, _) =
        call(&h.app, Method::POST, "/auth/login", None, Some(json!({"email": "ghost@x.y", "password": PASSWORD}))).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);

    assert_eq!(call(&h.app, Method::GET, "/admin/universities", Some(&token), None).await.0, StatusCode::OK);
    h.clock.advance(3600);
    let (s, body) = call(&h.app, Method::GET, "/admin/universities", Some(&token), None).await;
    assert_eq!((s, body), (StatusCode::UNAUTHORIZED, json!({"error": "Unauthorized"})));

    let token = login(&h.app, ADMIN_EMAIL).await;
    assert_eq!(call(&h.app, Method::POST, "/auth/logout", Some(&token), None).await.0, StatusCode::NO_CONTENT);
    assert_eq!(call(&h.app, Method::GET, "/auth/me", Some(&token), None).await.0, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn authorization_matrix() {
    let w = world().await;
    let tokens = [("anon", None), ("admin", Some(&w.admin)), ("university", Some(&w.uni)), ("student", Some(&w.student))];
    let share_path = format!("/student/documents/{}/share", w.doc_id);
    // (method, path, body, role allowed; None = public)
    let routes: Vec<(Method, String, Option<Value>, Option<&str>)> = vec![
        (Method::GET, "/admin/universities".into(), None, Some("admin")),
        (Method::POST, "/admin/universities".into(), Some(json!({})), Some("admin")),
        (Method::DELETE, "/admin/universities/UNI-999999".into(), None, Some("admin")),
        (Method::GET, "/admin/students".into(), None, Some("admin")),
        (Method::GET, "/university/doc-types".into(), None, Some("university")),
        (Method::POST, "/university/doc-types".into(), Some(json!({})), Some("university")),
        (Method::GET, "/university/documents".into(), None, Some("university")),
        (Method::POST, "/university/documents".into(), Some(json!({})), Some("university")),
        (Method::GET, "/university/students".into(), None, Some("university")),
        (Method::POST, "/university/students".into(), Some(json!({})), Some("university")),
        (Method::GET, "/student/documents".into(), None, Some("student")),
        (Method::POST, share_path.clone(), Some(json!({})), Some("student")),
        (Method::GET, "/auth/me".into(), None, Some("any")),
        (Method::GET, format!("/verify/{}", w.digest), None, None),
        (Method::GET, "/chain".into(), None, None),
        (Method::GET, "/universities".into(), None, None),
    ];
    for (method, path, body, allowed) in &routes {
        for (who, token) in &tokens {
            let (s, resp) = call(&w.h.app, method.clone(), path, token.map(String::as_str), body.clone()).await;
            let expected_denial = match (allowed, token) {
                (None, _) => None,
                (Some(_), None) => Some(StatusCode::UNAUTHORIZED),
                (Some("any"), Some(_)) => None,
                (Some(role), Some(_)) if role == who => None,
                (Some(_), Some(_)) => Some(StatusCode::FORBIDDEN),
            };
            match expected_denial {
                Some(code) => {
                    assert_eq!(s, code, "{method} {path} as {who}");
                    let expect = if code == StatusCode::UNAUTHORIZED { "Unauthorized" } else { "Forbidden" };
                    assert_eq!(resp, json!({"error": expect}), "{method} {path} as {who} leaks data");
                }
                None => assert!(
                    s != StatusCode::UNAUTHORIZED && s != StatusCode::FORBIDDEN,
                    "{method} {path} as {who} denied with {s}"
                ),
            }
        }
    }
    // Share additionally requires owning the document.
    let (s, resp) = call(
        &w.h.app,
        Method::POST,
        &share_path,
        Some(&w.other_student),
        Some(json!({"employer_email": "hr@corp.example"})),
    )
    .await;
    assert_eq!((s, resp), (StatusCode::FORBIDDEN, json!({"error": "Forbidden"})));
}

#[tokio::test]
async fn add_university_then_upload_before_mining() {
    let h = harness();
    let admin = login(&h.app, ADMIN_EMAIL).await;
    let (uni_id, body) = add_university(&h, &admin, 1).await;
    for key in ["address", "tx_hash", "funding_tx_hash"] {
        assert!(body[key].is_string(), "{key}");
    }
    let address = body["address"].as_str().unwrap().to_owned();
    let tx = body["tx_hash"].as_str().unwrap().to_owned();
    let (s, status) = call(&h.app, Method::GET, &format!("/tx/{tx}"), None, None).await;
    assert_eq!((s, status["status"].clone()), (StatusCode::OK, json!("pending")));

    let uni = login(&h.app, "u1@uni.edu").await;
    call(&h.app, Method::POST, "/university/doc-types", Some(&uni), Some(json!({"name": "Transcript"}))).await;
    let student_id = register(&h, &uni_id, "s@x.org").await;
    let (s, body) = upload(&h.app, &uni, &student_id, "Transcript", b"early").await;
    assert_eq!((s, body), (StatusCode::CONFLICT, json!({"error": "UniversityNotYetConfirmed"})));

    h.node.mine(1).unwrap();
    let on_chain = h.node.chain().read(|l| l.contract(&h.node.contract()).unwrap().universities().keys().map(|a| a.to_string()).collect::<Vec<_>>());
    assert_eq!(on_chain, vec![address]);
    let (_, status) = call(&h.app, Method::GET, &format!("/tx/{tx}"), None, None).await;
    assert_eq!(status["status"], "success");
    let (s, _) = upload(&h.app, &uni, &student_id, "Transcript", b"early").await;
    assert_eq!(s, StatusCode::ACCEPTED);

    let (s, body) = add_university_raw(&h, &admin, "u1@uni.edu").await;
    assert_eq!((s, body), (StatusCode::CONFLICT, json!({"error": "DuplicateEmail"})));
}

async fn add_university_raw(h: &Harness, admin: &str, email: &str) -> (StatusCode, Value) {
    call(
        &h.app,
        Method::POST,
        "/admin/universities",
        Some(admin),
        Some(json!({"name": "Dup", "country": "Jordan", "email": email, "password": PASSWORD})),
    )
    .await
}

#[tokio::test]
async fn upload_round_trip_and_rules() {
    let w = world().await;
    let app = &w.h.app;
    let (s, v) = call(app, Method::GET, &format!("/verify/{}", w.digest), None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["verified"], true);
    assert_eq!(v["issuer_name"], "University 1");
    assert_eq!(v["doc_type"], "Bachelor Degree");
    assert_eq!(w.digest, sha256(b"diploma of sam").to_hex());
    for key in ["university_address", "stored_at_block", "block_timestamp", "tx_hash"] {
        assert!(!v[key].is_null(), "{key}");
    }

    let flipped = sha256(b"diploma of sbm").to_hex();
    let (s, v) = call(app, Method::GET, &format!("/verify/{flipped}"), None, None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({"verified": false})));
    let (s, v) = call(app, Method::GET, &format!("/verify/{}", "zz".repeat(32)), None, None).await;
    assert_eq!((s, v), (StatusCode::BAD_REQUEST, json!({"error": "MalformedDigest"})));
    let (s, _) = call(app, Method::GET, &format!("/verify/{}", &w.digest[..63]), None, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, v) = upload(app, &w.uni, &w.student_id, "Master Degree", b"another").await;
    assert_eq!((s, v), (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "AddDocumentTypeFirst"})));
    let (s, v) = upload(app, &w.uni, "STU-999999", "Bachelor Degree", b"another").await;
    assert_eq!((s, v), (StatusCode::NOT_FOUND, json!({"error": "UnknownStudent"})));

    // Same file from a second university.
    let (uni2_id, _) = add_university(&w.h, &w.admin, 2).await;
    w.h.node.mine_until_idle().unwrap();
    let uni2 = login(app, "u2@uni.edu").await;
    let student2 = register(&w.h, &uni2_id, "lee@example.com").await;
    let (s, v) = upload(app, &uni2, &student2, "Bachelor Degree", b"diploma of sam").await;
    assert_eq!((s, v), (StatusCode::CONFLICT, json!({"error": "DuplicateHash"})));
    // A digest still in the mempool is also taken.
    let (s, _) = upload(app, &uni2, &student2, "Bachelor Degree", b"fresh").await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let (s, _) = upload(app, &w.uni, &w.student_id, "Bachelor Degree", b"fresh").await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (s, docs) = call(app, Method::GET, "/student/documents", Some(&w.student), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(docs.as_array().unwrap().len(), 1);
    assert_eq!(docs[0]["chain_status"], "confirmed");
    assert_eq!(docs[0]["file_digest"], w.digest);
}

#[tokio::test]
async fn upload_requires_all_fields() {
    let w = world().await;
    let (content_type, body) = multipart(&[("student_id", w.student_id.as_bytes()), ("file", b"x")]);
    let req = Request::post("/university/documents")
        .header(header::AUTHORIZATION, format!("Bearer {}", w.uni))
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .unwrap();
    let (s, v) = send(&w.h.app, req).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "BadRequest");
}

#[tokio::test]
async fn student_registration() {
    let w = world().await;
    let app = &w.h.app;
    let (s, v) = call(
        app,
        Method::POST,
        "/students/register",
        None,
        Some(json!({"name": "Sam", "email": "SAM@example.com ", "password": PASSWORD, "university_id": w.uni_id})),
    )
    .await;
    assert_eq!((s, v), (StatusCode::CONFLICT, json!({"error": "DuplicateEmail"})));
    let (s, v) = call(
        app,
        Method::POST,
        "/students/register",
        None,
        Some(json!({"name": "Ann", "email": "ann@example.com", "password": PASSWORD, "university_id": "UNI-424242"})),
    )
    .await;
    assert_eq!((s, v), (StatusCode::NOT_FOUND, json!({"error": "UnknownUniversity"})));
    // "Add Students" path shares the uniqueness rule.
    let (s, _) = call(
        app,
        Method::POST,
        "/university/students",
        Some(&w.uni),
        Some(json!({"name": "Kim", "email": "kim@example.com", "password": PASSWORD})),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = call(app, Method::GET, "/university/students", Some(&w.uni), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v.as_array().unwrap().len(), 2);
    let (s, v) = call(app, Method::POST, "/students/register", None, Some(json!({"name": 1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "BadRequest");
}

#[tokio::test]
async fn sharing_and_link_expiry() {
    let w = world().await;
    let app = &w.h.app;
    let share_path = format!("/student/documents/{}/share", w.doc_id);
    let (s, v) = call(
        app,
        Method::POST,
        &share_path,
        Some(&w.student),
        Some(json!({"employer_email": "hr@corp.example", "ttl": 60})),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let url = v["url"].as_str().unwrap().to_owned();
    assert_eq!(url, format!("/share/{}", v["token"].as_str().unwrap()));
    assert_eq!(v["expires_at"], EPOCH + 60);

    let outbox = OutboxNotifier::new(w.h.node.dir().join("outbox.jsonl")).read_all().unwrap();
    assert_eq!(outbox.len(), 1);
    assert_eq!(outbox[0].to, "hr@corp.example");
    assert_eq!(outbox[0].share_url, url);

    let (s, v) = call(app, Method::GET, &url, None, None).await;
    assert_eq!(s, StatusCode::OK);
    let direct = call(app, Method::GET, &format!("/verify/{}", w.digest), None, None).await.1;
    assert_eq!(v, direct);

    let (s, _) = call(app, Method::POST, "/student/documents/DOC-999999/share", Some(&w.student), Some(json!({"employer_email": "a@b.c"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(call(app, Method::GET, "/share/ffff", None, None).await.0, StatusCode::NOT_FOUND);

    w.h.clock.advance(61);
    let (s, v) = call(app, Method::GET, &url, None, None).await;
    assert_eq!((s, v), (StatusCode::GONE, json!({"error": "Expired"})));
}

#[tokio::test]
async fn deleting_a_university_hides_it_but_keeps_records() {
    let w = world().await;
    let app = &w.h.app;
    let (s, _) = call(app, Method::DELETE, &format!("/admin/universities/{}", w.uni_id), Some(&w.admin), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    assert_eq!(call(app, Method::GET, "/university/documents", Some(&w.uni), None).await.0, StatusCode::UNAUTHORIZED);
    let (_, list) = call(app, Method::GET, "/admin/universities", Some(&w.admin), None).await;
    assert_eq!(list, json!([]));
    let (s, _) =
        call(app, Method::POST, "/auth/login", None, Some(json!({"email": "u1@uni.edu", "password": PASSWORD}))).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (_, v) = call(app, Method::GET, &format!("/verify/{}", w.digest), None, None).await;
    assert_eq!((v["verified"].clone(), v["issuer_name"].clone()), (json!(true), json!("University 1")));
    let (s, _) = call(app, Method::DELETE, "/admin/universities/UNI-999999", Some(&w.admin), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn chain_payloads_carry_no_private_data() {
    let w = world().await;
    let store = w.h.node.store();
    let mut secrets: Vec<String> = Vec::new();
    for s in store.students() {
        secrets.extend([s.name, s.email, s.student_id]);
    }
    for d in store.documents() {
        secrets.push(d.doc_id);
    }
    secrets.push(PASSWORD.into());
    let mut export = Vec::new();
    w.h.node.export_chain(&mut export).unwrap();
    let export = String::from_utf8(export).unwrap();
    for secret in &secrets {
        assert!(!export.contains(secret.as_str()), "chain export contains {secret}");
    }
    let hashes: Vec<Hash256> = w.h.node.chain().read(|l| {
        l.blocks()
            .flat_map(|b| b.transactions.iter())
            .filter_map(|tx| match CallPayload::decode(&tx.payload) {
                Ok(CallPayload::StoreHash { cert_hash, .. }) => Some(cert_hash),
                _ => None,
            })
            .collect()
    });
    assert_eq!(hashes.iter().map(Hash256::to_hex).collect::<Vec<_>>(), vec![w.digest.clone()]);
}

#[tokio::test]
async fn restart_preserves_chain_mempool_and_store() {
    let w = world().await;
    let (s, pending) = upload(&w.h.app, &w.uni, &w.student_id, "Bachelor Degree", b"unmined").await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let summary = w.h.node.chain_summary();
    let dir = w.h.node.dir().to_path_buf();
    let Harness { node, app, _dir, clock } = w.h;
    drop(app);
    let node = Arc::try_unwrap(node).unwrap();
    drop(node);

    let reopened = Node::open(&dir, NodeOptions { clock, session_ttl_secs: 60 }).unwrap();
    assert_eq!(reopened.chain_summary(), summary);
    assert_eq!(reopened.store().students().len(), 2);
    reopened.mine_until_idle().unwrap();
    let digest: Hash256 = pending["file_digest"].as_str().unwrap().parse().unwrap();
    assert!(reopened.verify(&digest).verified);
    drop(_dir);
}

#[tokio::test]
async fn init_refuses_a_non_empty_dir() {
    let h = harness();
    let err = Node::init(
        h.node.dir(),
        InitParams { chain: ChainConfig::default(), seed: None, admin_email: "a@b.c".into(), admin_password: PASSWORD.into() },
        NodeOptions::default(),
    )
    .unwrap_err();
    assert_eq!(err.code(), "DataDirNotEmpty");
}

#[tokio::test]
async fn unknown_routes_and_tx_lookups() {
    let h = harness();
    assert_eq!(call(&h.app, Method::GET, "/nope", None, None).await.0, StatusCode::NOT_FOUND);
    let (s, v) = call(&h.app, Method::GET, &format!("/tx/{}", "ab".repeat(32)), None, None).await;
    assert_eq!((s, v), (StatusCode::NOT_FOUND, json!({"error": "UnknownTransaction"})));
    let (s, v) = call(&h.app, Method::GET, "/chain", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["height"], 1);
}
