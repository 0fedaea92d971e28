//! HTTP+JSON routes. Role checks run as route layers, so a caller without the
//! right role gets 401/403 before any body is parsed.

use std::sync::Arc;

use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Extension, Json, Router};
use credchain_core::Hash256;
use credchain_store::{NewStudent, Role};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::node::Node;
use crate::sessions::SessionPrincipal;

/// Upload bodies above this size are rejected with 413.
pub const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

type ApiResult<T> = Result<T, ServiceError>;

/// Runs a node operation off the async executor; store and chain writes fsync.
async fn blocking<T, F>(node: &Arc<Node>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Node) -> ApiResult<T> + Send + 'static,
{
    let node = node.clone();
    tokio::task::spawn_blocking(move || f(&node)).await.map_err(ServiceError::internal)?
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::BadRequest(e.body_text()))
}

fn parse_digest(text: &str) -> ApiResult<Hash256> {
    if text.len() != 64 {
        return Err(ServiceError::MalformedDigest);
    }
    text.to_ascii_lowercase().parse().map_err(|_| ServiceError::MalformedDigest)
}

fn bearer(req: &Request) -> Option<&str> {
    let value = req.headers().get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

/// Resolves the bearer token; `None` for the role admits any signed-in user.
async fn require_role(
    State((node, role)): State<(Arc<Node>, Option<Role>)>,
    mut req: Request,
    next: Next,
) -> Response {
    let Some(token) = bearer(&req) else {
        return ServiceError::Unauthorized.into_response();
    };
    let session = match node.authenticate(token) {
        Ok(s) => s,
        Err(e) => return e.into_response(),
    };
    if role.is_some_and(|r| r != session.role) {
        return ServiceError::Forbidden.into_response();
    }
    req.extensions_mut().insert(session);
    next.run(req).await
}

fn gated(node: &Arc<Node>, role: Option<Role>, routes: Router<Arc<Node>>) -> Router<Arc<Node>> {
    routes.route_layer(middleware::from_fn_with_state((node.clone(), role), require_role))
}

pub fn router(node: Arc<Node>) -> Router {
    let public = Router::new()
        .route("/auth/login", post(login))
        .route("/students/register", post(register_student))
        .route("/universities", get(public_universities))
        .route("/verify/{digest}", get(verify))
        .route("/share/{token}", get(resolve_share))
        .route("/tx/{hash}", get(tx_status))
        .route("/chain", get(chain_summary));
    let session = Router::new().route("/auth/logout", post(logout)).route("/auth/me", get(me));
    let admin = Router::new()
        .route("/admin/universities", post(add_university).get(list_universities))
        .route("/admin/universities/{id}", delete(delete_university))
        .route("/admin/students", get(list_all_students));
    let university = Router::new()
        .route("/university/doc-types", post(add_doc_type).get(list_doc_types))
        .route(
            "/university/documents",
            post(upload_document).get(university_documents).layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)),
        )
        .route("/university/students", post(add_student).get(university_students));
    let student = Router::new()
        .route("/student/documents", get(student_documents))
        .route("/student/documents/{doc_id}/share", post(share_document));

    Router::new()
        .merge(public)
        .merge(gated(&node, None, session))
        .merge(gated(&node, Some(Role::Admin), admin))
        .merge(gated(&node, Some(Role::University), university))
        .merge(gated(&node, Some(Role::Student), student))
        .fallback(|| async { ServiceError::NotFound("NoSuchRoute") })
        .with_state(node)
}

// ---- auth ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginRequest {
    email: String,
    password: String,
}

async fn login(
    State(node): State<Arc<Node>>,
    payload: Result<Json<LoginRequest>, JsonRejection>,
) -> ApiResult<Json<SessionPrincipal>> {
    let req = body(payload)?;
    blocking(&node, move |n| n.login(&req.email, &req.password)).await.map(Json)
}

async fn logout(State(node): State<Arc<Node>>, Extension(session): Extension<SessionPrincipal>) -> StatusCode {
    node.logout(&session.token);
    StatusCode::NO_CONTENT
}

#[derive(Serialize)]
struct Me {
    user_id: String,
    role: Role,
    name: String,
    email: String,
    expires_at: u64,
}

async fn me(State(node): State<Arc<Node>>, Extension(session): Extension<SessionPrincipal>) -> ApiResult<Json<Me>> {
    let account = node.account(&session.user_id).ok_or(ServiceError::Unauthorized)?;
    Ok(Json(Me {
        user_id: account.user_id,
        role: account.role,
        name: account.name,
        email: account.email,
        expires_at: session.expires_at,
    }))
}

// ---- admin ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddUniversityRequest {
    name: String,
    country: String,
    email: String,
    password: String,
}

async fn add_university(
    State(node): State<Arc<Node>>,
    payload: Result<Json<AddUniversityRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let r = body(payload)?;
    let out = blocking(&node, move |n| n.add_university(&r.name, &r.country, &r.email, &r.password)).await?;
    Ok((StatusCode::ACCEPTED, Json(out)))
}

async fn list_universities(State(node): State<Arc<Node>>) -> impl IntoResponse {
    Json(node.universities())
}

async fn delete_university(State(node): State<Arc<Node>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(&node, move |n| n.delete_university(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn list_all_students(State(node): State<Arc<Node>>) -> impl IntoResponse {
    Json(node.students())
}

// ---- university ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocTypeRequest {
    name: String,
}

async fn add_doc_type(
    State(node): State<Arc<Node>>,
    payload: Result<Json<DocTypeRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let r = body(payload)?;
    let created = blocking(&node, move |n| n.add_doc_type(&r.name)).await?;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn list_doc_types(State(node): State<Arc<Node>>) -> impl IntoResponse {
    Json(node.doc_types())
}

async fn upload_document(
    State(node): State<Arc<Node>>,
    Extension(session): Extension<SessionPrincipal>,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<impl IntoResponse> {
    let mut multipart = multipart.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let (mut student_id, mut doc_type, mut file) = (None, None, None);
    while let Some(field) = multipart.next_field().await.map_err(|e| ServiceError::BadRequest(e.body_text()))? {
        let name = field.name().unwrap_or_default().to_owned();
        let bytes = field.bytes().await.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
        let text = || String::from_utf8(bytes.to_vec()).map_err(|_| ServiceError::BadRequest(format!("{name} is not UTF-8")));
        match name.as_str() {
            "student_id" => student_id = Some(text()?),
            "doc_type" => doc_type = Some(text()?),
            "file" => file = Some(bytes),
            other => return Err(ServiceError::BadRequest(format!("unexpected field `{other}`"))),
        }
    }
    let missing = |f: &str| ServiceError::BadRequest(format!("missing field `{f}`"));
    let student_id = student_id.ok_or_else(|| missing("student_id"))?;
    let doc_type = doc_type.ok_or_else(|| missing("doc_type"))?;
    let file = file.ok_or_else(|| missing("file"))?;
    let principal = session.principal();
    let out = blocking(&node, move |n| n.upload_document(&principal, student_id.trim(), doc_type.trim(), &file)).await?;
    Ok((StatusCode::ACCEPTED, Json(out)))
}

async fn university_documents(
    State(node): State<Arc<Node>>,
    Extension(session): Extension<SessionPrincipal>,
) -> impl IntoResponse {
    Json(node.university_documents(&session.user_id))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddStudentRequest {
    name: String,
    email: String,
    password: String,
}

/// "Add Students": the caller's university is implied.
async fn add_student(
    State(node): State<Arc<Node>>,
    Extension(session): Extension<SessionPrincipal>,
    payload: Result<Json<AddStudentRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let r = body(payload)?;
    let new = NewStudent { name: r.name, email: r.email, password: r.password, university_id: session.user_id };
    let profile = blocking(&node, move |n| n.register_student(new)).await?;
    Ok((StatusCode::CREATED, Json(profile)))
}

async fn university_students(
    State(node): State<Arc<Node>>,
    Extension(session): Extension<SessionPrincipal>,
) -> impl IntoResponse {
    Json(node.students_of(&session.user_id))
}

// ---- student ----

async fn student_documents(
    State(node): State<Arc<Node>>,
    Extension(session): Extension<SessionPrincipal>,
) -> impl IntoResponse {
    Json(node.student_documents(&session.user_id))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShareRequest {
    employer_email: String,
    /// Seconds; defaults to 30 days.
    ttl: Option<u64>,
}

async fn share_document(
    State(node): State<Arc<Node>>,
    Extension(session): Extension<SessionPrincipal>,
    Path(doc_id): Path<String>,
    payload: Result<Json<ShareRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let r = body(payload)?;
    let principal = session.principal();
    let out = blocking(&node, move |n| n.share_document(&principal, &doc_id, &r.employer_email, r.ttl)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

// ---- public ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterRequest {
    name: String,
    email: String,
    password: String,
    university_id: String,
}

async fn register_student(
    State(node): State<Arc<Node>>,
    payload: Result<Json<RegisterRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let r = body(payload)?;
    let new = NewStudent { name: r.name, email: r.email, password: r.password, university_id: r.university_id };
    let profile = blocking(&node, move |n| n.register_student(new)).await?;
    Ok((StatusCode::CREATED, Json(profile)))
}

#[derive(Serialize)]
struct PublicUniversity {
    university_id: String,
    name: String,
    country: Option<String>,
}

/// The registration form's university picker; no contact details.
async fn public_universities(State(node): State<Arc<Node>>) -> impl IntoResponse {
    let list: Vec<PublicUniversity> = node
        .universities()
        .into_iter()
        .map(|u| PublicUniversity { university_id: u.university_id, name: u.name, country: u.country })
        .collect();
    Json(list)
}

async fn verify(State(node): State<Arc<Node>>, Path(digest): Path<String>) -> ApiResult<impl IntoResponse> {
    let digest = parse_digest(&digest)?;
    Ok(Json(node.verify(&digest)))
}

async fn resolve_share(State(node): State<Arc<Node>>, Path(token): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(node.resolve_share(&token)?))
}

async fn tx_status(State(node): State<Arc<Node>>, Path(hash): Path<String>) -> ApiResult<impl IntoResponse> {
    let hash = parse_digest(&hash)?;
    Ok(Json(node.tx_status(&hash)?))
}

async fn chain_summary(State(node): State<Arc<Node>>) -> impl IntoResponse {
    Json(node.chain_summary())
}
