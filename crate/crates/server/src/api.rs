//! HTTP routes. Reads are public, bookmarks need a session and everything
//! under `/api/admin` needs an admin session.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::{HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tsvis_core::agents::{AgentRunRecord, AnalyticalAgentSpec};
use tsvis_core::filter::StreamFilter;
use tsvis_core::ontology::{
    DataKind, Descriptor, Entity, PlotType, Provenance, StoreState, StreamDraft, VisFunctionRecord,
};
use tsvis_core::payload::{plot_payload, PageSummary, PlotPayload};
use tsvis_core::pipeline::{Engine, TickReport};
use tsvis_core::propagation::{self, PropagationPlan};
use tsvis_core::search::{Scope, SearchHit, SearchQuery};

use crate::auth::{Auth, Session, SessionToken};
use crate::error::{ApiError, ApiResult};

pub const STREAM_VERSION: HeaderName = HeaderName::from_static("x-stream-version");

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub auth: Arc<Auth>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/auth/login", post(login))
        .route("/api/auth/logout", post(logout))
        .route("/api/page/{*slug}", get(page))
        .route("/api/pages", get(pages))
        .route("/api/visfunctions", get(visfunctions))
        .route("/api/search", get(search))
        .route("/api/data/{stream_id}", get(data))
        .route("/api/derived/{stream_id}", get(derived))
        .route("/api/bookmark", get(bookmarks).post(add_bookmark).delete(remove_bookmark))
        .route("/api/thumbnail/{file}", get(thumbnail))
        .route("/api/admin/propagate/preview", post(propagate_preview))
        .route("/api/admin/propagate/commit", post(propagate_commit))
        .route("/api/admin/visfunction", post(create_visfunction))
        .route("/api/admin/stream", post(create_stream))
        .route("/api/admin/page", post(create_page))
        .route("/api/admin/{entity}/{id}", delete(delete_entity))
        .route("/api/admin/agents", get(agents))
        .route("/api/admin/tick", post(tick))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

/// Every admin route, for authorization sweeps.
pub const ADMIN_ROUTES: &[(&str, &str)] = &[
    ("POST", "/api/admin/propagate/preview"),
    ("POST", "/api/admin/propagate/commit"),
    ("POST", "/api/admin/visfunction"),
    ("POST", "/api/admin/stream"),
    ("POST", "/api/admin/page"),
    ("DELETE", "/api/admin/page/pg-0"),
    ("GET", "/api/admin/agents"),
    ("POST", "/api/admin/tick"),
];

/// Store calls take locks and may write files, so they run off the runtime.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    let value = headers.get(AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = value.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

/// Any logged-in user.
pub struct User(pub Session);

/// A logged-in admin.
pub struct Admin(pub Session);

impl FromRequestParts<AppState> for User {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> ApiResult<Self> {
        let token = bearer(&parts.headers).ok_or(crate::auth::AuthError::Unauthorized)?;
        Ok(User(state.auth.session(token)?))
    }
}

impl FromRequestParts<AppState> for Admin {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> ApiResult<Self> {
        let token = bearer(&parts.headers).ok_or(crate::auth::AuthError::Unauthorized)?;
        Ok(Admin(state.auth.require_admin(token)?))
    }
}

/// `Json` whose rejections use the API's error body.
pub struct Body<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> ApiResult<Self> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(reject(e)),
        }
    }
}

fn reject(e: JsonRejection) -> ApiError {
    ApiError::bad_request(e.body_text())
}

#[derive(Deserialize)]
struct Credentials {
    username: String,
    password: String,
}

async fn login(State(s): State<AppState>, Body(c): Body<Credentials>) -> ApiResult<Json<SessionToken>> {
    let auth = s.auth.clone();
    blocking(move || Ok(auth.login(&c.username, &c.password)?)).await.map(Json)
}

async fn logout(State(s): State<AppState>, User(_): User, headers: HeaderMap) -> StatusCode {
    if let Some(token) = bearer(&headers) {
        s.auth.logout(token);
    }
    StatusCode::NO_CONTENT
}

async fn page(State(s): State<AppState>, Path(slug): Path<String>) -> ApiResult<Json<PlotPayload>> {
    let slug = format!("/page/{}", slug.trim_start_matches('/').trim_start_matches("page/"));
    let engine = s.engine.clone();
    blocking(move || Ok(plot_payload(&engine.store, &slug)?)).await.map(Json)
}

#[derive(Deserialize)]
struct PagesQuery {
    #[serde(rename = "type")]
    plot_type: Option<String>,
}

fn summaries(state: &StoreState, plot_type: Option<PlotType>) -> Vec<PageSummary> {
    let mut list: Vec<PageSummary> = state
        .pages()
        .map(|p| PageSummary::of(state, p))
        .filter(|p| plot_type.is_none_or(|t| p.plot_type == t))
        .collect();
    list.sort_by(|a, b| a.url_slug.cmp(&b.url_slug));
    list
}

async fn pages(State(s): State<AppState>, Query(q): Query<PagesQuery>) -> ApiResult<Json<Vec<PageSummary>>> {
    let plot_type = q
        .plot_type
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<PlotType>())
        .transpose()?;
    Ok(Json(summaries(&s.engine.store.read(), plot_type)))
}

async fn visfunctions(State(s): State<AppState>) -> Json<Vec<VisFunctionRecord>> {
    Json(s.engine.store.read().visfunctions().cloned().collect())
}

#[derive(Deserialize)]
struct SearchParams {
    #[serde(default)]
    q: String,
    scope: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StreamSummary {
    pub id: String,
    pub kind: DataKind,
    pub version: u64,
    pub descriptor: Descriptor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResult {
    #[serde(flatten)]
    pub hit: SearchHit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<PageSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResponse {
    pub terms: Vec<String>,
    pub scope: Scope,
    pub results: Vec<SearchResult>,
}

async fn search(State(s): State<AppState>, Query(p): Query<SearchParams>) -> ApiResult<Json<SearchResponse>> {
    let scope = p.scope.filter(|v| !v.is_empty()).map(|v| v.parse()).transpose()?.unwrap_or_default();
    let query = SearchQuery::parse(&p.q, scope)?;
    let hits = s.engine.search(&query);
    let state = s.engine.store.read();
    let results = hits
        .into_iter()
        .map(|hit| {
            let (page, stream) = match scope {
                Scope::Pages => (state.page(&hit.id).map(|p| PageSummary::of(&state, p)), None),
                Scope::Streams => (
                    None,
                    state.stream(&hit.id).map(|r| StreamSummary {
                        id: r.id.clone(),
                        kind: r.kind,
                        version: r.version,
                        descriptor: r.descriptor.clone(),
                    }),
                ),
            };
            SearchResult { hit, page, stream }
        })
        .collect();
    Ok(Json(SearchResponse {
        terms: query.terms,
        scope,
        results,
    }))
}

#[derive(Deserialize)]
struct VersionParam {
    version: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataResponse {
    pub id: String,
    pub kind: DataKind,
    pub version: u64,
    pub descriptor: Descriptor,
    pub provenance: Provenance,
    pub updated_at: DateTime<Utc>,
    pub data: Value,
}

fn stream_data(state: &StoreState, id: &str, version: Option<u64>, derived_only: bool) -> ApiResult<Response> {
    let record = state
        .stream(id)
        .filter(|r| !derived_only || matches!(r.provenance, Provenance::Derived { .. }))
        .ok_or_else(|| ApiError::not_found(format!("{} stream {id}", if derived_only { "derived" } else { "data" })))?;
    let (content, version) = state.content(id, version)?;
    let body = DataResponse {
        id: record.id.clone(),
        kind: record.kind,
        version,
        descriptor: record.descriptor.clone(),
        provenance: record.provenance.clone(),
        updated_at: record.updated_at,
        data: content.to_json(),
    };
    let mut response = Json(body).into_response();
    response.headers_mut().insert(STREAM_VERSION, HeaderValue::from(version));
    Ok(response)
}

async fn data(State(s): State<AppState>, Path(id): Path<String>, Query(v): Query<VersionParam>) -> ApiResult<Response> {
    stream_data(&s.engine.store.read(), &id, v.version, false)
}

async fn derived(State(s): State<AppState>, Path(id): Path<String>, Query(v): Query<VersionParam>) -> ApiResult<Response> {
    stream_data(&s.engine.store.read(), &id, v.version, true)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct BookmarkBody {
    page_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BookmarkEntry {
    pub page_id: String,
    pub added_at: DateTime<Utc>,
    pub page: PageSummary,
}

fn bookmark_list(state: &StoreState, user: &str) -> Vec<BookmarkEntry> {
    let mut list: Vec<BookmarkEntry> = state
        .bookmarks(user)
        .into_iter()
        .filter_map(|b| {
            let page = state.page(&b.page_id)?;
            Some(BookmarkEntry {
                page_id: b.page_id.clone(),
                added_at: b.added_at,
                page: PageSummary::of(state, page),
            })
        })
        .collect();
    list.sort_by(|a, b| (a.added_at, &a.page_id).cmp(&(b.added_at, &b.page_id)));
    list
}

async fn bookmarks(State(s): State<AppState>, User(u): User) -> Json<Vec<BookmarkEntry>> {
    Json(bookmark_list(&s.engine.store.read(), &u.username))
}

async fn add_bookmark(
    State(s): State<AppState>,
    User(u): User,
    Body(b): Body<BookmarkBody>,
) -> ApiResult<Json<Vec<BookmarkEntry>>> {
    let engine = s.engine.clone();
    blocking(move || {
        engine.store.write(|st, now| st.add_bookmark(&u.username, &b.page_id, now))?;
        Ok(bookmark_list(&engine.store.read(), &u.username))
    })
    .await
    .map(Json)
}

async fn remove_bookmark(
    State(s): State<AppState>,
    User(u): User,
    Body(b): Body<BookmarkBody>,
) -> ApiResult<Json<Vec<BookmarkEntry>>> {
    let engine = s.engine.clone();
    blocking(move || {
        engine.store.write(|st, _| {
            st.remove_bookmark(&u.username, &b.page_id);
            Ok(())
        })?;
        Ok(bookmark_list(&engine.store.read(), &u.username))
    })
    .await
    .map(Json)
}

async fn thumbnail(State(s): State<AppState>, Path(file): Path<String>) -> ApiResult<Response> {
    let id = file
        .strip_suffix(".svg")
        .ok_or_else(|| ApiError::not_found(format!("thumbnail {file}")))?;
    if s.engine.store.read().page(id).is_none() {
        return Err(ApiError::not_found(format!("page {id}")));
    }
    let path = s.engine.thumbnails.path_for(id);
    let svg = tokio::fs::read(&path)
        .await
        .map_err(|_| ApiError::not_found(format!("thumbnail {file}")))?;
    Ok(([(CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PreviewBody {
    vis_function_id: String,
    #[serde(default)]
    filter: StreamFilter,
}

async fn propagate_preview(
    State(s): State<AppState>,
    Admin(_): Admin,
    Body(b): Body<PreviewBody>,
) -> ApiResult<Json<PropagationPlan>> {
    let engine = s.engine.clone();
    blocking(move || Ok(propagation::preview(&engine.store, &b.vis_function_id, b.filter)?))
        .await
        .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommitResponse {
    pub created: Vec<PageSummary>,
    pub skipped: usize,
}

async fn propagate_commit(
    State(s): State<AppState>,
    Admin(admin): Admin,
    Body(plan): Body<PropagationPlan>,
) -> ApiResult<Json<CommitResponse>> {
    let engine = s.engine.clone();
    blocking(move || {
        let result = propagation::commit(&engine.store, &plan)?;
        tracing::info!(user = %admin.username, created = result.created.len(), "propagation committed");
        engine.reindex()?;
        let state = engine.store.read();
        let created = result
            .created
            .iter()
            .filter_map(|id| state.page(id).map(|p| PageSummary::of(&state, p)))
            .collect();
        Ok(CommitResponse {
            created,
            skipped: result.skipped,
        })
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
}

async fn create_visfunction(
    State(s): State<AppState>,
    Admin(_): Admin,
    Body(record): Body<VisFunctionRecord>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let engine = s.engine.clone();
    blocking(move || {
        let id = engine.store.register_visfunction(record)?;
        Ok((StatusCode::CREATED, Json(Created { id })))
    })
    .await
}

async fn create_stream(
    State(s): State<AppState>,
    Admin(_): Admin,
    Body(draft): Body<StreamDraft>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let engine = s.engine.clone();
    blocking(move || {
        let id = engine.store.register_stream(draft)?;
        engine.reindex()?;
        Ok((StatusCode::CREATED, Json(Created { id })))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct PageBody {
    vis_function_id: String,
    bindings: Vec<Vec<String>>,
}

async fn create_page(
    State(s): State<AppState>,
    Admin(_): Admin,
    Body(b): Body<PageBody>,
) -> ApiResult<(StatusCode, Json<PageSummary>)> {
    let engine = s.engine.clone();
    blocking(move || {
        let page = engine.store.create_page(&b.vis_function_id, b.bindings)?;
        engine.reindex()?;
        let state = engine.store.read();
        let summary = PageSummary::of(&state, state.page(&page.id).unwrap_or(&page));
        Ok((StatusCode::CREATED, Json(summary)))
    })
    .await
}

async fn delete_entity(
    State(s): State<AppState>,
    Admin(_): Admin,
    Path((entity, id)): Path<(String, String)>,
) -> ApiResult<StatusCode> {
    let entity: Entity = serde_json::from_value(Value::String(entity.clone()))
        .map_err(|_| ApiError::not_found(format!("no such entity {entity}")))?;
    let engine = s.engine.clone();
    blocking(move || {
        engine.store.delete(entity, &id)?;
        engine.reindex()?;
        Ok(StatusCode::NO_CONTENT)
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentStatus {
    pub spec: AnalyticalAgentSpec,
    pub last_run: Option<AgentRunRecord>,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentsResponse {
    pub agents: Vec<AgentStatus>,
    pub source_errors: BTreeMap<String, String>,
}

async fn agents(State(s): State<AppState>, Admin(_): Admin) -> Json<AgentsResponse> {
    let scheduler = &s.engine.scheduler;
    let agents = scheduler
        .specs()
        .map(|spec| {
            let history = scheduler.history(&spec.agent_id);
            AgentStatus {
                spec: spec.clone(),
                runs: history.len(),
                last_run: history.last().cloned(),
            }
        })
        .collect();
    Json(AgentsResponse {
        agents,
        source_errors: s.engine.downloader.errors(),
    })
}

#[derive(Deserialize)]
struct TickParams {
    #[serde(default)]
    all: bool,
}

async fn tick(State(s): State<AppState>, Admin(_): Admin, Query(p): Query<TickParams>) -> ApiResult<Json<TickReport>> {
    let engine = s.engine.clone();
    blocking(move || Ok(if p.all { engine.tick_all()? } else { engine.tick()? }))
        .await
        .map(Json)
}
