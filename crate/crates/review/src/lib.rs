//! Local HTTP service through which reviewers rate generated items.
//!
//! Endpoints (JSON unless noted; the reviewer is identified by the
//! `X-Reviewer-Id` header):
//!
//! - `GET /items` — every item: stem with blank, its options lettered A–D in
//!   a fixed shuffled order, and the targets that can be rated
//! - `GET /items/{id}` — one item plus the caller's own verdicts
//! - `POST /items/{id}/verdicts` — `{reviewer_id, target, verdict, comment}`;
//!   `target` is `stem`, `distractor_k` or a distractor's option letter
//! - `GET /session` — the caller's progress
//! - `GET /stats` — agreement report of the first two reviewers
//! - `GET /export` — all current verdicts as a ratings CSV

mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use clozegen::evalkit::{
    agreement_from_ratings, write_ratings_csv, EvalError, ReviewRecord, TargetId, Verdict,
};
use clozegen::pipeline::{read_output_csv_from_path, OutputError, OutputRow};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use self::store::{RatingsStore, StoreError, StoredRating};

pub const REVIEWER_HEADER: &str = "x-reviewer-id";

#[derive(Debug, Clone)]
pub struct ReviewConfig {
    pub output_csv: PathBuf,
    pub ratings_path: PathBuf,
    pub bind: SocketAddr,
    /// Seed for option order; use the generation run's seed.
    pub seed: u64,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("cannot read items: {0}")]
    MalformedOutputFile(#[from] OutputError),
    #[error("duplicate item id {0}")]
    DuplicateItem(u32),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One answer choice as shown to reviewers: a letter and the word, with
/// nothing marking which one is the key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionView {
    pub label: String,
    pub text: String,
}

/// Something a reviewer can rate: the stem, or the distractor shown under
/// `option`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetView {
    pub target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub option: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemView {
    pub item_id: u32,
    pub stem: String,
    pub options: Vec<OptionView>,
    pub targets: Vec<TargetView>,
    /// Distractor slots left empty at generation time.
    pub missing: Vec<String>,
}

impl ItemView {
    /// Resolves a target name or an option letter to a ratable target name.
    pub fn resolve_target(&self, name: &str) -> Option<&str> {
        self.targets
            .iter()
            .find(|t| t.target == name || t.option.as_deref() == Some(name))
            .map(|t| t.target.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemDetail {
    #[serde(flatten)]
    pub item: ItemView,
    pub verdicts: Vec<ReviewRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictBody {
    pub reviewer_id: String,
    pub target: String,
    pub verdict: String,
    #[serde(default)]
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSession {
    pub session_id: String,
    pub reviewer_id: String,
    /// First item with unrated targets; `None` once complete.
    pub cursor: Option<u32>,
    pub rated: usize,
    pub total: usize,
    pub started_at: DateTime<Utc>,
    pub completed: bool,
}

/// The key and present distractors in display order, each paired with its
/// target name (`key` or `distractor_k`). The order is the same for every
/// reviewer and fixed by `seed`.
pub fn shuffled_options(row: &OutputRow, seed: u64) -> Vec<(String, String)> {
    let mut options = vec![("key".to_string(), row.key.clone())];
    for (i, d) in row.distractors.iter().enumerate() {
        if let Some(text) = d {
            options.push((format!("distractor_{}", i + 1), text.clone()));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(row.item_id));
    options.shuffle(&mut rng);
    options
}

fn item_view(row: &OutputRow, seed: u64) -> ItemView {
    let mut options = Vec::new();
    let mut targets = vec![TargetView {
        target: "stem".into(),
        option: None,
    }];
    for (i, (target, text)) in shuffled_options(row, seed).into_iter().enumerate() {
        let label = char::from(b'A' + i as u8).to_string();
        if target != "key" {
            targets.push(TargetView {
                target,
                option: Some(label.clone()),
            });
        }
        options.push(OptionView { label, text });
    }
    targets[1..].sort_by(|a, b| a.target.cmp(&b.target));
    let missing = (1..=row.distractors.len())
        .filter(|i| row.distractors[i - 1].is_none())
        .map(|i| format!("distractor_{i}"))
        .collect();
    ItemView {
        item_id: row.item_id,
        stem: row.stem.clone(),
        options,
        targets,
        missing,
    }
}

pub struct ReviewState {
    items: BTreeMap<u32, ItemView>,
    ratable: BTreeSet<TargetId>,
    store: RatingsStore,
    sessions: Mutex<BTreeMap<String, (String, DateTime<Utc>)>>,
}

impl ReviewState {
    pub fn new(rows: &[OutputRow], seed: u64, store: RatingsStore) -> Result<Self, ReviewError> {
        let mut items = BTreeMap::new();
        let mut ratable = BTreeSet::new();
        for row in rows {
            let view = item_view(row, seed);
            for t in &view.targets {
                ratable.insert(
                    TargetId::parse_target_name(row.item_id, &t.target)
                        .expect("generated target name"),
                );
            }
            if items.insert(row.item_id, view).is_some() {
                return Err(ReviewError::DuplicateItem(row.item_id));
            }
        }
        Ok(ReviewState {
            items,
            ratable,
            store,
            sessions: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn load(config: &ReviewConfig) -> Result<Self, ReviewError> {
        let rows = read_output_csv_from_path(&config.output_csv)?;
        Self::new(
            &rows,
            config.seed,
            RatingsStore::open(&config.ratings_path)?,
        )
    }

    pub fn store(&self) -> &RatingsStore {
        &self.store
    }

    pub fn session(&self, reviewer_id: &str) -> ReviewSession {
        let own = self.store.for_reviewer(reviewer_id);
        let rated: BTreeSet<TargetId> = own
            .iter()
            .map(|r| r.target_id)
            .filter(|t| self.ratable.contains(t))
            .collect();
        let cursor = self
            .ratable
            .iter()
            .find(|t| !rated.contains(t))
            .map(|t| t.item_id);
        let first_rating = self
            .store
            .all()
            .into_iter()
            .find(|r| r.record.reviewer_id == reviewer_id)
            .map(|r| r.recorded_at);
        let mut sessions = self.sessions.lock().expect("sessions poisoned");
        let (session_id, started_at) = sessions
            .entry(reviewer_id.to_string())
            .or_insert_with(|| {
                let started = first_rating.unwrap_or_else(Utc::now);
                (
                    format!("{reviewer_id}-{}", started.timestamp_millis()),
                    started,
                )
            })
            .clone();
        ReviewSession {
            session_id,
            reviewer_id: reviewer_id.to_string(),
            cursor,
            rated: rated.len(),
            total: self.ratable.len(),
            started_at,
            completed: cursor.is_none(),
        }
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn reviewer(headers: &HeaderMap) -> Option<String> {
    headers
        .get(REVIEWER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
}

async fn list_items(State(state): State<Arc<ReviewState>>) -> Json<Vec<ItemView>> {
    Json(state.items.values().cloned().collect())
}

async fn get_item(
    State(state): State<Arc<ReviewState>>,
    UrlPath(id): UrlPath<u32>,
    headers: HeaderMap,
) -> Response {
    let Some(item) = state.items.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no item {id}"));
    };
    let verdicts = reviewer(&headers)
        .map(|r| {
            state
                .store
                .for_reviewer(&r)
                .into_iter()
                .filter(|v| v.target_id.item_id == id)
                .collect()
        })
        .unwrap_or_default();
    Json(ItemDetail {
        item: item.clone(),
        verdicts,
    })
    .into_response()
}

async fn post_verdict(
    State(state): State<Arc<ReviewState>>,
    UrlPath(id): UrlPath<u32>,
    headers: HeaderMap,
    Json(body): Json<VerdictBody>,
) -> Response {
    let Some(item) = state.items.get(&id) else {
        return error(StatusCode::NOT_FOUND, format!("no item {id}"));
    };
    let reviewer_id = body.reviewer_id.trim().to_string();
    if reviewer_id.is_empty() {
        return error(StatusCode::UNPROCESSABLE_ENTITY, "reviewer_id is required");
    }
    if reviewer(&headers).is_some_and(|h| h != reviewer_id) {
        return error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "reviewer_id does not match the X-Reviewer-Id header",
        );
    }
    let Some(target) = item.resolve_target(body.target.trim()) else {
        return error(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("item {id} has no ratable target `{}`", body.target),
        );
    };
    let target_id = TargetId::parse_target_name(id, target).expect("generated target name");
    let verdict: Verdict = match body.verdict.parse() {
        Ok(v) => v,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    let record = ReviewRecord {
        target_kind: target_id.kind(),
        target_id,
        reviewer_id,
        verdict,
        comment: body.comment.trim().to_string(),
    };
    if let Err(e) = record.validate() {
        return error(StatusCode::UNPROCESSABLE_ENTITY, e);
    }
    match state.store.append(record) {
        Ok(stored) => (StatusCode::CREATED, Json(stored)).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn get_session(State(state): State<Arc<ReviewState>>, headers: HeaderMap) -> Response {
    match reviewer(&headers) {
        Some(r) => Json(state.session(&r)).into_response(),
        None => error(StatusCode::BAD_REQUEST, "X-Reviewer-Id header is required"),
    }
}

/// The agreement report for the current verdicts, as served by `/stats`.
pub fn stats_json(records: &[ReviewRecord]) -> Result<String, EvalError> {
    agreement_from_ratings(records).map(|r| r.to_json())
}

async fn get_stats(State(state): State<Arc<ReviewState>>) -> Response {
    match stats_json(&state.store.current()) {
        Ok(json) => ([(header::CONTENT_TYPE, "application/json")], json).into_response(),
        Err(e) => error(StatusCode::CONFLICT, e.to_string()),
    }
}

async fn export(State(state): State<Arc<ReviewState>>, headers: HeaderMap) -> Response {
    if let Some(r) = reviewer(&headers) {
        if !state.session(&r).completed {
            return error(
                StatusCode::FORBIDDEN,
                "export is available once your own review is complete",
            );
        }
    }
    let mut buf = Vec::new();
    if let Err(e) = write_ratings_csv(&state.store.current(), &mut buf) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response()
}

async fn index() -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "endpoints": ["/items", "/items/{id}", "/items/{id}/verdicts", "/session", "/stats", "/export"]
    }))
}

pub fn app(state: Arc<ReviewState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/items", get(list_items))
        .route("/items/{id}", get(get_item))
        .route("/items/{id}/verdicts", axum::routing::post(post_verdict))
        .route("/session", get(get_session))
        .route("/stats", get(get_stats))
        .route("/export", get(export))
        .with_state(state);
    match static_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}

/// Serves until Ctrl-C. Every verdict is synced to disk as it is accepted,
/// so nothing is pending at shutdown.
pub async fn serve(config: ReviewConfig) -> Result<(), ReviewError> {
    let state = Arc::new(ReviewState::load(&config)?);
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ReviewError::Bind {
            addr: config.bind,
            source,
        })?;
    log::info!(
        "reviewing {} items on http://{}",
        state.items.len(),
        listener.local_addr()?
    );
    axum::serve(listener, app(state, config.static_dir.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub fn serve_blocking(config: ReviewConfig) -> Result<(), ReviewError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(config))
}
