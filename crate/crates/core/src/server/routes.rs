use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::HeaderMap;
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{ApiError, AppState, Loaded};
use crate::correlation::{
    compare_patents, top_entities_per_topic, word_cloud, EntityKind, PerTopic, DEFAULT_SHARE_THRESHOLD,
};

type ApiResult = Result<Json<Value>, ApiError>;
type Params = Query<HashMap<String, String>>;

const DEFAULT_CLOUD_SIZE: usize = 50;
const TOPIC_ENTITY_PREVIEW: usize = 5;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/stats", get(stats))
        .route("/api/topics", get(topics))
        .route("/api/topics/{t}", get(topic))
        .route("/api/topics/{t}/patents", get(topic_patents))
        .route("/api/topics/{t}/title", patch(set_title))
        .route("/api/companies", get(companies))
        .route("/api/companies/{name}", get(company))
        .route("/api/molecules", get(molecules))
        .route("/api/molecules/{name}", get(molecule))
        .route("/api/inventors/{name}", get(inventor))
        .route("/api/patents/{id}", get(patent))
        .route("/api/compare", get(compare))
        .route("/api/wordcloud", get(cloud))
        .route("/api/auth/login", post(login))
        .route("/api/reload", post(reload))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

fn param<T: FromStr>(params: &HashMap<String, String>, key: &str, default: T) -> Result<T, ApiError> {
    match params.get(key) {
        None => Ok(default),
        Some(raw) => raw
            .parse()
            .map_err(|_| ApiError::bad_request(format!("invalid value {raw:?} for {key}"))),
    }
}

fn topic_index(loaded: &Loaded, raw: &str) -> Result<usize, ApiError> {
    let t: usize = raw
        .parse()
        .map_err(|_| ApiError::bad_request(format!("invalid topic index {raw:?}")))?;
    if t >= loaded.titles.len() {
        return Err(ApiError::not_found(format!("topic {t} does not exist")));
    }
    Ok(t)
}

fn require_auth(state: &AppState, headers: &HeaderMap) -> Result<String, ApiError> {
    let token = headers
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(ApiError::unauthorized)?;
    state.auth.verify(token.trim()).ok_or_else(ApiError::unauthorized)
}

fn topic_json(loaded: &Loaded, t: usize, top_words: usize) -> Result<Value, ApiError> {
    let snap = &loaded.snapshot;
    let words: Vec<Value> = snap
        .model
        .top_words(t, top_words)?
        .into_iter()
        .map(|(term, weight)| json!({ "term": term, "weight": weight }))
        .collect();
    Ok(json!({
        "id": t,
        "title": loaded.titles[t],
        "patent_count": snap.assignments.counts[t],
        "top_words": words,
    }))
}

fn entity_ranking(loaded: &Loaded, kind: EntityKind, topic: usize, n: usize) -> Result<Vec<Value>, ApiError> {
    let pert = &loaded.snapshot.pertinence[&kind];
    if pert.entities.is_empty() {
        return Ok(Vec::new());
    }
    let mut ranked = top_entities_per_topic(pert, topic, PerTopic::try_from(20)?)?;
    ranked.truncate(n);
    Ok(ranked
        .into_iter()
        .map(|(name, raw)| {
            let e = pert.position(&name).expect("ranked entity exists");
            json!({ "name": name, "pertinence": raw, "share": pert.normalized[e][topic] })
        })
        .collect())
}

async fn stats(State(state): State<Arc<AppState>>) -> ApiResult {
    let loaded = state.current();
    Ok(Json(serde_json::to_value(&loaded.snapshot.stats).expect("stats serialize")))
}

async fn topics(State(state): State<Arc<AppState>>, Query(params): Params) -> ApiResult {
    let loaded = state.current();
    let n = param(&params, "top_words", loaded.snapshot.config.top_words)?;
    if n == 0 {
        return Err(ApiError::bad_request("top_words must be >= 1"));
    }
    let list = (0..loaded.titles.len())
        .map(|t| topic_json(&loaded, t, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(Value::Array(list)))
}

async fn topic(State(state): State<Arc<AppState>>, Path(t): Path<String>, Query(params): Params) -> ApiResult {
    let loaded = state.current();
    let t = topic_index(&loaded, &t)?;
    let n = param(&params, "top_words", loaded.snapshot.config.top_words)?;
    if n == 0 {
        return Err(ApiError::bad_request("top_words must be >= 1"));
    }
    let mut body = topic_json(&loaded, t, n)?;
    body["companies"] = Value::Array(entity_ranking(&loaded, EntityKind::Company, t, TOPIC_ENTITY_PREVIEW)?);
    body["molecules"] = Value::Array(entity_ranking(&loaded, EntityKind::Molecule, t, TOPIC_ENTITY_PREVIEW)?);
    Ok(Json(body))
}

async fn topic_patents(State(state): State<Arc<AppState>>, Path(t): Path<String>) -> ApiResult {
    let loaded = state.current();
    let t = topic_index(&loaded, &t)?;
    let snap = &loaded.snapshot;
    let mut rows: Vec<(f64, &str, usize)> = snap
        .assignments
        .topics
        .iter()
        .enumerate()
        .filter(|&(_, &topic)| topic == t)
        .map(|(row, _)| {
            let share = snap.model.topic_distribution(row).map(|d| d.shares[t]).unwrap_or(0.0);
            (share, snap.model.row_ids()[row].as_str(), row)
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    let list = rows
        .into_iter()
        .map(|(share, id, _)| {
            let r = snap.record(id).expect("row ids match the corpus");
            json!({ "id": id, "title": r.title, "company": r.company, "drug": r.drug, "share": share })
        })
        .collect();
    Ok(Json(Value::Array(list)))
}

#[derive(Deserialize)]
struct TitleBody {
    title: String,
}

async fn set_title(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(t): Path<String>,
    body: Option<Json<TitleBody>>,
) -> ApiResult {
    require_auth(&state, &headers)?;
    let Some(Json(body)) = body else {
        return Err(ApiError::bad_request("expected JSON body {\"title\": ...}"));
    };
    let t = topic_index(&state.current(), &t)?;
    let loaded = state.set_title(t, &body.title).await?;
    let n = loaded.snapshot.config.top_words;
    Ok(Json(topic_json(&loaded, t, n)?))
}

async fn companies(State(state): State<Arc<AppState>>, Query(params): Params) -> ApiResult {
    let loaded = state.current();
    let n = PerTopic::try_from(param(&params, "per_topic", 5usize)?)?.get();
    let topics = (0..loaded.titles.len())
        .map(|t| {
            Ok(json!({
                "topic": t,
                "title": loaded.titles[t],
                "companies": entity_ranking(&loaded, EntityKind::Company, t, n)?,
            }))
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    Ok(Json(json!({ "per_topic": n, "topics": topics })))
}

fn entity_detail(loaded: &Loaded, kind: EntityKind, name: &str) -> ApiResult {
    let pert = &loaded.snapshot.pertinence[&kind];
    let e = pert
        .position(name)
        .ok_or_else(|| ApiError::not_found(format!("no {} named {name:?}", kind.as_str())))?;
    Ok(Json(json!({
        "name": name,
        "kind": kind,
        "patents": pert.patents[e],
        "pertinence": pert.raw[e],
        "normalized": pert.normalized[e],
        "zero_row": pert.zero_rows[e],
        "titles": loaded.titles.as_ref(),
    })))
}

async fn company(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult {
    entity_detail(&state.current(), EntityKind::Company, &name)
}

async fn molecule(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult {
    entity_detail(&state.current(), EntityKind::Molecule, &name)
}

async fn inventor(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> ApiResult {
    entity_detail(&state.current(), EntityKind::Inventor, &name)
}

async fn molecules(State(state): State<Arc<AppState>>) -> ApiResult {
    let loaded = state.current();
    let pert = &loaded.snapshot.pertinence[&EntityKind::Molecule];
    let list = pert
        .entities
        .iter()
        .enumerate()
        .map(|(e, name)| {
            json!({
                "name": name,
                "patent_count": pert.patents[e].len(),
                "pertinence": pert.raw[e],
                "normalized": pert.normalized[e],
                "zero_row": pert.zero_rows[e],
            })
        })
        .collect();
    Ok(Json(json!({ "titles": loaded.titles.as_ref(), "molecules": Value::Array(list) })))
}

async fn patent(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let loaded = state.current();
    let snap = &loaded.snapshot;
    let record = snap
        .record(&id)
        .ok_or_else(|| ApiError::not_found(format!("no patent {id:?}")))?;
    let dist = snap.distribution(&id).expect("every record has a model row");
    let mut body = serde_json::to_value(record).expect("record serializes");
    body["distribution"] = serde_json::to_value(&dist).expect("distribution serializes");
    body["topic"] = json!(dist.dominant);
    body["topic_title"] = json!(loaded.titles[dist.dominant]);
    Ok(Json(body))
}

async fn compare(State(state): State<Arc<AppState>>, Query(params): Params) -> ApiResult {
    let loaded = state.current();
    let snap = &loaded.snapshot;
    let ids: Vec<&str> = params
        .get("ids")
        .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();
    let threshold = param(&params, "threshold", DEFAULT_SHARE_THRESHOLD)?;
    let dists = ids
        .iter()
        .map(|id| {
            snap.distribution(id)
                .ok_or_else(|| ApiError::not_found(format!("no patent {id:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let result = compare_patents(&dists, threshold)?;
    Ok(Json(serde_json::to_value(result).expect("comparison serializes")))
}

async fn cloud(State(state): State<Arc<AppState>>, Query(params): Params) -> ApiResult {
    let loaded = state.current();
    let n = param(&params, "n", DEFAULT_CLOUD_SIZE)?;
    let words: Vec<Value> = word_cloud(&loaded.snapshot.model, n)?
        .into_iter()
        .map(|(term, weight)| json!({ "term": term, "weight": weight }))
        .collect();
    Ok(Json(Value::Array(words)))
}

#[derive(Deserialize)]
struct LoginBody {
    user: String,
    password: String,
}

async fn login(State(state): State<Arc<AppState>>, body: Option<Json<LoginBody>>) -> ApiResult {
    let Some(Json(body)) = body else {
        return Err(ApiError::bad_request("expected JSON body {\"user\", \"password\"}"));
    };
    let session = state
        .auth
        .login(&body.user, &body.password)
        .ok_or_else(|| ApiError::new(axum::http::StatusCode::UNAUTHORIZED, "invalid credentials"))?;
    Ok(Json(serde_json::to_value(session).expect("session serializes")))
}

#[derive(Deserialize, Default)]
struct ReloadBody {
    model: Option<PathBuf>,
}

async fn reload(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Option<Json<ReloadBody>>) -> ApiResult {
    require_auth(&state, &headers)?;
    let dir = body.map(|Json(b)| b).unwrap_or_default().model;
    let loaded = state.reload(dir).await?;
    Ok(Json(json!({
        "model": loaded.store.dir(),
        "patents": loaded.snapshot.corpus.len(),
        "topics": loaded.titles.len(),
    })))
}
