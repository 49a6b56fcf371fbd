use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use dialact::io;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::store::{AnnotationStore, AnnotationUpdate, StoreError, StoredTurn};

pub type SharedStore = Arc<AnnotationStore>;

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        let (status, body) = match &self {
            StoreError::DialogueNotFound(_) | StoreError::TurnNotFound { .. } => {
                (StatusCode::NOT_FOUND, json!({ "error": self.to_string() }))
            }
            StoreError::Conflict { current, .. } => (
                StatusCode::CONFLICT,
                json!({ "error": self.to_string(), "current_revision": current }),
            ),
            StoreError::Invalid(findings) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": self.to_string(), "findings": findings }),
            ),
            StoreError::BadRequest(_) => (StatusCode::BAD_REQUEST, json!({ "error": self.to_string() })),
            StoreError::Io(_) | StoreError::Fs { .. } => {
                tracing::error!("write failed: {self}");
                (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    json!({ "error": self.to_string() }),
                )
            }
        };
        (status, Json(body)).into_response()
    }
}

fn stored_turn_json(stored: &StoredTurn) -> Value {
    let mut value = io::turn_value(&stored.turn);
    value["Revision"] = Value::String(stored.revision.clone());
    value
}

async fn get_schema(State(store): State<SharedStore>) -> Json<Value> {
    Json(io::schema_value(store.schema()))
}

async fn list_dialogues(State(store): State<SharedStore>) -> Json<Value> {
    let items: Vec<Value> = store
        .list()
        .into_iter()
        .map(|d| {
            json!({
                "DID": d.did,
                "Modality": d.modality.as_str(),
                "Source": d.source,
                "TurnCount": d.turn_count,
            })
        })
        .collect();
    Json(Value::Array(items))
}

async fn get_dialogue(State(store): State<SharedStore>, Path(did): Path<u32>) -> Result<Json<Value>, StoreError> {
    let dialogue = store.dialogue(did)?;
    let mut value = io::dialogue_value(&dialogue);
    if let Some(turns) = value["Turns"].as_array_mut() {
        for (json, turn) in turns.iter_mut().zip(&dialogue.turns) {
            json["Revision"] = Value::String(crate::store::revision_of(turn));
        }
    }
    Ok(Json(value))
}

async fn get_turn(
    State(store): State<SharedStore>,
    Path((did, uid)): Path<(u32, String)>,
) -> Result<Json<Value>, StoreError> {
    Ok(Json(stored_turn_json(&store.turn(did, &uid)?)))
}

async fn put_turn(
    State(store): State<SharedStore>,
    Path((did, uid)): Path<(u32, String)>,
    body: Bytes,
) -> Result<Json<Value>, StoreError> {
    let update: AnnotationUpdate =
        serde_json::from_slice(&body).map_err(|e| StoreError::BadRequest(e.to_string()))?;
    let stored = tokio::task::spawn_blocking(move || store.update(did, &uid, update))
        .await
        .map_err(|e| StoreError::BadRequest(format!("update task failed: {e}")))??;
    Ok(Json(stored_turn_json(&stored)))
}

async fn get_stats(State(store): State<SharedStore>) -> Json<Value> {
    Json(serde_json::to_value(store.stats()).expect("stats serialize"))
}

async fn get_validate(State(store): State<SharedStore>) -> Json<Value> {
    Json(serde_json::to_value(store.validate()).expect("report serializes"))
}

#[derive(Deserialize)]
struct TranslitQuery {
    text: String,
    #[serde(default)]
    direction: Option<String>,
}

async fn get_translit(Query(q): Query<TranslitQuery>) -> Result<Json<Value>, StoreError> {
    let out = match q.direction.as_deref() {
        None | Some("to-bw") => dialact::to_buckwalter(&q.text),
        Some("from-bw") => dialact::from_buckwalter(&q.text),
        Some(other) => {
            return Err(StoreError::BadRequest(format!(
                "direction must be to-bw or from-bw, got {other}"
            )))
        }
    };
    Ok(Json(json!({ "text": out.text, "out_of_alphabet": out.out_of_alphabet })))
}

/// All endpoints, with permissive CORS for a browser front end.
pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/schema", get(get_schema))
        .route("/dialogues", get(list_dialogues))
        .route("/dialogues/{did}", get(get_dialogue))
        .route("/dialogues/{did}/turns/{uid}", get(get_turn).put(put_turn))
        .route("/stats", get(get_stats))
        .route("/validate", get(get_validate))
        .route("/translit", get(get_translit))
        .layer(CorsLayer::permissive())
        .with_state(store)
}

/// Serves `store` on `addr` until the process is stopped.
pub async fn serve(store: AnnotationStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("serving {} on http://{}", store.dir().display(), listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store))).await
}
