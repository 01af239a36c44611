//! HTTP transport for the session manager.

use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::Serialize;
use tokio::sync::mpsc;

use super::{CreateRequest, CreateResponse, OpRequest, ServiceError, SessionManager};

type Shared = Arc<SessionManager>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::BAD_REQUEST);
        (status, Json(self.payload())).into_response()
    }
}

fn bad_json(e: JsonRejection) -> ServiceError {
    ServiceError::BadRequest(e.body_text())
}

/// Runs a blocking manager call on the blocking thread pool.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ServiceError::BadRequest(format!("request aborted: {e}"))))
}

fn json<T: Serialize>(status: StatusCode, body: T) -> Response {
    (status, Json(body)).into_response()
}

async fn create(
    State(m): State<Shared>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let Json(req) = body.map_err(bad_json)?;
    let r = blocking(move || m.create(req)).await?;
    let status = match r {
        CreateResponse::Session { .. } => StatusCode::CREATED,
        CreateResponse::PropertyHolds { .. } => StatusCode::OK,
    };
    Ok(json(status, r))
}

async fn apply(
    State(m): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<OpRequest>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let Json(op) = body.map_err(bad_json)?;
    let r = blocking(move || m.apply(&id, op)).await?;
    Ok(json(StatusCode::OK, r))
}

async fn trace(State(m): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let r = blocking(move || m.trace(&id)).await?;
    Ok(json(StatusCode::OK, r))
}

async fn session(
    State(m): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(json(StatusCode::OK, m.handle(&id)?))
}

async fn delete(
    State(m): State<Shared>,
    Path(id): Path<String>,
) -> Result<StatusCode, ServiceError> {
    m.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn enabled(
    State(m): State<Shared>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    let (payload, cached) = blocking(move || m.enabled(&id)).await?;
    let mut r = json(StatusCode::OK, payload);
    let tag = if cached { "hit" } else { "miss" };
    r.headers_mut()
        .insert("x-selx-cache", HeaderValue::from_static(tag));
    Ok(r)
}

/// Server-sent events: one `type` event per event type as its query
/// finishes, then a `done` event carrying the full map.
async fn enabled_stream(
    State(m): State<Shared>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    m.handle(&id)?;
    let (tx, rx) = mpsc::unbounded_channel::<Event>();
    tokio::task::spawn_blocking(move || {
        let per_type = tx.clone();
        let r = m.enabled_each(&id, |name, status| {
            let data =
                serde_json::json!({ "name": name, "enabled": status.enabled, "ms": status.ms });
            let _ = per_type.send(Event::default().event("type").data(data.to_string()));
        });
        let last = match r {
            Ok((payload, _)) => Event::default()
                .event("done")
                .data(serde_json::to_string(&payload).expect("plain payload")),
            Err(e) => Event::default()
                .event("error")
                .data(serde_json::to_string(&e.payload()).expect("plain payload")),
        };
        let _ = tx.send(last);
    });
    let events = stream::unfold(
        rx,
        |mut rx| async move { rx.recv().await.map(|e| (Ok(e), rx)) },
    );
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(session).delete(delete))
        .route("/sessions/{id}/op", post(apply))
        .route("/sessions/{id}/trace", get(trace))
        .route("/sessions/{id}/enabled", get(enabled))
        .route("/sessions/{id}/enabled/stream", get(enabled_stream))
        .with_state(manager)
}

/// Serves the API until the process is stopped, sweeping idle sessions
/// once a minute.
pub async fn serve(manager: Arc<SessionManager>, addr: SocketAddr) -> std::io::Result<()> {
    let sweeper = manager.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(std::time::Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(manager)).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TOGGLE;
    use crate::service::ServiceConfig;
    use axum::body::Body;
    use axum::http::Request;
    use http_body_util::BodyExt;
    use serde_json::{json, Value};
    use tower::ServiceExt;

    fn app() -> Router {
        router(Arc::new(SessionManager::new(ServiceConfig {
            query_threads: 2,
            ..Default::default()
        })))
    }

    async fn call(
        app: &Router,
        method: &str,
        uri: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value, Response) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let (parts, body) = resp.into_parts();
        let bytes = body.collect().await.unwrap().to_bytes();
        let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        let head = Response::from_parts(parts, Body::from(bytes.clone()));
        (status, value, head)
    }

    #[tokio::test]
    async fn session_lifecycle() {
        let app = app();
        let (status, v, _) = call(
            &app,
            "POST",
            "/sessions",
            Some(json!({"model": TOGGLE, "property": "G !p", "bound": 4})),
        )
        .await;
        assert_eq!(status, StatusCode::CREATED);
        assert_eq!(v["result"], "session");
        assert_eq!(v["trace"]["loopStart"], 1);
        assert_eq!(v["trace"]["states"].as_array().unwrap().len(), 2);
        let id = v["session"]["id"].as_str().unwrap().to_string();

        let (status, v, _) = call(
            &app,
            "POST",
            &format!("/sessions/{id}/op"),
            Some(json!({"op": "forward"})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v, json!({"result": "applied", "focus": 1, "revision": 1}));

        let (_, v, head) = call(&app, "GET", &format!("/sessions/{id}/enabled"), None).await;
        assert_eq!(head.headers()["x-selx-cache"], "miss");
        assert_eq!(v["types"]["Stay"]["enabled"], true);
        assert_eq!(v["types"]["Set"]["enabled"], false);
        let (_, again, head) = call(&app, "GET", &format!("/sessions/{id}/enabled"), None).await;
        assert_eq!(head.headers()["x-selx-cache"], "hit");
        assert_eq!(v, again);

        let (_, v, _) = call(&app, "GET", &format!("/sessions/{id}/trace"), None).await;
        assert_eq!(v["trace"]["focus"], 1);

        let (status, v, _) = call(
            &app,
            "POST",
            &format!("/sessions/{id}/op"),
            Some(json!({"op": "set_type"})),
        )
        .await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(v["code"], "bad_request");

        let (status, _, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
        assert_eq!(status, StatusCode::NO_CONTENT);
        let (status, v, _) = call(&app, "GET", &format!("/sessions/{id}/trace"), None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(v["code"], "unknown_session");
    }

    #[tokio::test]
    async fn create_outcomes() {
        let app = app();
        let (status, v, _) = call(
            &app,
            "POST",
            "/sessions",
            Some(json!({"model": TOGGLE, "property": "F p", "bound": 6})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v, json!({"result": "propertyHolds", "bound": 6}));
        let (status, v, _) = call(
            &app,
            "POST",
            "/sessions",
            Some(json!({"model": "model m\nsort", "property": "p"})),
        )
        .await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(v["code"], "model_error");
        assert!(v["location"]["line"].is_u64());
    }

    #[tokio::test]
    async fn enabled_stream_reports_each_type() {
        let app = app();
        let (_, v, _) = call(
            &app,
            "POST",
            "/sessions",
            Some(json!({"model": TOGGLE, "property": "G !p", "bound": 4})),
        )
        .await;
        let id = v["session"]["id"].as_str().unwrap();
        let req = Request::get(format!("/sessions/{id}/enabled/stream"))
            .body(Body::empty())
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        let text = String::from_utf8(
            resp.into_body()
                .collect()
                .await
                .unwrap()
                .to_bytes()
                .to_vec(),
        )
        .unwrap();
        assert_eq!(text.matches("event: type").count(), 3);
        assert_eq!(text.matches("event: done").count(), 1);
    }
}
