//! JSON over HTTP for the session store.

use std::sync::Arc;

use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pipe_core::ispace::Assignment;
use pipe_core::service::{ServiceError, SessionStore, View};
use pipe_core::Test;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

type Store = Arc<SessionStore>;

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/models", get(list_models).post(upload_model))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/view", get(view))
        .route("/sessions/{id}/input", post(input))
        .route("/sessions/{id}/browse", post(browse))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/reset", post(reset))
        .with_state(store)
}

/// An error as the client sees it: always a JSON [`ErrorBody`].
pub enum ApiError {
    Service(ServiceError),
    BadRequest(String),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = match self {
            ApiError::Service(e) => e,
            ApiError::BadRequest(message) => {
                let body = ErrorBody { error: "bad_request".into(), message };
                return (StatusCode::BAD_REQUEST, Json(body)).into_response();
            }
        };
        let (status, kind) = match &e {
            ServiceError::UnknownModel(_) => (StatusCode::NOT_FOUND, "unknown_model"),
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::ModelExists(_) => (StatusCode::CONFLICT, "model_exists"),
            ServiceError::InconsistentAssignment(_) => (StatusCode::CONFLICT, "inconsistent_assignment"),
            ServiceError::EmptyResidual => (StatusCode::CONFLICT, "empty_residual"),
            ServiceError::NoSuchArm(_) => (StatusCode::CONFLICT, "no_such_arm"),
            ServiceError::EmptyHistory => (StatusCode::CONFLICT, "empty_history"),
            ServiceError::Syntax(_) => (StatusCode::BAD_REQUEST, "syntax"),
            ServiceError::Snapshot(_) => (StatusCode::INTERNAL_SERVER_ERROR, "snapshot"),
        };
        let body = ErrorBody {
            error: kind.into(),
            message: e.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError::Service(e)
    }
}

/// `Json` whose rejections are reported like every other error.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(JsonBody(v)),
            Err(r) => Err(ApiError::BadRequest(r.body_text())),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadRequest {
    #[serde(default)]
    pub id: Option<String>,
    pub dsl: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelId {
    pub id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelList {
    pub models: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionRequest {
    pub model: String,
}

/// The test to browse, as `{"key", "value"}` or in surface syntax.
#[derive(Debug, Serialize, Deserialize)]
pub struct BrowseRequest {
    pub test: TestSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestSpec {
    Text(String),
    Full(Test),
}

async fn list_models(State(store): State<Store>) -> Json<ModelList> {
    Json(ModelList {
        models: store.list_models(),
    })
}

async fn upload_model(
    State(store): State<Store>,
    JsonBody(req): JsonBody<UploadRequest>,
) -> Result<(StatusCode, Json<ModelId>), ApiError> {
    let id = store.upload_model(req.id.as_deref(), &req.dsl)?;
    Ok((StatusCode::CREATED, Json(ModelId { id })))
}

async fn create_session(
    State(store): State<Store>,
    JsonBody(req): JsonBody<SessionRequest>,
) -> Result<(StatusCode, Json<View>), ApiError> {
    Ok((StatusCode::CREATED, Json(store.create_session(&req.model)?)))
}

async fn view(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<View> {
    Ok(Json(store.view(&id)?))
}

async fn input(
    State(store): State<Store>,
    Path(id): Path<String>,
    JsonBody(delta): JsonBody<Assignment>,
) -> ApiResult<View> {
    Ok(Json(store.apply_input(&id, delta)?))
}

async fn browse(
    State(store): State<Store>,
    Path(id): Path<String>,
    JsonBody(req): JsonBody<BrowseRequest>,
) -> ApiResult<View> {
    let test = match req.test {
        TestSpec::Full(t) => t,
        TestSpec::Text(s) => s
            .parse::<Test>()
            .map_err(|_| ServiceError::NoSuchArm(s.clone()))?,
    };
    Ok(Json(store.browse(&id, &test)?))
}

async fn undo(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<View> {
    Ok(Json(store.undo(&id)?))
}

async fn reset(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<View> {
    Ok(Json(store.reset(&id)?))
}
