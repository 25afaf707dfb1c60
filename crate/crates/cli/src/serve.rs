//! Read-only HTTP preview service over one loaded proxy.
//!
//! Endpoints:
//! - `GET /proxy/meta`: JSON summary of the proxy.
//! - `GET /proxy/frame/{t}?budget=N`: decimated frame view as a binary chunk,
//!   `u32` count then `count × (3 × f32 xyz, 3 × u8 rgb)`, little-endian.
//! - `POST /preview`: PNG depth preview for a [`PreviewRequest`].
//! - `POST /trajectory`, `GET /trajectory/{id}`: trajectory store.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use proxy4d::io::{depth_previews, CameraRecord, TrajectoryFile};
use proxy4d::proxy::decimate_cloud;
use proxy4d::render::{render_depth, render_parts};
use proxy4d::{Error, Proxy4D, RenderConfig, Result};
use serde::{Deserialize, Serialize};

/// Bytes per point in a frame chunk.
pub const CHUNK_RECORD_LEN: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreviewRequest {
    pub camera: CameraRecord,
    pub t: usize,
    /// Maximum points in the rendered frame view; absent renders all.
    #[serde(default)]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyMeta {
    pub frame_count: usize,
    pub scene_scale: f64,
    pub background_points: usize,
    pub foreground_points: Vec<usize>,
    pub orbit_center: [f64; 3],
    pub orbit_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryId {
    pub id: u64,
}

pub struct AppState {
    proxy: Proxy4D,
    render: RenderConfig,
    trajectories: Mutex<BTreeMap<u64, TrajectoryFile>>,
}

impl AppState {
    pub fn new(proxy: Proxy4D, render: RenderConfig) -> Self {
        Self { proxy, render, trajectories: Mutex::new(BTreeMap::new()) }
    }
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad(msg: impl Into<String>) -> Self {
        Self(StatusCode::BAD_REQUEST, msg.into())
    }

    fn not_found(msg: impl Into<String>) -> Self {
        Self(StatusCode::NOT_FOUND, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn check_frame(state: &AppState, t: usize) -> ApiResult<()> {
    let n = state.proxy.frame_count();
    if t >= n {
        return Err(ApiError::not_found(format!("frame {t} out of range (frame count {n})")));
    }
    Ok(())
}

fn check_budget(budget: Option<usize>) -> ApiResult<()> {
    if budget == Some(0) {
        return Err(ApiError::bad("budget must be > 0"));
    }
    Ok(())
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad(format!("invalid request body: {e}")))
}

async fn meta(State(state): State<Arc<AppState>>) -> Json<ProxyMeta> {
    let p = &state.proxy;
    let (centre, radius) = p.suggested_orbit();
    Json(ProxyMeta {
        frame_count: p.frame_count(),
        scene_scale: p.scene_scale(),
        background_points: p.background().len(),
        foreground_points: p.foreground().iter().map(|c| c.len()).collect(),
        orbit_center: centre.into(),
        orbit_radius: radius,
    })
}

#[derive(Debug, Deserialize)]
struct BudgetQuery {
    budget: Option<usize>,
}

/// Encodes a cloud in the frame-chunk layout. Points without color are
/// sent as white.
pub fn encode_chunk(cloud: &proxy4d::PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + CHUNK_RECORD_LEN * cloud.len());
    out.extend_from_slice(&(cloud.len() as u32).to_le_bytes());
    for (i, p) in cloud.positions().iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        out.extend_from_slice(&cloud.color(i).unwrap_or([255, 255, 255]));
    }
    out
}

async fn frame(
    State(state): State<Arc<AppState>>,
    Path(t): Path<usize>,
    Query(q): Query<BudgetQuery>,
) -> ApiResult<Response> {
    check_frame(&state, t)?;
    check_budget(q.budget)?;
    let body = tokio::task::spawn_blocking(move || -> Result<Vec<u8>> {
        let view = state.proxy.frame_view(t)?;
        let view = match q.budget {
            Some(b) if b < view.len() => decimate_cloud(&view, b),
            _ => view,
        };
        Ok(encode_chunk(&view))
    })
    .await
    .expect("chunk task")
    .map_err(|e| ApiError::bad(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], body).into_response())
}

/// Depth preview bytes for one camera: the frame view is decimated only when
/// it exceeds the budget, and the result is normalized on its own range, the
/// same as a one-frame `render` run.
pub fn preview_pixels(state: &AppState, req: &PreviewRequest) -> Result<(usize, usize, Vec<u8>)> {
    let camera = req.camera.to_camera()?;
    if req.t >= state.proxy.frame_count() {
        return Err(Error::FrameOutOfRange { index: req.t, count: state.proxy.frame_count() });
    }
    let (bg, fg) = (state.proxy.background(), &state.proxy.foreground()[req.t]);
    let depth = match req.budget {
        Some(b) if b < bg.len() + fg.len() => {
            render_depth(&decimate_cloud(&state.proxy.frame_view(req.t)?, b), &camera, &state.render)
        }
        _ => render_parts(&[bg, fg], &camera, &state.render),
    };
    let px = depth_previews(std::slice::from_ref(&depth)).remove(0);
    Ok((depth.width(), depth.height(), px))
}

async fn preview(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: PreviewRequest = parse_json(&body)?;
    check_frame(&state, req.t)?;
    check_budget(req.budget)?;
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>> {
        let (w, h, px) = preview_pixels(&state, &req)?;
        let img = image::GrayImage::from_raw(w as u32, h as u32, px).expect("preview matches its dimensions");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png)
            .map_err(|e| Error::InvalidArgument(format!("png encoding failed: {e}")))?;
        Ok(out.into_inner())
    })
    .await
    .expect("preview task")
    .map_err(|e| ApiError::bad(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn put_trajectory(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<TrajectoryId>> {
    let file: TrajectoryFile = parse_json(&body)?;
    let traj = file.clone().into_trajectory().map_err(|e| ApiError::bad(e.to_string()))?;
    traj.check_source(state.proxy.frame_count()).map_err(|e| ApiError::bad(e.to_string()))?;
    let mut store = state.trajectories.lock().expect("trajectory store");
    let id = store.keys().next_back().map_or(1, |k| k + 1);
    store.insert(id, file);
    Ok(Json(TrajectoryId { id }))
}

async fn get_trajectory(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<Json<TrajectoryFile>> {
    let store = state.trajectories.lock().expect("trajectory store");
    store.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("no trajectory with id {id}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/proxy/meta", get(meta))
        .route("/proxy/frame/{t}", get(frame))
        .route("/preview", post(preview))
        .route("/trajectory", post(put_trajectory))
        .route("/trajectory/{id}", get(get_trajectory))
        .with_state(state)
}

/// Serves until the process is stopped.
pub fn run(proxy: Proxy4D, render: RenderConfig, bind: &str, port: u16) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((bind, port)).await?;
        eprintln!("serving {} frames on http://{}", proxy.frame_count(), listener.local_addr()?);
        let app = router(Arc::new(AppState::new(proxy, render)));
        axum::serve(listener, app).await?;
        Ok(())
    })
}
