//! HTTP front end over a morphable hair model.
//!
//! | route                  | method | body / result                              |
//! |------------------------|--------|--------------------------------------------|
//! | `/api/health`          | GET    | `{"status":"ok"}`                          |
//! | `/api/meta`            | GET    | [`Meta`]                                   |
//! | `/api/samples`         | GET    | `{"samples":[id, ...]}`                    |
//! | `/api/synthesize`      | POST   | [`SynthRequest`] → [`MeshPayload`]         |
//! | `/api/export.obj`      | POST   | [`SynthRequest`] → OBJ text                |
//! | `/`                    | GET    | static viewer bundle, when configured      |
//!
//! Validation failures answer 400 with [`ErrorBody`]; a request whose
//! extraction yields no faces answers 422. Shared state is read-only, so
//! identical requests give identical bytes.

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hairfield::mesh_extract::ExtractParams;
use hairfield::mesh_io::{encode_mesh, MeshFormat};
use hairfield::pipeline::{field_to_mesh, MeshParams};
use hairfield::ray_field::{flip, fuse, FuseMode, RayDistanceField};
use hairfield::shading::ShCoefficients;
use hairfield::{Error, HairCoefficients, MorphableHairModel, RaySet, RayTemplate, ScalpSpec, TriMesh};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use axum::http::HeaderValue as Origin;

/// Slider bound suggested to clients, in standard deviations.
pub const SLIDER_RANGE: f64 = 3.0;

pub struct AppState {
    model: MorphableHairModel,
    scalp: ScalpSpec,
    rays: RaySet,
    samples: Vec<(String, RayDistanceField)>,
    defaults: MeshParams,
}

impl AppState {
    /// Checks that model, scalp, template, head and samples agree.
    pub fn new(
        model: MorphableHairModel,
        head: &TriMesh,
        scalp: ScalpSpec,
        template: &RayTemplate,
        samples: Vec<(String, RayDistanceField)>,
        defaults: MeshParams,
    ) -> hairfield::Result<AppState> {
        scalp.check_head(head)?;
        let rays = RaySet::for_head(head, &scalp, template)?;
        if model.template_hash() != rays.template_hash() || model.scalp_hash() != rays.scalp_hash() {
            return Err(Error::Mismatch(
                "model was built for a different template or scalp spec".into(),
            ));
        }
        if model.shape() != (rays.n_s(), rays.n_r()) {
            return Err(Error::Mismatch("model shape does not match the ray set".into()));
        }
        for (id, f) in &samples {
            f.check_rays(&rays)
                .map_err(|e| Error::Mismatch(format!("sample {id}: {e}")))?;
        }
        let mut ids: Vec<&str> = samples.iter().map(|(id, _)| id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("duplicate sample ids".into()));
        }
        Ok(AppState {
            model,
            scalp,
            rays,
            samples,
            defaults,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub n_s: usize,
    pub n_r: usize,
    pub modes: usize,
    pub albedo_modes: usize,
    pub n_samples: usize,
    pub singular_values: Vec<f64>,
    pub albedo_singular_values: Vec<f64>,
    pub slider_range: f64,
    pub template_hash: String,
    pub scalp_hash: String,
    pub default_voxel: f64,
    pub default_smooth: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuseRequest {
    pub sample_ids: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub mask_aware: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRequest {
    pub beta_shape: Vec<f64>,
    pub beta_alb: Vec<f64>,
    #[serde(default = "one")]
    pub beta_s: f64,
    #[serde(default)]
    pub flip: bool,
    #[serde(default)]
    pub fuse: Option<FuseRequest>,
    #[serde(default)]
    pub voxel: Option<f64>,
    #[serde(default)]
    pub smooth: Option<usize>,
    #[serde(default)]
    pub sh: Option<[[f64; 3]; 9]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPayload {
    /// `x, y, z` per vertex.
    pub positions: Vec<f64>,
    /// Three vertex indices per face.
    pub faces: Vec<u32>,
    /// `r, g, b` per vertex in `[0, 1]`.
    pub colors: Vec<f32>,
}

impl MeshPayload {
    pub fn from_mesh(mesh: &TriMesh) -> MeshPayload {
        MeshPayload {
            positions: mesh.vertices().iter().flat_map(|v| [v.x, v.y, v.z]).collect(),
            faces: mesh.faces().iter().flatten().copied().collect(),
            colors: mesh
                .colors()
                .map(|c| c.iter().flatten().copied().collect())
                .unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    /// Request field the message refers to, when there is one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad(field: Option<&str>, message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: "invalid".into(),
                field: field.map(str::to_string),
                message: message.into(),
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: e.kind().into(),
                field: None,
                message: e.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_request(body: &[u8], state: &AppState) -> Result<SynthRequest, ApiError> {
    let req: SynthRequest = serde_json::from_slice(body).map_err(|e| ApiError::bad(None, e.to_string()))?;
    if req.beta_shape.len() != state.model.modes() {
        return Err(ApiError::bad(
            Some("beta_shape"),
            format!("expected {} values, got {}", state.model.modes(), req.beta_shape.len()),
        ));
    }
    if req.beta_alb.len() != state.model.albedo_modes() {
        return Err(ApiError::bad(
            Some("beta_alb"),
            format!("expected {} values, got {}", state.model.albedo_modes(), req.beta_alb.len()),
        ));
    }
    if !(req.beta_s > 0.0 && req.beta_s.is_finite()) {
        return Err(ApiError::bad(Some("beta_s"), "must be a positive finite number"));
    }
    if let Some(v) = req.voxel {
        if !(v > 0.0 && v <= 0.5) {
            return Err(ApiError::bad(Some("voxel"), "must lie in (0, 0.5]"));
        }
    }
    if let Some(f) = &req.fuse {
        if f.sample_ids.len() != f.weights.len() {
            return Err(ApiError::bad(Some("fuse"), "sample_ids and weights differ in length"));
        }
        if let Some(bad) = f.sample_ids.iter().find(|id| !state.samples.iter().any(|(s, _)| s == *id)) {
            return Err(ApiError::bad(Some("fuse.sample_ids"), format!("unknown sample {bad:?}")));
        }
    }
    Ok(req)
}

/// Runs one request to a mesh. Pure in `state`.
pub fn synthesize_mesh(state: &AppState, req: &SynthRequest) -> Result<TriMesh, ApiError> {
    let coeffs = HairCoefficients {
        beta_shape: req.beta_shape.clone(),
        beta_alb: req.beta_alb.clone(),
        beta_s: req.beta_s,
        beta_sh: req.sh.map(ShCoefficients),
    };
    let mut field = state.model.synthesize(&coeffs)?;
    if let Some(f) = &req.fuse {
        if !f.sample_ids.is_empty() {
            let mut fields = vec![field];
            let mut weights = vec![1.0 - f.weights.iter().sum::<f64>()];
            for (id, w) in f.sample_ids.iter().zip(&f.weights) {
                let (_, sample) = state.samples.iter().find(|(s, _)| s == id).expect("validated");
                fields.push(sample.clone());
                weights.push(*w);
            }
            let mode = if f.mask_aware { FuseMode::MaskAware } else { FuseMode::Plain };
            field = fuse(&fields, &weights, mode)?;
        }
    }
    if req.flip {
        field = flip(&field, &state.scalp)?;
    }
    let params = MeshParams {
        extract: ExtractParams {
            voxel: req.voxel.unwrap_or(state.defaults.extract.voxel),
            match_threshold: state.defaults.extract.match_threshold,
        },
        smooth_iterations: req.smooth.unwrap_or(state.defaults.smooth_iterations),
        smooth_lambda: state.defaults.smooth_lambda,
        sh: coeffs.beta_sh.or(state.defaults.sh),
    };
    let mesh = match field_to_mesh(&field, &state.rays, &params) {
        Ok(m) => m,
        Err(Error::Invalid(msg)) if field.support() == 0 => {
            return Err(ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: ErrorBody {
                    error: "empty".into(),
                    field: None,
                    message: msg,
                },
            })
        }
        Err(e) => return Err(e.into()),
    };
    if mesh.faces().is_empty() {
        return Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: ErrorBody {
                error: "empty".into(),
                field: None,
                message: "extraction produced no faces".into(),
            },
        });
    }
    Ok(mesh)
}

async fn run(state: Arc<AppState>, body: Bytes) -> Result<TriMesh, ApiError> {
    let req = parse_request(&body, &state)?;
    tokio::task::spawn_blocking(move || synthesize_mesh(&state, &req))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody {
                error: "internal".into(),
                field: None,
                message: e.to_string(),
            },
        })?
}

async fn synthesize(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<MeshPayload>, ApiError> {
    let mesh = run(state, body).await?;
    Ok(Json(MeshPayload::from_mesh(&mesh)))
}

async fn export_obj(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let mesh = run(state, body).await?;
    let mut out = Vec::new();
    encode_mesh(&mesh, MeshFormat::Obj, &mut out)?;
    Ok((
        [
            (header::CONTENT_TYPE, "model/obj"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"hair.obj\""),
        ],
        out,
    )
        .into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn meta(State(state): State<Arc<AppState>>) -> Json<Meta> {
    let m = &state.model;
    Json(Meta {
        n_s: m.shape().0,
        n_r: m.shape().1,
        modes: m.modes(),
        albedo_modes: m.albedo_modes(),
        n_samples: m.n_samples(),
        singular_values: m.singular_values().to_vec(),
        albedo_singular_values: m.albedo_singular_values().to_vec(),
        slider_range: SLIDER_RANGE,
        template_hash: m.template_hash().to_hex(),
        scalp_hash: m.scalp_hash().to_hex(),
        default_voxel: state.defaults.extract.voxel,
        default_smooth: state.defaults.smooth_iterations,
    })
}

async fn samples(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let ids: Vec<&str> = state.samples.iter().map(|(id, _)| id.as_str()).collect();
    Json(serde_json::json!({ "samples": ids }))
}

/// Routes, CORS for `cors_origin` (any origin when `None`), and the static
/// bundle under `/` when `static_dir` is set.
pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>, cors_origin: Option<HeaderValue>) -> Router {
    let cors = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    let cors = match cors_origin {
        Some(origin) => cors.allow_origin(origin),
        None => cors.allow_origin(Any),
    };
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/meta", get(meta))
        .route("/api/samples", get(samples))
        .route("/api/synthesize", post(synthesize))
        .route("/api/export.obj", post(export_obj))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}

/// Serves `app` on `listener` until the process stops.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
