use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use hairfield::fixtures::{generate, shell_variants, FixtureKind, FixtureRecipe};
use hairfield::mesh_io::{bbox_diagonal, parse_mesh};
use hairfield::pipeline::{field_to_mesh, MeshParams};
use hairfield::ray_field::{analyze, RayDistanceField, DEFAULT_SKIN};
use hairfield::{MorphableHairModel, RaySet, RayTemplate};
use hairfield_service::{router, AppState, ErrorBody, MeshPayload, Meta};
use serde_json::{json, Value};
use std::sync::{Arc, OnceLock};
use std::time::Instant;
use tower::ServiceExt;

struct Setup {
    state: Arc<AppState>,
    rays: RaySet,
    model: MorphableHairModel,
    samples: Vec<(String, RayDistanceField)>,
}

fn build(small: bool) -> Setup {
    let mut base = FixtureRecipe::new(FixtureKind::ShellCap);
    let (n_rays, variants) = if small {
        base.head_level = 4;
        base.scalp_pairs = 120;
        base.hair_level = 4;
        (9, 6)
    } else {
        (25, 8)
    };
    let fx = generate(&base).unwrap();
    let template = RayTemplate::generate(n_rays, 60.0).unwrap();
    let rays = RaySet::for_head(&fx.head, &fx.scalp, &template).unwrap();
    let fields: Vec<_> = shell_variants(&base, variants, 3)
        .iter()
        .map(|r| analyze(generate(r).unwrap().hair.as_ref().unwrap(), &rays, DEFAULT_SKIN).unwrap())
        .collect();
    let model = MorphableHairModel::build(&fields, variants - 1, 2).unwrap();
    let bald = RayDistanceField::empty(
        rays.n_s(),
        rays.n_r(),
        rays.template_hash(),
        rays.scalp_hash(),
        DEFAULT_SKIN,
    );
    let samples = vec![
        ("variant-0".to_string(), fields[0].clone()),
        ("bald".to_string(), bald),
    ];
    let state = AppState::new(
        model.clone(),
        &fx.head,
        fx.scalp.clone(),
        &template,
        samples.clone(),
        MeshParams::default(),
    )
    .unwrap();
    Setup {
        state: Arc::new(state),
        rays,
        model,
        samples,
    }
}

fn small() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| build(true))
}

fn app() -> Router {
    router(small().state.clone(), None, None)
}

async fn send(app: Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .header("origin", "http://localhost:5173")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn zero_request(model: &MorphableHairModel) -> Value {
    json!({
        "beta_shape": vec![0.0; model.modes()],
        "beta_alb": vec![0.0; model.albedo_modes()],
    })
}

fn payload_diag(p: &MeshPayload) -> f64 {
    let pts: Vec<hairfield::Vec3> = p
        .positions
        .chunks_exact(3)
        .map(|c| hairfield::Vec3::new(c[0], c[1], c[2]))
        .collect();
    hairfield::mesh_io::bbox_diagonal_points(&pts).unwrap()
}

#[tokio::test]
async fn health_meta_samples() {
    let (s, body) = send(app(), "GET", "/api/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["status"], "ok");
    let (s, body) = send(app(), "GET", "/api/meta", None).await;
    assert_eq!(s, StatusCode::OK);
    let meta: Meta = serde_json::from_slice(&body).unwrap();
    let m = &small().model;
    assert_eq!((meta.modes, meta.albedo_modes), (m.modes(), m.albedo_modes()));
    assert_eq!((meta.n_s, meta.n_r), m.shape());
    assert_eq!(meta.singular_values, m.singular_values());
    assert_eq!(meta.slider_range, 3.0);
    let (_, body) = send(app(), "GET", "/api/samples", None).await;
    assert_eq!(
        serde_json::from_slice::<Value>(&body).unwrap()["samples"],
        json!(["variant-0", "bald"])
    );
}

#[tokio::test]
async fn zero_coefficients_give_the_mean_mesh_deterministically() {
    let m = &small().model;
    let (s, a) = send(app(), "POST", "/api/synthesize", Some(zero_request(m))).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = send(app(), "POST", "/api/synthesize", Some(zero_request(m))).await;
    assert_eq!(a, b);
    let got: MeshPayload = serde_json::from_slice(&a).unwrap();
    let mean = field_to_mesh(&m.mean_field().unwrap(), &small().rays, &MeshParams::default()).unwrap();
    assert_eq!(got, MeshPayload::from_mesh(&mean));
    assert_eq!(got.positions.len(), got.colors.len());
    assert_eq!(got.faces.len() % 3, 0);
}

#[tokio::test]
async fn concurrent_requests_agree() {
    let m = &small().model;
    let mut req = zero_request(m);
    req["beta_shape"][0] = json!(0.8);
    let handles: Vec<_> = (0..4)
        .map(|_| tokio::spawn(send(app(), "POST", "/api/synthesize", Some(req.clone()))))
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        bodies.push(h.await.unwrap().1);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn thickness_grows_the_mesh() {
    let m = &small().model;
    let (_, one) = send(app(), "POST", "/api/synthesize", Some(zero_request(m))).await;
    let mut req = zero_request(m);
    req["beta_s"] = json!(2.0);
    let (s, two) = send(app(), "POST", "/api/synthesize", Some(req)).await;
    assert_eq!(s, StatusCode::OK);
    let one: MeshPayload = serde_json::from_slice(&one).unwrap();
    let two: MeshPayload = serde_json::from_slice(&two).unwrap();
    assert!(payload_diag(&two) > payload_diag(&one));
}

#[tokio::test]
async fn flip_and_fuse() {
    let m = &small().model;
    let mut req = zero_request(m);
    req["flip"] = json!(true);
    let (s, _) = send(app(), "POST", "/api/synthesize", Some(req)).await;
    assert_eq!(s, StatusCode::OK);

    // Full weight on a sample reproduces that sample's mesh.
    let mut req = zero_request(m);
    req["fuse"] = json!({"sample_ids": ["variant-0"], "weights": [1.0]});
    let (s, body) = send(app(), "POST", "/api/synthesize", Some(req)).await;
    assert_eq!(s, StatusCode::OK);
    let want = field_to_mesh(&small().samples[0].1, &small().rays, &MeshParams::default()).unwrap();
    assert_eq!(serde_json::from_slice::<MeshPayload>(&body).unwrap(), MeshPayload::from_mesh(&want));
}

#[tokio::test]
async fn validation_errors_are_400_with_field() {
    let m = &small().model;
    let cases = [
        (json!({"beta_shape": [1.0], "beta_alb": vec![0.0; m.albedo_modes()]}), Some("beta_shape")),
        (json!({"beta_shape": vec![0.0; m.modes()], "beta_alb": []}), Some("beta_alb")),
        (
            json!({"beta_shape": vec![0.0; m.modes()], "beta_alb": vec![0.0; m.albedo_modes()], "beta_s": 0.0}),
            Some("beta_s"),
        ),
        (
            json!({"beta_shape": vec![0.0; m.modes()], "beta_alb": vec![0.0; m.albedo_modes()],
                   "fuse": {"sample_ids": ["nope"], "weights": [0.5]}}),
            Some("fuse.sample_ids"),
        ),
        (json!({"beta_shape": "x"}), None),
    ];
    for (body, field) in cases {
        let (s, out) = send(app(), "POST", "/api/synthesize", Some(body)).await;
        assert_eq!(s, StatusCode::BAD_REQUEST);
        let err: ErrorBody = serde_json::from_slice(&out).unwrap();
        assert_eq!(err.field.as_deref(), field);
    }
}

#[tokio::test]
async fn empty_mesh_is_422() {
    let m = &small().model;
    let mut req = zero_request(m);
    req["fuse"] = json!({"sample_ids": ["bald"], "weights": [1.0]});
    let (s, out) = send(app(), "POST", "/api/synthesize", Some(req)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(serde_json::from_slice::<ErrorBody>(&out).unwrap().error, "empty");
}

#[tokio::test]
async fn cors_and_obj_export() {
    let m = &small().model;
    let req = Request::builder()
        .method("POST")
        .uri("/api/export.obj")
        .header("content-type", "application/json")
        .header("origin", "http://localhost:5173")
        .body(Body::from(zero_request(m).to_string()))
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let (mesh, _) = parse_mesh(&bytes).unwrap();
    assert!(!mesh.faces().is_empty());
    assert!(bbox_diagonal(&mesh).unwrap() > 0.0);

    let preflight = Request::builder()
        .method("OPTIONS")
        .uri("/api/synthesize")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(preflight).await.unwrap();
    assert!(resp.status().is_success());
    assert!(resp.headers().contains_key("access-control-allow-methods"));
}

#[tokio::test]
async fn static_bundle_is_served_at_root() {
    let dir = std::env::temp_dir().join(format!("hairfield-static-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<!doctype html><title>viewer</title>").unwrap();
    let app = router(small().state.clone(), Some(dir.clone()), None);
    let (s, body) = send(app, "GET", "/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("viewer"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[tokio::test]
async fn median_latency_at_default_voxel() {
    let setup = build(false);
    let app = router(setup.state.clone(), None, None);
    let mut times = Vec::new();
    for k in 0..5 {
        let mut req = zero_request(&setup.model);
        req["beta_shape"][0] = json!(0.2 * k as f64);
        let t = Instant::now();
        let (s, _) = send(app.clone(), "POST", "/api/synthesize", Some(req)).await;
        times.push(t.elapsed());
        assert_eq!(s, StatusCode::OK);
    }
    times.sort();
    assert!(times[2].as_millis() <= 500, "median {:?}", times[2]);
}

#[test]
fn synth_request_seeds() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/synth_request");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let bytes = std::fs::read(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        match serde_json::from_slice::<hairfield_service::SynthRequest>(&bytes) {
            Ok(req) => {
                assert!(!name.starts_with("bad_"), "{name} accepted");
                let text = serde_json::to_vec(&req).unwrap();
                assert_eq!(serde_json::from_slice::<hairfield_service::SynthRequest>(&text).unwrap(), req);
            }
            Err(_) => assert!(name.starts_with("bad_"), "{name} rejected"),
        }
        seen += 1;
    }
    assert!(seen >= 3);
}
