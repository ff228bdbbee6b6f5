use crate::args::{
    AnalyzeArgs, Command, EvalArgs, ExtractArgs, FieldCmd, FixtureArgs, FixturesCmd, ModelCmd, RayInputs, ScalpCmd,
    ServeArgs, TemplateCmd,
};
use hairfield::fixtures::{generate, shell_variants, FixtureKind, FixtureRecipe};
use hairfield::metrics::{evaluate, mesh_points, EvalReport};
use hairfield::mesh_io::{load_mesh, write_mesh};
use hairfield::morphable::{load_model, write_model};
use hairfield::pipeline::{field_to_mesh, MeshParams};
use hairfield::ray_field::{
    analyze, apply_exclusion, binarize_score_json, flip, fuse, load_field, perturb, scale_thickness, write_field,
    ExclusionMap, FuseMode, RayDistanceField, DEFAULT_SKIN,
};
use hairfield::scalp_frames::{build_frames, load_scalp_spec, load_template, write_scalp_spec, write_template};
use hairfield::shading::ShCoefficients;
use hairfield::{Error, HairCoefficients, MorphableHairModel, RaySet, RayTemplate, Result, TriMesh};
use hairfield_service::{router, AppState, Origin};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Template(TemplateCmd::Gen { rays, max_polar, out }) => {
            let t = RayTemplate::generate(rays, max_polar)?;
            write_template(&out, &t)?;
            say!("template {} rays {}", t.digest().short(), t.len());
            Ok(())
        }
        Command::Scalp(ScalpCmd::Validate { spec, head }) => scalp_validate(&spec, head.as_deref()),
        Command::Fixtures(FixturesCmd::Gen(args)) => fixtures_gen(&args),
        Command::Analyze(args) => analyze_cmd(&args),
        Command::Model(cmd) => model_cmd(cmd),
        Command::Field(cmd) => field_cmd(cmd),
        Command::Extract(args) => extract_cmd(&args),
        Command::Eval(args) => eval_cmd(&args),
        Command::Serve(args) => serve_cmd(args),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Loads head, scalp spec and template and places the rays. The scalp spec
/// must match the head topology.
fn load_rays(inputs: &RayInputs) -> Result<(TriMesh, hairfield::ScalpSpec, RayTemplate, RaySet)> {
    let head = load_mesh(&inputs.head)?;
    let scalp = load_scalp_spec(&inputs.scalp)?;
    let template = load_template(&inputs.template)?;
    let rays = RaySet::for_head(&head, &scalp, &template)?;
    Ok((head, scalp, template, rays))
}

/// `.srmh` files of `dir` sorted by name.
fn field_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "srmh"))
        .collect();
    files.sort();
    Ok(files)
}

fn scalp_validate(spec: &Path, head: Option<&Path>) -> Result<()> {
    let scalp = load_scalp_spec(spec)?;
    if let Some(head) = head {
        let head = load_mesh(head)?;
        build_frames(&head, &scalp)?;
    }
    say!(
        "scalp {} entries {} topology {}",
        scalp.digest().short(),
        scalp.len(),
        scalp.head_topology()
    );
    Ok(())
}

fn fixtures_gen(args: &FixtureArgs) -> Result<()> {
    let kind: FixtureKind = args.kind.parse()?;
    let mut recipe = FixtureRecipe::new(kind);
    if let Some(l) = args.head_level {
        recipe.head_level = l;
    }
    if let Some(l) = args.hair_level {
        recipe.hair_level = l;
    }
    if let Some(p) = args.pairs {
        recipe.scalp_pairs = p;
    }
    if args.variants > 0 && !matches!(kind, FixtureKind::ShellCap | FixtureKind::NoisyShell) {
        return Err(Error::Invalid("variants need a shell-cap or noisy-shell fixture".into()));
    }
    let fx = generate(&recipe)?;
    create_dir(&args.out)?;
    write_mesh(&args.out.join("head.obj"), &fx.head)?;
    write_scalp_spec(&args.out.join("scalp.json"), &fx.scalp)?;
    write_text(&args.out.join("recipe.json"), &to_json(&recipe))?;
    if let Some(hair) = &fx.hair {
        write_mesh(&args.out.join("hair.obj"), hair)?;
    }
    if fx.hair_parts.len() > 1 {
        for (k, part) in fx.hair_parts.iter().enumerate() {
            write_mesh(&args.out.join(format!("hair_part_{k}.obj")), part)?;
        }
    }
    if args.variants > 0 {
        let dir = args.out.join("variants");
        create_dir(&dir)?;
        for (k, r) in shell_variants(&recipe, args.variants, args.seed).iter().enumerate() {
            let v = generate(r)?;
            let hair = v.hair.as_ref().expect("shell variants have hair");
            write_mesh(&dir.join(format!("variant_{k:03}.obj")), hair)?;
            write_text(&dir.join(format!("variant_{k:03}.json")), &to_json(r))?;
        }
    }
    say!("fixture {} scalp {}", args.kind, fx.scalp.digest().short());
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn analyze_cmd(args: &AnalyzeArgs) -> Result<()> {
    let (_, _, _, rays) = load_rays(&args.rays)?;
    let hair = load_mesh(&args.hair)?;
    let field = analyze(&hair, &rays, args.skin_color.unwrap_or(DEFAULT_SKIN))?;
    write_field(&args.out, &field)?;
    say!("field {}x{} support {}", field.n_s(), field.n_r(), field.support());
    Ok(())
}

fn model_cmd(cmd: ModelCmd) -> Result<()> {
    match cmd {
        ModelCmd::Build {
            fields,
            modes,
            albedo_modes,
            out,
        } => {
            let files = field_files(&fields)?;
            let loaded = files.iter().map(|p| load_field(p)).collect::<Result<Vec<_>>>()?;
            let model = MorphableHairModel::build(&loaded, modes, albedo_modes)?;
            write_model(&out, &model)?;
            say!("model samples {} modes {} albedo-modes {}", model.n_samples(), modes, albedo_modes);
            Ok(())
        }
        ModelCmd::Synth {
            model,
            coeffs,
            beta_s,
            out,
        } => {
            let model = load_model(&model)?;
            let mut c = match coeffs {
                Some(path) => HairCoefficients::from_json(&read_bytes(&path)?)?,
                None => HairCoefficients::zeros(model.modes(), model.albedo_modes()),
            };
            if let Some(s) = beta_s {
                c.beta_s = s;
                c.validate()?;
            }
            let field = model.synthesize(&c)?;
            write_field(&out, &field)?;
            say!("field {}x{} support {}", field.n_s(), field.n_r(), field.support());
            Ok(())
        }
        ModelCmd::Info { model } => {
            let m = load_model(&model)?;
            let (n_s, n_r) = m.shape();
            let info = serde_json::json!({
                "n_s": n_s,
                "n_r": n_r,
                "samples": m.n_samples(),
                "modes": m.modes(),
                "albedo_modes": m.albedo_modes(),
                "singular_values": m.singular_values(),
                "albedo_singular_values": m.albedo_singular_values(),
                "template_hash": m.template_hash().to_hex(),
                "scalp_hash": m.scalp_hash().to_hex(),
            });
            say!("{}", to_json(&info));
            Ok(())
        }
    }
}

fn field_cmd(cmd: FieldCmd) -> Result<()> {
    let (field, out): (RayDistanceField, PathBuf) = match cmd {
        FieldCmd::Fuse {
            inputs,
            weights,
            mask_aware,
            out,
        } => {
            if inputs.len() != weights.len() {
                return Err(Error::Invalid(format!(
                    "{} inputs but {} weights",
                    inputs.len(),
                    weights.len()
                )));
            }
            let fields = inputs.iter().map(|p| load_field(p)).collect::<Result<Vec<_>>>()?;
            let mode = if mask_aware { FuseMode::MaskAware } else { FuseMode::Plain };
            (fuse(&fields, &weights, mode)?, out)
        }
        FieldCmd::Flip { field, scalp, out } => {
            let spec = load_scalp_spec(&scalp)?;
            (flip(&load_field(&field)?, &spec)?, out)
        }
        FieldCmd::Thicken { field, beta_s, out } => (scale_thickness(&load_field(&field)?, beta_s)?, out),
        FieldCmd::Exclude {
            field,
            map,
            skin_color,
            out,
        } => {
            let f = load_field(&field)?;
            let map = ExclusionMap::from_json(&read_bytes(&map)?)?;
            (apply_exclusion(&f, &map, skin_color.unwrap_or(DEFAULT_SKIN))?, out)
        }
        FieldCmd::Perturb {
            field,
            count,
            magnitude,
            seed,
            out,
            map_out,
        } => {
            let (f, map) = perturb(&load_field(&field)?, count, magnitude, seed)?;
            write_text(&map_out, &map.to_json())?;
            (f, out)
        }
        FieldCmd::Binarize { scores, out } => {
            let map = binarize_score_json(&read_bytes(&scores)?)?;
            write_text(&out, &map.to_json())?;
            say!("exclusion map flags {}", map.count());
            return Ok(());
        }
    };
    write_field(&out, &field)?;
    say!("field {}x{} support {}", field.n_s(), field.n_r(), field.support());
    Ok(())
}

fn load_sh(path: &Path) -> Result<ShCoefficients> {
    let sh: ShCoefficients = serde_json::from_slice(&read_bytes(path)?).map_err(|e| Error::Parse {
        location: format!("{} line {} column {}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })?;
    sh.validate()?;
    Ok(sh)
}

fn mesh_params(voxel: Option<f64>, smooth: Option<usize>, lambda: Option<f64>, sh: Option<ShCoefficients>) -> MeshParams {
    let mut p = MeshParams::default();
    if let Some(v) = voxel {
        p.extract.voxel = v;
    }
    if let Some(n) = smooth {
        p.smooth_iterations = n;
    }
    if let Some(l) = lambda {
        p.smooth_lambda = l;
    }
    p.sh = sh;
    p
}

fn extract_cmd(args: &ExtractArgs) -> Result<()> {
    let field = load_field(&args.field)?;
    let (_, _, _, rays) = load_rays(&args.rays)?;
    field.check_rays(&rays)?;
    let sh = args.sh_coeffs.as_deref().map(load_sh).transpose()?;
    let params = mesh_params(args.voxel, args.smooth, args.lambda, sh);
    let mesh = field_to_mesh(&field, &rays, &params)?;
    if mesh.faces().is_empty() {
        return Err(Error::Invalid("extraction produced no faces".into()));
    }
    write_mesh(&args.out, &mesh)?;
    say!("mesh vertices {} faces {}", mesh.vertices().len(), mesh.faces().len());
    Ok(())
}

fn eval_cmd(args: &EvalArgs) -> Result<()> {
    let pred = mesh_points(&load_mesh(&args.pred)?, args.samples, args.seed);
    let gt = mesh_points(&load_mesh(&args.gt)?, args.samples, args.seed);
    let report = evaluate(&pred, &gt, args.threshold)?;
    if let Some(path) = &args.report {
        write_text(path, &to_json(&report))?;
    }
    if args.json {
        say!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        say_raw!("{}", report_text(&report));
    }
    Ok(())
}

fn report_text(r: &EvalReport) -> String {
    format!(
        "chamfer {:.9e}\nnrmse {:.9e}\nrecall {:.6}\nthreshold {:.9e}\nnormalizer {:.9e}\npred_points {}\ngt_points {}\n",
        r.chamfer, r.nrmse, r.recall, r.threshold, r.normalizer, r.pred_points, r.gt_points
    )
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let head = load_mesh(&args.rays.head)?;
    let scalp = load_scalp_spec(&args.rays.scalp)?;
    let template = load_template(&args.rays.template)?;
    let mut samples = Vec::new();
    if let Some(dir) = &args.samples {
        for path in field_files(dir)? {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Invalid(format!("{}: sample name is not UTF-8", path.display())))?
                .to_string();
            samples.push((id, load_field(&path)?));
        }
    }
    let defaults = mesh_params(args.voxel, args.smooth, None, None);
    let state = AppState::new(model, &head, scalp, &template, samples, defaults)?;
    let origin = args
        .cors_origin
        .as_deref()
        .map(|o| Origin::from_str(o).map_err(|_| Error::Invalid(format!("bad CORS origin {o:?}"))))
        .transpose()?;
    let app = router(Arc::new(state), args.static_dir, origin);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Error::Stream)?;
    let addr = format!("{}:{}", args.host, args.port);
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::Invalid(format!("cannot bind {addr}: {e}")))?;
        say!("serving on http://{}", listener.local_addr().map_err(Error::Stream)?);
        hairfield_service::serve(listener, app).await.map_err(Error::Stream)
    })
}
