//! Runs the fuzz target bodies over the checked-in seeds and over seeded
//! byte mutations of them, so decoder regressions show up without a
//! nightly toolchain.

use hairfield::mesh_io::{encode_mesh, parse_obj, parse_ply, MeshFormat};
use hairfield::ray_field::binarize_score_json;
use hairfield::{ExclusionMap, HairCoefficients, MorphableHairModel, RayDistanceField, RayTemplate, ScalpSpec};
use proptest::prelude::*;
use std::path::PathBuf;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn obj(data: &[u8]) -> bool {
    let Ok((mesh, _)) = parse_obj(data) else { return false };
    let mut buf = Vec::new();
    encode_mesh(&mesh, MeshFormat::Obj, &mut buf).unwrap();
    let again = parse_obj(&buf).unwrap().0;
    assert_eq!(again.vertices(), mesh.vertices());
    assert_eq!(again.faces(), mesh.faces());
    assert_eq!(again.colors(), mesh.colors());
    true
}

fn ply(data: &[u8]) -> bool {
    let Ok((mesh, _)) = parse_ply(data) else { return false };
    for format in [MeshFormat::PlyAscii, MeshFormat::PlyBinary] {
        let mut buf = Vec::new();
        encode_mesh(&mesh, format, &mut buf).unwrap();
        assert_eq!(parse_ply(&buf).unwrap().0, mesh);
    }
    true
}

fn field(data: &[u8]) -> bool {
    let Ok(f) = RayDistanceField::decode(data) else { return false };
    let bytes = f.encode();
    assert_eq!(bytes.len(), data.len());
    assert_eq!(RayDistanceField::decode(&bytes).unwrap(), f);
    true
}

fn model(data: &[u8]) -> bool {
    let Ok(m) = MorphableHairModel::decode(data) else { return false };
    let bytes = m.encode();
    assert_eq!(bytes.len(), data.len());
    assert_eq!(MorphableHairModel::decode(&bytes).unwrap().encode(), bytes);
    true
}

fn scalp(data: &[u8]) -> bool {
    let Ok(s) = ScalpSpec::from_json(data) else { return false };
    assert_eq!(ScalpSpec::from_json(s.to_json().as_bytes()).unwrap().digest(), s.digest());
    true
}

fn template(data: &[u8]) -> bool {
    let Ok(t) = RayTemplate::from_json(data) else { return false };
    assert_eq!(RayTemplate::from_json(t.to_json().as_bytes()).unwrap().digest(), t.digest());
    true
}

fn exclusion(data: &[u8]) -> bool {
    let Ok(m) = ExclusionMap::from_json(data) else { return false };
    assert_eq!(ExclusionMap::from_json(m.to_json().as_bytes()).unwrap(), m);
    true
}

fn scores(data: &[u8]) -> bool {
    let Ok(m) = binarize_score_json(data) else { return false };
    let (n_s, n_r) = m.shape();
    assert!(m.count() <= 2 * n_s * n_r);
    true
}

fn coeffs(data: &[u8]) -> bool {
    let Ok(c) = HairCoefficients::from_json(data) else { return false };
    assert_eq!(HairCoefficients::from_json(c.to_json().as_bytes()).unwrap(), c);
    true
}

type Target = (&'static str, fn(&[u8]) -> bool);

const TARGETS: [Target; 9] = [
    ("obj", obj),
    ("ply", ply),
    ("field_decode", field),
    ("model_decode", model),
    ("scalp_spec", scalp),
    ("template", template),
    ("exclusion_map", exclusion),
    ("score_json", scores),
    ("coeffs", coeffs),
];

#[test]
fn seeds_decode_as_expected() {
    for (target, run) in TARGETS {
        let seeds = corpus(target);
        let accepted: Vec<&str> = seeds
            .iter()
            .filter(|(_, bytes)| run(bytes))
            .map(|(name, _)| name.as_str())
            .collect();
        // Every directory holds at least one well-formed seed.
        assert!(!accepted.is_empty(), "{target}: no seed accepted");
        for (name, _) in &seeds {
            let rejected = ["bad_", "short_", "truncated_", "wrong_", "out_of_range", "zero_thickness"]
                .iter()
                .any(|p| name.starts_with(p));
            assert_eq!(accepted.contains(&name.as_str()), !rejected, "{target}/{name}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mutated_seeds_never_panic(target in 0usize..TARGETS.len(), pick in any::<usize>(),
                                 edits in proptest::collection::vec((any::<usize>(), any::<u8>(), 0u8..3), 1..8)) {
        let (name, run) = TARGETS[target];
        let seeds = corpus(name);
        let mut bytes = seeds[pick % seeds.len()].1.clone();
        for (pos, byte, op) in edits {
            if bytes.is_empty() {
                bytes.push(byte);
                continue;
            }
            let at = pos % bytes.len();
            match op {
                0 => bytes[at] = byte,
                1 => bytes.insert(at, byte),
                _ => {
                    bytes.remove(at);
                }
            }
        }
        run(&bytes);
    }
}
