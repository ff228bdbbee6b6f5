//! Scalp vertex selections with mirror pairing, the hemisphere ray template,
//! per-vertex symmetric frames and world-space ray placement.
//!
//! Frames on the left side are right-handed and frames on the right side are
//! left-handed. Expressing the same template in both kinds of frame yields
//! mirror-image rays for mirror-image scalp vertices, so field entry `(i, n)`
//! and `(pair(i), n)` describe mirrored hair.

use crate::error::{read_file, write_file, Error, Result};
use crate::hash::Digest;
use crate::mesh_io::{vertex_normals, TriMesh};
use crate::ray_engine::Ray;
use crate::Vec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::f64::consts::PI;

pub const MANIFEST_VERSION: u32 = 1;
/// Minimum angle between any two template directions.
pub const MIN_SEPARATION_DEG: f64 = 1.0;
/// Below this, `t × z` is considered zero and the frame undefined.
pub const FRAME_DEGENERACY_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn delta(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// Ordered scalp vertices with a fixed-point-free left/right pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalpSpec {
    head_topology: String,
    vertex_ids: Vec<u32>,
    pair_of: Vec<u32>,
    side: Vec<Side>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScalpEntry {
    vertex_id: u32,
    pair_id: u32,
    side: Side,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalpManifest {
    version: u32,
    head_topology: String,
    n_s: usize,
    entries: Vec<ScalpEntry>,
}

impl ScalpSpec {
    pub fn new(
        head_topology: impl Into<String>,
        vertex_ids: Vec<u32>,
        pair_of: Vec<u32>,
        side: Vec<Side>,
    ) -> Result<ScalpSpec> {
        let spec = ScalpSpec {
            head_topology: head_topology.into(),
            vertex_ids,
            pair_of,
            side,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let n = self.vertex_ids.len();
        if self.pair_of.len() != n || self.side.len() != n {
            return Err(Error::invalid("scalp spec columns differ in length"));
        }
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("scalp spec needs a positive even count, got {n}")));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for i in 0..n {
            if !seen.insert(self.vertex_ids[i]) {
                return Err(Error::invalid(format!(
                    "vertex {} listed twice",
                    self.vertex_ids[i]
                )));
            }
            let j = self.pair_of[i] as usize;
            if j >= n {
                return Err(Error::invalid(format!("entry {i} pairs with missing entry {j}")));
            }
            if j == i {
                return Err(Error::invalid(format!("entry {i} is paired with itself")));
            }
            if self.pair_of[j] as usize != i {
                return Err(Error::invalid(format!(
                    "pairing is not an involution at entry {i} -> {j} -> {}",
                    self.pair_of[j]
                )));
            }
            if self.side[i] == self.side[j] {
                return Err(Error::invalid(format!("entries {i} and {j} are on the same side")));
            }
        }
        let left = self.side.iter().filter(|s| **s == Side::Left).count();
        if left * 2 != n {
            return Err(Error::invalid(format!("{left} left entries out of {n}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    pub fn head_topology(&self) -> &str {
        &self.head_topology
    }

    pub fn vertex_ids(&self) -> &[u32] {
        &self.vertex_ids
    }

    pub fn pair(&self, i: usize) -> usize {
        self.pair_of[i] as usize
    }

    pub fn side(&self, i: usize) -> Side {
        self.side[i]
    }

    pub fn digest(&self) -> Digest {
        let mut buf = Vec::with_capacity(self.len() * 9 + self.head_topology.len() + 8);
        buf.extend_from_slice(&(self.head_topology.len() as u64).to_le_bytes());
        buf.extend_from_slice(self.head_topology.as_bytes());
        for i in 0..self.len() {
            buf.extend_from_slice(&self.vertex_ids[i].to_le_bytes());
            buf.extend_from_slice(&self.pair_of[i].to_le_bytes());
            buf.push(matches!(self.side[i], Side::Right) as u8);
        }
        Digest::of("scalp-spec", &buf)
    }

    /// Checks that every scalp vertex exists in `head`.
    pub fn check_head(&self, head: &TriMesh) -> Result<()> {
        let n = head.vertices().len();
        match self.vertex_ids.iter().find(|&&v| v as usize >= n) {
            Some(v) => Err(Error::mismatch(format!(
                "scalp vertex {v} does not exist in a head mesh with {n} vertices"
            ))),
            None => Ok(()),
        }
    }

    pub fn positions(&self, head: &TriMesh) -> Result<Vec<Vec3>> {
        self.check_head(head)?;
        Ok(self
            .vertex_ids
            .iter()
            .map(|&v| head.vertices()[v as usize])
            .collect())
    }

    pub fn from_json(bytes: &[u8]) -> Result<ScalpSpec> {
        let m: ScalpManifest = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::invalid(format!("unsupported scalp spec version {}", m.version)));
        }
        if m.n_s != m.entries.len() {
            return Err(Error::invalid(format!(
                "n_s = {} but {} entries listed",
                m.n_s,
                m.entries.len()
            )));
        }
        ScalpSpec::new(
            m.head_topology,
            m.entries.iter().map(|e| e.vertex_id).collect(),
            m.entries.iter().map(|e| e.pair_id).collect(),
            m.entries.iter().map(|e| e.side).collect(),
        )
    }

    pub fn to_json(&self) -> String {
        let m = ScalpManifest {
            version: MANIFEST_VERSION,
            head_topology: self.head_topology.clone(),
            n_s: self.len(),
            entries: (0..self.len())
                .map(|i| ScalpEntry {
                    vertex_id: self.vertex_ids[i],
                    pair_id: self.pair_of[i],
                    side: self.side[i],
                })
                .collect(),
        };
        serde_json::to_string_pretty(&m).expect("scalp manifest serializes")
    }
}

pub fn load_scalp_spec(path: &Path) -> Result<ScalpSpec> {
    ScalpSpec::from_json(&read_file(path)?)
}

pub fn write_scalp_spec(path: &Path, spec: &ScalpSpec) -> Result<()> {
    write_file(path, spec.to_json().as_bytes())
}

/// Fixed set of unit directions in frame-local coordinates. The first three
/// are the canonical axes.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTemplate {
    directions: Vec<Vec3>,
    max_polar_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    version: u32,
    n_rays: usize,
    max_polar_deg: f64,
    directions: Vec<[f64; 3]>,
}

fn crowded(n_rays: usize, max_polar_deg: f64) -> Error {
    Error::invalid(format!(
        "cannot place {n_rays} directions {MIN_SEPARATION_DEG} degree apart within {max_polar_deg} degrees of the pole"
    ))
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653; // pi * (3 - sqrt 5)

impl RayTemplate {
    /// Canonical triad followed by a Fibonacci-lattice sample of the cap
    /// `z >= cos(max_polar_deg)`. Lattice points within 1 degree of an
    /// accepted direction are skipped and the lattice is lengthened until
    /// enough directions are accepted.
    pub fn generate(n_rays: usize, max_polar_deg: f64) -> Result<RayTemplate> {
        if n_rays < 3 {
            return Err(Error::invalid(format!("template needs at least 3 rays, got {n_rays}")));
        }
        if !(max_polar_deg > 0.0 && max_polar_deg <= 90.0) {
            return Err(Error::invalid(format!(
                "max polar angle must lie in (0, 90] degrees, got {max_polar_deg}"
            )));
        }
        let canonical = [Vec3::x(), Vec3::y(), Vec3::z()];
        let need = n_rays - 3;
        let cos_max = max_polar_deg.to_radians().cos();
        let cos_sep = MIN_SEPARATION_DEG.to_radians().cos();
        // Caps of half the separation around accepted directions are disjoint
        // and lie inside the cap widened by that half-angle.
        let half = (MIN_SEPARATION_DEG / 2.0).to_radians();
        let room = (1.0 - (max_polar_deg.to_radians() + half).min(PI).cos()) / (1.0 - half.cos());
        if n_rays as f64 > room {
            return Err(crowded(n_rays, max_polar_deg));
        }
        let limit = need * 4 + 64;
        let mut total = need;
        loop {
            let mut dirs = canonical.to_vec();
            for k in 0..total {
                if dirs.len() == n_rays {
                    break;
                }
                let z = 1.0 - (1.0 - cos_max) * (k as f64 + 0.5) / total as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = k as f64 * GOLDEN_ANGLE;
                let d = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                if dirs.iter().all(|a| a.dot(&d) <= cos_sep) {
                    dirs.push(d);
                }
            }
            if dirs.len() == n_rays {
                return Ok(RayTemplate {
                    directions: dirs,
                    max_polar_deg,
                });
            }
            total += 1 + total / 32;
            if total > limit {
                return Err(crowded(n_rays, max_polar_deg));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn max_polar_deg(&self) -> f64 {
        self.max_polar_deg
    }

    pub fn digest(&self) -> Digest {
        let mut buf = Vec::with_capacity(8 + self.len() * 24);
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for d in &self.directions {
            for c in d.iter() {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        Digest::of("ray-template", &buf)
    }

    fn validate(&self) -> Result<()> {
        let d = &self.directions;
        if d.len() < 3 || d[0] != Vec3::x() || d[1] != Vec3::y() || d[2] != Vec3::z() {
            return Err(Error::invalid("template must start with the canonical x, y, z axes"));
        }
        for (i, v) in d.iter().enumerate() {
            if !((v.norm() - 1.0).abs() <= 1e-9) {
                return Err(Error::invalid(format!("direction {i} is not unit length")));
            }
            if v.z < -1e-12 {
                return Err(Error::invalid(format!("direction {i} leaves the hemisphere")));
            }
        }
        let cos_sep = MIN_SEPARATION_DEG.to_radians().cos() + 1e-12;
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                if d[i].dot(&d[j]) / (d[i].norm() * d[j].norm()) > cos_sep {
                    return Err(Error::invalid(format!(
                        "directions {i} and {j} are closer than {MIN_SEPARATION_DEG} degree"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<RayTemplate> {
        let f: TemplateFile = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if f.version != MANIFEST_VERSION {
            return Err(Error::invalid(format!("unsupported template version {}", f.version)));
        }
        if f.n_rays != f.directions.len() {
            return Err(Error::invalid(format!(
                "n_rays = {} but {} directions listed",
                f.n_rays,
                f.directions.len()
            )));
        }
        let t = RayTemplate {
            directions: f.directions.into_iter().map(Vec3::from).collect(),
            max_polar_deg: f.max_polar_deg,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let f = TemplateFile {
            version: MANIFEST_VERSION,
            n_rays: self.len(),
            max_polar_deg: self.max_polar_deg,
            directions: self.directions.iter().map(|d| [d.x, d.y, d.z]).collect(),
        };
        serde_json::to_string_pretty(&f).expect("template serializes")
    }
}

pub fn load_template(path: &Path) -> Result<RayTemplate> {
    RayTemplate::from_json(&read_file(path)?)
}

pub fn write_template(path: &Path, template: &RayTemplate) -> Result<()> {
    write_file(path, template.to_json().as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handedness {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
    pub handedness: Handedness,
}

impl LocalFrame {
    pub fn det(&self) -> f64 {
        self.x.dot(&self.y.cross(&self.z))
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.x * local.x + self.y * local.y + self.z * local.z
    }
}

/// Builds the frame of every scalp entry from the head's vertex normals and
/// the offset to its mirror partner.
pub fn build_frames(head: &TriMesh, scalp: &ScalpSpec) -> Result<Vec<LocalFrame>> {
    let positions = scalp.positions(head)?;
    let normals = vertex_normals(head);
    let frames: Vec<std::result::Result<LocalFrame, usize>> = (0..scalp.len())
        .into_par_iter()
        .map(|i| {
            let v = scalp.vertex_ids[i] as usize;
            let z = normals[v];
            if z == Vec3::zeros() {
                return Err(i);
            }
            let t = positions[i] - positions[scalp.pair(i)];
            let xp = t.cross(&z);
            let len = xp.norm();
            if !(len >= FRAME_DEGENERACY_EPS) {
                return Err(i);
            }
            let xp = xp / len;
            let y = z.cross(&xp).normalize();
            let side = scalp.side(i);
            Ok(LocalFrame {
                x: xp * side.delta(),
                y,
                z,
                handedness: match side {
                    Side::Left => Handedness::Right,
                    Side::Right => Handedness::Left,
                },
            })
        })
        .collect();
    let bad: Vec<usize> = frames.iter().filter_map(|f| f.err()).collect();
    if !bad.is_empty() {
        return Err(Error::DegenerateFrames(bad));
    }
    Ok(frames.into_iter().map(|f| f.unwrap()).collect())
}

/// World-space rays for every `(scalp entry, template direction)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    n_s: usize,
    n_r: usize,
    origins: Vec<Vec3>,
    /// Row-major `(i, n)`.
    directions: Vec<Vec3>,
    template_hash: Digest,
    scalp_hash: Digest,
}

/// Places `template` in every frame. Left-handed frames mirror the template
/// implicitly, since the same local coordinates are combined with a flipped
/// x axis.
pub fn place_rays(frames: &[LocalFrame], origins: &[Vec3], template: &RayTemplate) -> Result<RaySet> {
    if frames.len() != origins.len() {
        return Err(Error::invalid(format!(
            "{} frames for {} origins",
            frames.len(),
            origins.len()
        )));
    }
    let directions = frames
        .iter()
        .flat_map(|f| template.directions().iter().map(move |d| f.to_world(d).normalize()))
        .collect();
    Ok(RaySet {
        n_s: frames.len(),
        n_r: template.len(),
        origins: origins.to_vec(),
        directions,
        template_hash: template.digest(),
        scalp_hash: Digest::ZERO,
    })
}

impl RaySet {
    /// Frames plus placement, tagged with both input digests.
    pub fn for_head(head: &TriMesh, scalp: &ScalpSpec, template: &RayTemplate) -> Result<RaySet> {
        let frames = build_frames(head, scalp)?;
        let mut rays = place_rays(&frames, &scalp.positions(head)?, template)?;
        rays.scalp_hash = scalp.digest();
        Ok(rays)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn origin(&self, i: usize) -> Vec3 {
        self.origins[i]
    }

    pub fn direction(&self, i: usize, n: usize) -> Vec3 {
        self.directions[i * self.n_r + n]
    }

    pub fn ray(&self, i: usize, n: usize) -> Ray {
        Ray {
            origin: self.origins[i],
            direction: self.direction(i, n),
        }
    }

    pub fn template_hash(&self) -> Digest {
        self.template_hash
    }

    pub fn scalp_hash(&self) -> Digest {
        self.scalp_hash
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{icosphere, mirror_scalp};

    #[test]
    fn three_rays_is_the_triad() {
        let t = RayTemplate::generate(3, 90.0).unwrap();
        assert_eq!(t.directions(), &[Vec3::x(), Vec3::y(), Vec3::z()]);
        assert!(RayTemplate::generate(2, 90.0).is_err());
    }

    #[test]
    fn paper_sized_template() {
        let t = RayTemplate::generate(25, 90.0).unwrap();
        assert_eq!(t.len(), 25);
        assert_eq!(&t.directions()[..3], &[Vec3::x(), Vec3::y(), Vec3::z()]);
        assert_eq!(t.directions()[0].cross(&t.directions()[1]), t.directions()[2]);
        for d in t.directions() {
            assert!((d.norm() - 1.0).abs() < 1e-9);
            assert!(d.z >= -1e-12);
        }
        // Exhaustive pair scan.
        let mut min_angle = f64::INFINITY;
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                let a = t.directions()[i].dot(&t.directions()[j]).clamp(-1.0, 1.0).acos();
                min_angle = min_angle.min(a.to_degrees());
            }
        }
        assert!(min_angle >= 1.0, "{min_angle}");
    }

    #[test]
    fn template_is_deterministic_and_round_trips() {
        let a = RayTemplate::generate(60, 75.0).unwrap();
        let b = RayTemplate::generate(60, 75.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        let back = RayTemplate::from_json(a.to_json().as_bytes()).unwrap();
        assert_eq!(back, a);
        assert!(a.directions().iter().all(|d| d.z >= 75f64.to_radians().cos() - 1e-12 || d.z == 0.0));
    }

    #[test]
    fn crowded_template_rejected() {
        assert!(RayTemplate::generate(100_000, 90.0).is_err());
    }

    fn four_entry_spec() -> ScalpSpec {
        ScalpSpec::new(
            "test",
            vec![10, 11, 12, 13],
            vec![1, 0, 3, 2],
            vec![Side::Left, Side::Right, Side::Left, Side::Right],
        )
        .unwrap()
    }

    #[test]
    fn scalp_spec_validation() {
        let s = four_entry_spec();
        assert_eq!(ScalpSpec::from_json(s.to_json().as_bytes()).unwrap(), s);
        let fixed_point = ScalpSpec::new("t", vec![0, 1], vec![0, 1], vec![Side::Left, Side::Right]);
        assert!(fixed_point.is_err());
        let same_side = ScalpSpec::new("t", vec![0, 1], vec![1, 0], vec![Side::Left, Side::Left]);
        assert!(same_side.is_err());
        let broken = ScalpSpec::new(
            "t",
            vec![0, 1, 2, 3],
            vec![1, 2, 3, 0],
            vec![Side::Left, Side::Right, Side::Left, Side::Right],
        );
        assert!(broken.is_err());
        let odd = ScalpSpec::new("t", vec![0, 1, 2], vec![1, 0, 0], vec![Side::Left, Side::Right, Side::Left]);
        assert!(odd.is_err());
        let json = r#"{"version":1,"head_topology":"t","n_s":3,"entries":[]}"#;
        assert!(ScalpSpec::from_json(json.as_bytes()).is_err());
    }

    #[test]
    fn paper_sized_scalp_spec() {
        let head = icosphere(5, 1.0);
        let spec = mirror_scalp(&head, 450, "icosphere-5").unwrap();
        assert_eq!(spec.len(), 900);
        let left = (0..900).filter(|&i| spec.side(i) == Side::Left).count();
        assert_eq!(left, 450);
        assert_eq!(ScalpSpec::from_json(spec.to_json().as_bytes()).unwrap(), spec);
    }

    /// Unit-sphere closed form with phi = 30 degrees.
    #[test]
    fn sphere_frames_closed_form() {
        let phi = 30f64.to_radians();
        let (s, c) = phi.sin_cos();
        // Minimal head: a fan of triangles around each point would do, but the
        // normals need to equal the positions; use an icosphere and pick the
        // closest vertices, then compare against the closed form evaluated at
        // those exact vertices.
        let head = icosphere(4, 1.0);
        let find = |target: Vec3| {
            head.vertices()
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
                .unwrap()
                .0 as u32
        };
        let l = find(Vec3::new(s, 0.0, c));
        let r = find(Vec3::new(-s, 0.0, c));
        let spec = ScalpSpec::new("t", vec![l, r], vec![1, 0], vec![Side::Left, Side::Right]).unwrap();
        let frames = build_frames(&head, &spec).unwrap();
        let normals = vertex_normals(&head);
        let (pl, pr) = (head.vertices()[l as usize], head.vertices()[r as usize]);
        let z = normals[l as usize];
        let t = pl - pr;
        let xp = t.cross(&z).normalize();
        assert!((frames[0].z - z).norm() < 1e-15);
        assert!((frames[0].x - xp).norm() < 1e-12);
        assert!((frames[0].y - z.cross(&xp).normalize()).norm() < 1e-12);
        assert!((frames[0].det() - 1.0).abs() < 1e-6);
        assert!((frames[1].det() + 1.0).abs() < 1e-6);
        assert_eq!(frames[0].handedness, Handedness::Right);
        assert_eq!(frames[1].handedness, Handedness::Left);
        // On an ideal sphere the normal is the position.
        assert!((z - pl.normalize()).norm() < 1e-2);
        assert!(xp.y.abs() > 0.99);
    }

    #[test]
    fn coincident_pair_is_degenerate() {
        let head = icosphere(2, 1.0);
        // Two entries pointing at the same position via duplicated vertices.
        let mut verts = head.vertices().to_vec();
        verts.push(verts[0]);
        let dup = (verts.len() - 1) as u32;
        let mut faces = head.faces().to_vec();
        let f0 = faces[0];
        let k = f0.iter().position(|&v| v == 0).unwrap();
        let mut f = f0;
        f[k] = dup;
        faces.push(f);
        let head = TriMesh::new(verts, faces).unwrap();
        let spec = ScalpSpec::new("t", vec![0, dup], vec![1, 0], vec![Side::Left, Side::Right]).unwrap();
        match build_frames(&head, &spec) {
            Err(Error::DegenerateFrames(ids)) => assert_eq!(ids, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mirror_equivariance_of_rays() {
        let head = icosphere(4, 1.0);
        let spec = mirror_scalp(&head, 60, "icosphere-4").unwrap();
        let t = RayTemplate::generate(25, 90.0).unwrap();
        let frames = build_frames(&head, &spec).unwrap();
        let mut max_dot = 0.0f64;
        for f in &frames {
            max_dot = max_dot.max(f.x.dot(&f.y).abs()).max(f.y.dot(&f.z).abs()).max(f.x.dot(&f.z).abs());
        }
        assert!(max_dot <= 1e-6);
        let rays = RaySet::for_head(&head, &spec, &t).unwrap();
        let m = |v: Vec3| Vec3::new(-v.x, v.y, v.z);
        for (i, frame) in frames.iter().enumerate() {
            let j = spec.pair(i);
            let normal = frame.z;
            assert!((rays.direction(i, 2) - normal).norm() < 1e-12);
            for n in 0..t.len() {
                assert!((rays.direction(j, n) - m(rays.direction(i, n))).norm() <= 1e-9);
                assert!((rays.direction(i, n).norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
