//! Deterministic synthetic heads, scalp selections and hair shells with
//! closed-form ray-distance oracles.
//!
//! Heads are icospheres; subdivision is done with exact midpoint arithmetic
//! so the mesh is bitwise mirror-symmetric across `x = 0`. Hair is a thick
//! spherical cap (inner sphere, outer sphere, conical rim wall). Caps are
//! tessellated in polar rings on the `x >= 0` half and mirrored, which keeps
//! the rim exactly circular and the mesh exactly symmetric. Ring spacing at
//! `level` matches the edge angle of an icosphere at the same level, and the
//! flat-facet deviation from the sphere is bounded by [`cap_sag`].

use crate::error::{Error, Result};
use crate::mesh_io::TriMesh;
use crate::scalp_frames::{ScalpSpec, Side};
use crate::{Rgb, Vec3};
use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Angle subtended by an edge of the unit icosahedron.
pub const ICOSAHEDRON_EDGE_ANGLE: f64 = 1.107_148_717_794_090_4;

/// Icosphere with `10 * 4^level + 2` vertices on a sphere of `radius`,
/// faces wound counter-clockwise seen from outside.
pub fn icosphere(level: u32, radius: f64) -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vec3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                // Negating x commutes with this arithmetic, so mirrored
                // edges produce mirrored bits.
                let (p, q) = (verts[key.0 as usize], verts[key.1 as usize]);
                let m = Vec3::new(p.x + q.x, p.y + q.y, p.z + q.z);
                verts.push(m / m.norm());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    TriMesh::new(verts, faces).expect("icosphere is valid")
}

fn mirror_key(v: &Vec3) -> [u64; 3] {
    [(-v.x).to_bits(), v.y.to_bits(), v.z.to_bits()]
}

/// Picks the `pairs` off-midline `x > 0` head vertices nearest the `+z` pole
/// together with their exact mirror images. Entries are interleaved
/// `[left, right, left, right, ...]`; `+x` is the left side.
pub fn mirror_scalp(head: &TriMesh, pairs: usize, tag: &str) -> Result<ScalpSpec> {
    let verts = head.vertices();
    let index: HashMap<[u64; 3], u32> = verts
        .iter()
        .enumerate()
        .map(|(i, v)| ([v.x.to_bits(), v.y.to_bits(), v.z.to_bits()], i as u32))
        .collect();
    let polar = |v: &Vec3| (v.z / v.norm()).clamp(-1.0, 1.0).acos();
    let mut left: Vec<(u32, u32)> = verts
        .iter()
        .enumerate()
        .filter(|(_, v)| v.x > 1e-9)
        .filter_map(|(i, v)| index.get(&mirror_key(v)).map(|&j| (i as u32, j)))
        .collect();
    left.sort_by(|a, b| {
        let (va, vb) = (&verts[a.0 as usize], &verts[b.0 as usize]);
        polar(va).total_cmp(&polar(vb)).then(a.0.cmp(&b.0))
    });
    if left.len() < pairs {
        return Err(Error::invalid(format!(
            "head has only {} mirrored vertex pairs, {pairs} requested",
            left.len()
        )));
    }
    let mut ids = Vec::with_capacity(pairs * 2);
    let mut pair_of = Vec::with_capacity(pairs * 2);
    let mut side = Vec::with_capacity(pairs * 2);
    for (k, &(l, r)) in left.iter().take(pairs).enumerate() {
        ids.extend([l, r]);
        pair_of.extend([(2 * k + 1) as u32, (2 * k) as u32]);
        side.extend([Side::Left, Side::Right]);
    }
    ScalpSpec::new(tag, ids, pair_of, side)
}

/// Upper bound on how far a cap facet at `level` sits inside a sphere of
/// `radius`.
pub fn cap_sag(level: u32, radius: f64) -> f64 {
    let h = ICOSAHEDRON_EDGE_ANGLE / f64::powi(2.0, level as i32);
    // Facets are at most two ring steps across.
    radius * (1.0 - (h).cos())
}

/// Geometry of one thick cap: `inner <= |q| <= outer`, polar angle of
/// `rotation^-1 q` at most `extent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapGeometry {
    pub inner: f64,
    pub outer: f64,
    pub extent_rad: f64,
    pub rotation: Rotation3<f64>,
}

impl CapGeometry {
    /// All boundary crossings of the solid along the ray, unsorted.
    fn crossings(&self, origin: &Vec3, dir: &Vec3, out: &mut Vec<f64>) {
        let p = self.rotation.inverse_transform_vector(origin);
        let d = self.rotation.inverse_transform_vector(dir);
        let cos_e = self.extent_rad.cos();
        let inside_angle = |q: &Vec3| q.z >= q.norm() * cos_e;
        let b = p.dot(&d);
        for r in [self.inner, self.outer] {
            let disc = b * b - (p.norm_squared() - r * r);
            if disc < 0.0 {
                continue;
            }
            let s = disc.sqrt();
            for t in [-b - s, -b + s] {
                if t >= 0.0 && inside_angle(&(p + d * t)) {
                    out.push(t);
                }
            }
        }
        // Cone q.z = |q| cos(extent), on the correct nappe.
        let c2 = cos_e * cos_e;
        let qa = d.z * d.z - c2 * d.norm_squared();
        let qb = 2.0 * (p.z * d.z - c2 * p.dot(&d));
        let qc = p.z * p.z - c2 * p.norm_squared();
        let mut roots = Vec::with_capacity(2);
        if qa.abs() < 1e-14 {
            if qb.abs() > 1e-14 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                roots.push((-qb - s) / (2.0 * qa));
                roots.push((-qb + s) / (2.0 * qa));
            }
        }
        for t in roots {
            if t < 0.0 {
                continue;
            }
            let q = p + d * t;
            let r = q.norm();
            if q.z * cos_e >= 0.0 && r >= self.inner && r <= self.outer {
                out.push(t);
            }
        }
    }
}

/// Closed-form nearest/farthest boundary distances for a union of disjoint caps.
#[derive(Debug, Clone, PartialEq)]
pub struct CapOracle {
    pub caps: Vec<CapGeometry>,
}

impl CapOracle {
    /// `(d_min, d_max)` along a unit-direction ray, or `None` on a miss.
    pub fn distances(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let mut ts = Vec::new();
        for c in &self.caps {
            c.crossings(origin, dir, &mut ts);
        }
        let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo.is_finite()).then_some((lo, hi))
    }
}

/// Thick spherical cap mesh, closed and outward-wound, mirror-symmetric
/// across `x = 0` before `rotation` is applied.
pub fn shell_cap(geom: &CapGeometry, level: u32) -> Result<TriMesh> {
    let h = ICOSAHEDRON_EDGE_ANGLE / f64::powi(2.0, level as i32);
    let extent = geom.extent_rad;
    let rings = ((extent / h).ceil() as usize).max(1);
    let thetas: Vec<f64> = (0..=rings).map(|k| extent * k as f64 / rings as f64).collect();
    let half_segments: Vec<usize> = thetas
        .iter()
        .map(|t| ((std::f64::consts::PI * t.sin() / h).round() as usize).max(2))
        .collect();

    let mut verts: Vec<Vec3> = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    let color_of = |r: f64, theta: f64| -> Rgb {
        let u = ((r - geom.inner) / (geom.outer - geom.inner)).clamp(0.0, 1.0);
        let v = (theta / extent).clamp(0.0, 1.0);
        [
            (0.25 + 0.5 * u) as f32,
            (0.15 + 0.3 * v) as f32,
            (0.1 + 0.1 * u * v) as f32,
        ]
    };

    // Builds one sphere surface; returns per-ring vertex ids for the x >= 0
    // half ([seam -y, ..., seam +y]) and the mirrored half.
    let sphere_surface = |r: f64, outward: bool, verts: &mut Vec<Vec3>, colors: &mut Vec<Rgb>, faces: &mut Vec<[u32; 3]>| {
        let mut half: Vec<Vec<u32>> = Vec::with_capacity(rings + 1);
        let mut mirror: Vec<Vec<u32>> = Vec::with_capacity(rings + 1);
        for (k, &theta) in thetas.iter().enumerate() {
            let (st, ct) = theta.sin_cos();
            if k == 0 {
                let id = verts.len() as u32;
                verts.push(Vec3::new(0.0, 0.0, r));
                colors.push(color_of(r, 0.0));
                half.push(vec![id]);
                mirror.push(vec![id]);
                continue;
            }
            let m = half_segments[k];
            let mut ring = Vec::with_capacity(m + 1);
            let mut ring_m = Vec::with_capacity(m + 1);
            for j in 0..=m {
                let id = verts.len() as u32;
                let p = if j == 0 {
                    Vec3::new(0.0, -r * st, r * ct)
                } else if j == m {
                    Vec3::new(0.0, r * st, r * ct)
                } else {
                    let phi = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / m as f64;
                    Vec3::new(r * st * phi.cos(), r * st * phi.sin(), r * ct)
                };
                verts.push(p);
                colors.push(color_of(r, theta));
                ring.push(id);
                if j == 0 || j == m {
                    ring_m.push(id);
                } else {
                    verts.push(Vec3::new(-p.x, p.y, p.z));
                    colors.push(color_of(r, theta));
                    ring_m.push(id + 1);
                }
            }
            half.push(ring);
            mirror.push(ring_m);
        }
        let orient = |f: [u32; 3], verts: &Vec<Vec3>| -> [u32; 3] {
            let [a, b, c] = f.map(|k| verts[k as usize]);
            let n = (b - a).cross(&(c - a));
            let centroid = (a + b + c) / 3.0;
            if (n.dot(&centroid) > 0.0) == outward {
                f
            } else {
                [f[0], f[2], f[1]]
            }
        };
        for k in 1..=rings {
            for rings_of in [&half, &mirror] {
                let (a, b) = (&rings_of[k - 1], &rings_of[k]);
                let (ma, mb) = (a.len() - 1, b.len() - 1);
                let (mut i, mut j) = (0usize, 0usize);
                if ma == 0 {
                    for j in 0..mb {
                        faces.push(orient([a[0], b[j], b[j + 1]], verts));
                    }
                    continue;
                }
                while i < ma || j < mb {
                    let adv_b = if i == ma {
                        true
                    } else if j == mb {
                        false
                    } else {
                        ((j + 1) as f64 / mb as f64) <= ((i + 1) as f64 / ma as f64)
                    };
                    if adv_b {
                        faces.push(orient([a[i], b[j], b[j + 1]], verts));
                        j += 1;
                    } else {
                        faces.push(orient([a[i], b[j], a[i + 1]], verts));
                        i += 1;
                    }
                }
            }
        }
        (half.pop().unwrap(), mirror.pop().unwrap())
    };

    let (inner_rim, inner_rim_m) = sphere_surface(geom.inner, false, &mut verts, &mut colors, &mut faces);
    let (outer_rim, outer_rim_m) = sphere_surface(geom.outer, true, &mut verts, &mut colors, &mut faces);
    // Rim wall; outward means toward larger polar angle.
    for (inn, out) in [(&inner_rim, &outer_rim), (&inner_rim_m, &outer_rim_m)] {
        for j in 0..inn.len() - 1 {
            for f in [[inn[j], inn[j + 1], out[j + 1]], [inn[j], out[j + 1], out[j]]] {
                let [a, b, c] = f.map(|k| verts[k as usize]);
                let n = (b - a).cross(&(c - a));
                let q = (a + b + c) / 3.0;
                let rho = (q.x * q.x + q.y * q.y).sqrt();
                let e_theta = Vec3::new(q.z * q.x / rho, q.z * q.y / rho, -rho);
                faces.push(if n.dot(&e_theta) > 0.0 { f } else { [f[0], f[2], f[1]] });
            }
        }
    }

    let verts = verts
        .into_iter()
        .map(|v| geom.rotation * v)
        .collect();
    TriMesh::new(verts, faces)?.with_colors(colors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    SphereHead,
    ShellCap,
    AsymmetricCap,
    TwoCap,
    NoisyShell,
}

impl std::str::FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sphere-head" => FixtureKind::SphereHead,
            "shell-cap" | "shell-cap-hair" => FixtureKind::ShellCap,
            "asymmetric-cap" => FixtureKind::AsymmetricCap,
            "two-cap" => FixtureKind::TwoCap,
            "noisy-shell" => FixtureKind::NoisyShell,
            other => return Err(Error::invalid(format!("unknown fixture kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecipe {
    pub kind: FixtureKind,
    pub head_radius: f64,
    pub head_level: u32,
    pub scalp_pairs: usize,
    pub hair_level: u32,
    pub inner: f64,
    pub outer: f64,
    pub extent_deg: f64,
    /// Rotation of the cap about `+y`, toward `+x`.
    pub tilt_deg: f64,
    /// Radial noise amplitude for `noisy-shell`.
    pub noise: f64,
    pub seed: u64,
}

impl FixtureRecipe {
    pub fn new(kind: FixtureKind) -> FixtureRecipe {
        let base = FixtureRecipe {
            kind,
            head_radius: 1.0,
            head_level: 5,
            scalp_pairs: 450,
            hair_level: 5,
            inner: 1.2,
            outer: 1.5,
            extent_deg: 60.0,
            tilt_deg: 0.0,
            noise: 0.0,
            seed: 0,
        };
        match kind {
            FixtureKind::SphereHead | FixtureKind::ShellCap => base,
            FixtureKind::AsymmetricCap => FixtureRecipe {
                extent_deg: 40.0,
                tilt_deg: 35.0,
                ..base
            },
            FixtureKind::TwoCap => FixtureRecipe {
                inner: 1.1,
                outer: 1.3,
                extent_deg: 25.0,
                tilt_deg: 50.0,
                ..base
            },
            FixtureKind::NoisyShell => FixtureRecipe {
                noise: 0.02,
                seed: 1,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.head_radius > 0.0
            && self.inner > self.head_radius
            && self.outer > self.inner
            && self.extent_deg > 0.0
            && self.extent_deg <= 170.0
            && self.noise >= 0.0
            && self.noise < (self.outer - self.inner) / 2.0
            && self.head_level <= 8
            && self.hair_level <= 9
            && [self.head_radius, self.inner, self.outer, self.tilt_deg].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::invalid(format!("invalid fixture recipe {self:?}")));
        }
        if self.kind == FixtureKind::TwoCap && self.tilt_deg <= self.extent_deg {
            return Err(Error::invalid("two-cap fixture needs tilt larger than the cap extent"));
        }
        Ok(())
    }

    fn caps(&self) -> Vec<CapGeometry> {
        let cap = |tilt: f64| CapGeometry {
            inner: self.inner,
            outer: self.outer,
            extent_rad: self.extent_deg.to_radians(),
            rotation: Rotation3::from_axis_angle(&Vec3::y_axis(), tilt.to_radians()),
        };
        match self.kind {
            FixtureKind::SphereHead => vec![],
            FixtureKind::ShellCap | FixtureKind::NoisyShell => vec![cap(0.0)],
            FixtureKind::AsymmetricCap => vec![cap(self.tilt_deg)],
            FixtureKind::TwoCap => vec![cap(self.tilt_deg), cap(-self.tilt_deg)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub head: TriMesh,
    pub scalp: ScalpSpec,
    /// Merged hair; `None` for `sphere-head`.
    pub hair: Option<TriMesh>,
    /// Individual caps; two entries for `two-cap`.
    pub hair_parts: Vec<TriMesh>,
    /// Closed-form distances; absent for noisy hair.
    pub oracle: Option<CapOracle>,
}

pub fn generate(recipe: &FixtureRecipe) -> Result<Fixture> {
    recipe.validate()?;
    let head = icosphere(recipe.head_level, recipe.head_radius);
    let scalp = mirror_scalp(&head, recipe.scalp_pairs, &format!("icosphere-{}", recipe.head_level))?;
    let caps = recipe.caps();
    let mut parts = caps
        .iter()
        .map(|c| shell_cap(c, recipe.hair_level))
        .collect::<Result<Vec<_>>>()?;
    if recipe.kind == FixtureKind::NoisyShell {
        let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
        let noisy: Vec<Vec3> = parts[0]
            .vertices()
            .iter()
            .map(|v| v * (1.0 + rng.random_range(-recipe.noise..=recipe.noise) / v.norm()))
            .collect();
        parts[0] = parts[0].with_positions(noisy)?;
    }
    let hair = match parts.len() {
        0 => None,
        1 => Some(parts[0].clone()),
        _ => Some(TriMesh::merge(&parts)?),
    };
    let oracle = (recipe.kind != FixtureKind::NoisyShell && !caps.is_empty()).then_some(CapOracle { caps });
    Ok(Fixture {
        head,
        scalp,
        hair,
        hair_parts: parts,
        oracle,
    })
}

/// `count` recipes jittered around `base` in mirrored pairs (`+d`, `-d`), so
/// their parameter mean equals `base` exactly for even `count`.
pub fn shell_variants(base: &FixtureRecipe, count: usize, seed: u64) -> Vec<FixtureRecipe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut jitter = (0.0, 0.0, 0.0);
    for k in 0..count {
        if k % 2 == 0 {
            jitter = (
                rng.random_range(-0.08..0.08),
                rng.random_range(-0.06..0.06),
                rng.random_range(-8.0..8.0),
            );
        }
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(FixtureRecipe {
            outer: base.outer + s * jitter.0,
            inner: base.inner + s * jitter.1,
            extent_deg: base.extent_deg + s * jitter.2,
            ..base.clone()
        });
    }
    out
}

/// Fibonacci points on a sphere.
pub fn sphere_points(n: usize, radius: f64) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = k as f64 * golden;
            Vec3::new(r * phi.cos(), r * phi.sin(), z) * radius
        })
        .collect()
}

/// Regular samples on the surface of the unit cube `[0,1]^3`, `per_edge`
/// points along each edge; includes the 8 corners.
pub fn cube_surface_points(per_edge: usize) -> Vec<Vec3> {
    let n = per_edge.max(2);
    let step = 1.0 / (n - 1) as f64;
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let on_surface = [i, j, k].iter().any(|&c| c == 0 || c == n - 1);
                if on_surface {
                    pts.push(Vec3::new(i as f64 * step, j as f64 * step, k as f64 * step));
                }
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_io::vertex_normals;

    #[test]
    fn icosphere_counts() {
        for n in 0..4 {
            let m = icosphere(n, 1.0);
            assert_eq!(m.vertices().len(), 10 * 4usize.pow(n) + 2);
            assert_eq!(m.faces().len(), 20 * 4usize.pow(n));
        }
        let m = icosphere(3, 1.0);
        assert_eq!((m.vertices().len(), m.faces().len()), (642, 1280));
    }

    #[test]
    fn icosphere_is_outward_and_on_sphere() {
        let m = icosphere(3, 2.0);
        for (p, n) in m.vertices().iter().zip(vertex_normals(&m)) {
            assert!((p.norm() - 2.0).abs() < 1e-12);
            // Area weighting leans off radial by about 0.012 at this level.
            assert!((n - p / p.norm()).norm() < 2e-2);
            assert!(n.dot(p) > 0.0);
        }
        let d = crate::mesh_io::bbox_diagonal(&m).unwrap();
        assert!((d - 4.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn icosphere_is_bitwise_mirror_symmetric() {
        let m = icosphere(4, 1.0);
        let set: std::collections::HashSet<_> = m
            .vertices()
            .iter()
            .map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()])
            .collect();
        for v in m.vertices() {
            assert!(set.contains(&mirror_key(v)) || v.x == 0.0);
        }
    }

    #[test]
    fn shell_cap_is_closed_and_symmetric() {
        let g = CapGeometry {
            inner: 1.2,
            outer: 1.5,
            extent_rad: 60f64.to_radians(),
            rotation: Rotation3::identity(),
        };
        let m = shell_cap(&g, 4).unwrap();
        // Closed: every edge shared by exactly two faces, in opposite directions.
        let mut edges = HashMap::new();
        for f in m.faces() {
            for k in 0..3 {
                *edges.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &edges {
            assert_eq!(c, 1);
            assert_eq!(edges.get(&(b, a)), Some(&1), "open edge {a}-{b}");
        }
        let set: std::collections::HashSet<_> = m
            .vertices()
            .iter()
            .map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()])
            .collect();
        for v in m.vertices() {
            assert!(v.x == 0.0 || set.contains(&mirror_key(v)));
        }
        // Positive volume means outward winding.
        let vol: f64 = m
            .faces()
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|k| m.vertices()[k as usize]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum();
        let exact = 2.0 * std::f64::consts::PI / 3.0 * (1.5f64.powi(3) - 1.2f64.powi(3)) * (1.0 - 0.5);
        assert!(vol > 0.0);
        assert!((vol - exact).abs() / exact < 1e-2, "{vol} vs {exact}");
    }

    #[test]
    fn oracle_radial_ray() {
        let o = generate(&FixtureRecipe {
            head_level: 2,
            scalp_pairs: 10,
            hair_level: 2,
            ..FixtureRecipe::new(FixtureKind::ShellCap)
        })
        .unwrap()
        .oracle
        .unwrap();
        let (lo, hi) = o.distances(&Vec3::z(), &Vec3::z()).unwrap();
        assert!((lo - 0.2).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        assert!(o.distances(&Vec3::z(), &-Vec3::z()).is_none());
        // Tilted ray from the pole; the closed form t = -cos + sqrt(cos^2 - 1 + R^2).
        let th = 20f64.to_radians();
        let d = Vec3::new(th.sin(), 0.0, th.cos());
        let t = |r: f64| -th.cos() + (th.cos().powi(2) - 1.0 + r * r).sqrt();
        let (lo, hi) = o.distances(&Vec3::z(), &d).unwrap();
        assert!((lo - t(1.2)).abs() < 1e-12 && (hi - t(1.5)).abs() < 1e-12);
    }

    #[test]
    fn generate_is_deterministic_and_validates() {
        let r = FixtureRecipe {
            head_level: 2,
            scalp_pairs: 20,
            hair_level: 2,
            ..FixtureRecipe::new(FixtureKind::NoisyShell)
        };
        let a = generate(&r).unwrap();
        let b = generate(&r).unwrap();
        assert_eq!(a.hair, b.hair);
        assert!(a.oracle.is_none());
        let bad = FixtureRecipe {
            inner: 0.9,
            ..r.clone()
        };
        assert!(generate(&bad).is_err());
    }
}
