//! Ray-distance fields: nearest and farthest hair hit per scalp ray, with
//! the albedo seen at each hit.
//!
//! Field invariants, re-established after every operation here:
//! - `0 <= d_min <= d_max`, all finite;
//! - `d_min == 0` exactly when `d_max == 0` (a zero entry means "no hair").
//!
//! Storage is `f32` so the on-disk format round-trips bit for bit.
//!
//! ## SRMH file layout (little-endian)
//!
//! | offset | size | content                              |
//! |--------|------|--------------------------------------|
//! | 0      | 4    | magic `SRMH`                         |
//! | 4      | 2    | version (`u16`, currently 1)         |
//! | 6      | 4    | `N_s` (`u32`)                        |
//! | 10     | 4    | `N_r` (`u32`)                        |
//! | 14     | 2    | reserved, zero                       |
//! | 16     | 32   | template digest                      |
//! | 48     | 32   | scalp digest                         |
//! | 80     | ...  | `f32` arrays: `d_min[N_s*N_r]`, `d_max[N_s*N_r]`, `albedo_min[N_s*N_r*3]`, `albedo_max[N_s*N_r*3]` |
//!
//! Arrays are row-major with the scalp index outer and the ray index inner.

use crate::error::{read_file, write_file, Error, Result};
use crate::hash::Digest;
use crate::mesh_io::TriMesh;
use crate::ray_engine::{AccelIndex, Hit};
use crate::scalp_frames::{RaySet, ScalpSpec};
use crate::{Rgb, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FIELD_MAGIC: &[u8; 4] = b"SRMH";
pub const FIELD_VERSION: u16 = 1;
const HEADER_LEN: usize = 80;

pub const DEFAULT_SKIN: Rgb = [0.6, 0.45, 0.35];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayDistanceField {
    n_s: usize,
    n_r: usize,
    d_min: Vec<f32>,
    d_max: Vec<f32>,
    albedo_min: Vec<Rgb>,
    albedo_max: Vec<Rgb>,
    template_hash: Digest,
    scalp_hash: Digest,
}

/// Clamp, couple and order one entry. Returns whether the slots were swapped.
fn settle(lo: &mut f32, hi: &mut f32) -> bool {
    *lo = lo.max(0.0);
    *hi = hi.max(0.0);
    if *lo == 0.0 || *hi == 0.0 {
        *lo = 0.0;
        *hi = 0.0;
        return false;
    }
    if *lo > *hi {
        std::mem::swap(lo, hi);
        return true;
    }
    false
}

fn clamp_rgb(c: [f64; 3]) -> Rgb {
    c.map(|x| x.clamp(0.0, 1.0) as f32)
}

impl RayDistanceField {
    /// All-zero field (every ray a miss) with both albedo slots set to `skin`.
    pub fn empty(n_s: usize, n_r: usize, template_hash: Digest, scalp_hash: Digest, skin: Rgb) -> Self {
        let m = n_s * n_r;
        RayDistanceField {
            n_s,
            n_r,
            d_min: vec![0.0; m],
            d_max: vec![0.0; m],
            albedo_min: vec![skin; m],
            albedo_max: vec![skin; m],
            template_hash,
            scalp_hash,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n_s: usize,
        n_r: usize,
        d_min: Vec<f32>,
        d_max: Vec<f32>,
        albedo_min: Vec<Rgb>,
        albedo_max: Vec<Rgb>,
        template_hash: Digest,
        scalp_hash: Digest,
    ) -> Result<Self> {
        let f = RayDistanceField {
            n_s,
            n_r,
            d_min,
            d_max,
            albedo_min,
            albedo_max,
            template_hash,
            scalp_hash,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_s * self.n_r;
        if [self.d_min.len(), self.d_max.len(), self.albedo_min.len(), self.albedo_max.len()]
            .iter()
            .any(|&l| l != m)
        {
            return Err(Error::invalid("field arrays do not match N_s x N_r"));
        }
        for k in 0..m {
            let (lo, hi) = (self.d_min[k], self.d_max[k]);
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(Error::invalid(format!(
                    "entry {k}: need 0 <= d_min <= d_max, got ({lo}, {hi})"
                )));
            }
            if (lo == 0.0) != (hi == 0.0) {
                return Err(Error::invalid(format!(
                    "entry {k}: exactly one of d_min/d_max is zero ({lo}, {hi})"
                )));
            }
            let ok = |c: &Rgb| c.iter().all(|x| (0.0..=1.0).contains(x));
            if !ok(&self.albedo_min[k]) || !ok(&self.albedo_max[k]) {
                return Err(Error::invalid(format!("entry {k}: albedo outside [0,1]")));
            }
        }
        Ok(())
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_r
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, n: usize) -> usize {
        i * self.n_r + n
    }

    pub fn d_min(&self) -> &[f32] {
        &self.d_min
    }

    pub fn d_max(&self) -> &[f32] {
        &self.d_max
    }

    pub fn distance(&self, i: usize, n: usize, slot: Slot) -> f32 {
        let k = self.index(i, n);
        match slot {
            Slot::Min => self.d_min[k],
            Slot::Max => self.d_max[k],
        }
    }

    pub fn albedo(&self, i: usize, n: usize, slot: Slot) -> Rgb {
        let k = self.index(i, n);
        match slot {
            Slot::Min => self.albedo_min[k],
            Slot::Max => self.albedo_max[k],
        }
    }

    pub fn albedo_min(&self) -> &[Rgb] {
        &self.albedo_min
    }

    pub fn albedo_max(&self) -> &[Rgb] {
        &self.albedo_max
    }

    pub fn template_hash(&self) -> Digest {
        self.template_hash
    }

    pub fn scalp_hash(&self) -> Digest {
        self.scalp_hash
    }

    /// Number of `(i, n)` entries with hair.
    pub fn support(&self) -> usize {
        self.d_max.iter().filter(|&&d| d != 0.0).count()
    }

    fn same_layout(&self, other: &RayDistanceField) -> Result<()> {
        if self.n_s != other.n_s || self.n_r != other.n_r {
            return Err(Error::mismatch(format!(
                "field shapes {}x{} and {}x{}",
                self.n_s, self.n_r, other.n_s, other.n_r
            )));
        }
        if self.template_hash != other.template_hash || self.scalp_hash != other.scalp_hash {
            return Err(Error::mismatch("fields were captured with different templates or scalp specs"));
        }
        Ok(())
    }

    /// Checks that this field was captured with `rays`' template and scalp.
    pub fn check_rays(&self, rays: &RaySet) -> Result<()> {
        if self.n_s != rays.n_s() || self.n_r != rays.n_r() {
            return Err(Error::mismatch(format!(
                "field is {}x{} but rays are {}x{}",
                self.n_s,
                self.n_r,
                rays.n_s(),
                rays.n_r()
            )));
        }
        if self.template_hash != rays.template_hash() {
            return Err(Error::mismatch(format!(
                "template digest {} does not match field {}",
                rays.template_hash().short(),
                self.template_hash.short()
            )));
        }
        if self.scalp_hash != rays.scalp_hash() {
            return Err(Error::mismatch(format!(
                "scalp digest {} does not match field {}",
                rays.scalp_hash().short(),
                self.scalp_hash.short()
            )));
        }
        Ok(())
    }

    /// Distances as one vector: `d_min` block then `d_max` block.
    pub fn distance_vector(&self) -> Vec<f64> {
        self.d_min.iter().chain(&self.d_max).map(|&d| d as f64).collect()
    }

    /// Albedo as one vector: `albedo_min` block then `albedo_max` block, RGB interleaved.
    pub fn albedo_vector(&self) -> Vec<f64> {
        self.albedo_min
            .iter()
            .chain(&self.albedo_max)
            .flat_map(|c| c.map(|x| x as f64))
            .collect()
    }

    /// Inverse of [`distance_vector`](Self::distance_vector) and
    /// [`albedo_vector`](Self::albedo_vector). Distances are clamped,
    /// coupled and ordered; albedo is clamped to `[0, 1]`.
    pub fn from_vectors(
        n_s: usize,
        n_r: usize,
        distances: &[f64],
        albedo: &[f64],
        template_hash: Digest,
        scalp_hash: Digest,
    ) -> Result<Self> {
        let m = n_s * n_r;
        if distances.len() != 2 * m || albedo.len() != 6 * m {
            return Err(Error::invalid("vector lengths do not match the field shape"));
        }
        if !distances.iter().chain(albedo).all(|x| x.is_finite()) {
            return Err(Error::invalid("non-finite values in field vectors"));
        }
        let mut f = RayDistanceField {
            n_s,
            n_r,
            d_min: distances[..m].iter().map(|&d| d as f32).collect(),
            d_max: distances[m..].iter().map(|&d| d as f32).collect(),
            albedo_min: albedo[..3 * m]
                .chunks_exact(3)
                .map(|c| clamp_rgb([c[0], c[1], c[2]]))
                .collect(),
            albedo_max: albedo[3 * m..]
                .chunks_exact(3)
                .map(|c| clamp_rgb([c[0], c[1], c[2]]))
                .collect(),
            template_hash,
            scalp_hash,
        };
        for k in 0..m {
            if settle(&mut f.d_min[k], &mut f.d_max[k]) {
                std::mem::swap(&mut f.albedo_min[k], &mut f.albedo_max[k]);
            }
        }
        Ok(f)
    }

    pub fn encode(&self) -> Vec<u8> {
        let m = self.len();
        let mut out = Vec::with_capacity(HEADER_LEN + 32 * m);
        out.extend_from_slice(FIELD_MAGIC);
        out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_s as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_r as u32).to_le_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.template_hash.0);
        out.extend_from_slice(&self.scalp_hash.0);
        for d in self.d_min.iter().chain(&self.d_max) {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for c in self.albedo_min.iter().chain(&self.albedo_max) {
            for x in c {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::parse(format!("byte {}", bytes.len()), "truncated SRMH header"));
        }
        if &bytes[..4] != FIELD_MAGIC {
            return Err(Error::parse("byte 0", "not an SRMH field file"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FIELD_VERSION {
            return Err(Error::invalid(format!("unsupported SRMH version {version}")));
        }
        let n_s = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let n_r = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        if bytes[14..16] != [0, 0] {
            return Err(Error::parse("byte 14", "reserved header bytes are not zero"));
        }
        let expected = n_s
            .checked_mul(n_r)
            .and_then(|m| m.checked_mul(32))
            .and_then(|b| b.checked_add(HEADER_LEN));
        if expected != Some(bytes.len()) {
            return Err(Error::parse(
                format!("byte {}", bytes.len()),
                format!("SRMH body length does not match {n_s}x{n_r}"),
            ));
        }
        let template_hash = Digest(bytes[16..48].try_into().unwrap());
        let scalp_hash = Digest(bytes[48..80].try_into().unwrap());
        let m = n_s * n_r;
        let floats: Vec<f32> = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let rgb = |s: &[f32]| s.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        RayDistanceField::from_parts(
            n_s,
            n_r,
            floats[..m].to_vec(),
            floats[m..2 * m].to_vec(),
            rgb(&floats[2 * m..5 * m]),
            rgb(&floats[5 * m..]),
            template_hash,
            scalp_hash,
        )
    }
}

pub fn load_field(path: &Path) -> Result<RayDistanceField> {
    RayDistanceField::decode(&read_file(path)?)
}

pub fn write_field(path: &Path, field: &RayDistanceField) -> Result<()> {
    write_file(path, &field.encode())
}

fn hit_albedo(hair: &TriMesh, hit: &Hit, skin: Rgb) -> Rgb {
    match hair.colors() {
        None => skin,
        Some(colors) => {
            let f = hair.faces()[hit.face as usize];
            let mut c = [0.0f64; 3];
            for (corner, w) in f.iter().zip(hit.bary) {
                let col = colors[*corner as usize];
                for k in 0..3 {
                    c[k] += w * col[k] as f64;
                }
            }
            clamp_rgb(c)
        }
    }
}

/// Casts every ray against `hair` and records nearest/farthest hits.
pub fn analyze(hair: &TriMesh, rays: &RaySet, skin: Rgb) -> Result<RayDistanceField> {
    let index = AccelIndex::build(hair)?;
    analyze_with_index(&index, hair, rays, skin)
}

/// As [`analyze`] with a prebuilt index over `hair`.
pub fn analyze_with_index(
    index: &AccelIndex,
    hair: &TriMesh,
    rays: &RaySet,
    skin: Rgb,
) -> Result<RayDistanceField> {
    if index.triangle_count() != hair.faces().len() {
        return Err(Error::mismatch("ray index was built over a different mesh"));
    }
    let (n_s, n_r) = (rays.n_s(), rays.n_r());
    type Row = Vec<(f32, f32, Rgb, Rgb)>;
    let rows: Vec<Row> = (0..n_s)
        .into_par_iter()
        .map_init(Vec::new, |hits, i| {
            (0..n_r)
                .map(|n| {
                    index.cast_into(&rays.ray(i, n), hits);
                    match (hits.first(), hits.last()) {
                        (Some(near), Some(far)) => {
                            let (mut lo, mut hi) = (near.t as f32, far.t as f32);
                            let (mut a_lo, mut a_hi) = (hit_albedo(hair, near, skin), hit_albedo(hair, far, skin));
                            // A hit at t == 0 would read as "no hair"; nudge to the smallest positive.
                            if lo == 0.0 {
                                lo = f32::MIN_POSITIVE;
                            }
                            if hi == 0.0 {
                                hi = f32::MIN_POSITIVE;
                            }
                            if settle(&mut lo, &mut hi) {
                                std::mem::swap(&mut a_lo, &mut a_hi);
                            }
                            (lo, hi, a_lo, a_hi)
                        }
                        _ => (0.0, 0.0, skin, skin),
                    }
                })
                .collect()
        })
        .collect();
    let mut f = RayDistanceField::empty(n_s, n_r, rays.template_hash(), rays.scalp_hash(), skin);
    for (i, row) in rows.into_iter().enumerate() {
        for (n, (lo, hi, a, b)) in row.into_iter().enumerate() {
            let k = i * n_r + n;
            f.d_min[k] = lo;
            f.d_max[k] = hi;
            f.albedo_min[k] = a;
            f.albedo_max[k] = b;
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexTag {
    pub scalp: u32,
    pub ray: u32,
    pub slot: Slot,
}

/// Hair vertices in `(i, n, slot)` order with their provenance and albedo.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub points: Vec<Vec3>,
    pub tags: Vec<VertexTag>,
    pub colors: Vec<Rgb>,
}

/// `origin(i) + direction(i, n) * d_slot(i, n)` for every entry; zero
/// entries are skipped when `drop_zeros` is set.
pub fn reconstruct_vertices(field: &RayDistanceField, rays: &RaySet, drop_zeros: bool) -> Result<Reconstruction> {
    field.check_rays(rays)?;
    let cap = field.len() * 2;
    let mut out = Reconstruction {
        points: Vec::with_capacity(cap),
        tags: Vec::with_capacity(cap),
        colors: Vec::with_capacity(cap),
    };
    for i in 0..field.n_s {
        for n in 0..field.n_r {
            for slot in [Slot::Min, Slot::Max] {
                let d = field.distance(i, n, slot);
                if drop_zeros && d == 0.0 {
                    continue;
                }
                out.points.push(rays.ray(i, n).at(d as f64));
                out.tags.push(VertexTag {
                    scalp: i as u32,
                    ray: n as u32,
                    slot,
                });
                out.colors.push(field.albedo(i, n, slot));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FuseMode {
    /// Elementwise weighted sum.
    #[default]
    Plain,
    /// Per entry, weights renormalized over the fields that have hair there.
    MaskAware,
}

pub fn fuse(fields: &[RayDistanceField], weights: &[f64], mode: FuseMode) -> Result<RayDistanceField> {
    let first = fields.first().ok_or_else(|| Error::invalid("fuse needs at least one field"))?;
    if weights.len() != fields.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} fields",
            weights.len(),
            fields.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("fusion weights must be finite"));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::invalid("all fusion weights are zero"));
    }
    for f in &fields[1..] {
        first.same_layout(f)?;
    }
    let mut out = first.clone();
    for k in 0..first.len() {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let (mut a_lo, mut a_hi) = ([0.0f64; 3], [0.0f64; 3]);
        let mut norm = 1.0;
        let mut wsum = 0.0;
        for (f, &w) in fields.iter().zip(weights) {
            if mode == FuseMode::MaskAware && f.d_max[k] == 0.0 {
                continue;
            }
            wsum += w;
            lo += w * f.d_min[k] as f64;
            hi += w * f.d_max[k] as f64;
            for c in 0..3 {
                a_lo[c] += w * f.albedo_min[k][c] as f64;
                a_hi[c] += w * f.albedo_max[k][c] as f64;
            }
        }
        if mode == FuseMode::MaskAware {
            if wsum == 0.0 {
                // Nobody has hair here (or the weights cancel): keep the plain albedo blend.
                lo = 0.0;
                hi = 0.0;
                let total: f64 = weights.iter().sum();
                norm = if total != 0.0 { total } else { 1.0 };
                a_lo = [0.0; 3];
                a_hi = [0.0; 3];
                for (f, &w) in fields.iter().zip(weights) {
                    for c in 0..3 {
                        a_lo[c] += w * f.albedo_min[k][c] as f64;
                        a_hi[c] += w * f.albedo_max[k][c] as f64;
                    }
                }
            } else {
                norm = wsum;
            }
        }
        let mut l = (lo / norm) as f32;
        let mut h = (hi / norm) as f32;
        let mut al = clamp_rgb(a_lo.map(|x| x / norm));
        let mut ah = clamp_rgb(a_hi.map(|x| x / norm));
        if settle(&mut l, &mut h) {
            std::mem::swap(&mut al, &mut ah);
        }
        out.d_min[k] = l;
        out.d_max[k] = h;
        out.albedo_min[k] = al;
        out.albedo_max[k] = ah;
    }
    Ok(out)
}

/// Mirrors the hairstyle: entry `(i, n)` takes the values of `(pair(i), n)`.
pub fn flip(field: &RayDistanceField, spec: &ScalpSpec) -> Result<RayDistanceField> {
    if spec.len() != field.n_s || spec.digest() != field.scalp_hash {
        return Err(Error::mismatch(format!(
            "scalp spec {} does not match the field's {}",
            spec.digest().short(),
            field.scalp_hash.short()
        )));
    }
    let mut out = field.clone();
    for i in 0..field.n_s {
        let j = spec.pair(i);
        let (dst, src) = (i * field.n_r, j * field.n_r);
        let r = field.n_r;
        out.d_min[dst..dst + r].copy_from_slice(&field.d_min[src..src + r]);
        out.d_max[dst..dst + r].copy_from_slice(&field.d_max[src..src + r]);
        out.albedo_min[dst..dst + r].copy_from_slice(&field.albedo_min[src..src + r]);
        out.albedo_max[dst..dst + r].copy_from_slice(&field.albedo_max[src..src + r]);
    }
    Ok(out)
}

/// Multiplies every distance by `beta_s`.
pub fn scale_thickness(field: &RayDistanceField, beta_s: f64) -> Result<RayDistanceField> {
    if !(beta_s > 0.0 && beta_s.is_finite()) {
        return Err(Error::invalid(format!("thickness scale must be positive, got {beta_s}")));
    }
    let mut out = field.clone();
    for k in 0..field.len() {
        let mut lo = (field.d_min[k] as f64 * beta_s) as f32;
        let mut hi = (field.d_max[k] as f64 * beta_s) as f32;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("thickness scale overflows f32 distances"));
        }
        settle(&mut lo, &mut hi);
        out.d_min[k] = lo;
        out.d_max[k] = hi;
    }
    Ok(out)
}

/// Binary outlier flags, one per `(i, n, slot)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionMap {
    n_s: usize,
    n_r: usize,
    ex_min: Vec<bool>,
    ex_max: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExclusionFile {
    version: u32,
    n_s: usize,
    n_r: usize,
    /// Flat `i * N_r + n` indices flagged in the min slot.
    min: Vec<usize>,
    max: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreFile {
    version: u32,
    n_s: usize,
    n_r: usize,
    min: Vec<f32>,
    max: Vec<f32>,
}

impl ExclusionMap {
    pub fn empty(n_s: usize, n_r: usize) -> ExclusionMap {
        ExclusionMap {
            n_s,
            n_r,
            ex_min: vec![false; n_s * n_r],
            ex_max: vec![false; n_s * n_r],
        }
    }

    pub fn set(&mut self, k: usize, slot: Slot, flag: bool) {
        match slot {
            Slot::Min => self.ex_min[k] = flag,
            Slot::Max => self.ex_max[k] = flag,
        }
    }

    pub fn get(&self, k: usize, slot: Slot) -> bool {
        match slot {
            Slot::Min => self.ex_min[k],
            Slot::Max => self.ex_max[k],
        }
    }

    pub fn count(&self) -> usize {
        self.ex_min.iter().chain(&self.ex_max).filter(|&&b| b).count()
    }

    /// Entries with at least one flagged slot.
    pub fn entry_flagged(&self, k: usize) -> bool {
        self.ex_min[k] || self.ex_max[k]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_s, self.n_r)
    }

    pub fn to_json(&self) -> String {
        let idx = |v: &[bool]| v.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k).collect();
        serde_json::to_string(&ExclusionFile {
            version: 1,
            n_s: self.n_s,
            n_r: self.n_r,
            min: idx(&self.ex_min),
            max: idx(&self.ex_max),
        })
        .expect("exclusion map serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<ExclusionMap> {
        let f: ExclusionFile = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if f.version != 1 {
            return Err(Error::invalid(format!("unsupported exclusion map version {}", f.version)));
        }
        let m = f
            .n_s
            .checked_mul(f.n_r)
            .filter(|&m| m <= 1 << 28)
            .ok_or_else(|| Error::invalid("exclusion map shape too large"))?;
        let mut map = ExclusionMap::empty(f.n_s, f.n_r);
        for (list, slot) in [(&f.min, Slot::Min), (&f.max, Slot::Max)] {
            for &k in list {
                if k >= m {
                    return Err(Error::invalid(format!("flag index {k} outside {m} entries")));
                }
                map.set(k, slot, true);
            }
        }
        Ok(map)
    }
}

/// Flags an entry iff `sigmoid(score) > 0.5`, i.e. `score > 0`. Scores are
/// laid out like [`RayDistanceField::distance_vector`].
pub fn binarize_exclusion(n_s: usize, n_r: usize, scores: &[f32]) -> Result<ExclusionMap> {
    let m = n_s * n_r;
    if scores.len() != 2 * m {
        return Err(Error::invalid(format!("{} scores for {m} entries x 2 slots", scores.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("exclusion scores must be finite"));
    }
    Ok(ExclusionMap {
        n_s,
        n_r,
        ex_min: scores[..m].iter().map(|&s| s > 0.0).collect(),
        ex_max: scores[m..].iter().map(|&s| s > 0.0).collect(),
    })
}

/// Parses a score file (`{"version":1,"n_s":..,"n_r":..,"min":[..],"max":[..]}`)
/// and binarizes it.
pub fn binarize_score_json(bytes: &[u8]) -> Result<ExclusionMap> {
    let f: ScoreFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    if f.version != 1 {
        return Err(Error::invalid(format!("unsupported score file version {}", f.version)));
    }
    let m = f.n_s.checked_mul(f.n_r).ok_or_else(|| Error::invalid("score shape too large"))?;
    if f.min.len() != m || f.max.len() != m {
        return Err(Error::invalid("score arrays do not match n_s x n_r"));
    }
    let scores: Vec<f32> = f.min.into_iter().chain(f.max).collect();
    binarize_exclusion(f.n_s, f.n_r, &scores)
}

/// Zeroes flagged distances. An entry with any flagged slot ends up fully
/// zero (the pair is coupled) with both albedo slots reset to `skin`;
/// entries without flags are untouched.
pub fn apply_exclusion(field: &RayDistanceField, map: &ExclusionMap, skin: Rgb) -> Result<RayDistanceField> {
    if map.shape() != (field.n_s, field.n_r) {
        return Err(Error::mismatch(format!(
            "exclusion map is {}x{} but field is {}x{}",
            map.n_s, map.n_r, field.n_s, field.n_r
        )));
    }
    let mut out = field.clone();
    for k in 0..field.len() {
        if !map.entry_flagged(k) {
            continue;
        }
        if map.ex_min[k] {
            out.d_min[k] = 0.0;
        }
        if map.ex_max[k] {
            out.d_max[k] = 0.0;
        }
        settle(&mut out.d_min[k], &mut out.d_max[k]);
        if out.d_max[k] == 0.0 {
            out.albedo_min[k] = skin;
            out.albedo_max[k] = skin;
        }
    }
    Ok(out)
}

/// Adds uniform noise in `[-magnitude, magnitude]` to `count` distinct
/// `(i, n, slot)` positions and returns the flags of those positions.
///
/// Touched entries are repaired so the field invariants hold: a perturbed
/// slot is clamped against its partner, and when one slot is zero and the
/// other is not, the zero takes the other's value. The partner of a touched
/// slot may therefore change too; entries with no touched slot never do.
pub fn perturb(
    field: &RayDistanceField,
    count: usize,
    magnitude: f64,
    seed: u64,
) -> Result<(RayDistanceField, ExclusionMap)> {
    let m = field.len();
    if count > 2 * m {
        return Err(Error::invalid(format!("cannot perturb {count} of {} positions", 2 * m)));
    }
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::invalid("perturbation magnitude must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = rand::seq::index::sample(&mut rng, 2 * m, count).into_vec();
    positions.sort_unstable();
    let mut out = field.clone();
    let mut map = ExclusionMap::empty(field.n_s, field.n_r);
    for p in positions {
        let (k, slot) = if p < m { (p, Slot::Min) } else { (p - m, Slot::Max) };
        let noise = if magnitude > 0.0 {
            rng.random_range(-magnitude..=magnitude)
        } else {
            0.0
        };
        let target = match slot {
            Slot::Min => &mut out.d_min[k],
            Slot::Max => &mut out.d_max[k],
        };
        *target = ((*target as f64 + noise).max(0.0)) as f32;
        map.set(k, slot, true);
    }
    for k in 0..m {
        if !map.entry_flagged(k) {
            continue;
        }
        let (lo, hi) = (&mut out.d_min[k], &mut out.d_max[k]);
        match (map.ex_min[k], map.ex_max[k]) {
            (true, false) => *lo = lo.min(*hi),
            (false, true) => *hi = hi.max(*lo),
            _ => {
                if *lo > *hi {
                    std::mem::swap(lo, hi);
                }
            }
        }
        if *lo == 0.0 && *hi != 0.0 {
            *lo = *hi;
        } else if *hi == 0.0 && *lo != 0.0 {
            *hi = *lo;
        }
    }
    Ok((out, map))
}
