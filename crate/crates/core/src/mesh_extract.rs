//! Faces over an ordered point list: voxelize, take the exposed cube faces
//! of the occupied cells, and re-index each voxel corner to its nearest
//! input point.
//!
//! Points are normalized by the bounding-box minimum and the largest
//! extent, so the longest axis spans `[0, 1]`. The grid has
//! `ceil(1 / voxel)` cells per axis. Every step iterates in a fixed order,
//! so equal inputs give equal face lists.

use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::mesh_io::{bbox, TriMesh};
use crate::Vec3;
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};

pub const DEFAULT_VOXEL: f64 = 1.0 / 64.0;
/// Largest grid resolution per axis.
pub const MAX_RESOLUTION: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractParams {
    /// Cell size in normalized units, in `(0, 1]`.
    pub voxel: f64,
    /// Largest allowed corner-to-point distance in model units; defaults to
    /// `2 * voxel * bbox_diagonal`.
    pub match_threshold: Option<f64>,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            voxel: DEFAULT_VOXEL,
            match_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: usize,
    /// Model-space length of the normalized unit.
    pub scale: f64,
    /// Model-space position of the normalized origin.
    pub translation: Vec3,
    /// Occupied cells as sorted linear keys `(x * res + y) * res + z`.
    occupied: Vec<u64>,
}

impl VoxelGrid {
    pub fn occupied_count(&self) -> usize {
        self.occupied.len()
    }

    fn key(&self, c: [i64; 3]) -> Option<u64> {
        let r = self.resolution as i64;
        if c.iter().any(|&x| x < 0 || x >= r) {
            return None;
        }
        Some(((c[0] * r + c[1]) * r + c[2]) as u64)
    }

    fn cell(&self, key: u64) -> [i64; 3] {
        let r = self.resolution as u64;
        [(key / (r * r)) as i64, ((key / r) % r) as i64, (key % r) as i64]
    }

    pub fn is_occupied(&self, c: [i64; 3]) -> bool {
        self.key(c).is_some_and(|k| self.occupied.binary_search(&k).is_ok())
    }

    /// Model-space position of lattice corner `c`.
    pub fn corner_position(&self, c: [i64; 3]) -> Vec3 {
        let r = self.resolution as f64;
        self.translation + Vec3::new(c[0] as f64 / r, c[1] as f64 / r, c[2] as f64 / r) * self.scale
    }

    /// Outward-wound exposed faces of the occupied cells, two triangles per
    /// face, over deduplicated lattice corners (in model space).
    pub fn surface(&self) -> (Vec<Vec3>, Vec<[u32; 3]>) {
        let mut corner_ids: HashMap<[i64; 3], u32> = HashMap::new();
        let mut corners = Vec::new();
        let mut tris = Vec::new();
        let mut id = |c: [i64; 3], corners: &mut Vec<[i64; 3]>| {
            *corner_ids.entry(c).or_insert_with(|| {
                corners.push(c);
                (corners.len() - 1) as u32
            })
        };
        for &key in &self.occupied {
            let cell = self.cell(key);
            for axis in 0..3 {
                for sign in [-1i64, 1] {
                    let mut nb = cell;
                    nb[axis] += sign;
                    if self.is_occupied(nb) {
                        continue;
                    }
                    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                    let mut base = cell;
                    if sign > 0 {
                        base[axis] += 1;
                    }
                    let mut p1 = base;
                    p1[b] += 1;
                    let mut p2 = p1;
                    p2[c] += 1;
                    let mut p3 = base;
                    p3[c] += 1;
                    let q = [base, p1, p2, p3].map(|p| id(p, &mut corners));
                    // e_b x e_c = e_axis, so (0,1,2) faces +axis.
                    if sign > 0 {
                        tris.push([q[0], q[1], q[2]]);
                        tris.push([q[0], q[2], q[3]]);
                    } else {
                        tris.push([q[0], q[2], q[1]]);
                        tris.push([q[0], q[3], q[2]]);
                    }
                }
            }
        }
        let positions = corners.iter().map(|&c| self.corner_position(c)).collect();
        (positions, tris)
    }
}

fn check_points(points: &[Vec3]) -> Result<()> {
    if points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
        return Err(Error::invalid("points must be finite"));
    }
    let mut distinct = HashSet::new();
    for p in points {
        distinct.insert([p.x, p.y, p.z].map(f64::to_bits));
        if distinct.len() >= 4 {
            return Ok(());
        }
    }
    Err(Error::invalid("mesh extraction needs at least 4 distinct points"))
}

pub fn voxelize(points: &[Vec3], voxel: f64) -> Result<VoxelGrid> {
    if !(voxel > 0.0 && voxel <= 1.0) {
        return Err(Error::invalid(format!("voxel size must be in (0, 1], got {voxel}")));
    }
    check_points(points)?;
    let (lo, hi) = bbox(points).expect("non-empty after check");
    let scale = (hi - lo).max();
    if scale <= 0.0 {
        return Err(Error::invalid("all points coincide"));
    }
    let res = (1.0 / voxel).ceil() as usize;
    if res < 2 {
        return Err(Error::invalid(format!("voxel size {voxel} gives a grid smaller than 2^3")));
    }
    if res > MAX_RESOLUTION {
        return Err(Error::invalid(format!("voxel size {voxel} exceeds {MAX_RESOLUTION} cells per axis")));
    }
    let mut grid = VoxelGrid {
        resolution: res,
        scale,
        translation: lo,
        occupied: Vec::new(),
    };
    let r = res as f64;
    let mut keys: Vec<u64> = points
        .iter()
        .map(|p| {
            let u = (p - lo) / scale;
            let c = [u.x, u.y, u.z].map(|x| ((x * r).floor() as i64).clamp(0, res as i64 - 1));
            grid.key(c).expect("clamped into the grid")
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    grid.occupied = keys;
    Ok(grid)
}

/// Faces over indices of `points`.
pub fn extract_faces(points: &[Vec3], params: &ExtractParams) -> Result<Vec<[u32; 3]>> {
    let grid = voxelize(points, params.voxel)?;
    let diag = {
        let (lo, hi) = bbox(points).expect("non-empty");
        (hi - lo).norm()
    };
    let threshold = params.match_threshold.unwrap_or(2.0 * params.voxel * diag);
    if !(threshold >= 0.0) {
        return Err(Error::invalid(format!("match threshold must be non-negative, got {threshold}")));
    }
    let (corners, tris) = grid.surface();
    let tree = KdTree::build(points);
    let t2 = threshold * threshold;
    let matched: Vec<Option<u32>> = corners
        .par_iter()
        .map(|c| {
            let nb = tree.nearest(c).expect("non-empty tree");
            (nb.dist_sq <= t2).then_some(nb.index)
        })
        .collect();
    let mut seen = HashSet::new();
    let mut faces = Vec::with_capacity(tris.len());
    for t in tris {
        let Some(f) = t.iter().map(|&k| matched[k as usize]).collect::<Option<Vec<u32>>>() else {
            continue;
        };
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            continue;
        }
        let mut key = [f[0], f[1], f[2]];
        key.sort_unstable();
        if seen.insert(key) {
            faces.push([f[0], f[1], f[2]]);
        }
    }
    Ok(faces)
}

/// [`extract_faces`] over independent inputs, in parallel.
pub fn extract_batch(inputs: &[Vec<Vec3>], params: &ExtractParams) -> Vec<Result<Vec<[u32; 3]>>> {
    inputs.par_iter().map(|p| extract_faces(p, params)).collect()
}

/// Uniform Laplacian smoothing: `v += lambda * (mean(neighbors) - v)`,
/// applied `iterations` times. Vertices without neighbors stay put.
pub fn smooth(mesh: &TriMesh, iterations: usize, lambda: f64) -> Result<TriMesh> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("smoothing lambda must be in [0, 1], got {lambda}")));
    }
    let n = mesh.vertices().len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for f in mesh.faces() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut v = mesh.vertices().to_vec();
    for _ in 0..iterations {
        v = (0..n)
            .into_par_iter()
            .map(|i| {
                let nb = &adj[i];
                if nb.is_empty() {
                    return v[i];
                }
                let avg = nb.iter().map(|&j| v[j as usize]).sum::<Vec3>() / nb.len() as f64;
                v[i] + (avg - v[i]) * lambda
            })
            .collect();
    }
    mesh.with_positions(v)
}
