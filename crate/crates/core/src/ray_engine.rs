//! Bounding-volume hierarchy over a triangle mesh with all-hits ray queries
//! and closest-point queries.
//!
//! The triangle test is the watertight shear-and-scale formulation evaluated
//! in f64: edge functions are computed in a ray-aligned frame, so a ray that
//! crosses a shared edge is reported by at least one of the two triangles.
//! Both triangles may report it; hits closer than [`MERGE_EPS`] in `t` are
//! merged into one.

use crate::error::{Error, Result};
use crate::mesh_io::TriMesh;
use crate::Vec3;

/// Triangles whose ray-space determinant is below this are treated as
/// parallel to the ray.
pub const DET_EPS: f64 = 1e-9;
/// Hits whose `t` differ by less than this collapse into one.
pub const MERGE_EPS: f64 = 1e-7;

const MAX_LEAF: usize = 4;
const BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`; fails on zero or non-finite input.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Ray> {
        let len = direction.norm();
        if !(len > 0.0 && len.is_finite()) || !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("ray needs a finite origin and nonzero direction"));
        }
        Ok(Ray {
            origin,
            direction: direction / len,
        })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub face: u32,
    /// Weights of the face's three corners, in face order.
    pub bary: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Aabb {
        Aabb {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn join(&mut self, o: &Aabb) {
        self.lo = self.lo.inf(&o.lo);
        self.hi = self.hi.sup(&o.hi);
    }

    fn area(&self) -> f64 {
        let d = self.hi - self.lo;
        if d.x < 0.0 {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Slab test; returns whether `[t_near, t_far]` meets `[0, limit]`.
    fn hit(&self, ray: &RayPre) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let o = ray.origin[a];
            if ray.direction[a] == 0.0 {
                if o < self.lo[a] || o > self.hi[a] {
                    return false;
                }
                continue;
            }
            let inv = ray.inv[a];
            let (mut n, mut f) = ((self.lo[a] - o) * inv, (self.hi[a] - o) * inv);
            if n > f {
                std::mem::swap(&mut n, &mut f);
            }
            t0 = t0.max(n);
            t1 = t1.min(f);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    fn distance2(&self, p: &Vec3) -> f64 {
        let d = (self.lo - p).sup(&(p - self.hi)).sup(&Vec3::zeros());
        d.norm_squared()
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the left child (right = left + 1).
    start: u32,
    /// Zero for interior nodes.
    count: u32,
}

/// Immutable BVH over a mesh's triangles. Queries are `&self` and may run
/// from any number of threads at once.
#[derive(Debug, Clone)]
pub struct AccelIndex {
    nodes: Vec<Node>,
    /// Triangles in leaf order.
    tris: Vec<[Vec3; 3]>,
    /// Original face id for each entry of `tris`.
    face_ids: Vec<u32>,
}

struct RayPre {
    origin: Vec3,
    direction: Vec3,
    inv: Vec3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl RayPre {
    fn new(ray: &Ray) -> RayPre {
        let d = ray.direction;
        let kz = d.iamax();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if d[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        RayPre {
            origin: ray.origin,
            direction: d,
            inv: d.map(|c| 1.0 / c),
            kx,
            ky,
            kz,
            sx: d[kx] / d[kz],
            sy: d[ky] / d[kz],
            sz: 1.0 / d[kz],
        }
    }
}

/// Watertight ray/triangle test. Returns `t` and corner weights.
fn intersect(ray: &RayPre, tri: &[Vec3; 3]) -> Option<(f64, [f64; 3])> {
    let a = tri[0] - ray.origin;
    let b = tri[1] - ray.origin;
    let c = tri[2] - ray.origin;
    let (kx, ky, kz) = (ray.kx, ray.ky, ray.kz);
    let ax = a[kx] - ray.sx * a[kz];
    let ay = a[ky] - ray.sy * a[kz];
    let bx = b[kx] - ray.sx * b[kz];
    let by = b[ky] - ray.sy * b[kz];
    let cx = c[kx] - ray.sx * c[kz];
    let cy = c[ky] - ray.sy * c[kz];
    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }
    let det = u + v + w;
    if det.abs() < DET_EPS {
        return None;
    }
    let t_scaled = u * (ray.sz * a[kz]) + v * (ray.sz * b[kz]) + w * (ray.sz * c[kz]);
    let t = t_scaled / det;
    if !(t >= 0.0) {
        return None;
    }
    Some((t, [u / det, v / det, w / det]))
}

fn sort_and_merge(hits: &mut Vec<Hit>) {
    hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.face.cmp(&b.face)));
    let mut out: Vec<Hit> = Vec::with_capacity(hits.len());
    for h in hits.drain(..) {
        match out.last() {
            Some(last) if h.t - last.t < MERGE_EPS => {}
            _ => out.push(h),
        }
    }
    *hits = out;
}

/// Reference all-triangle scan with the same triangle test and merge rule as
/// the BVH path.
pub fn cast_all_hits_brute(mesh: &TriMesh, ray: &Ray) -> Vec<Hit> {
    let pre = RayPre::new(ray);
    let mut hits: Vec<Hit> = (0..mesh.faces().len())
        .filter_map(|f| {
            intersect(&pre, &mesh.triangle(f)).map(|(t, bary)| Hit {
                t,
                face: f as u32,
                bary,
            })
        })
        .collect();
    sort_and_merge(&mut hits);
    hits
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, [a, b, c]: &[Vec3; 3]) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

struct BuildPrim {
    bounds: Aabb,
    centroid: Vec3,
    index: u32,
}

impl AccelIndex {
    pub fn build(mesh: &TriMesh) -> Result<AccelIndex> {
        let nf = mesh.faces().len();
        if nf == 0 {
            return Err(Error::invalid("cannot build a ray index over a mesh with no faces"));
        }
        let mut prims: Vec<BuildPrim> = (0..nf)
            .map(|f| {
                let tri = mesh.triangle(f);
                let mut bounds = Aabb::empty();
                tri.iter().for_each(|p| bounds.grow(p));
                BuildPrim {
                    bounds,
                    centroid: (tri[0] + tri[1] + tri[2]) / 3.0,
                    index: f as u32,
                }
            })
            .collect();
        // Boxes are padded so the slab test stays conservative with respect
        // to the triangle test under rounding.
        let mut scene = Aabb::empty();
        prims.iter().for_each(|p| scene.join(&p.bounds));
        let pad = 1e-9 * (scene.hi - scene.lo).amax().max(scene.lo.amax()).max(scene.hi.amax()).max(1.0);

        let mut nodes = vec![Node {
            bounds: scene,
            start: 0,
            count: 0,
        }];
        Self::split(&mut nodes, 0, &mut prims, 0, pad);
        let face_ids: Vec<u32> = prims.iter().map(|p| p.index).collect();
        let tris = face_ids.iter().map(|&f| mesh.triangle(f as usize)).collect();
        Ok(AccelIndex {
            nodes,
            tris,
            face_ids,
        })
    }

    fn split(nodes: &mut Vec<Node>, node: usize, prims: &mut [BuildPrim], offset: usize, pad: f64) {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for p in prims.iter() {
            bounds.join(&p.bounds);
            cbounds.grow(&p.centroid);
        }
        bounds.lo.add_scalar_mut(-pad);
        bounds.hi.add_scalar_mut(pad);
        nodes[node].bounds = bounds;

        let n = prims.len();
        if n <= MAX_LEAF {
            nodes[node].start = offset as u32;
            nodes[node].count = n as u32;
            return;
        }

        let extent = cbounds.hi - cbounds.lo;
        let mut best: Option<(f64, usize, usize)> = None;
        for axis in 0..3 {
            if !(extent[axis] > 0.0) {
                continue;
            }
            let mut bins = [(Aabb::empty(), 0usize); BINS];
            let scale = BINS as f64 / extent[axis];
            let bin_of = |p: &BuildPrim| {
                (((p.centroid[axis] - cbounds.lo[axis]) * scale) as usize).min(BINS - 1)
            };
            for p in prims.iter() {
                let b = &mut bins[bin_of(p)];
                b.0.join(&p.bounds);
                b.1 += 1;
            }
            let mut right_area = [0.0; BINS];
            let mut right_count = [0usize; BINS];
            let mut acc = Aabb::empty();
            let mut cnt = 0;
            for i in (1..BINS).rev() {
                acc.join(&bins[i].0);
                cnt += bins[i].1;
                right_area[i] = acc.area();
                right_count[i] = cnt;
            }
            let mut acc = Aabb::empty();
            let mut cnt = 0;
            for i in 0..BINS - 1 {
                acc.join(&bins[i].0);
                cnt += bins[i].1;
                if cnt == 0 || right_count[i + 1] == 0 {
                    continue;
                }
                let cost = acc.area() * cnt as f64 + right_area[i + 1] * right_count[i + 1] as f64;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, axis, i + 1));
                }
            }
        }

        let mid = match best {
            Some((_, axis, split_bin)) => {
                let scale = BINS as f64 / extent[axis];
                let lo = cbounds.lo[axis];
                let mut i = 0;
                for j in 0..n {
                    let b = (((prims[j].centroid[axis] - lo) * scale) as usize).min(BINS - 1);
                    if b < split_bin {
                        prims.swap(i, j);
                        i += 1;
                    }
                }
                i
            }
            // All centroids coincide: split by count.
            None => n / 2,
        };
        let mid = if mid == 0 || mid == n { n / 2 } else { mid };

        let left = nodes.len();
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        nodes[node].start = left as u32;
        nodes[node].count = 0;
        let (l, r) = prims.split_at_mut(mid);
        Self::split(nodes, left, l, offset, pad);
        Self::split(nodes, left + 1, r, offset + mid, pad);
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    pub fn max_leaf_size(&self) -> usize {
        self.nodes.iter().map(|n| n.count as usize).max().unwrap_or(0)
    }

    /// Every intersection with `t >= 0`, ascending in `t`, near-duplicates merged.
    pub fn cast_all_hits(&self, ray: &Ray) -> Vec<Hit> {
        let mut hits = Vec::new();
        self.cast_into(ray, &mut hits);
        hits
    }

    /// Like [`cast_all_hits`](Self::cast_all_hits) but reuses `hits`.
    pub fn cast_into(&self, ray: &Ray, hits: &mut Vec<Hit>) {
        hits.clear();
        let pre = RayPre::new(ray);
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.hit(&pre) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for k in s..s + node.count as usize {
                    if let Some((t, bary)) = intersect(&pre, &self.tris[k]) {
                        hits.push(Hit {
                            t,
                            face: self.face_ids[k],
                            bary,
                        });
                    }
                }
            } else {
                stack.push(node.start as usize);
                stack.push(node.start as usize + 1);
            }
        }
        sort_and_merge(hits);
    }

    /// Nearest surface point to `p`: `(distance, face id, point)`.
    pub fn closest_point(&self, p: &Vec3) -> (f64, u32, Vec3) {
        let mut best = (f64::INFINITY, u32::MAX, *p);
        let mut stack = vec![(0usize, self.nodes[0].bounds.distance2(p))];
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best.0 * best.0 {
                continue;
            }
            let node = &self.nodes[ni];
            if node.count > 0 {
                let s = node.start as usize;
                for k in s..s + node.count as usize {
                    let q = closest_point_on_triangle(p, &self.tris[k]);
                    let d = (q - p).norm();
                    if d < best.0 || (d == best.0 && self.face_ids[k] < best.1) {
                        best = (d, self.face_ids[k], q);
                    }
                }
            } else {
                let l = node.start as usize;
                let dl = self.nodes[l].bounds.distance2(p);
                let dr = self.nodes[l + 1].bounds.distance2(p);
                // Visit the nearer child first.
                if dl < dr {
                    stack.push((l + 1, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((l + 1, dr));
                }
            }
        }
        best
    }
}
