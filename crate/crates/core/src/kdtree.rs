//! Static 3-d tree for exact nearest-neighbour queries.
//!
//! Ties on distance resolve to the smallest point index, so results match
//! [`nearest_brute`] exactly.

use crate::Vec3;

const LEAF: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: u32,
    pub dist_sq: f64,
}

impl Neighbor {
    fn better(&self, d: f64, i: u32) -> bool {
        d < self.dist_sq || (d == self.dist_sq && i < self.index)
    }
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> KdTree {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_range(0, points.len());
        }
        tree
    }

    fn build_range(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
        for &k in &self.order[start..end] {
            let p = self.points[k as usize];
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        let axis = (hi - lo).imax();
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a as usize][axis]
                .total_cmp(&pts[b as usize][axis])
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[mid] as usize][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_range(start, mid);
        let right = self.build_range(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// `None` only for an empty tree.
    pub fn nearest(&self, q: &Vec3) -> Option<Neighbor> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = Neighbor {
            index: u32::MAX,
            dist_sq: f64::INFINITY,
        };
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &Vec3, best: &mut Neighbor) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &k in &self.order[start..end] {
                    let d = (self.points[k as usize] - q).norm_squared();
                    if best.better(d, k) {
                        *best = Neighbor { index: k, dist_sq: d };
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // `<=` keeps equal-distance candidates with smaller indices reachable.
                if diff * diff <= best.dist_sq {
                    self.search(far, q, best);
                }
            }
        }
    }
}

pub fn nearest_brute(points: &[Vec3], q: &Vec3) -> Option<Neighbor> {
    let mut best: Option<Neighbor> = None;
    for (k, p) in points.iter().enumerate() {
        let d = (p - q).norm_squared();
        if best.is_none_or(|b| b.better(d, k as u32)) {
            best = Some(Neighbor {
                index: k as u32,
                dist_sq: d,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        // Duplicates and a lattice exercise the tie-break.
        pts.extend(pts[..50].to_vec());
        for i in 0..5 {
            for j in 0..5 {
                pts.push(Vec3::new(i as f64 * 0.25, j as f64 * 0.25, 0.5));
            }
        }
        let tree = KdTree::build(&pts);
        for _ in 0..1000 {
            let q = Vec3::new(rng.random_range(-0.2..1.2), rng.random(), rng.random());
            assert_eq!(tree.nearest(&q), nearest_brute(&pts, &q));
        }
        for q in &pts {
            assert_eq!(tree.nearest(q), nearest_brute(&pts, q));
        }
    }

    #[test]
    fn empty_and_singleton() {
        assert!(KdTree::build(&[]).nearest(&Vec3::zeros()).is_none());
        let t = KdTree::build(&[Vec3::new(1.0, 2.0, 3.0)]);
        assert_eq!(t.nearest(&Vec3::zeros()).unwrap().dist_sq, 14.0);
    }
}
