//! Point-set metrics: two-sided Chamfer, NRMSE and Recall.
//!
//! NRMSE is the RMS of ground-truth-to-prediction nearest distances over
//! the ground-truth bounding-box diagonal. Recall counts ground-truth
//! points with a prediction within the threshold (inclusive).

use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::mesh_io::{bbox_diagonal_points, TriMesh};
use crate::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_RECALL_FRACTION: f64 = 0.01;

/// Squared distance from every query to its nearest point in `tree`.
pub fn nn_dist_sq(tree: &KdTree, queries: &[Vec3]) -> Vec<f64> {
    queries
        .par_iter()
        .map(|q| tree.nearest(q).map_or(f64::INFINITY, |n| n.dist_sq))
        .collect()
}

fn nonempty(a: &[Vec3], name: &str) -> Result<()> {
    if a.is_empty() {
        return Err(Error::invalid(format!("{name} point set is empty")));
    }
    if a.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
        return Err(Error::invalid(format!("{name} point set has non-finite coordinates")));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn chamfer(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    nonempty(a, "first")?;
    nonempty(b, "second")?;
    let (ta, tb) = (KdTree::build(a), KdTree::build(b));
    Ok(mean(&nn_dist_sq(&tb, a)) + mean(&nn_dist_sq(&ta, b)))
}

pub fn nrmse(pred: &[Vec3], gt: &[Vec3]) -> Result<f64> {
    nonempty(pred, "predicted")?;
    nonempty(gt, "ground-truth")?;
    let diag = bbox_diagonal_points(gt)?;
    if diag <= 0.0 {
        return Err(Error::invalid("ground-truth bounding box has zero diagonal"));
    }
    Ok(mean(&nn_dist_sq(&KdTree::build(pred), gt)).sqrt() / diag)
}

pub fn recall(pred: &[Vec3], gt: &[Vec3], threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::invalid(format!("recall threshold must be positive, got {threshold}")));
    }
    nonempty(gt, "ground-truth")?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let d = nn_dist_sq(&KdTree::build(pred), gt);
    let t2 = threshold * threshold;
    Ok(d.iter().filter(|&&x| x <= t2).count() as f64 / gt.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub chamfer: f64,
    pub nrmse: f64,
    pub recall: f64,
    pub threshold: f64,
    /// Ground-truth bounding-box diagonal.
    pub normalizer: f64,
    pub pred_points: usize,
    pub gt_points: usize,
}

/// All three metrics in one pass. `threshold` defaults to
/// [`DEFAULT_RECALL_FRACTION`] times the ground-truth diagonal.
pub fn evaluate(pred: &[Vec3], gt: &[Vec3], threshold: Option<f64>) -> Result<EvalReport> {
    nonempty(pred, "predicted")?;
    nonempty(gt, "ground-truth")?;
    let normalizer = bbox_diagonal_points(gt)?;
    if normalizer <= 0.0 {
        return Err(Error::invalid("ground-truth bounding box has zero diagonal"));
    }
    let threshold = threshold.unwrap_or(DEFAULT_RECALL_FRACTION * normalizer);
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::invalid(format!("recall threshold must be positive, got {threshold}")));
    }
    let (tp, tg) = (KdTree::build(pred), KdTree::build(gt));
    let gt_to_pred = nn_dist_sq(&tp, gt);
    let pred_to_gt = nn_dist_sq(&tg, pred);
    let t2 = threshold * threshold;
    Ok(EvalReport {
        version: REPORT_VERSION,
        chamfer: mean(&gt_to_pred) + mean(&pred_to_gt),
        nrmse: mean(&gt_to_pred).sqrt() / normalizer,
        recall: gt_to_pred.iter().filter(|&&x| x <= t2).count() as f64 / gt.len() as f64,
        threshold,
        normalizer,
        pred_points: pred.len(),
        gt_points: gt.len(),
    })
}

/// Mesh vertices followed by `extra` area-weighted uniform surface samples.
pub fn mesh_points(mesh: &TriMesh, extra: usize, seed: u64) -> Vec<Vec3> {
    let mut out = mesh.vertices().to_vec();
    if extra == 0 || mesh.faces().is_empty() {
        return out;
    }
    let mut cdf = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for f in 0..mesh.faces().len() {
        let [a, b, c] = mesh.triangle(f);
        total += 0.5 * (b - a).cross(&(c - a)).norm();
        cdf.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..extra {
        let u = rng.random::<f64>() * total;
        let f = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let (mut r1, mut r2) = (rng.random::<f64>(), rng.random::<f64>());
        if r1 + r2 > 1.0 {
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        out.push(a + (b - a) * r1 + (c - a) * r2);
    }
    out
}
