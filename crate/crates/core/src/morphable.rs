//! PCA over ray-distance fields, with independent distance and albedo spaces.
//!
//! Basis columns are stored unscaled (orthonormal); mode `k` is applied
//! with scale `sigma_k / sqrt(n - 1)`, so a unit coefficient is one
//! standard deviation of the training set along that mode. The
//! largest-magnitude component of every stored column is positive.
//!
//! ## SRMM file layout (little-endian)
//!
//! | offset | size | content                                 |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `SRMM`                            |
//! | 4      | 2    | version (`u16`, currently 1)            |
//! | 6      | 2    | reserved, zero                          |
//! | 8      | 4×6  | `N_s`, `N_r`, `N`, `K`, `K_a`, samples (`u32`) |
//! | 32     | 32   | template digest                         |
//! | 64     | 32   | scalp digest                            |
//! | 96     | ...  | `f64` arrays: `mean_d[N]`, `sigma_d[K]`, `basis_d[N×K]` column-major, `mean_a[3N]`, `sigma_a[K_a]`, `basis_a[3N×K_a]` |
//!
//! `N = 2 N_s N_r`. Distance vectors are `d_min` then `d_max`; albedo
//! vectors are `albedo_min` then `albedo_max`, RGB interleaved.

use crate::error::{read_file, write_file, Error, Result};
use crate::hash::Digest;
use crate::ray_field::{scale_thickness, RayDistanceField};
use crate::shading::ShCoefficients;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MODEL_MAGIC: &[u8; 4] = b"SRMM";
pub const MODEL_VERSION: u16 = 1;
const HEADER_LEN: usize = 96;
/// Tolerance on `U^T U = I` when loading a model.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MorphableHairModel {
    n_s: usize,
    n_r: usize,
    n_samples: usize,
    mean_d: DVector<f64>,
    sigma_d: Vec<f64>,
    basis_d: DMatrix<f64>,
    mean_a: DVector<f64>,
    sigma_a: Vec<f64>,
    basis_a: DMatrix<f64>,
    template_hash: Digest,
    scalp_hash: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HairCoefficients {
    pub beta_shape: Vec<f64>,
    pub beta_alb: Vec<f64>,
    #[serde(default = "one")]
    pub beta_s: f64,
    /// Lighting; `None` leaves vertex colors unshaded.
    #[serde(default)]
    pub beta_sh: Option<ShCoefficients>,
}

fn one() -> f64 {
    1.0
}

impl HairCoefficients {
    pub fn zeros(k: usize, k_a: usize) -> Self {
        HairCoefficients {
            beta_shape: vec![0.0; k],
            beta_alb: vec![0.0; k_a],
            beta_s: 1.0,
            beta_sh: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_s > 0.0 && self.beta_s.is_finite()) {
            return Err(Error::invalid(format!("beta_s must be positive, got {}", self.beta_s)));
        }
        if !self.beta_shape.iter().chain(&self.beta_alb).all(|x| x.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if let Some(sh) = &self.beta_sh {
            sh.validate()?;
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let c: HairCoefficients = serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("coefficients serialize")
    }
}

/// Thin SVD of the centered sample matrix: sorted, sign-fixed, truncated.
fn principal_modes(samples: &DMatrix<f64>, mean: &DVector<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let centered = DMatrix::from_fn(samples.nrows(), samples.ncols(), |r, c| samples[(r, c)] - mean[r]);
    let svd = centered.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut basis = DMatrix::zeros(samples.nrows(), k);
    let mut sigma = Vec::with_capacity(k);
    for (j, &src) in order.iter().take(k).enumerate() {
        let mut col = u.column(src).into_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        basis.set_column(j, &col);
        sigma.push(svd.singular_values[src]);
    }
    (sigma, basis)
}

fn is_rank_zero(sigma: &[f64], mean: &DVector<f64>) -> bool {
    let scale = mean.amax().max(1.0);
    sigma.first().is_none_or(|&s| s <= 1e-12 * scale * (mean.len() as f64).sqrt())
}

impl MorphableHairModel {
    /// PCA with `modes` distance modes and `albedo_modes` albedo modes.
    pub fn build(fields: &[RayDistanceField], modes: usize, albedo_modes: usize) -> Result<Self> {
        let first = fields
            .first()
            .filter(|_| fields.len() >= 2)
            .ok_or_else(|| Error::invalid(format!("need at least 2 training fields, got {}", fields.len())))?;
        let n = fields.len();
        for (i, f) in fields.iter().enumerate() {
            if (f.n_s(), f.n_r()) != (first.n_s(), first.n_r())
                || f.template_hash() != first.template_hash()
                || f.scalp_hash() != first.scalp_hash()
            {
                return Err(Error::mismatch(format!("training field {i} has different metadata than field 0")));
            }
        }
        for (what, k) in [("distance", modes), ("albedo", albedo_modes)] {
            if k > n - 1 {
                return Err(Error::invalid(format!(
                    "{k} {what} modes requested but {n} samples support at most {}",
                    n - 1
                )));
            }
        }
        let dist: Vec<Vec<f64>> = fields.iter().map(|f| f.distance_vector()).collect();
        let alb: Vec<Vec<f64>> = fields.iter().map(|f| f.albedo_vector()).collect();
        let to_matrix = |cols: &[Vec<f64>]| DMatrix::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r]);
        let (xd, xa) = (to_matrix(&dist), to_matrix(&alb));
        let mean_d = xd.column_mean();
        let mean_a = xa.column_mean();
        let (sigma_d, basis_d) = principal_modes(&xd, &mean_d, modes);
        let (sigma_a, basis_a) = principal_modes(&xa, &mean_a, albedo_modes);
        if modes > 0 && is_rank_zero(&sigma_d, &mean_d) {
            return Err(Error::invalid("training distances have rank zero; only K = 0 is possible"));
        }
        if albedo_modes > 0 && is_rank_zero(&sigma_a, &mean_a) {
            return Err(Error::invalid("training albedo has rank zero; only K_a = 0 is possible"));
        }
        log::debug!("built model from {n} fields: sigma_d = {sigma_d:?}");
        Ok(MorphableHairModel {
            n_s: first.n_s(),
            n_r: first.n_r(),
            n_samples: n,
            mean_d,
            sigma_d,
            basis_d,
            mean_a,
            sigma_a,
            basis_a,
            template_hash: first.template_hash(),
            scalp_hash: first.scalp_hash(),
        })
    }

    pub fn modes(&self) -> usize {
        self.sigma_d.len()
    }

    pub fn albedo_modes(&self) -> usize {
        self.sigma_a.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_s, self.n_r)
    }

    pub fn template_hash(&self) -> Digest {
        self.template_hash
    }

    pub fn scalp_hash(&self) -> Digest {
        self.scalp_hash
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma_d
    }

    pub fn albedo_singular_values(&self) -> &[f64] {
        &self.sigma_a
    }

    pub fn mean_distances(&self) -> &DVector<f64> {
        &self.mean_d
    }

    pub fn mean_albedo(&self) -> &DVector<f64> {
        &self.mean_a
    }

    /// Orthonormal distance basis, `N × K`.
    pub fn shape_basis(&self) -> &DMatrix<f64> {
        &self.basis_d
    }

    pub fn albedo_basis(&self) -> &DMatrix<f64> {
        &self.basis_a
    }

    fn scale(&self, sigma: f64) -> f64 {
        sigma / ((self.n_samples - 1) as f64).sqrt()
    }

    pub fn mode_scales(&self) -> Vec<f64> {
        self.sigma_d.iter().map(|&s| self.scale(s)).collect()
    }

    /// Same model keeping only the leading `k` and `k_a` modes.
    pub fn truncated(&self, k: usize, k_a: usize) -> Result<Self> {
        if k > self.modes() || k_a > self.albedo_modes() {
            return Err(Error::invalid("cannot truncate to more modes than the model has"));
        }
        let mut m = self.clone();
        m.sigma_d.truncate(k);
        m.sigma_a.truncate(k_a);
        m.basis_d = self.basis_d.columns(0, k).into_owned();
        m.basis_a = self.basis_a.columns(0, k_a).into_owned();
        Ok(m)
    }

    fn combine(&self, mean: &DVector<f64>, basis: &DMatrix<f64>, sigma: &[f64], beta: &[f64]) -> DVector<f64> {
        let w = DVector::from_iterator(beta.len(), beta.iter().zip(sigma).map(|(b, &s)| b * self.scale(s)));
        mean + basis * w
    }

    /// The synthesized field carries the synthesized albedo in its slots.
    pub fn synthesize(&self, coeffs: &HairCoefficients) -> Result<RayDistanceField> {
        coeffs.validate()?;
        if coeffs.beta_shape.len() != self.modes() || coeffs.beta_alb.len() != self.albedo_modes() {
            return Err(Error::invalid(format!(
                "coefficient lengths ({}, {}) do not match model modes ({}, {})",
                coeffs.beta_shape.len(),
                coeffs.beta_alb.len(),
                self.modes(),
                self.albedo_modes()
            )));
        }
        let d = self.combine(&self.mean_d, &self.basis_d, &self.sigma_d, &coeffs.beta_shape);
        let a = self.combine(&self.mean_a, &self.basis_a, &self.sigma_a, &coeffs.beta_alb);
        let base = RayDistanceField::from_vectors(
            self.n_s,
            self.n_r,
            d.as_slice(),
            a.as_slice(),
            self.template_hash,
            self.scalp_hash,
        )?;
        // Clamping commutes with a positive scale, so this is the same
        // field as scaling first, and it makes the factorization exact.
        if coeffs.beta_s == 1.0 {
            Ok(base)
        } else {
            scale_thickness(&base, coeffs.beta_s)
        }
    }

    pub fn mean_field(&self) -> Result<RayDistanceField> {
        self.synthesize(&HairCoefficients::zeros(self.modes(), self.albedo_modes()))
    }

    fn check_field(&self, field: &RayDistanceField) -> Result<()> {
        if (field.n_s(), field.n_r()) != (self.n_s, self.n_r)
            || field.template_hash() != self.template_hash
            || field.scalp_hash() != self.scalp_hash
        {
            return Err(Error::mismatch("field metadata does not match the model"));
        }
        Ok(())
    }

    fn coefficients(&self, x: &[f64], mean: &DVector<f64>, basis: &DMatrix<f64>, sigma: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(x) - mean;
        sigma
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let scale = self.scale(s);
                if scale == 0.0 {
                    0.0
                } else {
                    basis.column(k).dot(&r) / scale
                }
            })
            .collect()
    }

    /// Distance coefficients of `field`, assuming `beta_s = 1`.
    pub fn project(&self, field: &RayDistanceField) -> Result<Vec<f64>> {
        self.check_field(field)?;
        Ok(self.coefficients(&field.distance_vector(), &self.mean_d, &self.basis_d, &self.sigma_d))
    }

    pub fn project_albedo(&self, field: &RayDistanceField) -> Result<Vec<f64>> {
        self.check_field(field)?;
        Ok(self.coefficients(&field.albedo_vector(), &self.mean_a, &self.basis_a, &self.sigma_a))
    }

    pub fn encode(&self) -> Vec<u8> {
        let nd = self.mean_d.len();
        let na = self.mean_a.len();
        let floats = nd * (1 + self.modes()) + self.modes() + na * (1 + self.albedo_modes()) + self.albedo_modes();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * floats);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&[0, 0]);
        for v in [self.n_s, self.n_r, nd, self.modes(), self.albedo_modes(), self.n_samples] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.template_hash.0);
        out.extend_from_slice(&self.scalp_hash.0);
        let arrays: [&[f64]; 6] = [
            self.mean_d.as_slice(),
            &self.sigma_d,
            self.basis_d.as_slice(),
            self.mean_a.as_slice(),
            &self.sigma_a,
            self.basis_a.as_slice(),
        ];
        for a in arrays {
            for x in a {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::parse(format!("byte {}", bytes.len()), "truncated SRMM header"));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(Error::parse("byte 0", "not an SRMM model file"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != MODEL_VERSION {
            return Err(Error::invalid(format!("unsupported SRMM version {version}")));
        }
        if bytes[6..8] != [0, 0] {
            return Err(Error::parse("byte 6", "reserved header bytes are not zero"));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().unwrap()) as usize;
        let (n_s, n_r, nd, k, k_a, n_samples) = (word(0), word(1), word(2), word(3), word(4), word(5));
        if Some(nd) != n_s.checked_mul(n_r).and_then(|m| m.checked_mul(2)) {
            return Err(Error::invalid(format!("N = {nd} is not 2 x {n_s} x {n_r}")));
        }
        if n_samples < 2 || k > n_samples - 1 || k_a > n_samples - 1 {
            return Err(Error::invalid(format!(
                "{k}/{k_a} modes are inconsistent with {n_samples} samples"
            )));
        }
        let na = 3 * nd;
        let floats = nd
            .checked_mul(k + 1)
            .and_then(|a| na.checked_mul(k_a + 1).and_then(|b| a.checked_add(b)))
            .and_then(|x| x.checked_add(k + k_a));
        if floats.and_then(|f| f.checked_mul(8)).and_then(|b| b.checked_add(HEADER_LEN)) != Some(bytes.len()) {
            return Err(Error::parse(
                format!("byte {}", bytes.len()),
                "SRMM body length does not match its header",
            ));
        }
        let template_hash = Digest(bytes[32..64].try_into().unwrap());
        let scalp_hash = Digest(bytes[64..96].try_into().unwrap());
        let mut cursor = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |len: usize| -> Vec<f64> { cursor.by_ref().take(len).collect() };
        let mean_d = DVector::from_vec(take(nd));
        let sigma_d = take(k);
        let basis_d = DMatrix::from_vec(nd, k, take(nd * k));
        let mean_a = DVector::from_vec(take(na));
        let sigma_a = take(k_a);
        let basis_a = DMatrix::from_vec(na, k_a, take(na * k_a));
        let m = MorphableHairModel {
            n_s,
            n_r,
            n_samples,
            mean_d,
            sigma_d,
            basis_d,
            mean_a,
            sigma_a,
            basis_a,
            template_hash,
            scalp_hash,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self
            .mean_d
            .iter()
            .chain(&self.sigma_d)
            .chain(self.basis_d.iter())
            .chain(self.mean_a.iter())
            .chain(&self.sigma_a)
            .chain(self.basis_a.iter());
        if !all.into_iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("model contains non-finite values"));
        }
        if self.mean_d.iter().any(|&x| x < 0.0) {
            return Err(Error::invalid("mean distances must be non-negative"));
        }
        if self.mean_a.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::invalid("mean albedo must lie in [0, 1]"));
        }
        for (what, sigma, basis) in [("distance", &self.sigma_d, &self.basis_d), ("albedo", &self.sigma_a, &self.basis_a)] {
            if sigma.iter().any(|&s| s < 0.0) || sigma.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::invalid(format!("{what} singular values must be non-negative and descending")));
            }
            let gram = basis.transpose() * basis;
            let err = (gram - DMatrix::identity(sigma.len(), sigma.len())).amax();
            if err > ORTHONORMAL_TOLERANCE {
                return Err(Error::invalid(format!("{what} basis is not orthonormal (error {err:.3e})")));
            }
        }
        Ok(())
    }
}

pub fn load_model(path: &Path) -> Result<MorphableHairModel> {
    MorphableHairModel::decode(&read_file(path)?)
}

pub fn write_model(path: &Path, model: &MorphableHairModel) -> Result<()> {
    write_file(path, &model.encode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray_field::DEFAULT_SKIN;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random valid field with full support and well-separated slots.
    fn sample(seed: u64) -> RayDistanceField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_s, n_r) = (4, 6);
        let m = n_s * n_r;
        let mut d: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.0)).collect();
        d.extend((0..m).map(|_| rng.random_range(1.5..2.5)));
        let a: Vec<f64> = (0..6 * m).map(|_| rng.random_range(0.2..0.8)).collect();
        RayDistanceField::from_vectors(n_s, n_r, &d, &a, Digest([3; 32]), Digest([4; 32])).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn two_sample_closed_form() {
        let (f0, f1) = (sample(1), sample(2));
        let m = MorphableHairModel::build(&[f0.clone(), f1.clone()], 1, 1).unwrap();
        let (v0, v1) = (f0.distance_vector(), f1.distance_vector());
        for r in 0..v0.len() {
            assert!((m.mean_distances()[r] - 0.5 * (v0[r] + v1[r])).abs() < 1e-12);
        }
        let diff: f64 = v0.iter().zip(&v1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        // Each sample sits diff/2 from the mean, which is 1/sqrt(2) sample standard deviations.
        assert!((m.mode_scales()[0] - diff / 2f64.sqrt()).abs() < 1e-9);
        let synth = |b: f64| {
            let mut c = HairCoefficients::zeros(1, 1);
            c.beta_shape[0] = b;
            c.beta_alb[0] = b;
            m.synthesize(&c).unwrap().distance_vector()
        };
        let unit = 0.5f64.sqrt();
        let (p, q) = (synth(unit), synth(-unit));
        let (hit0, hit1) = if rel_l2(&p, &v0) < rel_l2(&p, &v1) { (p, q) } else { (q, p) };
        assert!(rel_l2(&hit0, &v0) < 1e-5);
        assert!(rel_l2(&hit1, &v1) < 1e-5);
    }

    #[test]
    fn round_trip_and_monotone_error() {
        let fields: Vec<_> = (0..20).map(|s| sample(10 + s)).collect();
        let m = MorphableHairModel::build(&fields, 19, 19).unwrap();
        let gram = m.shape_basis().transpose() * m.shape_basis();
        assert!((gram - DMatrix::identity(19, 19)).amax() < 1e-9);
        for f in &fields {
            let mut c = HairCoefficients::zeros(19, 19);
            c.beta_shape = m.project(f).unwrap();
            c.beta_alb = m.project_albedo(f).unwrap();
            let back = m.synthesize(&c).unwrap();
            assert!(rel_l2(&back.distance_vector(), &f.distance_vector()) < 1e-4);
            assert!(rel_l2(&back.albedo_vector(), &f.albedo_vector()) < 1e-4);
        }
        let mut last = f64::INFINITY;
        for k in 0..=19 {
            let t = m.truncated(k, 0).unwrap();
            let err: f64 = fields
                .iter()
                .map(|f| {
                    let x = DVector::from_vec(f.distance_vector()) - t.mean_distances();
                    let p = t.shape_basis() * (t.shape_basis().transpose() * &x);
                    (x - p).norm_squared()
                })
                .sum();
            assert!(err <= last * (1.0 + 1e-12) + 1e-18);
            last = err;
        }
    }

    #[test]
    fn mean_projection_and_residual_orthogonality() {
        let fields: Vec<_> = (0..6).map(|s| sample(40 + s)).collect();
        let m = MorphableHairModel::build(&fields, 3, 2).unwrap();
        let mean = m.mean_field().unwrap();
        assert!(m.project(&mean).unwrap().iter().all(|b| b.abs() < 1e-5));
        let x = DVector::from_vec(fields[0].distance_vector()) - m.mean_distances();
        let resid = &x - m.shape_basis() * (m.shape_basis().transpose() * &x);
        assert!((m.shape_basis().transpose() * resid).amax() < 1e-6);
    }

    #[test]
    fn thickness_factors_out() {
        let fields: Vec<_> = (0..5).map(|s| sample(60 + s)).collect();
        let m = MorphableHairModel::build(&fields, 4, 4).unwrap();
        let mut c = HairCoefficients::zeros(4, 4);
        c.beta_shape = vec![0.7, -1.2, 0.3, 2.0];
        let unit = m.synthesize(&c).unwrap();
        c.beta_s = 1.8;
        assert_eq!(m.synthesize(&c).unwrap(), scale_thickness(&unit, 1.8).unwrap());
        c.beta_s = 0.0;
        assert!(m.synthesize(&c).is_err());
    }

    #[test]
    fn errors_and_degenerate_inputs() {
        let f = sample(1);
        assert!(MorphableHairModel::build(std::slice::from_ref(&f), 0, 0).is_err());
        assert!(matches!(
            MorphableHairModel::build(&[f.clone(), f.clone()], 1, 0),
            Err(Error::Invalid(msg)) if msg.contains("rank zero")
        ));
        let m = MorphableHairModel::build(&[f.clone(), f.clone()], 0, 0).unwrap();
        assert_eq!(m.mean_field().unwrap(), f);
        assert!(MorphableHairModel::build(&[f.clone(), sample(2)], 2, 0).is_err());
        let other = RayDistanceField::empty(4, 6, Digest([3; 32]), Digest([9; 32]), DEFAULT_SKIN);
        assert!(matches!(MorphableHairModel::build(&[f.clone(), other], 0, 0), Err(Error::Mismatch(_))));
        let m = MorphableHairModel::build(&[f, sample(2)], 1, 1).unwrap();
        assert!(m.synthesize(&HairCoefficients::zeros(2, 1)).is_err());
    }

    #[test]
    fn codec() {
        let fields: Vec<_> = (0..5).map(|s| sample(80 + s)).collect();
        let m = MorphableHairModel::build(&fields, 3, 2).unwrap();
        let bytes = m.encode();
        let back = MorphableHairModel::decode(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.encode(), bytes);
        assert!(MorphableHairModel::decode(&bytes[..bytes.len() - 8]).is_err());
        let mut v = bytes.clone();
        v[4] = 2;
        assert!(MorphableHairModel::decode(&v).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.srmm");
        write_model(&p, &m).unwrap();
        assert_eq!(load_model(&p).unwrap(), m);
    }

    #[test]
    fn coefficient_json() {
        let c = HairCoefficients::from_json(br#"{"beta_shape":[1.0],"beta_alb":[]}"#).unwrap();
        assert_eq!(c.beta_s, 1.0);
        assert!(c.beta_sh.is_none());
        assert_eq!(HairCoefficients::from_json(c.to_json().as_bytes()).unwrap(), c);
        assert!(HairCoefficients::from_json(br#"{"beta_shape":[],"beta_alb":[],"beta_s":-1}"#).is_err());
        assert!(HairCoefficients::from_json(br#"{"beta_shape":[],"beta_alb":[],"x":1}"#).is_err());
    }
}
