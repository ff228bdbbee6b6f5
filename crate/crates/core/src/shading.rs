//! Order-2 real spherical-harmonics shading.
//!
//! Basis order and constants, for a unit normal `(x, y, z)`:
//!
//! | k | function            | constant   |
//! |---|---------------------|------------|
//! | 0 | 1                   | 0.282095   |
//! | 1 | y                   | 0.488603   |
//! | 2 | z                   | 0.488603   |
//! | 3 | x                   | 0.488603   |
//! | 4 | xy                  | 1.092548   |
//! | 5 | yz                  | 1.092548   |
//! | 6 | 3z² − 1             | 0.315392   |
//! | 7 | xz                  | 1.092548   |
//! | 8 | x² − y²             | 0.546274   |
//!
//! The constants are written out in closed form below. Output colors are
//! clamped to `[0, 1]`.

use crate::error::{Error, Result};
use crate::{Rgb, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Nine RGB lighting coefficients, one per basis function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShCoefficients(pub [[f64; 3]; 9]);

impl ShCoefficients {
    pub fn zero() -> Self {
        ShCoefficients([[0.0; 3]; 9])
    }

    /// Constant lighting that reproduces the albedo exactly: `c0 * Y0 = 1`.
    pub fn ambient() -> Self {
        let mut c = Self::zero();
        c.0[0] = [1.0 / C0; 3];
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().flatten().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("SH coefficients must be finite"))
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        ShCoefficients(self.0.map(|c| c.map(|x| x * s)))
    }
}

const C0: f64 = 0.282_094_791_773_878_14; // 1 / (2 sqrt(pi))

fn constants() -> [f64; 5] {
    [
        0.5 / PI.sqrt(),
        (3.0 / (4.0 * PI)).sqrt(),
        0.5 * (15.0 / PI).sqrt(),
        0.25 * (5.0 / PI).sqrt(),
        0.25 * (15.0 / PI).sqrt(),
    ]
}

pub fn sh_basis(n: &Vec3) -> Result<[f64; 9]> {
    if !((n.norm() - 1.0).abs() <= UNIT_TOLERANCE) {
        return Err(Error::invalid(format!("SH basis needs a unit normal, |n| = {}", n.norm())));
    }
    Ok(sh_basis_unchecked(n))
}

fn sh_basis_unchecked(n: &Vec3) -> [f64; 9] {
    let [c0, c1, c2, c3, c4] = constants();
    let (x, y, z) = (n.x, n.y, n.z);
    [
        c0,
        c1 * y,
        c1 * z,
        c1 * x,
        c2 * x * y,
        c2 * y * z,
        c3 * (3.0 * z * z - 1.0),
        c2 * x * z,
        c4 * (x * x - y * y),
    ]
}

/// Unclamped `albedo ⊙ Σ_k coeffs_k Ψ_k(n)`.
pub fn irradiance(albedo: Rgb, n: &Vec3, coeffs: &ShCoefficients) -> Result<[f64; 3]> {
    let psi = sh_basis(n)?;
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let light: f64 = psi.iter().zip(&coeffs.0).map(|(p, b)| p * b[c]).sum();
        *o = albedo[c] as f64 * light;
    }
    Ok(out)
}

pub fn shade(albedo: &[Rgb], normals: &[Vec3], coeffs: &ShCoefficients) -> Result<Vec<Rgb>> {
    if albedo.len() != normals.len() {
        return Err(Error::invalid(format!(
            "{} albedo values for {} normals",
            albedo.len(),
            normals.len()
        )));
    }
    coeffs.validate()?;
    albedo
        .par_iter()
        .zip(normals)
        .map(|(a, n)| irradiance(*a, n, coeffs).map(|c| c.map(|v| v.clamp(0.0, 1.0) as f32)))
        .collect()
}
