//! Field to colored hair mesh: reconstruct vertices, extract faces, smooth,
//! shade. Shared by the command line and the service.

use crate::error::{Error, Result};
use crate::mesh_extract::{extract_faces, smooth, ExtractParams, DEFAULT_VOXEL};
use crate::mesh_io::{vertex_normals, TriMesh};
use crate::ray_field::{reconstruct_vertices, RayDistanceField};
use crate::scalp_frames::RaySet;
use crate::shading::{shade, ShCoefficients};
use crate::Vec3;

pub const DEFAULT_SMOOTH_ITERATIONS: usize = 0;
pub const DEFAULT_SMOOTH_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshParams {
    pub extract: ExtractParams,
    pub smooth_iterations: usize,
    pub smooth_lambda: f64,
    pub sh: Option<ShCoefficients>,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            extract: ExtractParams {
                voxel: DEFAULT_VOXEL,
                match_threshold: None,
            },
            smooth_iterations: DEFAULT_SMOOTH_ITERATIONS,
            smooth_lambda: DEFAULT_SMOOTH_LAMBDA,
            sh: None,
        }
    }
}

/// Colored mesh over the hair vertices of `field`, compacted to the
/// vertices some face uses. Colors are the recorded albedo, shaded when
/// `params.sh` is set. The result may have no faces.
pub fn field_to_mesh(field: &RayDistanceField, rays: &RaySet, params: &MeshParams) -> Result<TriMesh> {
    let rec = reconstruct_vertices(field, rays, true)?;
    if rec.points.is_empty() {
        return Err(Error::invalid("field has no hair entries"));
    }
    let faces = extract_faces(&rec.points, &params.extract)?;
    let mut mesh = TriMesh::new(rec.points, faces)?.with_colors(rec.colors)?.compact();
    if params.smooth_iterations > 0 {
        mesh = smooth(&mesh, params.smooth_iterations, params.smooth_lambda)?;
    }
    if let Some(sh) = &params.sh {
        mesh = shade_mesh(&mesh, sh)?;
    }
    Ok(mesh)
}

/// Replaces vertex colors by `albedo ⊙ lighting`. Vertices without a
/// normal get the constant band only.
pub fn shade_mesh(mesh: &TriMesh, sh: &ShCoefficients) -> Result<TriMesh> {
    let albedo = mesh
        .colors()
        .ok_or_else(|| Error::invalid("shading needs vertex colors"))?
        .to_vec();
    let normals = vertex_normals(mesh);
    let mut ambient = ShCoefficients::zero();
    ambient.0[0] = sh.0[0];
    let safe: Vec<Vec3> = normals
        .iter()
        .map(|n| if *n == Vec3::zeros() { Vec3::z() } else { *n })
        .collect();
    let lit = shade(&albedo, &safe, sh)?;
    let flat = shade(&albedo, &vec![Vec3::z(); albedo.len()], &ambient)?;
    let colors = normals
        .iter()
        .zip(lit.into_iter().zip(flat))
        .map(|(n, (l, f))| if *n == Vec3::zeros() { f } else { l })
        .collect();
    mesh.clone().with_colors(colors)
}
