//! Ray-distance hair modeling toolkit.
//!
//! A hair mesh is described by casting a fixed template of rays from every
//! vertex of a symmetric scalp selection and recording the nearest and
//! farthest hit distances. Because ray order and frame handedness are tied to
//! the scalp topology, fields from different hairstyles line up entry by
//! entry: they can be averaged, mirrored, thickened, and fed into a PCA model.
//!
//! Module map:
//! - [`mesh_io`]: triangle meshes, OBJ/PLY, normals.
//! - [`ray_engine`]: BVH ray casting and closest-point queries.
//! - [`scalp_frames`]: scalp specs, ray templates, symmetric frames, ray placement.
//! - [`ray_field`]: distance/albedo fields and the operations on them.
//! - [`morphable`]: PCA model over fields.
//! - [`mesh_extract`]: voxel-surface face extraction and Laplacian smoothing.
//! - [`shading`]: order-2 spherical harmonics shading.
//! - [`metrics`]: Chamfer, NRMSE, recall.
//! - [`pipeline`]: field to colored mesh, shared by the front ends.
//! - [`fixtures`]: analytic synthetic heads and hair.

// `!(x >= 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod hash;
pub mod kdtree;
pub mod mesh_extract;
pub mod mesh_io;
pub mod metrics;
pub mod morphable;
pub mod pipeline;
pub mod ray_engine;
pub mod ray_field;
pub mod scalp_frames;
pub mod shading;

pub use error::{Error, Result};
pub use mesh_io::TriMesh;
pub use morphable::{HairCoefficients, MorphableHairModel};
pub use ray_engine::{AccelIndex, Hit, Ray};
pub use ray_field::{ExclusionMap, RayDistanceField};
pub use scalp_frames::{LocalFrame, RaySet, RayTemplate, ScalpSpec, Side};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Linear RGB with components in `[0, 1]`.
pub type Rgb = [f32; 3];
