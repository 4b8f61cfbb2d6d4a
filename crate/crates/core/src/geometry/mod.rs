//! Triangle meshes, rigid poses and orthographic depth rendering.

mod bvh;
mod io;
mod mesh;
mod pose;
pub mod primitives;
mod render;

pub use bvh::{Bvh, Hit, Ray, MAX_LEAF_TRIANGLES};
pub use io::{load_mesh, write_obj, write_stl};
pub use mesh::{transform_mesh, Aabb, TriangleMesh};
pub use pose::Pose;
pub use render::{render_depth, DepthCamera, HeightMap, SurfaceScan, HEIGHT_PNG_UNIT};
