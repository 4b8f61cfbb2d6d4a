use nalgebra::{Point3, Vector3};

use super::pose::Pose;
use crate::error::{Error, Result};

/// Faces with less area than this (mm²) are treated as degenerate.
const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

/// Triangle soup with shared vertices. Coordinates are millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and coordinates and drops zero-area faces.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(index) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFiniteVertex { index });
        }
        let count = vertices.len();
        for (face, f) in faces.iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&i| i >= count) {
                return Err(Error::FaceIndexOutOfRange { face, index, count });
            }
        }
        let total = faces.len();
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| {
                let [a, b, c] = f.map(|i| vertices[i]);
                (b - a).cross(&(c - a)).norm() * 0.5 > MIN_FACE_AREA
            })
            .collect();
        if faces.len() < total {
            log::warn!("dropped {} degenerate faces", total - faces.len());
        }
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for v in &self.vertices {
            b.grow(v);
        }
        b
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * factor).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Concatenates meshes without merging vertices.
    pub fn merge(parts: &[TriangleMesh]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for part in parts {
            let base = vertices.len();
            vertices.extend_from_slice(&part.vertices);
            faces.extend(part.faces.iter().map(|f| f.map(|i| i + base)));
        }
        Self::new(vertices, faces)
    }
}

/// Maps every vertex through `v -> R v + t`.
pub fn transform_mesh(mesh: &TriangleMesh, pose: &Pose) -> TriangleMesh {
    TriangleMesh {
        vertices: mesh.vertices.iter().map(|v| pose.transform_point(v)).collect(),
        faces: mesh.faces.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn single() -> TriangleMesh {
        TriangleMesh::new(
            vec![Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn identity_transform_keeps_vertices() {
        let m = single();
        assert_eq!(transform_mesh(&m, &Pose::identity()), m);
    }

    #[test]
    fn translation_shifts_x() {
        let m = single();
        let t = transform_mesh(&m, &Pose::from_translation(Vector3::new(1.0, 0.0, 0.0)));
        for (a, b) in m.vertices().iter().zip(t.vertices()) {
            assert_eq!(b.x, a.x + 1.0);
            assert_eq!(b.y, a.y);
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let m = single();
        let t = transform_mesh(&m, &Pose::from_axis_angle(Vector3::z(), FRAC_PI_2));
        assert!((t.vertices()[0] - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn drops_degenerate_faces() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let m = TriangleMesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.faces().len(), 1);
        assert!(matches!(TriangleMesh::new(v, vec![[0, 1, 3]]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn rejects_bad_input() {
        let v = vec![Point3::new(f64::NAN, 0.0, 0.0), Point3::origin(), Point3::new(0.0, 1.0, 0.0)];
        assert!(matches!(TriangleMesh::new(v, vec![[0, 1, 2]]), Err(Error::NonFiniteVertex { index: 0 })));
        let v = vec![Point3::origin(), Point3::new(0.0, 1.0, 0.0)];
        assert!(matches!(
            TriangleMesh::new(v, vec![[0, 1, 2]]),
            Err(Error::FaceIndexOutOfRange { index: 2, .. })
        ));
    }
}
