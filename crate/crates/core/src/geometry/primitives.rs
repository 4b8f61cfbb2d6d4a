//! Procedurally generated meshes so the pipeline runs without external assets.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};

use super::mesh::TriangleMesh;

/// Geodesic sphere centred at the origin; `20 * 4^subdivisions` faces.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| Point3::from(v * radius)).collect();
    TriangleMesh::new(vertices, faces).expect("icosphere is well formed")
}

/// Axis-aligned box with the given edge lengths.
pub fn cuboid(extent: Vector3<f64>, center: Point3<f64>) -> TriangleMesh {
    let h = extent * 0.5;
    let vertices = (0..8)
        .map(|i| {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            center + Vector3::new(sx * h.x, sy * h.y, sz * h.z)
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriangleMesh::new(vertices, faces).expect("cuboid is well formed")
}

/// Upright closed cylinder standing on `z = 0`, axis through the origin.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for z in [0.0, height] {
        for k in 0..segments {
            let a = 2.0 * PI * k as f64 / segments as f64;
            vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let bottom = vertices.len();
    vertices.push(Point3::new(0.0, 0.0, 0.0));
    let top = vertices.len();
    vertices.push(Point3::new(0.0, 0.0, height));
    let mut faces = Vec::with_capacity(4 * segments);
    for k in 0..segments {
        let n = (k + 1) % segments;
        let (b0, b1, t0, t1) = (k, n, k + segments, n + segments);
        faces.push([b0, b1, t1]);
        faces.push([b0, t1, t0]);
        faces.push([bottom, b1, b0]);
        faces.push([top, t0, t1]);
    }
    TriangleMesh::new(vertices, faces).expect("cylinder is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_face_counts() {
        assert_eq!(icosphere(1.0, 0).faces().len(), 20);
        assert_eq!(icosphere(1.0, 2).faces().len(), 320);
        let s = icosphere(5.0, 2);
        for v in s.vertices() {
            assert!((v.coords.norm() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cuboid_bounds() {
        let b = cuboid(Vector3::new(2.0, 4.0, 6.0), Point3::new(1.0, 0.0, 3.0)).bounds();
        assert_eq!(b.min, Point3::new(0.0, -2.0, 0.0));
        assert_eq!(b.max, Point3::new(2.0, 2.0, 6.0));
    }

    #[test]
    fn cylinder_faces() {
        let c = cylinder(10.0, 50.0, 32);
        assert_eq!(c.faces().len(), 128);
        assert_eq!(c.bounds().max.z, 50.0);
    }
}
