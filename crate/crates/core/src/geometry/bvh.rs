//! Bounding-volume hierarchy over mesh triangles for nearest-hit ray queries.
//!
//! Built once with a median split along the widest centroid axis; leaves
//! hold at most [`MAX_LEAF_TRIANGLES`] triangles. The tree is immutable
//! after construction and can be shared between threads.

use nalgebra::{Point3, Vector3};

use super::mesh::{Aabb, TriangleMesh};

pub const MAX_LEAF_TRIANGLES: usize = 4;

const HIT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: usize,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<[Point3<f64>; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let triangles: Vec<[Point3<f64>; 3]> = (0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect();
        let centroids: Vec<Point3<f64>> = triangles
            .iter()
            .map(|[a, b, c]| Point3::from((a.coords + b.coords + c.coords) / 3.0))
            .collect();
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / MAX_LEAF_TRIANGLES + 1);
        let len = order.len();
        build_node(&triangles, &centroids, &mut order, 0, len, &mut nodes);
        Self { triangles, order, nodes }
    }

    pub fn bounds(&self) -> Aabb {
        *self.nodes[0].bounds()
    }

    /// Nearest intersection with `t` in `[0, t_max]`. Triangles are double sided.
    pub fn nearest_hit(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(index) = stack.pop() {
            let node = &self.nodes[index];
            if !ray_hits_box(ray, node.bounds(), limit) {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    for &tri in &self.order[start..start + count] {
                        if let Some(t) = intersect_triangle(ray, &self.triangles[tri]) {
                            if t <= limit && best.is_none_or(|b| t < b.t || (t == b.t && tri < b.triangle)) {
                                limit = t;
                                best = Some(Hit { t, triangle: tri });
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 1,
                Node::Inner { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn triangle_bounds(t: &[Point3<f64>; 3]) -> Aabb {
    let mut b = Aabb::empty();
    t.iter().for_each(|p| b.grow(p));
    b
}

fn build_node(
    triangles: &[[Point3<f64>; 3]],
    centroids: &[Point3<f64>],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let slice = &mut order[start..end];
    let bounds = slice
        .iter()
        .fold(Aabb::empty(), |acc, &i| acc.union(&triangle_bounds(&triangles[i])));
    let index = nodes.len();
    if slice.len() <= MAX_LEAF_TRIANGLES {
        nodes.push(Node::Leaf {
            bounds,
            start,
            count: slice.len(),
        });
        return index;
    }
    let mut cb = Aabb::empty();
    slice.iter().for_each(|&i| cb.grow(&centroids[i]));
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    // placeholder, patched once both children exist
    nodes.push(Node::Leaf { bounds, start, count: 0 });
    let left = build_node(triangles, centroids, order, start, start + mid, nodes);
    let right = build_node(triangles, centroids, order, start + mid, end, nodes);
    nodes[index] = Node::Inner { bounds, left, right };
    index
}

fn ray_hits_box(ray: &Ray, b: &Aabb, t_max: f64) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = t_max;
    for axis in 0..3 {
        let o = ray.origin[axis];
        let d = ray.direction[axis];
        if d == 0.0 {
            if o < b.min[axis] || o > b.max[axis] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (mut near, mut far) = ((b.min[axis] - o) * inv, (b.max[axis] - o) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Möller–Trumbore; returns the ray parameter of the hit.
fn intersect_triangle(ray: &Ray, [a, b, c]: &[Point3<f64>; 3]) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < HIT_EPSILON {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= 0.0).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    fn brute_force(mesh: &TriangleMesh, ray: &Ray) -> Option<f64> {
        (0..mesh.faces().len())
            .filter_map(|f| intersect_triangle(ray, &mesh.triangle(f)))
            .min_by(f64::total_cmp)
    }

    #[test]
    fn matches_brute_force_on_sphere() {
        let mesh = primitives::icosphere(5.0, 3);
        let bvh = Bvh::build(&mesh);
        for i in 0..40 {
            let x = -6.0 + 0.3 * i as f64;
            let ray = Ray::new(Point3::new(x, 0.37 * x, -20.0), Vector3::new(0.05, 0.0, 1.0));
            let got = bvh.nearest_hit(&ray, 100.0).map(|h| h.t);
            assert_eq!(got, brute_force(&mesh, &ray), "ray {i}");
        }
    }

    #[test]
    fn leaves_respect_capacity() {
        let mesh = primitives::icosphere(1.0, 2);
        let bvh = Bvh::build(&mesh);
        for node in &bvh.nodes {
            if let Node::Leaf { count, .. } = node {
                assert!(*count <= MAX_LEAF_TRIANGLES);
            }
        }
        assert!(bvh.depth() <= 12);
    }

    #[test]
    fn axis_aligned_ray_hits_box_face() {
        let mesh = primitives::cuboid(Vector3::new(40.0, 40.0, 40.0), Point3::origin());
        let bvh = Bvh::build(&mesh);
        let ray = Ray::new(Point3::new(0.0, 100.0, 0.0), -Vector3::y());
        let hit = bvh.nearest_hit(&ray, 1e3).unwrap();
        assert!((ray.at(hit.t).y - 20.0).abs() < 1e-12);
        let miss = Ray::new(Point3::new(30.0, 100.0, 0.0), -Vector3::y());
        assert!(bvh.nearest_hit(&miss, 1e3).is_none());
    }
}
