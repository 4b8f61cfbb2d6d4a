//! Force to gel-deformation mapping.
//!
//! Normal force maps linearly to indentation volume (`V = k_n F_n`) and
//! shear force linearly to shear displacement (`D = k_s F_s`). The depth
//! map realizing a target volume is found by bisection on the object's
//! translation along the contact normal, integrating the rendered depth
//! map at every candidate.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{render_depth, DepthCamera, HeightMap, Pose, SurfaceScan, TriangleMesh};

/// Camera-frame z of the undeformed sensor surface.
pub const GEL_PLANE: f64 = 0.0;

/// Default depth above which a pixel counts as in contact (mm).
pub const CONTACT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Indentation volume per unit normal force, mm³/N.
    pub k_n: f64,
    /// Shear displacement per unit shear force, mm/N.
    pub k_s: f64,
    /// Gap a physics engine leaves between touching bodies, mm.
    pub collision_margin: f64,
    /// Maximum indentation, mm.
    pub gel_thickness: f64,
    /// Shear displacement saturates here, mm.
    pub max_shear: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            k_n: 40.0,
            k_s: 0.2,
            collision_margin: 0.0,
            gel_thickness: 4.0,
            max_shear: 2.0,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k_n > 0.0
            && self.k_s > 0.0
            && self.gel_thickness > 0.0
            && self.collision_margin >= 0.0
            && self.max_shear > 0.0
            && [self.k_n, self.k_s, self.gel_thickness, self.collision_margin, self.max_shear]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("contact parameters out of range: {self:?}")))
        }
    }

    /// Camera whose near plane is the back face of the gel.
    pub fn sensor_camera(&self, base: &DepthCamera) -> DepthCamera {
        DepthCamera {
            near: GEL_PLANE - self.gel_thickness,
            ..*base
        }
    }
}

/// Forces on one finger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactState {
    /// N
    pub normal_force: f64,
    /// N, magnitude
    pub shear_force: f64,
    /// Unit vector in the sensor plane (camera x, y).
    pub shear_dir: [f64; 2],
    /// Demanded shear exceeded the friction cone and was capped.
    pub slipping: bool,
    /// Object pose in the sensor camera frame.
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearDisplacement {
    /// mm
    pub displacement: f64,
    pub saturated: bool,
}

pub fn volume_from_force(normal_force: f64, params: &ContactParams) -> f64 {
    debug_assert!(normal_force >= 0.0);
    params.k_n * normal_force
}

pub fn shear_from_force(shear_force: f64, params: &ContactParams) -> ShearDisplacement {
    debug_assert!(shear_force >= 0.0);
    let displacement = params.k_s * shear_force;
    if displacement > params.max_shear {
        ShearDisplacement {
            displacement: params.max_shear,
            saturated: true,
        }
    } else {
        ShearDisplacement {
            displacement,
            saturated: false,
        }
    }
}

/// Sum of per-pixel depth times pixel area, mm³.
pub fn integrate_volume(map: &HeightMap) -> f64 {
    let area = map.pixel_pitch() * map.pixel_pitch();
    map.depths().iter().sum::<f64>() * area
}

/// Area of pixels deeper than `threshold`, mm².
pub fn contact_area(map: &HeightMap, threshold: f64) -> f64 {
    let count = map.depths().iter().filter(|&&d| d > threshold).count();
    count as f64 * map.pixel_pitch() * map.pixel_pitch()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative volume tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Floor on the tolerance scale so a zero target is well defined, mm³.
    pub epsilon: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 60,
            epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSolution {
    /// Object translation along the contact normal past the touching pose, mm.
    pub indentation_depth: f64,
    /// mm
    pub shear_displacement: f64,
    pub contact_map: HeightMap,
    /// `integrate_volume(&contact_map)`, mm³.
    pub achieved_volume: f64,
    pub iterations: usize,
}

/// Finds the indentation depth whose rendered contact map integrates to `target_volume`.
///
/// `pose` places the object touching the sensor (up to the collision
/// margin). The search runs over `[0, gel_thickness]`; volume is
/// monotone in depth, so bisection brackets the answer.
pub fn solve_indentation(
    mesh: &TriangleMesh,
    pose: &Pose,
    camera: &DepthCamera,
    target_volume: f64,
    params: &ContactParams,
    options: &SolveOptions,
) -> Result<ContactSolution> {
    params.validate()?;
    camera.validate()?;
    if !(options.tol > 0.0 && options.tol <= 0.1) {
        return Err(Error::InvalidInput(format!("tolerance {} outside (0, 0.1]", options.tol)));
    }
    if !(target_volume >= 0.0 && target_volume.is_finite()) {
        return Err(Error::InvalidInput(format!("target volume {target_volume}")));
    }
    let scan = SurfaceScan::capture(mesh, pose, camera);
    let max_depth = params.gel_thickness.min(GEL_PLANE - camera.near);
    let margin = params.collision_margin;
    let map_at = |depth: f64| scan.height_map(GEL_PLANE, depth + margin, max_depth);
    let solution = |depth: f64, map: HeightMap, iterations: usize| ContactSolution {
        indentation_depth: depth,
        shear_displacement: 0.0,
        achieved_volume: integrate_volume(&map),
        contact_map: map,
        iterations,
    };

    if target_volume == 0.0 {
        return Ok(solution(0.0, map_at(0.0), 0));
    }
    if !scan.any_hit() {
        return Err(Error::NoContact);
    }
    let allowed = options.tol * target_volume.max(options.epsilon);
    let reachable = integrate_volume(&map_at(params.gel_thickness));
    if target_volume - reachable > allowed {
        return Err(Error::VolumeUnreachable {
            target: target_volume,
            max: reachable,
        });
    }

    let (mut lo, mut hi) = (0.0, params.gel_thickness);
    let mut best = (f64::INFINITY, hi);
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let volume = integrate_volume(&map_at(mid));
        let err = (volume - target_volume).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if err <= allowed {
            break;
        }
        if volume < target_volume {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(solution(best.1, map_at(best.1), iterations))
}

/// Pose centring the mesh's bounding box on the optical axis with its
/// nearest visible point one collision margin in front of the gel.
pub fn touching_pose(mesh: &TriangleMesh, camera: &DepthCamera, params: &ContactParams) -> Result<Pose> {
    let bounds = mesh.bounds();
    let center = bounds.center();
    let to_camera = Pose::from_translation(Vector3::new(-center.x, -center.y, 0.0));
    let probe = DepthCamera {
        near: -(bounds.extent().norm() + params.gel_thickness),
        view: Pose::identity(),
        ..*camera
    };
    let lateral = camera.view.compose(&to_camera);
    let closest = SurfaceScan::capture(mesh, &to_camera, &probe).closest().ok_or(Error::NoContact)?;
    let shift = Vector3::new(0.0, 0.0, params.collision_margin - closest);
    Ok(lateral.translated(camera.view.transform_vector(&shift)))
}

/// Renders the contact map after pressing the object `indentation_depth`
/// into the gel and sliding it `shear_displacement` along `shear_dir`.
///
/// The commanded depth is geometric: the collision margin separating the
/// given pose from the gel is closed first.
pub fn contact_map(
    mesh: &TriangleMesh,
    pose: &Pose,
    camera: &DepthCamera,
    indentation_depth: f64,
    shear_displacement: f64,
    shear_dir: [f64; 2],
    params: &ContactParams,
) -> HeightMap {
    let local = Vector3::new(
        shear_displacement * shear_dir[0],
        shear_displacement * shear_dir[1],
        -(indentation_depth + params.collision_margin),
    );
    let moved = pose.translated(camera.view.transform_vector(&local));
    let thickness = params.gel_thickness;
    render_depth(mesh, &moved, camera, GEL_PLANE).map_depths(|d| d.min(thickness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use nalgebra::Point3;
    use std::f64::consts::PI;

    fn touching_sphere(radius: f64) -> (TriangleMesh, Pose) {
        (
            primitives::icosphere(radius, 5),
            Pose::from_translation(Vector3::new(0.0, 0.0, radius)),
        )
    }

    #[test]
    fn touching_pose_closes_the_gap() {
        let params = ContactParams {
            collision_margin: 0.2,
            ..ContactParams::default()
        };
        let camera = params.sensor_camera(&DepthCamera::default());
        let mesh = primitives::cuboid(Vector3::new(4.0, 4.0, 30.0), Point3::new(7.0, -3.0, 100.0));
        let pose = touching_pose(&mesh, &camera, &params).unwrap();
        let placed = pose.transform_point(&Point3::new(7.0, -3.0, 85.0));
        assert!((placed - Point3::new(0.0, 0.0, 0.2)).norm() < 1e-9);
    }

    #[test]
    fn linear_maps() {
        let p = ContactParams::default();
        assert_eq!(volume_from_force(2.0, &p), 80.0);
        assert_eq!(volume_from_force(0.0, &p), 0.0);
        let s = shear_from_force(3.0, &p);
        assert!((s.displacement - 0.6).abs() < 1e-12 && !s.saturated);
        assert_eq!(shear_from_force(0.0, &p).displacement, 0.0);
        let s = shear_from_force(20.0, &p);
        assert_eq!(s.displacement, 2.0);
        assert!(s.saturated);
    }

    #[test]
    fn constant_field_volume() {
        let map = HeightMap::new(100, 100, 0.1, vec![1.0; 10_000]).unwrap();
        assert!((integrate_volume(&map) - 100.0).abs() < 1e-9);
        assert_eq!(integrate_volume(&HeightMap::zeros(10, 10, 0.1)), 0.0);
        assert_eq!(contact_area(&HeightMap::zeros(10, 10, 0.1), CONTACT_THRESHOLD), 0.0);
    }

    #[test]
    fn sphere_cap_volume_and_area() {
        let camera = DepthCamera::default();
        let (mesh, pose) = touching_sphere(5.0);
        let map = contact_map(&mesh, &pose, &camera, 1.0, 0.0, [1.0, 0.0], &ContactParams::default());
        let v = integrate_volume(&map);
        let analytic = PI * 1.0 * (15.0 - 1.0) / 3.0;
        assert!((v - analytic).abs() / analytic < 0.02, "{v} vs {analytic}");
        let area = contact_area(&map, CONTACT_THRESHOLD);
        let footprint = PI * 9.0;
        assert!((area - footprint).abs() / footprint < 0.03, "{area} vs {footprint}");
    }

    #[test]
    fn zero_target() {
        let (mesh, pose) = touching_sphere(5.0);
        let s = solve_indentation(
            &mesh,
            &pose,
            &ContactParams::default().sensor_camera(&DepthCamera::default()),
            0.0,
            &ContactParams::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(s.indentation_depth, 0.0);
        assert_eq!(s.contact_map.max_depth(), 0.0);
    }

    #[test]
    fn slab_depth_is_exact() {
        let params = ContactParams::default();
        let camera = params.sensor_camera(&DepthCamera::default());
        let slab = primitives::cuboid(Vector3::new(10.0, 10.0, 5.0), Point3::new(0.0, 0.0, 2.5));
        let s = solve_indentation(&slab, &Pose::identity(), &camera, 50.0, &params, &SolveOptions::default()).unwrap();
        // footprint is quantized to whole pixels: 167 x 167 at 0.06 mm
        let area = contact_area(&s.contact_map, 0.0);
        assert!((s.indentation_depth - 50.0 / area).abs() < 1e-3 * 50.0 / area);
        assert!((s.indentation_depth - 0.5).abs() < 0.01);
        assert!((s.achieved_volume - 50.0).abs() <= 0.05);
    }

    #[test]
    fn unreachable_and_no_contact() {
        let params = ContactParams::default();
        let camera = params.sensor_camera(&DepthCamera::default());
        let (mesh, pose) = touching_sphere(2.5);
        assert!(matches!(
            solve_indentation(&mesh, &pose, &camera, 400.0, &params, &SolveOptions::default()),
            Err(Error::VolumeUnreachable { .. })
        ));
        let far = pose.translated(Vector3::new(100.0, 0.0, 0.0));
        assert!(matches!(
            solve_indentation(&mesh, &far, &camera, 10.0, &params, &SolveOptions::default()),
            Err(Error::NoContact)
        ));
        let bad = SolveOptions { tol: 0.5, ..Default::default() };
        assert!(solve_indentation(&mesh, &pose, &camera, 10.0, &params, &bad).is_err());
    }

    #[test]
    fn margin_is_compensated() {
        let params = ContactParams {
            collision_margin: 0.5,
            ..Default::default()
        };
        let camera = DepthCamera::default();
        let (mesh, pose) = touching_sphere(5.0);
        let gapped = pose.translated(Vector3::new(0.0, 0.0, 0.5));
        let map = contact_map(&mesh, &gapped, &camera, 1.0, 0.0, [1.0, 0.0], &params);
        assert!((map.max_depth() - 1.0).abs() < 0.01);
        let reference = contact_map(&mesh, &pose, &camera, 1.0, 0.0, [1.0, 0.0], &ContactParams::default());
        let plain = render_depth(&mesh, &pose.translated(Vector3::new(0.0, 0.0, -1.0)), &camera, GEL_PLANE);
        assert_eq!(reference, plain);
    }

    #[test]
    fn shear_moves_centroid() {
        let params = ContactParams::default();
        let camera = DepthCamera::default();
        let (mesh, pose) = touching_sphere(5.0);
        let still = contact_map(&mesh, &pose, &camera, 1.0, 0.0, [1.0, 0.0], &params);
        let sheared = contact_map(&mesh, &pose, &camera, 1.0, 0.6, [1.0, 0.0], &params);
        let (x0, y0) = still.footprint_centroid(0.0).unwrap();
        let (x1, y1) = sheared.footprint_centroid(0.0).unwrap();
        assert!((x1 - x0 - 0.6).abs() < 1e-6, "{}", x1 - x0);
        assert!((y1 - y0).abs() < 1e-9);
    }
}
