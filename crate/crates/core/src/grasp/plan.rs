use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{GraspConfig, ObjectModel, GRAVITY};
use crate::contact::ContactState;
use crate::error::{Error, Result};
use crate::geometry::{Bvh, Pose, Ray};

/// Fingers close along the world y axis.
pub const CLOSING_AXIS: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspContact {
    pub point: Point3<f64>,
    /// Direction the finger pushes into the object.
    pub normal: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPlan {
    /// Finger on the +y side first.
    pub contacts: [GraspContact; 2],
    /// mm
    pub grip_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraspPhase {
    Grasped,
    Lifting,
}

/// Casts opposing rays along the closing axis through `(x, z)`; the first
/// hit on each side is where that finger lands.
pub fn plan_grasp(object: &ObjectModel, config: &GraspConfig) -> Result<GraspPlan> {
    plan_with(&Bvh::build(&object.mesh), config)
}

pub(crate) fn plan_with(bvh: &Bvh, config: &GraspConfig) -> Result<GraspPlan> {
    if !(config.force > 0.0 && config.force.is_finite()) {
        return Err(Error::InvalidInput(format!("grasp force {}", config.force)));
    }
    let bounds = bvh.bounds();
    if config.z < bounds.min.z || config.z > bounds.max.z {
        return Err(Error::InvalidInput(format!(
            "grasp height {} outside the object's extent [{}, {}]",
            config.z, bounds.min.z, bounds.max.z
        )));
    }
    let reach = bounds.extent().y + 2.0;
    let cast = |start_y: f64, dir: Vector3<f64>, side: &'static str| {
        let ray = Ray::new(Point3::new(config.x, start_y, config.z), dir);
        bvh.nearest_hit(&ray, reach + 2.0)
            .map(|hit| GraspContact {
                point: ray.at(hit.t),
                normal: dir,
            })
            .ok_or(Error::NoGraspContact(side))
    };
    let upper = cast(bounds.max.y + 1.0, -CLOSING_AXIS, "+y")?;
    let lower = cast(bounds.min.y - 1.0, CLOSING_AXIS, "-y")?;
    Ok(GraspPlan {
        grip_width: (upper.point - lower.point).norm(),
        contacts: [upper, lower],
    })
}

/// Sensor camera frame for a finger: z along the push direction, y up, origin at the contact.
pub fn sensor_view(contact: &GraspContact) -> Pose {
    let right = Vector3::z().cross(&contact.normal);
    Pose::look_along(contact.point, contact.normal, right).expect("closing axis is horizontal")
}

/// Quasi-static finger loads. While lifting each finger carries half the
/// weight in shear, up to the Coulomb limit `μ F_n`.
pub fn contact_forces(object: &ObjectModel, config: &GraspConfig, plan: &GraspPlan, phase: GraspPhase) -> [ContactState; 2] {
    let demand = match phase {
        GraspPhase::Grasped => 0.0,
        GraspPhase::Lifting => object.mass * GRAVITY / 2.0,
    };
    let capacity = object.friction * config.force;
    plan.contacts.map(|c| ContactState {
        normal_force: config.force,
        shear_force: demand.min(capacity),
        shear_dir: [0.0, -1.0],
        slipping: demand > capacity,
        pose: sensor_view(&c).inverse(),
    })
}
