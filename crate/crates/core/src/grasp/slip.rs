//! Constant-acceleration slip during the lift.
//!
//! Translation: the object slides when its weight exceeds the two-finger
//! friction capacity, `a = g - 2 μ F / m`. Rotation: gravity torque about
//! the grasp axis against the soft-finger torsional limit
//! `(2/3) μ F r_eq` per finger, with `r_eq = sqrt(area / π)`.

use serde::{Deserialize, Serialize};

use super::model::{GraspConfig, GraspLabel, GraspOutcome, GraspThresholds, ObjectModel, GRAVITY};

/// s
pub const TIME_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipParameters {
    /// Relative translational acceleration, mm/s².
    pub translational_accel: f64,
    /// Relative angular acceleration, rad/s².
    pub angular_accel: f64,
    /// Horizontal lever arm from the grasp axis to the centre of mass, mm.
    pub lever_arm: f64,
    /// N·m
    pub gravity_torque: f64,
    /// N·m, both fingers
    pub torsional_capacity: f64,
    /// Sign of the rotation about world +y that lowers the centre of mass.
    pub rotation_sign: f64,
}

impl SlipParameters {
    pub fn new(object: &ObjectModel, config: &GraspConfig, contact_areas: [f64; 2]) -> Self {
        let m = object.mass;
        let mu = object.friction;
        let f = config.force;
        let weight = m * GRAVITY;
        let translational_accel = if weight > 2.0 * mu * f {
            (GRAVITY - 2.0 * mu * f / m) * 1e3
        } else {
            0.0
        };

        let offset = object.center_of_mass.x - config.x;
        let lever = offset.abs() * 1e-3;
        let extent = object.mesh.bounds().extent() * 1e-3;
        let gyration2 = (extent.x * extent.x + extent.z * extent.z) / 12.0;
        let gravity_torque = weight * lever;
        let torsional_capacity: f64 = contact_areas
            .iter()
            .map(|&area| {
                let r_eq = (area / std::f64::consts::PI).sqrt() * 1e-3;
                2.0 / 3.0 * mu * f * r_eq
            })
            .sum();
        let angular_accel = if gravity_torque > torsional_capacity {
            (gravity_torque - torsional_capacity) / (m * (lever * lever + gyration2))
        } else {
            0.0
        };
        Self {
            translational_accel,
            angular_accel,
            lever_arm: offset.abs(),
            gravity_torque,
            torsional_capacity,
            rotation_sign: if offset >= 0.0 { 1.0 } else { -1.0 },
        }
    }
}

/// Relative object motion in the gripper, sampled every [`TIME_STEP`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlipTrajectory {
    pub params: SlipParameters,
    pub times: Vec<f64>,
    /// mm
    pub translation: Vec<f64>,
    /// rad
    pub rotation: Vec<f64>,
    translation_rate: Vec<f64>,
    rotation_rate: Vec<f64>,
}

impl SlipTrajectory {
    /// State at the sample nearest to `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let k = ((t / TIME_STEP).round() as usize).min(self.times.len() - 1);
        (self.translation[k], self.rotation[k])
    }

    pub fn final_state(&self) -> (f64, f64) {
        (*self.translation.last().unwrap(), *self.rotation.last().unwrap())
    }

    /// First step index reaching `threshold` and the exact crossing time inside that step.
    fn crossing(values: &[f64], rates: &[f64], times: &[f64], accel: f64, threshold: f64) -> Option<(usize, f64)> {
        let k = values.iter().position(|&v| v >= threshold)?;
        if k == 0 {
            return Some((0, times[0]));
        }
        let (x0, v0) = (values[k - 1], rates[k - 1]);
        let gap = threshold - x0;
        let tau = if accel > 0.0 {
            (-v0 + (v0 * v0 + 2.0 * accel * gap).sqrt()) / accel
        } else if v0 > 0.0 {
            gap / v0
        } else {
            times[k] - times[k - 1]
        };
        Some((k, times[k - 1] + tau))
    }
}

/// Steps the slip model over the lift and hold; accumulation stops once
/// both failure thresholds have been crossed.
pub fn slip_dynamics(
    object: &ObjectModel,
    config: &GraspConfig,
    thresholds: &GraspThresholds,
    contact_areas: [f64; 2],
) -> SlipTrajectory {
    let params = SlipParameters::new(object, config, contact_areas);
    let steps = (thresholds.horizon() / TIME_STEP).round() as usize;
    let mut traj = SlipTrajectory {
        params,
        times: Vec::with_capacity(steps + 1),
        translation: Vec::with_capacity(steps + 1),
        rotation: Vec::with_capacity(steps + 1),
        translation_rate: Vec::with_capacity(steps + 1),
        rotation_rate: Vec::with_capacity(steps + 1),
    };
    let (mut x, mut v, mut th, mut w) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (a, alpha) = (params.translational_accel, params.angular_accel);
    let dt = TIME_STEP;
    for k in 0..=steps {
        traj.times.push(k as f64 * dt);
        traj.translation.push(x);
        traj.rotation.push(th);
        traj.translation_rate.push(v);
        traj.rotation_rate.push(w);
        let done = x >= thresholds.trans_fail && th >= thresholds.rot_fail;
        if !done {
            x += v * dt + 0.5 * a * dt * dt;
            v += a * dt;
            th += w * dt + 0.5 * alpha * dt * dt;
            w += alpha * dt;
        }
    }
    traj
}

/// Whichever threshold is crossed first decides the failure mode; a tie
/// within one step counts as translational.
pub fn label_outcome(trajectory: &SlipTrajectory, thresholds: &GraspThresholds) -> GraspOutcome {
    let t = &trajectory.times;
    let trans = SlipTrajectory::crossing(
        &trajectory.translation,
        &trajectory.translation_rate,
        t,
        trajectory.params.translational_accel,
        thresholds.trans_fail,
    );
    let rot = SlipTrajectory::crossing(
        &trajectory.rotation,
        &trajectory.rotation_rate,
        t,
        trajectory.params.angular_accel,
        thresholds.rot_fail,
    );
    let (label, fail_time) = match (trans, rot) {
        (None, None) => (GraspLabel::Success, None),
        (Some((_, tt)), None) => (GraspLabel::TranslationalSlip, Some(tt)),
        (None, Some((_, tr))) => (GraspLabel::RotationalSlip, Some(tr)),
        (Some((kt, tt)), Some((kr, tr))) => {
            if kt <= kr {
                (GraspLabel::TranslationalSlip, Some(tt))
            } else {
                (GraspLabel::RotationalSlip, Some(tr))
            }
        }
    };
    let (final_translation, final_rotation) = trajectory.final_state();
    GraspOutcome {
        label,
        final_translation,
        final_rotation,
        fail_time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use nalgebra::{Point3, Vector3};

    fn block(mass: f64, friction: f64, com_x: f64) -> ObjectModel {
        let mesh = primitives::cuboid(Vector3::new(120.0, 40.0, 40.0), Point3::new(0.0, 0.0, 20.0));
        ObjectModel::new("block", mesh, mass, Point3::new(com_x, 0.0, 20.0), friction).unwrap()
    }

    fn trajectory(translation: f64, rotation: f64) -> SlipTrajectory {
        SlipTrajectory {
            params: SlipParameters {
                translational_accel: 0.0,
                angular_accel: 0.0,
                lever_arm: 0.0,
                gravity_torque: 0.0,
                torsional_capacity: 0.0,
                rotation_sign: 1.0,
            },
            times: vec![0.0, 1.0],
            translation: vec![0.0, translation],
            rotation: vec![0.0, rotation],
            translation_rate: vec![0.0, 0.0],
            rotation_rate: vec![0.0, 0.0],
        }
    }

    #[test]
    fn label_thresholds() {
        let th = GraspThresholds::default();
        assert_eq!(label_outcome(&trajectory(160.0, 0.02), &th).label, GraspLabel::TranslationalSlip);
        assert_eq!(label_outcome(&trajectory(10.0, 0.12), &th).label, GraspLabel::RotationalSlip);
        assert_eq!(label_outcome(&trajectory(0.0, 0.0), &th).label, GraspLabel::Success);
        assert_eq!(label_outcome(&trajectory(200.0, 0.5), &th).label, GraspLabel::TranslationalSlip);
    }

    #[test]
    fn force_balance_holds() {
        let object = block(0.2, 0.5, 0.0);
        let traj = slip_dynamics(&object, &GraspConfig::new(5.0, 0.0, 0.0, 20.0), &GraspThresholds::default(), [100.0; 2]);
        let out = label_outcome(&traj, &GraspThresholds::default());
        assert_eq!(out.label, GraspLabel::Success);
        assert_eq!(out.final_translation, 0.0);
        assert_eq!(out.final_rotation, 0.0);
        assert_eq!(out.fail_time, None);
    }

    #[test]
    fn translational_slip_time() {
        let object = block(0.5, 0.3, 0.0);
        let config = GraspConfig::new(5.0, 0.0, 0.0, 20.0);
        let traj = slip_dynamics(&object, &config, &GraspThresholds::default(), [100.0; 2]);
        assert!((traj.params.translational_accel - 3810.0).abs() < 1e-9);
        let out = label_outcome(&traj, &GraspThresholds::default());
        assert_eq!(out.label, GraspLabel::TranslationalSlip);
        let closed_form = (2.0f64 * 0.15 / 3.81).sqrt();
        assert!((out.fail_time.unwrap() - closed_form).abs() < 1e-9);
        // steps hit the closed-form kinematics exactly at sample times
        let (x, _) = traj.at(0.2);
        assert!((x - 0.5 * 3810.0 * 0.04).abs() < 1e-6);
    }

    #[test]
    fn rotational_slip() {
        let object = block(0.2, 0.5, 50.0);
        let config = GraspConfig::new(5.0, 0.0, 0.0, 20.0);
        let area = std::f64::consts::PI * 9.0;
        let traj = slip_dynamics(&object, &config, &GraspThresholds::default(), [area; 2]);
        let p = traj.params;
        assert!(p.gravity_torque > p.torsional_capacity);
        assert!((p.torsional_capacity - 2.0 * 2.0 / 3.0 * 0.5 * 5.0 * 0.003).abs() < 1e-12);
        let out = label_outcome(&traj, &GraspThresholds::default());
        assert_eq!(out.label, GraspLabel::RotationalSlip);
        let closed_form = (2.0 * 0.1 / p.angular_accel).sqrt();
        assert!((out.fail_time.unwrap() - closed_form).abs() / closed_form < 1e-9);
        assert!(out.final_rotation >= 0.1);
    }
}
