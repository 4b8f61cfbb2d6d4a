use std::sync::Arc;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

/// m/s²
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub name: String,
    /// Object frame equals the world frame: z up, resting on the table at z = 0.
    pub mesh: Arc<TriangleMesh>,
    /// kg
    pub mass: f64,
    /// mm, mesh frame
    pub center_of_mass: Point3<f64>,
    pub friction: f64,
}

impl ObjectModel {
    pub fn new(
        name: impl Into<String>,
        mesh: TriangleMesh,
        mass: f64,
        center_of_mass: Point3<f64>,
        friction: f64,
    ) -> Result<Self> {
        let object = Self {
            name: name.into(),
            mesh: Arc::new(mesh),
            mass,
            center_of_mass,
            friction,
        };
        object.validate()?;
        Ok(object)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidInput(format!("mass {} kg", self.mass)));
        }
        if !(0.0..=2.0).contains(&self.friction) {
            return Err(Error::InvalidInput(format!("friction {} outside [0, 2]", self.friction)));
        }
        if !self.mesh.bounds().contains(&self.center_of_mass) {
            return Err(Error::InvalidInput(format!(
                "center of mass {:?} outside the mesh bounds",
                self.center_of_mass
            )));
        }
        Ok(())
    }

    pub fn with_friction(&self, friction: f64) -> Self {
        Self {
            friction,
            ..self.clone()
        }
    }

    pub fn with_added_mass(&self, added: f64) -> Self {
        Self {
            mass: self.mass + added,
            ..self.clone()
        }
    }
}

/// Grasp force (N, per finger), location in the table plane (mm) and height (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspConfig {
    pub force: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GraspConfig {
    pub fn new(force: f64, x: f64, y: f64, z: f64) -> Self {
        Self { force, x, y, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspThresholds {
    /// mm
    pub lift_height: f64,
    /// Relative translation counted as a drop, mm.
    pub trans_fail: f64,
    /// Relative rotation counted as a failure, rad.
    pub rot_fail: f64,
    /// s
    pub record_duration: f64,
    /// Hz
    pub frame_rate: f64,
    /// mm/s
    pub lift_speed: f64,
}

impl Default for GraspThresholds {
    fn default() -> Self {
        Self {
            lift_height: 180.0,
            trans_fail: 150.0,
            rot_fail: 0.1,
            record_duration: 3.0,
            frame_rate: 10.0,
            lift_speed: 100.0,
        }
    }
}

impl GraspThresholds {
    pub fn validate(&self) -> Result<()> {
        let values = [
            self.lift_height,
            self.trans_fail,
            self.rot_fail,
            self.record_duration,
            self.frame_rate,
            self.lift_speed,
        ];
        if values.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("grasp thresholds must be positive: {self:?}")))
        }
    }

    pub fn frame_count(&self) -> usize {
        (self.record_duration * self.frame_rate).round() as usize
    }

    /// Simulated time: the lift plus the hold, whichever ends later.
    pub fn horizon(&self) -> f64 {
        (self.lift_height / self.lift_speed).max(self.record_duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspLabel {
    Success,
    TranslationalSlip,
    RotationalSlip,
}

impl GraspLabel {
    pub fn is_success(self) -> bool {
        self == GraspLabel::Success
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub label: GraspLabel,
    /// mm
    pub final_translation: f64,
    /// rad
    pub final_rotation: f64,
    /// s
    pub fail_time: Option<f64>,
}
