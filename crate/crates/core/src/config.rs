//! Framework configuration file (`--config`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contact::{ContactParams, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::DepthCamera;
use crate::grasp::GraspThresholds;
use crate::optics::MarkerField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorSpec {
    pub width: u32,
    pub height: u32,
    /// mm per pixel
    pub pixel_pitch: f64,
    /// Gel smoothing, pixels.
    pub sigma: f64,
    pub marker_cols: u32,
    pub marker_rows: u32,
    /// pixels
    pub marker_radius: f64,
    pub direction_bins: usize,
    pub magnitude_bins: usize,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            pixel_pitch: 0.06,
            sigma: 2.0,
            marker_cols: 12,
            marker_rows: 9,
            marker_radius: 3.0,
            direction_bins: 64,
            magnitude_bins: 32,
        }
    }
}

impl SensorSpec {
    pub fn high_resolution() -> Self {
        Self {
            width: 640,
            height: 480,
            pixel_pitch: 0.03,
            marker_radius: 6.0,
            ..Self::default()
        }
    }

    pub fn camera(&self, params: &ContactParams) -> DepthCamera {
        params.sensor_camera(&DepthCamera {
            width: self.width,
            height: self.height,
            pixel_pitch: self.pixel_pitch,
            ..DepthCamera::default()
        })
    }

    pub fn marker_field(&self) -> Result<MarkerField> {
        MarkerField::grid(self.width, self.height, self.marker_cols, self.marker_rows, self.marker_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameworkConfig {
    pub sensor: SensorSpec,
    pub contact: ContactParams,
    pub thresholds: GraspThresholds,
    /// Relative volume tolerance of the indentation solver.
    pub solver_tol: f64,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        Self {
            sensor: SensorSpec::default(),
            contact: ContactParams::default(),
            thresholds: GraspThresholds::default(),
            solver_tol: SolveOptions::default().tol,
        }
    }
}

impl FrameworkConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.contact.validate()?;
        self.thresholds.validate()?;
        self.sensor.camera(&self.contact).validate()?;
        if !(self.solver_tol > 0.0 && self.solver_tol <= 0.1) {
            return Err(Error::InvalidInput(format!("solver_tol {}", self.solver_tol)));
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.solver_tol,
            ..SolveOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_uses_defaults() {
        let c: FrameworkConfig = serde_json::from_str(r#"{"contact": {"k_n": 55.0}}"#).unwrap();
        assert_eq!(c.contact.k_n, 55.0);
        assert_eq!(c.contact.k_s, 0.2);
        assert_eq!(c.sensor.width, 320);
        assert!(c.validate().is_ok());
        let bad: FrameworkConfig = serde_json::from_str(r#"{"contact": {"k_n": -1.0}}"#).unwrap();
        assert!(bad.validate().is_err());
    }
}
