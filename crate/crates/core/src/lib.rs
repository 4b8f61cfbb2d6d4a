//! Tactile sensing simulation for parallel-jaw grasping.
//!
//! Contact forces are mapped to gel indentation through linear
//! force/volume and force/shear coefficients, the indentation is
//! depth-rendered from behind the sensor surface, and a calibrated
//! gradient lookup table turns the resulting height map into an RGB
//! tactile image. A quasi-static slip model labels grasp outcomes, a grid
//! search calibrates friction against reference outcome grids, and the
//! dataset module sweeps grasp configurations into labeled episodes.

pub mod calibration;
pub mod config;
pub mod contact;
pub mod dataset;
mod error;
pub mod geometry;
pub mod grasp;
pub mod optics;

pub use error::{Error, Result};
