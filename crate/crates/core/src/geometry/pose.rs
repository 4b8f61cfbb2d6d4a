use nalgebra::{Matrix3, Point3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Rigid transform `v -> R v + t`, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite entry".into()));
        }
        let gram = rotation * rotation.transpose();
        if (gram - Matrix3::identity()).abs().max() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose("rotation is not orthonormal".into()));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidPose("rotation determinant is not +1".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation of `angle` radians about `axis` through the origin.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        Self {
            rotation: *rotation.matrix(),
            translation: Vector3::zeros(),
        }
    }

    /// Frame whose local z axis points along `forward` and local x axis
    /// along the component of `right` orthogonal to it, located at `origin`.
    pub fn look_along(origin: Point3<f64>, forward: Vector3<f64>, right: Vector3<f64>) -> Result<Self> {
        let z = forward
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidPose("zero forward vector".into()))?;
        let x = (right - z * right.dot(&z))
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidPose("right vector parallel to forward".into()))?;
        let y = z.cross(&x);
        Ok(Self {
            rotation: Matrix3::from_columns(&[x, y, z]),
            translation: origin.coords,
        })
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Pre-translates this pose in its output frame.
    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self {
            rotation: self.rotation,
            translation: self.translation + offset,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rejects_non_orthonormal() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(m, Vector3::zeros()).is_err());
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let p = Pose::from_axis_angle(Vector3::new(1.0, 2.0, 3.0), 0.7).translated(Vector3::new(4.0, -1.0, 2.0));
        let q = p.compose(&p.inverse());
        assert!((q.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(q.translation.norm() < 1e-12);
    }

    #[test]
    fn look_along_is_right_handed() {
        let p = Pose::look_along(Point3::origin(), Vector3::new(0.0, -1.0, 0.0), Vector3::x()).unwrap();
        let y = p.transform_vector(&Vector3::y());
        assert!((y - Vector3::z()).norm() < 1e-12);
        assert!(Pose::new(*p.rotation(), *p.translation()).is_ok());
        let r = Pose::from_axis_angle(Vector3::z(), FRAC_PI_2);
        assert!((r.rotation().determinant() - 1.0).abs() < 1e-12);
    }
}
