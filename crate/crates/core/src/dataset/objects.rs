//! Built-in test objects and object references in sweep specs.

use std::path::PathBuf;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{load_mesh, primitives, transform_mesh, Pose, TriangleMesh};
use crate::grasp::ObjectModel;

pub const BUILTIN_OBJECTS: [&str; 4] = ["box", "sphere", "cylinder", "l_bracket"];

/// Friction of the built-in objects.
pub const DEFAULT_FRICTION: f64 = 0.45;

/// Objects rest on the table (z = 0) with their long horizontal axis along x.
pub fn builtin_object(name: &str) -> Result<ObjectModel> {
    let (mesh, mass, com) = match name {
        "box" => (
            primitives::cuboid(Vector3::new(60.0, 40.0, 100.0), Point3::new(0.0, 0.0, 50.0)),
            0.69,
            Point3::new(0.0, 0.0, 50.0),
        ),
        "sphere" => (
            transform_mesh(
                &primitives::icosphere(30.0, 4),
                &Pose::from_translation(Vector3::new(0.0, 0.0, 30.0)),
            ),
            0.6,
            Point3::new(0.0, 0.0, 30.0),
        ),
        "cylinder" => (primitives::cylinder(25.0, 100.0, 64), 0.65, Point3::new(0.0, 0.0, 50.0)),
        "l_bracket" => {
            // 120×30×20 base bar with a 20×30×80 post standing on its +x end
            let bar = primitives::cuboid(Vector3::new(120.0, 30.0, 20.0), Point3::new(0.0, 0.0, 10.0));
            let post = primitives::cuboid(Vector3::new(20.0, 30.0, 80.0), Point3::new(50.0, 0.0, 60.0));
            (TriangleMesh::merge(&[bar, post])?, 0.3, Point3::new(20.0, 0.0, 30.0))
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown object {other:?}, expected one of {BUILTIN_OBJECTS:?}"
            )))
        }
    };
    ObjectModel::new(name, mesh, mass, com, DEFAULT_FRICTION)
}

/// A mesh file with its physical properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshObject {
    pub name: String,
    pub path: PathBuf,
    /// File units to mm.
    #[serde(default = "unit_scale")]
    pub scale: f64,
    /// kg
    pub mass: f64,
    /// mm; defaults to the bounding-box centre.
    #[serde(default)]
    pub center_of_mass: Option<[f64; 3]>,
    #[serde(default = "default_friction")]
    pub friction: f64,
}

fn unit_scale() -> f64 {
    1.0
}

fn default_friction() -> f64 {
    DEFAULT_FRICTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectRef {
    Builtin(String),
    Mesh(MeshObject),
}

impl ObjectRef {
    pub fn name(&self) -> &str {
        match self {
            ObjectRef::Builtin(name) => name,
            ObjectRef::Mesh(m) => &m.name,
        }
    }

    pub fn load(&self) -> Result<ObjectModel> {
        match self {
            ObjectRef::Builtin(name) => builtin_object(name),
            ObjectRef::Mesh(m) => {
                let mesh = load_mesh(&m.path, m.scale)?;
                let com = match m.center_of_mass {
                    Some([x, y, z]) => Point3::new(x, y, z),
                    None => mesh.bounds().center(),
                };
                ObjectModel::new(m.name.clone(), mesh, m.mass, com, m.friction)
            }
        }
    }
}

/// Moves the centre of mass `offset` mm along x.
pub fn shift_center_of_mass(object: &ObjectModel, offset: f64) -> Result<ObjectModel> {
    let mut shifted = object.clone();
    shifted.center_of_mass.x += offset;
    shifted.validate()?;
    Ok(shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load() {
        for name in BUILTIN_OBJECTS {
            let object = builtin_object(name).unwrap();
            assert_eq!(object.name, name);
            assert!(object.mesh.bounds().min.z.abs() < 1e-9, "{name} rests on the table");
        }
        assert!(builtin_object("teapot").is_err());
    }

    #[test]
    fn object_ref_json() {
        let r: ObjectRef = serde_json::from_str("\"box\"").unwrap();
        assert_eq!(r, ObjectRef::Builtin("box".into()));
        let r: ObjectRef = serde_json::from_str(r#"{"name": "cup", "path": "cup.stl", "mass": 0.1}"#).unwrap();
        let ObjectRef::Mesh(m) = r else { panic!() };
        assert_eq!(m.scale, 1.0);
        assert_eq!(m.friction, DEFAULT_FRICTION);
    }

    #[test]
    fn com_shift_stays_inside() {
        let bracket = builtin_object("l_bracket").unwrap();
        assert_eq!(shift_center_of_mass(&bracket, -30.0).unwrap().center_of_mass.x, -10.0);
        assert!(shift_center_of_mass(&bracket, 100.0).is_err());
    }
}
