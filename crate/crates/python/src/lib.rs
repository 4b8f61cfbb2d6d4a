//! Python bindings: `import pytacsim`.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::Point3;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use tacsim::calibration::{self, OutcomeGrid, PressSample};
use tacsim::config::FrameworkConfig;
use tacsim::contact::{self, ContactParams, CONTACT_THRESHOLD};
use tacsim::dataset::{self, SweepSpec};
use tacsim::geometry::{load_mesh, primitives, HeightMap};
use tacsim::grasp::{self, GraspConfig};

create_exception!(pytacsim, TacsimError, PyException);

fn err(e: tacsim::Error) -> PyErr {
    TacsimError::new_err(format!("{}: {e}", e.kind()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    TacsimError::new_err(format!("json: {e}"))
}

fn framework(config_json: Option<&str>) -> PyResult<FrameworkConfig> {
    match config_json {
        Some(text) => {
            let config: FrameworkConfig = serde_json::from_str(text).map_err(json_err)?;
            config.validate().map_err(err)?;
            Ok(config)
        }
        None => Ok(FrameworkConfig::default()),
    }
}

#[pyclass(name = "Object", frozen, skip_from_py_object)]
struct PyObject {
    inner: grasp::ObjectModel,
}

#[pymethods]
impl PyObject {
    /// One of "box", "sphere", "cylinder", "l_bracket".
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::builtin_object(name).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, mass, friction=dataset::DEFAULT_FRICTION, scale=1.0, center_of_mass=None, name=None))]
    fn from_mesh(
        path: PathBuf,
        mass: f64,
        friction: f64,
        scale: f64,
        center_of_mass: Option<[f64; 3]>,
        name: Option<String>,
    ) -> PyResult<Self> {
        let mesh = load_mesh(&path, scale).map_err(err)?;
        let com = match center_of_mass {
            Some([x, y, z]) => Point3::new(x, y, z),
            None => mesh.bounds().center(),
        };
        let name = name.unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        Ok(Self {
            inner: grasp::ObjectModel::new(name, mesh, mass, com, friction).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }

    #[getter]
    fn friction(&self) -> f64 {
        self.inner.friction
    }

    #[getter]
    fn center_of_mass(&self) -> [f64; 3] {
        self.inner.center_of_mass.coords.into()
    }

    /// (min, max) corners in mm.
    #[getter]
    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let b = self.inner.mesh.bounds();
        (b.min.coords.into(), b.max.coords.into())
    }

    fn with_friction(&self, friction: f64) -> PyResult<Self> {
        let inner = self.inner.with_friction(friction);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn with_added_mass(&self, mass: f64) -> PyResult<Self> {
        let inner = self.inner.with_added_mass(mass);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Object({:?}, mass={}, friction={})",
            self.inner.name, self.inner.mass, self.inner.friction
        )
    }
}

#[pyclass(name = "Outcome", frozen, get_all)]
struct PyOutcome {
    /// "success", "translational_slip" or "rotational_slip".
    label: String,
    final_translation: f64,
    final_rotation: f64,
    fail_time: Option<f64>,
}

impl From<grasp::GraspOutcome> for PyOutcome {
    fn from(o: grasp::GraspOutcome) -> Self {
        let label = serde_json::to_value(o.label).unwrap().as_str().unwrap().to_string();
        Self {
            label,
            final_translation: o.final_translation,
            final_rotation: o.final_rotation,
            fail_time: o.fail_time,
        }
    }
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn success(&self) -> bool {
        self.label == "success"
    }

    fn __repr__(&self) -> String {
        match self.fail_time {
            Some(t) => format!("Outcome({:?}, fail_time={t})", self.label),
            None => format!("Outcome({:?}, fail_time=None)", self.label),
        }
    }
}

#[pyclass(name = "Episode", frozen)]
struct PyEpisode {
    inner: grasp::GraspEpisode,
}

#[pymethods]
impl PyEpisode {
    #[getter]
    fn outcome(&self) -> PyOutcome {
        self.inner.outcome.into()
    }

    #[getter]
    fn timestamps(&self) -> Vec<f64> {
        self.inner.frames.iter().map(|f| f.timestamp).collect()
    }

    /// (height, width, 3)
    #[getter]
    fn frame_shape(&self) -> (u32, u32, u32) {
        let (w, h) = self.inner.frames[0].rgb.dimensions();
        (h, w, 3)
    }

    fn __len__(&self) -> usize {
        self.inner.frames.len()
    }

    /// Row-major RGB bytes of frame `i`.
    fn frame<'py>(&self, py: Python<'py>, i: usize) -> PyResult<Bound<'py, PyBytes>> {
        let frame = self
            .inner
            .frames
            .get(i)
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(i))?;
        Ok(PyBytes::new(py, frame.rgb.as_raw()))
    }

    /// Marker centres of frame `i` in pixels.
    fn markers(&self, i: usize) -> PyResult<Vec<[f64; 2]>> {
        self.inner
            .frames
            .get(i)
            .map(|f| f.markers.clone())
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(i))
    }

    /// Indentation depth (mm) and contact area (mm²) per finger.
    fn contacts(&self) -> Vec<(f64, f64)> {
        self.inner
            .contacts
            .iter()
            .map(|c| (c.solution.indentation_depth, c.area))
            .collect()
    }

    fn write(&self, dir: PathBuf) -> PyResult<()> {
        grasp::write_episode(&self.inner, &dir).map_err(err)
    }
}

#[pyclass(name = "Simulator", frozen)]
struct PySimulator {
    inner: Arc<grasp::Simulator>,
}

#[pymethods]
impl PySimulator {
    /// `config_json` holds optional `sensor`, `contact` and `thresholds`
    /// sections. With `labels_only` the lookup table is not calibrated and
    /// episodes cannot be rendered.
    #[new]
    #[pyo3(signature = (config_json=None, labels_only=false))]
    fn new(py: Python<'_>, config_json: Option<&str>, labels_only: bool) -> PyResult<Self> {
        let config = framework(config_json)?;
        let sim = py
            .detach(|| {
                if labels_only {
                    grasp::Simulator::labels_only(&config)
                } else {
                    grasp::Simulator::new(&config)
                }
            })
            .map_err(err)?;
        Ok(Self { inner: Arc::new(sim) })
    }

    fn label(&self, py: Python<'_>, object: &PyObject, force: f64, x: f64, y: f64, z: f64) -> PyResult<PyOutcome> {
        let config = GraspConfig::new(force, x, y, z);
        let outcome = py.detach(|| self.inner.label(&object.inner, &config)).map_err(err)?;
        Ok(outcome.into())
    }

    fn run_episode(&self, py: Python<'_>, object: &PyObject, force: f64, x: f64, y: f64, z: f64) -> PyResult<PyEpisode> {
        let config = GraspConfig::new(force, x, y, z);
        let inner = py.detach(|| self.inner.run_episode(&object.inner, &config)).map_err(err)?;
        Ok(PyEpisode { inner })
    }

    /// Runs a sweep spec (JSON text) into `out`; returns the manifest metadata as JSON.
    fn run_sweep(&self, py: Python<'_>, spec_json: &str, out: PathBuf) -> PyResult<String> {
        let spec: SweepSpec = serde_json::from_str(spec_json).map_err(json_err)?;
        let manifest = py.detach(|| dataset::run_sweep(&self.inner, &spec, &out)).map_err(err)?;
        serde_json::to_string(&manifest.meta).map_err(json_err)
    }

    /// Outcome grid as rows of booleans (True = success), heights by forces.
    fn outcome_grid(
        &self,
        py: Python<'_>,
        object: &PyObject,
        location: [f64; 2],
        heights: Vec<f64>,
        forces: Vec<f64>,
        friction: f64,
    ) -> PyResult<Vec<Vec<bool>>> {
        let grid = py
            .detach(|| calibration::simulate_outcome_grid(&self.inner, &object.inner, location, &heights, &forces, friction))
            .map_err(err)?;
        Ok(grid.success)
    }

    /// Returns (best μ, candidates, mismatch counts).
    fn optimize_friction(
        &self,
        py: Python<'_>,
        object: &PyObject,
        location: [f64; 2],
        heights: Vec<f64>,
        forces: Vec<f64>,
        success: Vec<Vec<bool>>,
    ) -> PyResult<(f64, Vec<f64>, Vec<usize>)> {
        let reference = OutcomeGrid {
            object: object.inner.name.clone(),
            heights,
            forces,
            success,
            unreachable: Vec::new(),
        };
        let result = py
            .detach(|| calibration::optimize_friction(&self.inner, &reference, &object.inner, location))
            .map_err(err)?;
        Ok((result.best, result.candidates, result.mismatches))
    }
}

#[pyclass(name = "PressResult", frozen, get_all)]
struct PyPressResult {
    indentation_depth: f64,
    achieved_volume: f64,
    iterations: usize,
    contact_area: f64,
    width: u32,
    height: u32,
    /// Row-major depths, mm.
    heightmap: Vec<f64>,
}

fn press_mesh(mesh: tacsim::geometry::TriangleMesh, force: f64, config: &FrameworkConfig) -> tacsim::Result<PyPressResult> {
    let params = config.contact;
    let camera = config.sensor.camera(&params);
    let pose = contact::touching_pose(&mesh, &camera, &params)?;
    let target = contact::volume_from_force(force, &params);
    let s = contact::solve_indentation(&mesh, &pose, &camera, target, &params, &config.solve_options())?;
    Ok(PyPressResult {
        indentation_depth: s.indentation_depth,
        achieved_volume: s.achieved_volume,
        iterations: s.iterations,
        contact_area: contact::contact_area(&s.contact_map, CONTACT_THRESHOLD),
        width: s.contact_map.width(),
        height: s.contact_map.height(),
        heightmap: s.contact_map.depths().to_vec(),
    })
}

/// Presses a mesh file into the sensor with normal force `force` (N).
#[pyfunction]
#[pyo3(signature = (path, force, scale=1.0, config_json=None))]
fn press(py: Python<'_>, path: PathBuf, force: f64, scale: f64, config_json: Option<&str>) -> PyResult<PyPressResult> {
    let config = framework(config_json)?;
    py.detach(|| press_mesh(load_mesh(&path, scale)?, force, &config)).map_err(err)
}

/// Presses a sphere of `radius` mm into the sensor.
#[pyfunction]
#[pyo3(signature = (radius, force, config_json=None))]
fn press_sphere(py: Python<'_>, radius: f64, force: f64, config_json: Option<&str>) -> PyResult<PyPressResult> {
    let config = framework(config_json)?;
    py.detach(|| press_mesh(primitives::icosphere(radius, 5), force, &config)).map_err(err)
}

/// Indentation volume (mm³) for a normal force.
#[pyfunction]
#[pyo3(signature = (force, k_n=None))]
fn volume_from_force(force: f64, k_n: Option<f64>) -> f64 {
    let mut params = ContactParams::default();
    if let Some(k) = k_n {
        params.k_n = k;
    }
    contact::volume_from_force(force, &params)
}

/// Returns (slope, residual rms, R²) of a fit through the origin.
#[pyfunction]
fn fit_contact_coefficients(forces: Vec<f64>, measurements: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if forces.len() != measurements.len() {
        return Err(TacsimError::new_err("forces and measurements differ in length"));
    }
    let samples: Vec<PressSample> = forces
        .into_iter()
        .zip(measurements)
        .map(|(force, measurement)| PressSample { force, measurement })
        .collect();
    let fit = calibration::fit_contact_coefficients(&samples).map_err(err)?;
    Ok((fit.coefficient, fit.residual_rms, fit.r_squared))
}

/// Integrated volume (mm³) of a row-major depth map.
#[pyfunction]
fn integrate_volume(width: u32, height: u32, pixel_pitch: f64, depths: Vec<f64>) -> PyResult<f64> {
    let map = HeightMap::new(width, height, pixel_pitch, depths).map_err(err)?;
    Ok(contact::integrate_volume(&map))
}

/// Grasp configurations of a sweep spec as (F, X, Y, Z) tuples.
#[pyfunction]
fn generate_configs(spec_json: &str) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let spec: SweepSpec = serde_json::from_str(spec_json).map_err(json_err)?;
    let configs = dataset::generate_configs(&spec).map_err(err)?;
    Ok(configs.iter().map(|c| (c.force, c.x, c.y, c.z)).collect())
}

#[pyfunction]
fn builtin_objects() -> Vec<&'static str> {
    dataset::BUILTIN_OBJECTS.to_vec()
}

/// Checks that a dataset directory matches its manifest.
#[pyfunction]
fn verify_manifest(root: PathBuf) -> PyResult<()> {
    dataset::verify_manifest(&root).map_err(err)
}

#[pymodule]
fn pytacsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TacsimError", m.py().get_type::<TacsimError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyObject>()?;
    m.add_class::<PyOutcome>()?;
    m.add_class::<PyEpisode>()?;
    m.add_class::<PySimulator>()?;
    m.add_class::<PyPressResult>()?;
    m.add_function(wrap_pyfunction!(press, m)?)?;
    m.add_function(wrap_pyfunction!(press_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(volume_from_force, m)?)?;
    m.add_function(wrap_pyfunction!(fit_contact_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_volume, m)?)?;
    m.add_function(wrap_pyfunction!(generate_configs, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_objects, m)?)?;
    m.add_function(wrap_pyfunction!(verify_manifest, m)?)?;
    Ok(())
}
