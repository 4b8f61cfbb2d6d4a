use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::model::{GraspConfig, GraspOutcome, GraspThresholds, ObjectModel};
use super::plan::{contact_forces, plan_with, sensor_view, GraspPhase, GraspPlan, CLOSING_AXIS};
use super::slip::{label_outcome, slip_dynamics, SlipTrajectory};
use crate::config::FrameworkConfig;
use crate::contact::{
    contact_area, contact_map, shear_from_force, solve_indentation, volume_from_force, ContactParams,
    ContactSolution, SolveOptions, CONTACT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::geometry::{Bvh, DepthCamera, Pose, SurfaceScan};
use crate::optics::{
    compose_frame, displace_markers, render_tactile, LookupSettings, LookupTable, MarkerField, PhongReference,
    TactileFrame,
};

/// Rendering of slip stops here; past it the object has left the fingers.
const MAX_RENDERED_ROTATION: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone)]
pub struct SensorSetup {
    /// Sensor camera in its own frame; the view is set per finger.
    pub camera: DepthCamera,
    /// pixels
    pub sigma: f64,
    pub markers: MarkerField,
    /// `None` for label-only simulation.
    pub table: Option<Arc<LookupTable>>,
}

#[derive(Debug, Clone)]
pub struct ContactRecord {
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    /// Camera frame to world frame of this finger's sensor.
    pub view: Pose,
    pub solution: ContactSolution,
    /// mm²
    pub area: f64,
}

/// Everything about a grasp that does not depend on friction.
#[derive(Debug, Clone)]
pub struct PreparedGrasp {
    pub config: GraspConfig,
    pub plan: GraspPlan,
    pub contacts: [ContactRecord; 2],
}

impl PreparedGrasp {
    pub fn areas(&self) -> [f64; 2] {
        [self.contacts[0].area, self.contacts[1].area]
    }
}

#[derive(Debug, Clone)]
pub struct GraspEpisode {
    pub object: String,
    pub config: GraspConfig,
    pub contacts: [ContactRecord; 2],
    /// Frames from the sensor on the +y finger.
    pub frames: Vec<TactileFrame>,
    pub trajectory: SlipTrajectory,
    pub outcome: GraspOutcome,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    /// The configuration this simulator was built from.
    pub config: FrameworkConfig,
    pub params: ContactParams,
    pub thresholds: GraspThresholds,
    pub sensor: SensorSetup,
    pub solve: SolveOptions,
}

impl Simulator {
    /// Builds the sensor and calibrates its lookup table against the reference shader.
    pub fn new(config: &FrameworkConfig) -> Result<Self> {
        let sim = Self::labels_only(config)?;
        let spec = &config.sensor;
        let reference = PhongReference::new(spec.width, spec.height, spec.sigma);
        let settings = LookupSettings {
            direction_bins: spec.direction_bins,
            magnitude_bins: spec.magnitude_bins,
            sigma: spec.sigma,
            ..LookupSettings::default()
        };
        let table = LookupTable::from_reference(&reference, spec.pixel_pitch, &settings)?;
        Ok(sim.with_table(Arc::new(table)))
    }

    /// A simulator that can label grasps but not render frames.
    pub fn labels_only(config: &FrameworkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: *config,
            params: config.contact,
            thresholds: config.thresholds,
            sensor: SensorSetup {
                camera: config.sensor.camera(&config.contact),
                sigma: config.sensor.sigma,
                markers: config.sensor.marker_field()?,
                table: None,
            },
            solve: config.solve_options(),
        })
    }

    pub fn with_table(mut self, table: Arc<LookupTable>) -> Self {
        self.sensor.table = Some(table);
        self
    }

    /// Plans the grasp and solves both finger indentations.
    pub fn prepare(&self, object: &ObjectModel, config: &GraspConfig) -> Result<PreparedGrasp> {
        self.prepare_with(&Bvh::build(&object.mesh), object, config)
    }

    pub(crate) fn prepare_with(&self, bvh: &Bvh, object: &ObjectModel, config: &GraspConfig) -> Result<PreparedGrasp> {
        object.validate()?;
        let plan = plan_with(bvh, config)?;
        let target = volume_from_force(config.force, &self.params);
        let contact = |i: usize| -> Result<ContactRecord> {
            let c = plan.contacts[i];
            let view = self.touch_view(object, &sensor_view(&c))?;
            let camera = self.sensor.camera.with_view(view);
            let solution = solve_indentation(&object.mesh, &Pose::identity(), &camera, target, &self.params, &self.solve)?;
            Ok(ContactRecord {
                point: c.point,
                normal: c.normal,
                view,
                area: contact_area(&solution.contact_map, CONTACT_THRESHOLD),
                solution,
            })
        };
        Ok(PreparedGrasp {
            config: *config,
            plan,
            contacts: [contact(0)?, contact(1)?],
        })
    }

    /// Backs the sensor off along its axis until the nearest surface in
    /// view sits one collision margin in front of the gel.
    fn touch_view(&self, object: &ObjectModel, view: &Pose) -> Result<Pose> {
        let probe = DepthCamera {
            near: -(object.mesh.bounds().extent().norm() + self.params.gel_thickness),
            ..self.sensor.camera
        }
        .with_view(*view);
        let closest = SurfaceScan::capture(&object.mesh, &Pose::identity(), &probe)
            .closest()
            .ok_or(Error::NoGraspContact("sensor field"))?;
        let axis = view.transform_vector(&Vector3::z());
        Ok(view.translated(axis * (closest - self.params.collision_margin)))
    }

    pub fn label(&self, object: &ObjectModel, config: &GraspConfig) -> Result<GraspOutcome> {
        let prepared = self.prepare(object, config)?;
        Ok(self.outcome(object, &prepared).1)
    }

    /// Slip trajectory and label for a prepared grasp; `object` may carry a different friction.
    pub fn outcome(&self, object: &ObjectModel, prepared: &PreparedGrasp) -> (SlipTrajectory, GraspOutcome) {
        let trajectory = slip_dynamics(object, &prepared.config, &self.thresholds, prepared.areas());
        let outcome = label_outcome(&trajectory, &self.thresholds);
        (trajectory, outcome)
    }

    pub fn run_episode(&self, object: &ObjectModel, config: &GraspConfig) -> Result<GraspEpisode> {
        let table = self
            .sensor
            .table
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("simulator has no lookup table".into()))?;
        let prepared = self.prepare(object, config)?;
        let (trajectory, outcome) = self.outcome(object, &prepared);
        let frames = self.record(object, &prepared, &trajectory, table)?;
        Ok(GraspEpisode {
            object: object.name.clone(),
            config: *config,
            contacts: prepared.contacts,
            frames,
            trajectory,
            outcome,
        })
    }

    /// Frame 0 is the closed gripper before lift-off; later frames carry the
    /// lifting shear plus whatever slip has accumulated.
    fn record(
        &self,
        object: &ObjectModel,
        prepared: &PreparedGrasp,
        trajectory: &SlipTrajectory,
        table: &LookupTable,
    ) -> Result<Vec<TactileFrame>> {
        let finger = &prepared.contacts[0];
        let camera = self.sensor.camera.with_view(finger.view);
        let config = &prepared.config;
        let rate = self.thresholds.frame_rate;
        let pivot = Point3::new(config.x, 0.0, config.z);
        let sign = trajectory.params.rotation_sign;

        let mut frames: Vec<TactileFrame> = Vec::with_capacity(self.thresholds.frame_count());
        let mut last: Option<([f64; 3], usize)> = None;
        for k in 0..self.thresholds.frame_count() {
            let t = k as f64 / rate;
            let phase = if k == 0 { GraspPhase::Grasped } else { GraspPhase::Lifting };
            let state = contact_forces(object, config, &prepared.plan, phase)[0];
            let shear = shear_from_force(state.shear_force, &self.params).displacement;
            let (slide, turn) = if k == 0 { (0.0, 0.0) } else { trajectory.at(t) };
            let slide = slide.min(self.thresholds.trans_fail);
            let turn = turn.min(MAX_RENDERED_ROTATION);
            let key = [shear, slide, turn];
            if let Some((prev, i)) = last {
                if prev == key {
                    let frame = TactileFrame {
                        timestamp: t,
                        ..frames[i].clone()
                    };
                    frames.push(frame);
                    continue;
                }
            }
            let rotation = Pose::from_axis_angle(CLOSING_AXIS, sign * turn);
            let about_pivot = Pose::from_translation(pivot.coords)
                .compose(&rotation)
                .compose(&Pose::from_translation(-pivot.coords));
            let pose = about_pivot.translated(Vector3::new(0.0, 0.0, -slide));
            let map = contact_map(
                &object.mesh,
                &pose,
                &camera,
                finger.solution.indentation_depth,
                shear,
                state.shear_dir,
                &self.params,
            );
            let rgb = render_tactile(&map, table, self.sensor.sigma)?;
            let markers = displace_markers(&self.sensor.markers, shear, state.shear_dir, &map);
            frames.push(compose_frame(rgb, &markers, t));
            last = Some((key, frames.len() - 1));
        }
        Ok(frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use crate::grasp::GraspLabel;

    fn block(mass: f64, friction: f64) -> ObjectModel {
        let mesh = primitives::cuboid(Vector3::new(60.0, 40.0, 80.0), Point3::new(0.0, 0.0, 40.0));
        ObjectModel::new("block", mesh, mass, Point3::new(0.0, 0.0, 40.0), friction).unwrap()
    }

    #[test]
    fn flat_face_contact() {
        let sim = Simulator::labels_only(&FrameworkConfig::default()).unwrap();
        let prepared = sim.prepare(&block(0.2, 0.5), &GraspConfig::new(5.0, 0.0, 0.0, 40.0)).unwrap();
        for record in &prepared.contacts {
            // a face larger than the field: volume = depth × field area
            let (fw, fh) = sim.sensor.camera.field_of_view();
            let expected = 200.0 / (fw * fh);
            let d = record.solution.indentation_depth;
            assert!((d - expected).abs() <= 1.01e-3 * expected, "{d} vs {expected}");
            assert!((record.area - fw * fh).abs() < 1e-6);
        }
    }

    #[test]
    fn labels_follow_force_balance() {
        let sim = Simulator::labels_only(&FrameworkConfig::default()).unwrap();
        let config = GraspConfig::new(5.0, 0.0, 0.0, 40.0);
        assert_eq!(sim.label(&block(0.2, 0.5), &config).unwrap().label, GraspLabel::Success);
        assert_eq!(sim.label(&block(0.5, 0.3), &config).unwrap().label, GraspLabel::TranslationalSlip);
        assert!(matches!(
            sim.label(&block(0.2, 0.5), &GraspConfig::new(5.0, 40.0, 0.0, 40.0)),
            Err(Error::NoGraspContact(_))
        ));
    }

    #[test]
    fn episode_without_table_is_rejected() {
        let sim = Simulator::labels_only(&FrameworkConfig::default()).unwrap();
        assert!(sim.run_episode(&block(0.2, 0.5), &GraspConfig::new(5.0, 0.0, 0.0, 40.0)).is_err());
    }
}
