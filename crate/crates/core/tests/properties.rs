use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use tacsim::contact::{contact_map, integrate_volume, ContactParams};
use tacsim::geometry::{primitives, DepthCamera, Pose};
use tacsim::grasp::{label_outcome, slip_dynamics, GraspConfig, GraspThresholds, ObjectModel};

fn bar(mass: f64, friction: f64, com_x: f64) -> ObjectModel {
    let mesh = primitives::cuboid(Vector3::new(140.0, 40.0, 40.0), Point3::new(0.0, 0.0, 20.0));
    ObjectModel::new("bar", mesh, mass, Point3::new(com_x, 0.0, 20.0), friction).unwrap()
}

fn succeeds(object: &ObjectModel, force: f64, x: f64, area: f64) -> bool {
    let thresholds = GraspThresholds::default();
    let traj = slip_dynamics(object, &GraspConfig::new(force, x, 0.0, 20.0), &thresholds, [area; 2]);
    let outcome = label_outcome(&traj, &thresholds);
    assert_eq!(
        outcome.label.is_success(),
        outcome.final_translation < thresholds.trans_fail && outcome.final_rotation < thresholds.rot_fail
    );
    outcome.label.is_success()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn more_force_never_breaks_a_grasp(
        mass in 0.05f64..1.5, mu in 0.0f64..1.0, com in -60.0f64..60.0, x in -20.0f64..20.0,
        area in 1.0f64..300.0, f in 0.5f64..15.0, extra in 0.0f64..10.0,
    ) {
        let object = bar(mass, mu, com);
        if succeeds(&object, f, x, area) {
            prop_assert!(succeeds(&object, f + extra, x, area));
        }
    }

    #[test]
    fn more_mass_never_fixes_a_grasp(
        mass in 0.05f64..1.5, mu in 0.0f64..1.0, com in -60.0f64..60.0,
        area in 1.0f64..300.0, f in 0.5f64..15.0, extra in 0.0f64..1.0,
    ) {
        let object = bar(mass, mu, com);
        if !succeeds(&object, f, 0.0, area) {
            prop_assert!(!succeeds(&object.with_added_mass(extra), f, 0.0, area));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn volume_grows_with_depth(d in 0.05f64..3.0, step in 0.01f64..0.5) {
        let params = ContactParams::default();
        let camera = params.sensor_camera(&DepthCamera::default());
        let mesh = primitives::icosphere(6.0, 4);
        let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 6.0));
        let v = |depth| integrate_volume(&contact_map(&mesh, &pose, &camera, depth, 0.0, [1.0, 0.0], &params));
        prop_assert!(v(d + step) > v(d));
    }
}
