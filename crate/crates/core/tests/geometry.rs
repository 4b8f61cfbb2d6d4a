use nalgebra::{Point3, Vector3};
use tacsim::geometry::{load_mesh, primitives, render_depth, write_obj, write_stl, DepthCamera, Pose};
use tacsim::Error;

#[test]
fn files_render_like_the_mesh() {
    let mesh = primitives::icosphere(4.0, 3);
    let dir = tempfile::tempdir().unwrap();
    let pose = Pose::from_translation(Vector3::new(0.0, 0.0, 3.0));
    let camera = DepthCamera::default();
    let expected = render_depth(&mesh, &pose, &camera, 0.0);
    for name in ["ball.obj", "ball.stl"] {
        let path = dir.path().join(name);
        if name.ends_with("obj") {
            write_obj(&mesh, &path).unwrap();
        } else {
            write_stl(&mesh, &path).unwrap();
        }
        let loaded = load_mesh(&path, 1.0).unwrap();
        assert_eq!(loaded.faces().len(), mesh.faces().len());
        let map = render_depth(&loaded, &pose, &camera, 0.0);
        let worst = map
            .depths()
            .iter()
            .zip(expected.depths())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "{name}: {worst}");
    }
}

#[test]
fn scale_converts_units() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.obj");
    write_obj(&primitives::cuboid(Vector3::new(0.02, 0.02, 0.02), Point3::origin()), &path).unwrap();
    let mesh = load_mesh(&path, 1000.0).unwrap();
    assert!((mesh.bounds().extent() - Vector3::new(20.0, 20.0, 20.0)).norm() < 1e-9);
}

#[test]
fn bad_files_report_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nf 1 2 9\n").unwrap();
    assert!(load_mesh(&path, 1.0).is_err());
    assert!(matches!(load_mesh(&dir.path().join("missing.stl"), 1.0), Err(Error::Io(_))));
}
