use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use tacsim::config::FrameworkConfig;
use tacsim::dataset::{
    ablation_sweep, rescan, run_sweep, verify_manifest, AblationKind, DatasetManifest, ObjectRef, Split, SweepSpec,
};
use tacsim::grasp::{GraspLabel, Simulator};

fn simulator() -> &'static Simulator {
    static SIM: OnceLock<Simulator> = OnceLock::new();
    SIM.get_or_init(|| Simulator::new(&FrameworkConfig::default()).unwrap())
}

fn spec() -> SweepSpec {
    SweepSpec {
        forces: vec![6.0, 7.0, 9.0],
        seed: 11,
        train: 3,
        test: 2,
        ..SweepSpec::new(ObjectRef::Builtin("box".into()), vec![30.0, 70.0], vec![[0.0, 0.0]])
    }
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn sweep_writes_a_consistent_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_sweep(simulator(), &spec(), dir.path()).unwrap();
    assert_eq!(manifest.episodes.len(), 6);
    assert_eq!((manifest.meta.train, manifest.meta.test), (3, 2));
    // F = 6, 7 drop the 0.69 kg box at μ = 0.45; F = 9 holds it
    assert_eq!(manifest.meta.class_counts.success, 2);
    assert_eq!(manifest.meta.class_counts.translational_slip, 4);
    assert!(manifest.episodes.iter().all(|e| dir.path().join(&e.path).join("frames/0000.png").is_file()));
    assert_eq!(DatasetManifest::read(dir.path()).unwrap(), manifest);
    verify_manifest(dir.path()).unwrap();
    assert_eq!(rescan(dir.path()).unwrap().len(), 6);

    fs::remove_dir_all(dir.path().join("box/000003")).unwrap();
    assert!(verify_manifest(dir.path()).is_err());
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_sweep(simulator(), &spec(), a.path()).unwrap();
    run_sweep(simulator(), &spec(), b.path()).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    assert!(ta == tb);

    let c = tempfile::tempdir().unwrap();
    let reseeded = SweepSpec { seed: 12, ..spec() };
    let other = run_sweep(simulator(), &reseeded, c.path()).unwrap();
    let first = DatasetManifest::read(a.path()).unwrap();
    let splits = |m: &DatasetManifest| m.episodes.iter().map(|e| e.split).collect::<Vec<_>>();
    assert_ne!(splits(&first), splits(&other));
}

#[test]
fn failing_episodes_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        locations: vec![[0.0, 0.0], [100.0, 0.0]],
        friction: Some(0.0),
        train: 2,
        test: 1,
        ..spec()
    };
    let manifest = run_sweep(simulator(), &spec, dir.path()).unwrap();
    let counts = manifest.meta.class_counts;
    assert_eq!((counts.success, counts.translational_slip, counts.errors), (0, 6, 6));
    assert!(manifest.meta.balance_warning);
    let errors: Vec<_> = manifest.episodes.iter().filter(|e| e.label.is_none()).collect();
    assert!(errors.iter().all(|e| e.split == Split::Unused));
    assert!(errors[0].error.as_deref().unwrap().starts_with("no_grasp_contact"));
    verify_manifest(dir.path()).unwrap();
}

#[test]
fn added_mass_multiplies_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        forces: vec![10.0],
        heights: vec![50.0],
        added_mass: vec![0.0, 0.5],
        train: 1,
        test: 1,
        ..spec()
    };
    let manifest = run_sweep(simulator(), &spec, dir.path()).unwrap();
    let labels: Vec<_> = manifest.episodes.iter().map(|e| e.label.unwrap()).collect();
    assert_eq!(labels, vec![GraspLabel::Success, GraspLabel::TranslationalSlip]);
}

#[test]
fn ablations() {
    let dir = tempfile::tempdir().unwrap();
    let sizes = ablation_sweep(simulator(), AblationKind::DatasetSize, &[1.0, 2.0, 4.0], &spec(), dir.path()).unwrap();
    let trains: Vec<usize> = sizes.rows.iter().map(|r| r.train).collect();
    assert_eq!(trains, vec![1, 2, 4]);
    let test_sets: Vec<Vec<usize>> = sizes
        .rows
        .iter()
        .map(|r| {
            let m = DatasetManifest::read(&dir.path().join(&r.dataset)).unwrap();
            m.episodes.iter().filter(|e| e.split == Split::Test).map(|e| e.id).collect()
        })
        .collect();
    assert!(test_sets.windows(2).all(|w| w[0] == w[1]));
    let small = DatasetManifest::read(&dir.path().join("dataset_size_1")).unwrap();
    assert!(dir.path().join("dataset_size_1").join(&small.episodes[0].path).join("episode.json").is_file());

    let friction = ablation_sweep(simulator(), AblationKind::Friction, &[0.2, 0.8], &spec(), dir.path()).unwrap();
    assert_eq!(friction.rows[0].class_counts.success, 0);
    assert_eq!(friction.rows[1].class_counts.success, 6);

    let com = ablation_sweep(simulator(), AblationKind::CenterOfMass, &[-0.03, 0.0, 0.03], &spec(), dir.path()).unwrap();
    assert_eq!(com.rows.len(), 3);
    assert!(dir.path().join("center_of_mass_-0.03/manifest.jsonl").is_file());
    assert!(dir.path().join("ablation.json").is_file());
}
