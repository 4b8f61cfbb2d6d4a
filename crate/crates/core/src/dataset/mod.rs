//! Grasp-configuration sweeps, dataset manifests and ablation studies.

mod ablation;
mod objects;
mod sweep;

pub use ablation::{ablation_sweep, AblationKind, AblationReport, AblationRow, REPORT_FILE};
pub use objects::{builtin_object, shift_center_of_mass, MeshObject, ObjectRef, BUILTIN_OBJECTS, DEFAULT_FRICTION};
pub use sweep::{
    assign_splits, config_hash, generate_configs, rescan, run_sweep, verify_manifest, ClassCounts, DatasetManifest,
    ManifestEntry, ManifestMeta, Split, SweepSpec, BALANCE_WARNING_RATIO, MANIFEST_FILE, MANIFEST_META_FILE,
};
