use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::objects::{shift_center_of_mass, ObjectRef};
use crate::error::{Error, Result};
use crate::grasp::{read_episode_summary, write_episode, GraspConfig, GraspLabel, ObjectModel, Simulator};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const MANIFEST_META_FILE: &str = "manifest_meta.json";

/// Below this share of the minority class the manifest carries a balance warning.
pub const BALANCE_WARNING_RATIO: f64 = 0.3;

fn default_forces() -> Vec<f64> {
    vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub object: ObjectRef,
    /// N
    #[serde(default = "default_forces")]
    pub forces: Vec<f64>,
    /// mm
    pub heights: Vec<f64>,
    /// (x, y) in mm
    pub locations: Vec<[f64; 2]>,
    /// Extra payload per run in kg; each value repeats the whole grid.
    #[serde(default)]
    pub added_mass: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub train: usize,
    pub test: usize,
    /// Overrides the object's friction.
    #[serde(default)]
    pub friction: Option<f64>,
    /// Shifts the centre of mass along x, mm.
    #[serde(default)]
    pub com_offset: Option<f64>,
}

impl SweepSpec {
    pub fn new(object: ObjectRef, heights: Vec<f64>, locations: Vec<[f64; 2]>) -> Self {
        Self {
            object,
            forces: default_forces(),
            heights,
            locations,
            added_mass: Vec::new(),
            seed: 0,
            train: 0,
            test: 0,
            friction: None,
            com_offset: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, empty) in [
            ("forces", self.forces.is_empty()),
            ("heights", self.heights.is_empty()),
            ("locations", self.locations.is_empty()),
        ] {
            if empty {
                return Err(Error::EmptyAxis(axis));
            }
        }
        let total = self.episode_count();
        if self.train + self.test > total {
            return Err(Error::InvalidInput(format!(
                "split {} + {} exceeds the {total} configurations",
                self.train, self.test
            )));
        }
        Ok(())
    }

    pub fn episode_count(&self) -> usize {
        self.forces.len() * self.heights.len() * self.locations.len() * self.added_mass.len().max(1)
    }

    /// Object with the spec's friction and centre-of-mass overrides applied.
    pub fn object_model(&self) -> Result<ObjectModel> {
        let mut object = self.object.load()?;
        if let Some(mu) = self.friction {
            object = object.with_friction(mu);
            object.validate()?;
        }
        if let Some(offset) = self.com_offset {
            object = shift_center_of_mass(&object, offset)?;
        }
        Ok(object)
    }
}

/// Locations, then heights, then forces.
pub fn generate_configs(spec: &SweepSpec) -> Result<Vec<GraspConfig>> {
    spec.validate()?;
    Ok(spec
        .locations
        .iter()
        .flat_map(|&[x, y]| {
            spec.heights
                .iter()
                .flat_map(move |&z| spec.forces.iter().map(move |&f| GraspConfig::new(f, x, y, z)))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    Unused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    /// Episode directory relative to the manifest.
    pub path: String,
    pub object: String,
    pub config: GraspConfig,
    /// kg
    pub added_mass: f64,
    pub label: Option<GraspLabel>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub success: usize,
    pub translational_slip: usize,
    pub rotational_slip: usize,
    pub errors: usize,
}

impl ClassCounts {
    pub fn of<'a>(entries: impl IntoIterator<Item = &'a ManifestEntry>) -> Self {
        let mut counts = Self::default();
        for e in entries {
            match e.label {
                Some(GraspLabel::Success) => counts.success += 1,
                Some(GraspLabel::TranslationalSlip) => counts.translational_slip += 1,
                Some(GraspLabel::RotationalSlip) => counts.rotational_slip += 1,
                None => counts.errors += 1,
            }
        }
        counts
    }

    pub fn failure(&self) -> usize {
        self.translational_slip + self.rotational_slip
    }

    pub fn is_unbalanced(&self) -> bool {
        let labeled = self.success + self.failure();
        labeled > 0 && (self.success.min(self.failure()) as f64) < BALANCE_WARNING_RATIO * labeled as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub version: String,
    /// SHA-256 of the sweep spec and framework configuration.
    pub config_hash: String,
    pub episodes: usize,
    pub train: usize,
    pub test: usize,
    pub class_counts: ClassCounts,
    pub balance_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub meta: ManifestMeta,
    pub episodes: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(config_hash: String, episodes: Vec<ManifestEntry>) -> Self {
        let class_counts = ClassCounts::of(&episodes);
        let count = |split| episodes.iter().filter(|e| e.split == split).count();
        let meta = ManifestMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            episodes: episodes.len(),
            train: count(Split::Train),
            test: count(Split::Test),
            class_counts,
            balance_warning: class_counts.is_unbalanced(),
        };
        Self { meta, episodes }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut lines = Vec::new();
        for e in &self.episodes {
            serde_json::to_writer(&mut lines, e)?;
            lines.push(b'\n');
        }
        fs::File::create(dir.join(MANIFEST_FILE))?.write_all(&lines)?;
        fs::write(dir.join(MANIFEST_META_FILE), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta = serde_json::from_slice(&fs::read(dir.join(MANIFEST_META_FILE))?)?;
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let episodes = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { meta, episodes })
    }

    /// Labeled episodes in the order splits are drawn from.
    pub fn split_order(&self, seed: u64) -> Vec<usize> {
        let labeled: Vec<usize> = self.episodes.iter().filter(|e| e.label.is_some()).map(|e| e.id).collect();
        shuffled(labeled, seed)
    }
}

fn shuffled(mut ids: Vec<usize>, seed: u64) -> Vec<usize> {
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

/// The first `test` ids of the shuffled order go to test, the next `train` to train.
pub fn assign_splits(entries: &mut [ManifestEntry], order: &[usize], train: usize, test: usize) {
    if order.len() < train + test {
        log::warn!("{} usable episodes for a {train}/{test} split", order.len());
    }
    for e in entries.iter_mut() {
        e.split = Split::Unused;
    }
    for (rank, &id) in order.iter().enumerate() {
        let split = if rank < test {
            Split::Test
        } else if rank < test + train {
            Split::Train
        } else {
            break;
        };
        entries.iter_mut().find(|e| e.id == id).expect("ids come from the entries").split = split;
    }
}

pub fn config_hash(spec: &SweepSpec, sim: &Simulator) -> Result<String> {
    let bytes = serde_json::to_vec(&(spec, &sim.config))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs every configuration, writes `<out>/<object>/<id>/` per episode plus
/// the manifest. Failing episodes are recorded in the manifest, not fatal.
pub fn run_sweep(sim: &Simulator, spec: &SweepSpec, out: &Path) -> Result<DatasetManifest> {
    let configs = generate_configs(spec)?;
    let object = spec.object_model()?;
    let masses = if spec.added_mass.is_empty() { vec![0.0] } else { spec.added_mass.clone() };
    let jobs: Vec<(f64, GraspConfig)> = masses
        .iter()
        .flat_map(|&m| configs.iter().map(move |&c| (m, c)))
        .collect();
    fs::create_dir_all(out)?;

    let mut entries: Vec<ManifestEntry> = jobs
        .par_iter()
        .enumerate()
        .map(|(id, &(added_mass, config))| {
            let path = format!("{}/{id:06}", object.name);
            let run = || -> Result<GraspLabel> {
                let loaded = object.with_added_mass(added_mass);
                loaded.validate()?;
                let episode = sim.run_episode(&loaded, &config)?;
                write_episode(&episode, &out.join(&path))?;
                Ok(episode.outcome.label)
            };
            let (label, error) = match run() {
                Ok(label) => (Some(label), None),
                Err(e) => {
                    log::warn!("episode {id} failed: {e}");
                    (None, Some(format!("{}: {e}", e.kind())))
                }
            };
            ManifestEntry {
                id,
                path,
                object: object.name.clone(),
                config,
                added_mass,
                label,
                split: Split::Unused,
                error,
            }
        })
        .collect();

    let labeled: Vec<usize> = entries.iter().filter(|e| e.label.is_some()).map(|e| e.id).collect();
    let order = shuffled(labeled, spec.seed);
    assign_splits(&mut entries, &order, spec.train, spec.test);
    let manifest = DatasetManifest::new(config_hash(spec, sim)?, entries);
    if manifest.meta.balance_warning {
        log::warn!("unbalanced dataset: {:?}", manifest.meta.class_counts);
    }
    manifest.write(out)?;
    Ok(manifest)
}

/// Episode directories found on disk: `(relative path, label)`, sorted by path.
pub fn rescan(root: &Path) -> Result<Vec<(String, GraspLabel)>> {
    let mut found = Vec::new();
    for object in fs::read_dir(root)? {
        let object = object?;
        if !object.file_type()?.is_dir() {
            continue;
        }
        for episode in fs::read_dir(object.path())? {
            let dir = episode?.path();
            if dir.join("episode.json").is_file() {
                let summary = read_episode_summary(&dir)?;
                let rel: PathBuf = dir.strip_prefix(root).expect("walked from root").to_path_buf();
                found.push((rel.to_string_lossy().replace('\\', "/"), summary.outcome.label));
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Checks that the directory holds exactly the manifest's labeled episodes.
pub fn verify_manifest(root: &Path) -> Result<()> {
    let manifest = DatasetManifest::read(root)?;
    let mut listed: Vec<(String, GraspLabel)> = manifest
        .episodes
        .iter()
        .filter_map(|e| e.label.map(|l| (e.path.clone(), l)))
        .collect();
    listed.sort();
    let found = rescan(root)?;
    if found != listed {
        let a: BTreeSet<_> = found.iter().collect();
        let b: BTreeSet<_> = listed.iter().collect();
        return Err(Error::InvalidInput(format!(
            "manifest mismatch: {} on disk only, {} in manifest only",
            a.difference(&b).count(),
            b.difference(&a).count()
        )));
    }
    if ClassCounts::of(&manifest.episodes) != manifest.meta.class_counts {
        return Err(Error::InvalidInput("class counts do not match the labels".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec::new(
            ObjectRef::Builtin("box".into()),
            vec![20.0, 40.0, 60.0, 80.0],
            vec![[0.0, 0.0], [5.0, 0.0], [-5.0, 0.0]],
        )
    }

    #[test]
    fn config_grid() {
        let configs = generate_configs(&spec()).unwrap();
        assert_eq!(configs.len(), 72);
        assert_eq!(configs[0], GraspConfig::new(5.0, 0.0, 0.0, 20.0));
        assert_eq!(configs[1], GraspConfig::new(6.0, 0.0, 0.0, 20.0));
        assert_eq!(configs[6], GraspConfig::new(5.0, 0.0, 0.0, 40.0));
        assert_eq!(configs[24], GraspConfig::new(5.0, 5.0, 0.0, 20.0));
        let forces: Vec<f64> = configs[..6].iter().map(|c| c.force).collect();
        assert_eq!(forces, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);

        let single = SweepSpec {
            forces: vec![7.0],
            heights: vec![50.0],
            locations: vec![[0.0, 0.0]],
            ..spec()
        };
        assert_eq!(generate_configs(&single).unwrap().len(), 1);
        let empty = SweepSpec { heights: vec![], ..spec() };
        assert!(matches!(generate_configs(&empty), Err(Error::EmptyAxis("heights"))));
        let oversplit = SweepSpec { train: 70, test: 10, ..spec() };
        assert!(generate_configs(&oversplit).is_err());
    }

    #[test]
    fn default_forces_from_json() {
        let spec: SweepSpec =
            serde_json::from_str(r#"{"object": "box", "heights": [50], "locations": [[0, 0]], "train": 1, "test": 0}"#)
                .unwrap();
        assert_eq!(spec.forces, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
    }

    #[test]
    fn splits_are_disjoint_and_seeded() {
        let mut entries: Vec<ManifestEntry> = (0..20)
            .map(|id| ManifestEntry {
                id,
                path: format!("box/{id:06}"),
                object: "box".into(),
                config: GraspConfig::new(5.0, 0.0, 0.0, 0.0),
                added_mass: 0.0,
                label: Some(GraspLabel::Success),
                split: Split::Unused,
                error: None,
            })
            .collect();
        let order = shuffled((0..20).collect(), 7);
        assert_eq!(order, shuffled((0..20).collect(), 7));
        assert_ne!(order, shuffled((0..20).collect(), 8));
        assign_splits(&mut entries, &order, 12, 5);
        let train = entries.iter().filter(|e| e.split == Split::Train).count();
        let test = entries.iter().filter(|e| e.split == Split::Test).count();
        assert_eq!((train, test), (12, 5));
    }

    #[test]
    fn balance() {
        let counts = ClassCounts {
            success: 0,
            translational_slip: 10,
            ..ClassCounts::default()
        };
        assert!(counts.is_unbalanced());
        let counts = ClassCounts {
            success: 363,
            translational_slip: 389,
            ..ClassCounts::default()
        };
        assert!(!counts.is_unbalanced());
    }
}
