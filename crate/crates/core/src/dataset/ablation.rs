use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::{assign_splits, run_sweep, ClassCounts, DatasetManifest, SweepSpec};
use crate::error::{Error, Result};
use crate::grasp::Simulator;

pub const REPORT_FILE: &str = "ablation.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    /// Number of training episodes, subsampled from one sweep.
    DatasetSize,
    /// Object friction coefficient.
    Friction,
    /// Centre-of-mass offset along the object's long axis, m.
    CenterOfMass,
}

impl FromStr for AblationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset_size" => Ok(Self::DatasetSize),
            "friction" => Ok(Self::Friction),
            "center_of_mass" => Ok(Self::CenterOfMass),
            other => Err(Error::InvalidInput(format!("unknown ablation kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub value: f64,
    /// Directory holding this row's manifest, relative to the report.
    pub dataset: String,
    pub train: usize,
    pub test: usize,
    pub class_counts: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub kind: AblationKind,
    pub rows: Vec<AblationRow>,
}

fn row(value: f64, dataset: String, manifest: &DatasetManifest) -> AblationRow {
    AblationRow {
        value,
        dataset,
        train: manifest.meta.train,
        test: manifest.meta.test,
        class_counts: manifest.meta.class_counts,
    }
}

/// One dataset per value under `out`, plus `ablation.json`.
///
/// Dataset-size rows share one sweep in `out/base`: the test split is
/// fixed and training sets are nested prefixes of the seeded order.
pub fn ablation_sweep(sim: &Simulator, kind: AblationKind, values: &[f64], base: &SweepSpec, out: &Path) -> Result<AblationReport> {
    if values.is_empty() {
        return Err(Error::EmptyAxis("values"));
    }
    fs::create_dir_all(out)?;
    let mut rows = Vec::with_capacity(values.len());
    match kind {
        AblationKind::DatasetSize => {
            let sizes = values
                .iter()
                .map(|&v| {
                    if v >= 0.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(Error::InvalidInput(format!("dataset size {v}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let largest = *sizes.iter().max().unwrap();
            let spec = SweepSpec {
                train: largest,
                ..base.clone()
            };
            spec.validate()?;
            let full = run_sweep(sim, &spec, &out.join("base"))?;
            let order = full.split_order(spec.seed);
            for (&v, &n) in values.iter().zip(&sizes) {
                let mut episodes = full.episodes.clone();
                assign_splits(&mut episodes, &order, n, spec.test);
                for e in &mut episodes {
                    e.path = format!("../base/{}", e.path);
                }
                let manifest = DatasetManifest::new(full.meta.config_hash.clone(), episodes);
                let name = format!("dataset_size_{n}");
                manifest.write(&out.join(&name))?;
                rows.push(row(v, name, &manifest));
            }
        }
        AblationKind::Friction | AblationKind::CenterOfMass => {
            for &v in values {
                let (spec, name) = if kind == AblationKind::Friction {
                    (
                        SweepSpec {
                            friction: Some(v),
                            ..base.clone()
                        },
                        format!("friction_{v}"),
                    )
                } else {
                    (
                        SweepSpec {
                            com_offset: Some(base.com_offset.unwrap_or(0.0) + v * 1e3),
                            ..base.clone()
                        },
                        format!("center_of_mass_{v}"),
                    )
                };
                let manifest = run_sweep(sim, &spec, &out.join(&name))?;
                rows.push(row(v, name, &manifest));
            }
        }
    }
    let report = AblationReport { kind, rows };
    fs::write(out.join(REPORT_FILE), serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}
