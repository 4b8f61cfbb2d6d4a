//! Contact coefficient fitting from press experiments and friction search
//! by matching grasp-outcome grids.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Bvh;
use crate::grasp::{GraspConfig, ObjectModel, PreparedGrasp, Simulator};

/// Below this the linear contact model is reported as violated.
pub const MIN_R_SQUARED: f64 = 0.98;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressSample {
    /// N
    pub force: f64,
    /// Indentation volume (mm³) or summed marker motion (mm).
    pub measurement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactFit {
    pub coefficient: f64,
    pub residual_rms: f64,
    pub r_squared: f64,
}

impl ContactFit {
    pub fn is_linear(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED
    }
}

/// Least-squares slope through the origin.
pub fn fit_contact_coefficients(samples: &[PressSample]) -> Result<ContactFit> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSamples(format!("{} samples, need at least 3", samples.len())));
    }
    if let Some(s) = samples.iter().find(|s| {
        !(s.force >= 0.0 && s.measurement >= 0.0 && s.force.is_finite() && s.measurement.is_finite())
    }) {
        return Err(Error::DegenerateSamples(format!("invalid sample {s:?}")));
    }
    let sxx: f64 = samples.iter().map(|s| s.force * s.force).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateSamples("all samples at zero force".into()));
    }
    let sxy: f64 = samples.iter().map(|s| s.force * s.measurement).sum();
    let k = sxy / sxx;
    let n = samples.len() as f64;
    let ss_res: f64 = samples.iter().map(|s| (s.measurement - k * s.force).powi(2)).sum();
    let mean = samples.iter().map(|s| s.measurement).sum::<f64>() / n;
    let ss_tot: f64 = samples.iter().map(|s| (s.measurement - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    let fit = ContactFit {
        coefficient: k,
        residual_rms: (ss_res / n).sqrt(),
        r_squared,
    };
    if !fit.is_linear() {
        log::warn!("press samples are not linear in force: R² = {r_squared:.4}");
    }
    Ok(fit)
}

/// Reads `force,measurement` rows with a header.
pub fn read_press_samples(path: &Path) -> Result<Vec<PressSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Success/failure over grasp heights × forces for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    pub object: String,
    /// mm
    pub heights: Vec<f64>,
    /// N
    pub forces: Vec<f64>,
    /// Row per height, `true` for success.
    pub success: Vec<Vec<bool>>,
    /// Cells that could not be simulated, as (height, force) indices; they count as failures.
    #[serde(default)]
    pub unreachable: Vec<(usize, usize)>,
}

impl OutcomeGrid {
    pub fn validate(&self) -> Result<()> {
        if self.heights.is_empty() {
            return Err(Error::EmptyAxis("heights"));
        }
        if self.forces.is_empty() {
            return Err(Error::EmptyAxis("forces"));
        }
        if self.success.len() != self.heights.len() || self.success.iter().any(|r| r.len() != self.forces.len()) {
            return Err(Error::GridFormat("cells do not match the axes".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.heights.len() * self.forces.len()
    }

    pub fn mismatches(&self, other: &OutcomeGrid) -> usize {
        self.success
            .iter()
            .flatten()
            .zip(other.success.iter().flatten())
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Header row of forces, first column of heights, cells `S` or `F`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["height".to_string()];
        header.extend(self.forces.iter().map(|f| f.to_string()));
        writer.write_record(&header)?;
        for (h, row) in self.heights.iter().zip(&self.success) {
            let mut record = vec![h.to_string()];
            record.extend(row.iter().map(|&s| if s { "S" } else { "F" }.to_string()));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, object: impl Into<String>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut records = reader.records();
        let header = records.next().ok_or_else(|| Error::GridFormat("empty file".into()))??;
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::GridFormat(format!("not a number: {s:?}")))
        };
        let forces = header.iter().skip(1).map(number).collect::<Result<Vec<_>>>()?;
        let mut heights = Vec::new();
        let mut success = Vec::new();
        for record in records {
            let record = record?;
            let mut cells = record.iter();
            heights.push(number(cells.next().unwrap_or(""))?);
            let row = cells
                .map(|c| match c.trim() {
                    "S" | "s" => Ok(true),
                    "F" | "f" => Ok(false),
                    other => Err(Error::GridFormat(format!("cell {other:?} is not S or F"))),
                })
                .collect::<Result<Vec<_>>>()?;
            success.push(row);
        }
        let grid = Self {
            object: object.into(),
            heights,
            forces,
            success,
            unreachable: Vec::new(),
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Contact solutions for every cell; they do not depend on friction.
pub struct PreparedGrid {
    object: String,
    heights: Vec<f64>,
    forces: Vec<f64>,
    cells: Vec<Option<PreparedGrasp>>,
}

impl PreparedGrid {
    pub fn new(sim: &Simulator, object: &ObjectModel, location: [f64; 2], heights: &[f64], forces: &[f64]) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::EmptyAxis("heights"));
        }
        if forces.is_empty() {
            return Err(Error::EmptyAxis("forces"));
        }
        let bvh = Bvh::build(&object.mesh);
        let configs: Vec<GraspConfig> = heights
            .iter()
            .flat_map(|&z| forces.iter().map(move |&f| GraspConfig::new(f, location[0], location[1], z)))
            .collect();
        let cells = configs
            .par_iter()
            .map(|config| match sim.prepare_with(&bvh, object, config) {
                Ok(prepared) => Some(prepared),
                Err(e) => {
                    log::warn!("grasp at height {} force {} not simulated: {e}", config.z, config.force);
                    None
                }
            })
            .collect();
        Ok(Self {
            object: object.name.clone(),
            heights: heights.to_vec(),
            forces: forces.to_vec(),
            cells,
        })
    }

    pub fn outcomes(&self, sim: &Simulator, object: &ObjectModel) -> OutcomeGrid {
        let n = self.forces.len();
        let mut success = vec![vec![false; n]; self.heights.len()];
        let mut unreachable = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            match cell {
                Some(prepared) => success[i / n][i % n] = sim.outcome(object, prepared).1.label.is_success(),
                None => unreachable.push((i / n, i % n)),
            }
        }
        OutcomeGrid {
            object: self.object.clone(),
            heights: self.heights.clone(),
            forces: self.forces.clone(),
            success,
            unreachable,
        }
    }
}

/// Labels every (height, force) cell with the object's friction replaced by `friction`.
pub fn simulate_outcome_grid(
    sim: &Simulator,
    object: &ObjectModel,
    location: [f64; 2],
    heights: &[f64],
    forces: &[f64],
    friction: f64,
) -> Result<OutcomeGrid> {
    let object = object.with_friction(friction);
    object.validate()?;
    Ok(PreparedGrid::new(sim, &object, location, heights, forces)?.outcomes(sim, &object))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionSearchResult {
    pub best: f64,
    pub candidates: Vec<f64>,
    pub mismatches: Vec<usize>,
    /// Cells that could not be simulated, counted as mismatches wherever the reference says success.
    pub unreachable: Vec<(usize, usize)>,
    /// Whether the mismatch curve falls then rises with no interior bump.
    pub quasi_convex: bool,
}

/// 0.00, 0.05, …, 1.00
pub fn friction_candidates() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Exhaustive search over [`friction_candidates`]; ties go to the smaller μ.
pub fn optimize_friction(
    sim: &Simulator,
    reference: &OutcomeGrid,
    object: &ObjectModel,
    location: [f64; 2],
) -> Result<FrictionSearchResult> {
    reference.validate()?;
    let prepared = PreparedGrid::new(sim, object, location, &reference.heights, &reference.forces)?;
    let candidates = friction_candidates();
    let grids: Vec<OutcomeGrid> = candidates
        .par_iter()
        .map(|&mu| prepared.outcomes(sim, &object.with_friction(mu)))
        .collect();
    let mismatches: Vec<usize> = grids.iter().map(|g| g.mismatches(reference)).collect();
    let best_index = mismatches
        .iter()
        .enumerate()
        .min_by_key(|&(i, m)| (*m, i))
        .map(|(i, _)| i)
        .unwrap();
    let quasi_convex = is_quasi_convex(&mismatches);
    if !quasi_convex {
        log::warn!("mismatch curve over friction is not quasi-convex: {mismatches:?}");
    }
    Ok(FrictionSearchResult {
        best: candidates[best_index],
        candidates,
        unreachable: grids[0].unreachable.clone(),
        mismatches,
        quasi_convex,
    })
}

fn is_quasi_convex(values: &[usize]) -> bool {
    let mut rising = false;
    values.windows(2).all(|w| {
        if w[1] > w[0] {
            rising = true;
        }
        !(rising && w[1] < w[0])
    })
}

impl FrictionSearchResult {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(f: impl Fn(f64) -> f64) -> Vec<PressSample> {
        (1..=10)
            .map(|i| PressSample {
                force: i as f64,
                measurement: f(i as f64),
            })
            .collect()
    }

    #[test]
    fn exact_line() {
        let fit = fit_contact_coefficients(&samples(|f| 40.0 * f)).unwrap();
        assert_eq!(fit.coefficient, 40.0);
        assert!(fit.residual_rms < 1e-12);
        assert!(fit.is_linear());
    }

    #[test]
    fn quadratic_is_flagged() {
        let fit = fit_contact_coefficients(&samples(|f| f * f)).unwrap();
        assert!(!fit.is_linear(), "{fit:?}");
    }

    #[test]
    fn degenerate() {
        let zeros = vec![PressSample { force: 0.0, measurement: 1.0 }; 4];
        assert!(matches!(fit_contact_coefficients(&zeros), Err(Error::DegenerateSamples(_))));
        assert!(fit_contact_coefficients(&samples(|f| f)[..2]).is_err());
    }

    #[test]
    fn candidates() {
        let c = friction_candidates();
        assert_eq!(c.len(), 21);
        assert_eq!(c[9], 0.45);
        assert_eq!(c[20], 1.0);
    }

    #[test]
    fn quasi_convexity() {
        assert!(is_quasi_convex(&[5, 3, 0, 0, 2, 4]));
        assert!(is_quasi_convex(&[0, 0, 1]));
        assert!(!is_quasi_convex(&[3, 1, 2, 1, 4]));
    }

    #[test]
    fn grid_csv_round_trip() {
        let grid = OutcomeGrid {
            object: "box".into(),
            heights: vec![10.0, 20.5],
            forces: vec![5.0, 6.0, 7.0],
            success: vec![vec![false, true, true], vec![false, false, true]],
            unreachable: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        grid.write_csv(&path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "height,5,6,7\n10,F,S,S\n20.5,F,F,S\n"
        );
        assert_eq!(OutcomeGrid::read_csv(&path, "box").unwrap(), grid);
        std::fs::write(&path, "height,5\n10,X\n").unwrap();
        assert!(matches!(OutcomeGrid::read_csv(&path, "box"), Err(Error::GridFormat(_))));
    }
}
