//! Episode directories: `frames/NNNN.png`, `markers.csv`, `episode.json`.

use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::episode::GraspEpisode;
use super::model::{GraspConfig, GraspOutcome};
use super::slip::SlipParameters;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSummary {
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    /// mm
    pub indentation_depth: f64,
    /// mm³
    pub achieved_volume: f64,
    /// mm²
    pub area: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub params: SlipParameters,
    /// s
    pub duration: f64,
    /// mm
    pub final_translation: f64,
    /// rad
    pub final_rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub object: String,
    pub config: GraspConfig,
    pub contacts: Vec<ContactSummary>,
    pub trajectory: TrajectorySummary,
    pub outcome: GraspOutcome,
    pub frame_timestamps: Vec<f64>,
}

impl EpisodeSummary {
    pub fn of(episode: &GraspEpisode) -> Self {
        let (final_translation, final_rotation) = episode.trajectory.final_state();
        Self {
            object: episode.object.clone(),
            config: episode.config,
            contacts: episode
                .contacts
                .iter()
                .map(|c| ContactSummary {
                    point: c.point,
                    normal: c.normal,
                    indentation_depth: c.solution.indentation_depth,
                    achieved_volume: c.solution.achieved_volume,
                    area: c.area,
                    iterations: c.solution.iterations,
                })
                .collect(),
            trajectory: TrajectorySummary {
                params: episode.trajectory.params,
                duration: *episode.trajectory.times.last().unwrap(),
                final_translation,
                final_rotation,
            },
            outcome: episode.outcome,
            frame_timestamps: episode.frames.iter().map(|f| f.timestamp).collect(),
        }
    }
}

#[derive(Serialize)]
struct MarkerRow {
    frame: usize,
    marker: usize,
    x: f64,
    y: f64,
}

pub fn write_episode(episode: &GraspEpisode, dir: &Path) -> Result<()> {
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir)?;
    let mut markers = csv::Writer::from_path(dir.join("markers.csv"))?;
    for (i, frame) in episode.frames.iter().enumerate() {
        frame.rgb.save(frames_dir.join(format!("{i:04}.png")))?;
        for (m, &[x, y]) in frame.markers.iter().enumerate() {
            markers.serialize(MarkerRow { frame: i, marker: m, x, y })?;
        }
    }
    markers.flush()?;
    let json = serde_json::to_vec_pretty(&EpisodeSummary::of(episode))?;
    fs::write(dir.join("episode.json"), json)?;
    Ok(())
}

pub fn read_episode_summary(dir: &Path) -> Result<EpisodeSummary> {
    Ok(serde_json::from_slice(&fs::read(dir.join("episode.json"))?)?)
}
