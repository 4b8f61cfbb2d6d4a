//! Quasi-static parallel-jaw grasp episodes: plan finger contacts, press
//! the gel, integrate slip during the lift, label the outcome and record
//! tactile frames.

mod episode;
mod io;
mod model;
mod plan;
mod slip;

pub use episode::{ContactRecord, GraspEpisode, PreparedGrasp, Simulator, SensorSetup};
pub use io::{read_episode_summary, write_episode, ContactSummary, EpisodeSummary, TrajectorySummary};
pub use model::{GraspConfig, GraspLabel, GraspOutcome, GraspThresholds, ObjectModel, GRAVITY};
pub use plan::{contact_forces, plan_grasp, sensor_view, GraspContact, GraspPhase, GraspPlan};
pub use slip::{label_outcome, slip_dynamics, SlipParameters, SlipTrajectory, TIME_STEP};
