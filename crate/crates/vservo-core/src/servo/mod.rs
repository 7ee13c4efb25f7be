//! Classical image-based visual servoing.
//!
//! Features picked from the correspondence map feed the stacked
//! interaction matrix; the commanded twist is the damped pseudo-inverse
//! solution of the pixel error, integrated in closed loop until the
//! robot succeeds, loses field-of-view overlap, or hits a degenerate
//! Jacobian.

mod control;
mod episode;
mod features;

pub use control::{
    ibvs_twist, ibvs_twist_unicycle, interaction_row, nodepth_control, InteractionMatrix,
    RobotTwist, Steering, DAMPING, MAX_LINEAR_SPEED, MAX_YAW_RATE, NODEPTH_FORWARD_SPEED,
    SINGULARITY_THRESHOLD,
};
pub use episode::{ibvs_episode, integrate_twist, trajectory_csv, IbvsConfig, IbvsEpisode, Outcome, TrajStep};
pub use features::{resolve_depth, resolve_depths, select_features, DepthPolicy, PixelFeature, PixelMatch};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ServoError {
    #[error("fewer than 2 spread-out features available")]
    FeatureStarvation,
    #[error("interaction matrix is rank-deficient (smallest singular value {0:.3e})")]
    DegenerateJacobian(f64),
    #[error("feature depth must be positive, got {0}")]
    NonpositiveDepth(f64),
}
