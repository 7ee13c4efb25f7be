//! Pose-error metrics and the reward structure.
//!
//! `d_polar` expresses the pose error in the goal frame as a range `rho`,
//! a bearing error `alpha`, and a heading error `beta`, combined with
//! weights 0.2. Rewards are the clamped per-step decrease of normalized
//! distance-to-goal (`DistMinimize`) or net progress from the start
//! (`Progress`).

use crate::geom::{angular_distance, normalize_angle, Pose2D};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SUCCESS_RADIUS: f64 = 0.2;
pub const LAMBDA_ALPHA: f64 = 0.2;
pub const LAMBDA_BETA: f64 = 0.2;
pub const LAMBDA_THETA: f64 = 0.2;

/// Below this range the bearing is undefined; alpha is set to 0 and
/// beta carries the full heading error.
const RHO_DEGENERATE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("d_init must be positive, got {0}")]
    NonpositiveInit(f64),
}

/// Goal-frame pose error (rho, alpha, beta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarError {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardKind {
    DistMinimize,
    Progress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    Polar,
    Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub kind: RewardKind,
    pub metric: DistanceMetric,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            kind: RewardKind::DistMinimize,
            metric: DistanceMetric::Polar,
        }
    }
}

impl RewardSpec {
    pub fn distance(&self, current: &Pose2D, goal: &Pose2D) -> f64 {
        match self.metric {
            DistanceMetric::Polar => d_polar(current, goal),
            DistanceMetric::Pose => d_pose(current, goal, LAMBDA_THETA),
        }
    }
}

pub fn polar_error(current: &Pose2D, goal: &Pose2D) -> PolarError {
    let dx = goal.x - current.x;
    let dy = goal.y - current.y;
    let rho = (dx * dx + dy * dy).sqrt();
    if rho < RHO_DEGENERATE {
        return PolarError {
            rho,
            alpha: 0.0,
            beta: normalize_angle(goal.theta - current.theta).expect("finite headings"),
        };
    }
    let bearing = dy.atan2(dx);
    PolarError {
        rho,
        alpha: normalize_angle(bearing - current.theta).expect("finite"),
        beta: normalize_angle(goal.theta - bearing).expect("finite"),
    }
}

/// rho + 0.2|alpha| + 0.2|beta|.
pub fn d_polar(current: &Pose2D, goal: &Pose2D) -> f64 {
    let e = polar_error(current, goal);
    e.rho + LAMBDA_ALPHA * angular_distance(e.alpha, 0.0) + LAMBDA_BETA * angular_distance(e.beta, 0.0)
}

/// Euclidean position distance plus weighted heading distance.
pub fn d_pose(current: &Pose2D, goal: &Pose2D, lambda_theta: f64) -> f64 {
    current.position_distance(goal) + lambda_theta * angular_distance(goal.theta, current.theta)
}

/// Per-step reward from previous/current/initial distances. Always in [0, 1].
pub fn reward(d_prev: f64, d_t: f64, d_init: f64, kind: RewardKind) -> Result<f64, MetricError> {
    if !(d_init > 0.0) {
        return Err(MetricError::NonpositiveInit(d_init));
    }
    let r = match kind {
        RewardKind::DistMinimize => {
            ((d_prev / d_init).min(1.0) - (d_t / d_init).min(1.0)).max(0.0)
        }
        RewardKind::Progress => ((d_init - d_t) / d_init).max(0.0),
    };
    Ok(r.min(1.0))
}

/// Position within 0.2 m of the goal; heading unconstrained.
pub fn is_success(current: &Pose2D, goal: &Pose2D) -> bool {
    current.position_distance(goal) <= SUCCESS_RADIUS
}
