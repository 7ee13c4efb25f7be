//! Closed-loop IBVS episode: render, select, control, integrate.

use super::control::{ibvs_twist, ibvs_twist_unicycle, nodepth_control, RobotTwist, Steering};
use super::features::{resolve_depths, select_features, DepthPolicy};
use super::ServoError;
use crate::geom::{normalize_angle, CameraIntrinsics, Pose2D};
use crate::metrics::{d_polar, is_success};
use crate::worldsim::{
    correspondence_map_with_depth, inject_noise, overlap_count, render_depth, smooth_map,
    NoiseSpec, Scene,
};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    CorrespondenceLost,
    DegenerateJacobian,
    MaxSteps,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::Success => "Success",
            Outcome::CorrespondenceLost => "CorrespondenceLost",
            Outcome::DegenerateJacobian => "DegenerateJacobian",
            Outcome::MaxSteps => "MaxSteps",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbvsConfig {
    pub gain: f64,
    pub dt: f64,
    pub max_steps: u32,
    pub min_overlap: usize,
    pub num_features: usize,
    pub depth: DepthPolicy,
    pub holonomic: bool,
    /// Twist realization on the non-holonomic base; ignored when
    /// `holonomic` is set.
    pub steering: Steering,
    /// Correspondence noise applied before feature selection, modeling
    /// imperfect matching. `None` means ground-truth correspondences.
    pub noise: Option<NoiseSpec>,
    /// Box-smoothing kernel applied before selection; 1 = off.
    pub smoothing: u32,
    pub robot_radius: f64,
}

impl Default for IbvsConfig {
    fn default() -> Self {
        Self {
            gain: 0.5,
            dt: 0.2,
            max_steps: 300,
            min_overlap: 256,
            num_features: 4,
            depth: DepthPolicy::GroundTruth,
            holonomic: false,
            steering: Steering::ColumnDrop,
            noise: None,
            smoothing: 1,
            robot_radius: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajStep {
    pub step: u32,
    pub pose: Pose2D,
    pub twist: RobotTwist,
    pub d_polar: f64,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbvsEpisode {
    pub steps: Vec<TrajStep>,
    pub outcome: Outcome,
    pub final_pose: Pose2D,
    pub final_d_polar: f64,
}

/// Integrate a servo-frame twist over dt: forward along the heading,
/// lateral to the right, positive wy turning right.
pub fn integrate_twist(pose: &Pose2D, twist: &RobotTwist, dt: f64) -> Pose2D {
    let (c, s) = (pose.theta.cos(), pose.theta.sin());
    Pose2D::new(
        pose.x + dt * (twist.vz * c + twist.vx * s),
        pose.y + dt * (twist.vz * s - twist.vx * c),
        normalize_angle(pose.theta - dt * twist.wy).expect("finite"),
    )
}

/// Run one closed-loop IBVS episode. All failures are outcomes, not
/// errors; the only error source is rendering from an invalid pose.
pub fn ibvs_episode(
    scene: &Scene,
    start: &Pose2D,
    goal: &Pose2D,
    cam: &CameraIntrinsics,
    config: &IbvsConfig,
) -> Result<IbvsEpisode, crate::worldsim::SimError> {
    let mut pose = *start;
    let mut steps = Vec::new();
    let goal_depth_check = render_depth(scene, goal, cam)?; // validates goal pose
    drop(goal_depth_check);

    let outcome = loop {
        let step = steps.len() as u32;
        if is_success(&pose, goal) {
            break Outcome::Success;
        }
        if step >= config.max_steps {
            break Outcome::MaxSteps;
        }

        let cur_depth = render_depth(scene, &pose, cam)?;
        let mut map = correspondence_map_with_depth(scene, &cur_depth, &pose, goal, cam);
        if let Some(noise) = &config.noise {
            let step_spec = NoiseSpec {
                rng_seed: noise.rng_seed.wrapping_add(step as u64),
                ..*noise
            };
            map = inject_noise(&map, &step_spec);
        }
        if config.smoothing > 1 {
            map = smooth_map(&map, config.smoothing).expect("odd kernel");
        }
        let overlap = overlap_count(&map);
        if overlap < config.min_overlap {
            break Outcome::CorrespondenceLost;
        }

        let matches = match select_features(&map, config.num_features) {
            Ok(m) => m,
            Err(ServoError::FeatureStarvation) => break Outcome::CorrespondenceLost,
            Err(_) => unreachable!(),
        };
        let feats = resolve_depths(&matches, &config.depth, &cur_depth, step as u64);
        let twist = match (config.depth, config.holonomic, config.steering) {
            (DepthPolicy::None, _, _) => nodepth_control(&feats, cam, config.gain),
            (_, false, Steering::LateralBlend { k, yaw_cap }) => {
                ibvs_twist_unicycle(&feats, cam, config.gain, k, yaw_cap)
            }
            (_, holonomic, _) => ibvs_twist(&feats, cam, config.gain, holonomic),
        };
        let twist = match twist {
            Ok(t) => t,
            Err(ServoError::DegenerateJacobian(_)) => break Outcome::DegenerateJacobian,
            Err(ServoError::FeatureStarvation) => break Outcome::CorrespondenceLost,
            Err(_) => unreachable!(),
        };

        let next = integrate_twist(&pose, &twist, config.dt);
        let moved = scene.segment_is_free([pose.x, pose.y], [next.x, next.y], config.robot_radius);
        steps.push(TrajStep {
            step,
            pose,
            twist,
            d_polar: d_polar(&pose, goal),
            overlap,
        });
        if moved {
            pose = next;
        } else {
            // blocked by a wall: heading still changes, position holds
            pose = Pose2D::new(pose.x, pose.y, next.theta);
        }
    };

    Ok(IbvsEpisode {
        steps,
        outcome,
        final_pose: pose,
        final_d_polar: d_polar(&pose, goal),
    })
}

/// Trajectory CSV: step,x,y,theta,vx,vz,wy,d_polar,overlap_count,outcome.
pub fn trajectory_csv(ep: &IbvsEpisode) -> String {
    let mut out = String::from("step,x,y,theta,vx,vz,wy,d_polar,overlap_count,outcome\n");
    for s in &ep.steps {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            s.step,
            s.pose.x,
            s.pose.y,
            s.pose.theta,
            s.twist.vx,
            s.twist.vz,
            s.twist.wy,
            s.d_polar,
            s.overlap,
            ep.outcome
        ));
    }
    out
}
