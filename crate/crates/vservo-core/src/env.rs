//! Episode MDP for the learned controller: 7 discrete heading-offset
//! actions with a fixed 0.1 m forward step, rejection-sampled start and
//! goal poses, correspondence-map observations, and progress rewards.

use crate::geom::{normalize_angle, CameraIntrinsics, Pose2D};
use crate::metrics::{is_success, reward, RewardSpec, SUCCESS_RADIUS};
use crate::worldsim::{
    correspondence_map_with_depth, inject_noise, overlap_count, render_depth, smooth_map,
    CorrespondenceMap, NoiseSpec, Scene, SimError,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Heading offsets of the 7 forward actions, radians.
pub const ACTION_DELTAS: [f64; 7] = [
    -std::f64::consts::FRAC_PI_4,
    -std::f64::consts::FRAC_PI_6,
    -std::f64::consts::PI / 15.0,
    0.0,
    std::f64::consts::PI / 15.0,
    std::f64::consts::FRAC_PI_6,
    std::f64::consts::FRAC_PI_4,
];
pub const NUM_ACTIONS: usize = 7;
pub const STEP_LENGTH: f64 = 0.1;
pub const ROBOT_RADIUS: f64 = 0.15;
pub const MIN_OVERLAP: usize = 256;
const MAX_SAMPLE_REJECTIONS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("action index {0} out of range 0..7")]
    BadAction(usize),
    #[error("episode is already terminal")]
    Terminal,
    #[error("could not sample a valid episode in {MAX_SAMPLE_REJECTIONS} attempts")]
    SamplingExhausted,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Pose range constraints for episode sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub min_distance: f64,
    pub max_distance: f64,
    /// Bearing of the goal relative to the start heading, and relative
    /// heading of the goal pose, both limited to +/- this value.
    pub max_relative_angle: f64,
    pub clearance: f64,
    pub min_overlap: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self {
            min_distance: 0.5,
            max_distance: 4.0,
            max_relative_angle: std::f64::consts::FRAC_PI_4,
            clearance: 0.2,
            min_overlap: MIN_OVERLAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub scene_seed: u64,
    pub start: Pose2D,
    pub goal: Pose2D,
    pub max_steps: u32,
    pub noise: NoiseSpec,
    pub smoothing: u32,
    pub success_threshold: f64,
}

/// One environment step as stored in replay memory.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: CorrespondenceMap,
    pub action: usize,
    pub reward: f64,
    pub next_observation: CorrespondenceMap,
    pub terminal: bool,
}

/// Rotate by the action's heading offset, then move 0.1 m forward.
pub fn apply_action(pose: &Pose2D, action: usize) -> Result<Pose2D, EnvError> {
    let delta = *ACTION_DELTAS.get(action).ok_or(EnvError::BadAction(action))?;
    let theta = normalize_angle(pose.theta + delta).expect("finite");
    Ok(Pose2D::new(
        pose.x + STEP_LENGTH * theta.cos(),
        pose.y + STEP_LENGTH * theta.sin(),
        theta,
    ))
}

/// Rejection-sample an episode satisfying all range, clearance, and
/// overlap invariants.
pub fn sample_episode(
    scene: &Scene,
    cam: &CameraIntrinsics,
    params: &SampleParams,
    max_steps: u32,
    noise: NoiseSpec,
    smoothing: u32,
    rng: &mut dyn RngCore,
) -> Result<EpisodeSpec, EnvError> {
    let [[x0, y0], [x1, y1]] = scene.bounds;
    let clearance = params.clearance.max(ROBOT_RADIUS);
    for _ in 0..MAX_SAMPLE_REJECTIONS {
        let sx = rng.gen_range(x0..x1);
        let sy = rng.gen_range(y0..y1);
        let sth = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let start = Pose2D::new(sx, sy, sth);
        if !scene.is_free(sx, sy, clearance) {
            continue;
        }
        let dist = rng.gen_range(params.min_distance..=params.max_distance);
        let bearing = rng.gen_range(-params.max_relative_angle..=params.max_relative_angle);
        let rel_heading = rng.gen_range(-params.max_relative_angle..=params.max_relative_angle);
        let dir = sth + bearing;
        let goal = Pose2D::new(
            sx + dist * dir.cos(),
            sy + dist * dir.sin(),
            sth + rel_heading,
        );
        if !scene.is_free(goal.x, goal.y, clearance) {
            continue;
        }
        let Ok(m) = crate::worldsim::correspondence_map(scene, &start, &goal, cam) else {
            continue;
        };
        if overlap_count(&m) < params.min_overlap {
            continue;
        }
        return Ok(EpisodeSpec {
            scene_seed: scene.rng_seed,
            start,
            goal,
            max_steps,
            noise,
            smoothing,
            success_threshold: SUCCESS_RADIUS,
        });
    }
    Err(EnvError::SamplingExhausted)
}

/// Live episode state.
pub struct Episode {
    pub scene: Scene,
    pub cam: CameraIntrinsics,
    pub spec: EpisodeSpec,
    pub reward_spec: RewardSpec,
    pub pose: Pose2D,
    pub step_count: u32,
    pub terminal: bool,
    pub succeeded: bool,
    d_init: f64,
    d_prev: f64,
    /// When true, losing FOV overlap ends the episode (off by default:
    /// the learned policy keeps acting on an all-invalid map).
    pub terminate_on_overlap_loss: bool,
}

impl Episode {
    pub fn start(
        scene: &Scene,
        cam: &CameraIntrinsics,
        spec: EpisodeSpec,
        reward_spec: RewardSpec,
    ) -> Result<Self, EnvError> {
        render_depth(scene, &spec.goal, cam)?; // validates the goal pose
        let d_init = reward_spec.distance(&spec.start, &spec.goal);
        Ok(Self {
            scene: scene.clone(),
            cam: *cam,
            pose: spec.start,
            step_count: 0,
            terminal: is_success(&spec.start, &spec.goal),
            succeeded: is_success(&spec.start, &spec.goal),
            d_init,
            d_prev: d_init,
            terminate_on_overlap_loss: false,
            spec,
            reward_spec,
        })
    }

    /// Post-noise, post-smoothing correspondence observation at the
    /// current pose. Deterministic per (episode noise seed, step).
    pub fn observe(&self) -> Result<CorrespondenceMap, EnvError> {
        let cur_depth = render_depth(&self.scene, &self.pose, &self.cam)?;
        let mut m = correspondence_map_with_depth(
            &self.scene,
            &cur_depth,
            &self.pose,
            &self.spec.goal,
            &self.cam,
        );
        if !self.spec.noise.is_identity() {
            let step_spec = NoiseSpec {
                rng_seed: self.spec.noise.rng_seed.wrapping_add(self.step_count as u64),
                ..self.spec.noise
            };
            m = inject_noise(&m, &step_spec);
        }
        if self.spec.smoothing > 1 {
            m = smooth_map(&m, self.spec.smoothing)?;
        }
        Ok(m)
    }

    pub fn d_current(&self) -> f64 {
        self.reward_spec.distance(&self.pose, &self.spec.goal)
    }

    /// Take one action. A step into a wall leaves the pose unchanged
    /// but still consumes the step.
    pub fn step(&mut self, action: usize) -> Result<Transition, EnvError> {
        if self.terminal {
            return Err(EnvError::Terminal);
        }
        let observation = self.observe()?;
        let next = apply_action(&self.pose, action)?;
        if self
            .scene
            .segment_is_free([self.pose.x, self.pose.y], [next.x, next.y], ROBOT_RADIUS)
        {
            self.pose = next;
        } else {
            // blocked: keep position, keep heading change
            self.pose = Pose2D::new(self.pose.x, self.pose.y, next.theta);
        }
        self.step_count += 1;

        let d_t = self.d_current();
        let r = reward(self.d_prev, d_t, self.d_init, self.reward_spec.kind)
            .expect("d_init > 0 by sampling invariant");
        self.d_prev = d_t;

        if is_success(&self.pose, &self.spec.goal) {
            self.terminal = true;
            self.succeeded = true;
        } else if self.step_count >= self.spec.max_steps {
            self.terminal = true;
        }

        let next_observation = self.observe()?;
        if self.terminate_on_overlap_loss
            && !self.terminal
            && overlap_count(&next_observation) < MIN_OVERLAP
        {
            self.terminal = true;
        }

        Ok(Transition {
            observation,
            action,
            reward: r,
            next_observation,
            terminal: self.terminal,
        })
    }

    /// JSON-lines step log entry.
    pub fn log_line(&self, action: usize, r: f64, valid_count: usize) -> String {
        serde_json::json!({
            "step": self.step_count,
            "x": self.pose.x,
            "y": self.pose.y,
            "theta": self.pose.theta,
            "action": action,
            "reward": r,
            "d_polar": crate::metrics::d_polar(&self.pose, &self.spec.goal),
            "valid_count": valid_count,
        })
        .to_string()
    }
}

/// Convenience sampler with default params and a derived RNG.
pub fn sample_episode_seeded(
    scene: &Scene,
    cam: &CameraIntrinsics,
    params: &SampleParams,
    max_steps: u32,
    noise: NoiseSpec,
    smoothing: u32,
    seed: u64,
) -> Result<EpisodeSpec, EnvError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_episode(scene, cam, params, max_steps, noise, smoothing, &mut rng)
}
