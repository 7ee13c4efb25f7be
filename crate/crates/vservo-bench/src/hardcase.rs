//! Constructed qualitative scenario: the goal is laterally offset with
//! a strongly rotated heading, so the classical controller's view
//! diverges from the goal view mid-run and correspondence overlap
//! collapses, while the learned policy keeps acting.

use crate::config::BenchConfig;
use crate::runner::{run_lvs_episode_trace, LvsTrace};
use crate::suite::{Suite, SuiteEpisode};
use anyhow::Result;
use vservo_core::dqn::QNetwork;
use vservo_core::env::EpisodeSpec;
use vservo_core::geom::{CameraIntrinsics, Pose2D};
use vservo_core::metrics::{RewardSpec, SUCCESS_RADIUS};
use vservo_core::servo::{ibvs_episode, IbvsConfig, IbvsEpisode};
use vservo_core::worldsim::{NoiseSpec, Scene, Wall};

pub struct HardcaseResult {
    pub scene: Scene,
    pub start: Pose2D,
    pub goal: Pose2D,
    pub ibvs: IbvsEpisode,
    pub lvs: LvsTrace,
}

/// Fixed geometry: an 8x8 room with a protruding interior wall between
/// the start and the rotated goal view.
pub fn hardcase_scenario() -> (Scene, Pose2D, Pose2D) {
    let mut scene = Scene::empty_room(8.0, 8.0, 2.5);
    // stub wall jutting from the north wall, between start and goal
    scene
        .walls
        .push(Wall::new([4.0, 8.0], [4.0, 5.0], 0.0, 2.5, 10));
    let start = Pose2D::new(2.8, 4.6, -0.2);
    let goal = Pose2D::new(6.2, 5.4, 0.7);
    (scene, start, goal)
}

/// Run IBVS and the learned policy from the identical start pose.
pub fn run_hardcase(cfg: &BenchConfig, net: &QNetwork) -> Result<HardcaseResult> {
    let (scene, start, goal) = hardcase_scenario();
    let cam = CameraIntrinsics::desk_default(cfg.resolution);

    let ibvs = ibvs_episode(
        &scene,
        &start,
        &goal,
        &cam,
        &IbvsConfig {
            depth: vservo_core::servo::DepthPolicy::GroundTruth,
            ..cfg.ibvs
        },
    )?;

    let suite = Suite {
        scenes: vec![scene.clone()],
        episodes: vec![],
        cam,
    };
    let ep = SuiteEpisode {
        scene_idx: 0,
        spec: EpisodeSpec {
            scene_seed: scene.rng_seed,
            start,
            goal,
            max_steps: cfg.max_steps,
            noise: NoiseSpec::clean(cfg.seed),
            smoothing: 1,
            success_threshold: SUCCESS_RADIUS,
        },
    };
    let mut net = net.clone();
    let lvs = run_lvs_episode_trace(&suite, &ep, &mut net, RewardSpec::default())?;

    Ok(HardcaseResult {
        scene,
        start,
        goal,
        ibvs,
        lvs,
    })
}

/// Steps the learned policy took after its observation overlap first
/// dropped below the classical controller's abort threshold.
pub fn lvs_steps_after_overlap_loss(lvs: &LvsTrace, min_overlap: usize) -> usize {
    match lvs.steps.iter().position(|s| s.overlap < min_overlap) {
        Some(first) => lvs.steps.len() - first - 1,
        None => 0,
    }
}
