//! Seeded paired episode suites: every table row replays the exact
//! same (scene, start, goal) list.

use crate::config::BenchConfig;
use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vservo_core::env::{sample_episode, EpisodeSpec};
use vservo_core::geom::CameraIntrinsics;
use vservo_core::worldsim::{generate_scene, NoiseSpec, RoomSpec, Scene};

#[derive(Debug, Clone)]
pub struct SuiteEpisode {
    pub scene_idx: usize,
    pub spec: EpisodeSpec,
}

pub struct Suite {
    pub scenes: Vec<Scene>,
    pub episodes: Vec<SuiteEpisode>,
    pub cam: CameraIntrinsics,
}

/// Generate the suite's rooms from the master seed.
pub fn build_scenes(cfg: &BenchConfig, seed: u64) -> Result<Vec<Scene>> {
    (0..cfg.num_scenes)
        .map(|i| {
            let spec = RoomSpec::new(
                cfg.room_width,
                cfg.room_depth,
                cfg.clutter,
                seed.wrapping_add(i as u64),
            );
            Ok(generate_scene(&spec)?)
        })
        .collect()
}

/// Rejection-sample `cfg.episodes` specs, round-robin over the scenes.
/// The suite seed fully determines every episode.
pub fn build_suite(cfg: &BenchConfig, seed: u64) -> Result<Suite> {
    let cam = CameraIntrinsics::desk_default(cfg.resolution);
    let scenes = build_scenes(cfg, seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5EED_5EED_5EED_5EED);
    let mut episodes = Vec::with_capacity(cfg.episodes);
    for i in 0..cfg.episodes {
        let scene_idx = i % scenes.len();
        let noise = NoiseSpec::clean(rng.gen());
        let spec = sample_episode(
            &scenes[scene_idx],
            &cam,
            &cfg.sample,
            cfg.max_steps,
            noise,
            cfg.smoothing,
            &mut rng,
        )?;
        episodes.push(SuiteEpisode { scene_idx, spec });
    }
    Ok(Suite {
        scenes,
        episodes,
        cam,
    })
}
