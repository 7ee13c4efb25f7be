//! Episode execution: classical IBVS rows and learned-policy rows over
//! a shared suite, with an optional worker pool.

use crate::suite::{Suite, SuiteEpisode};
use crate::table::Row;
use anyhow::Result;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use vservo_core::dqn::QNetwork;
use vservo_core::env::Episode;
use vservo_core::geom::Pose2D;
use vservo_core::metrics::{d_polar, RewardSpec};
use vservo_core::servo::{ibvs_episode, IbvsConfig, Outcome};
use vservo_core::worldsim::{overlap_count, NoiseSpec};

/// Map `f` over `items` with `jobs` workers; output order matches
/// input order regardless of scheduling.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("worker filled slot"))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: u32,
    pub final_d_polar: f64,
}

fn aggregate(label: &str, results: &[EpisodeResult]) -> Row {
    Row {
        label: label.to_string(),
        successes: results.iter().filter(|r| r.success).count(),
        episodes: results.len(),
        total_steps: results.iter().map(|r| r.steps as u64).sum(),
        total_final_d: results.iter().map(|r| r.final_d_polar).sum(),
    }
}

/// Run one IBVS configuration over the whole suite. Per-episode
/// correspondence noise streams derive from the episode's suite seed
/// so rows stay paired.
pub fn run_ibvs_row(
    suite: &Suite,
    label: &str,
    cfg: &IbvsConfig,
    jobs: usize,
) -> Result<Row> {
    let results: Vec<Result<EpisodeResult>> = parallel_map(&suite.episodes, jobs, |ep| {
        let mut row_cfg = *cfg;
        if let Some(noise) = &mut row_cfg.noise {
            noise.rng_seed = ep.spec.noise.rng_seed;
        }
        let scene = &suite.scenes[ep.scene_idx];
        let out = ibvs_episode(scene, &ep.spec.start, &ep.spec.goal, &suite.cam, &row_cfg)?;
        Ok(EpisodeResult {
            success: out.outcome == Outcome::Success,
            steps: out.steps.len() as u32,
            final_d_polar: out.final_d_polar,
        })
    });
    let results: Vec<EpisodeResult> = results.into_iter().collect::<Result<_>>()?;
    Ok(aggregate(label, &results))
}

/// Run one greedy learned-policy episode.
pub fn run_lvs_episode(
    suite: &Suite,
    ep: &SuiteEpisode,
    net: &mut QNetwork,
    reward: RewardSpec,
) -> Result<EpisodeResult> {
    let scene = &suite.scenes[ep.scene_idx];
    let mut episode = Episode::start(scene, &suite.cam, ep.spec.clone(), reward)?;
    while !episode.terminal {
        let obs = episode.observe()?;
        let action = net.act_greedy(&obs);
        episode.step(action)?;
    }
    Ok(EpisodeResult {
        success: episode.succeeded,
        steps: episode.step_count,
        final_d_polar: d_polar(&episode.pose, &episode.spec.goal),
    })
}

/// Run the learned policy over the whole suite, optionally overriding
/// per-episode noise magnitude (seeds stay paired) and smoothing.
pub fn run_lvs_row(
    suite: &Suite,
    label: &str,
    net: &QNetwork,
    reward: RewardSpec,
    noise_override: Option<(f64, f64)>, // (sigma, coverage)
    smoothing_override: Option<u32>,
    jobs: usize,
) -> Result<Row> {
    let results: Vec<Result<EpisodeResult>> = parallel_map(&suite.episodes, jobs, |ep| {
        let mut ep = ep.clone();
        if let Some((sigma, coverage)) = noise_override {
            ep.spec.noise = NoiseSpec {
                sigma,
                coverage,
                rng_seed: ep.spec.noise.rng_seed,
            };
        }
        if let Some(k) = smoothing_override {
            ep.spec.smoothing = k;
        }
        let mut net = net.clone();
        run_lvs_episode(suite, &ep, &mut net, reward)
    });
    let results: Vec<EpisodeResult> = results.into_iter().collect::<Result<_>>()?;
    Ok(aggregate(label, &results))
}

/// One learned-policy step as recorded in a trace.
#[derive(Debug, Clone, Copy)]
pub struct LvsStep {
    pub step: u32,
    pub pose: Pose2D,
    pub action: usize,
    pub reward: f64,
    pub d_polar: f64,
    pub overlap: usize,
}

#[derive(Debug, Clone)]
pub struct LvsTrace {
    pub steps: Vec<LvsStep>,
    pub success: bool,
    pub final_pose: Pose2D,
    pub final_d_polar: f64,
}

/// Greedy learned-policy episode with a full per-step trace.
pub fn run_lvs_episode_trace(
    suite: &Suite,
    ep: &SuiteEpisode,
    net: &mut QNetwork,
    reward: RewardSpec,
) -> Result<LvsTrace> {
    let scene = &suite.scenes[ep.scene_idx];
    let mut episode = Episode::start(scene, &suite.cam, ep.spec.clone(), reward)?;
    let mut steps = Vec::new();
    while !episode.terminal {
        let obs = episode.observe()?;
        let overlap = overlap_count(&obs);
        let pose = episode.pose;
        let step = episode.step_count;
        let action = net.act_greedy(&obs);
        let t = episode.step(action)?;
        steps.push(LvsStep {
            step,
            pose,
            action,
            reward: t.reward,
            d_polar: d_polar(&pose, &episode.spec.goal),
            overlap,
        });
    }
    Ok(LvsTrace {
        steps,
        success: episode.succeeded,
        final_pose: episode.pose,
        final_d_polar: d_polar(&episode.pose, &episode.spec.goal),
    })
}

/// Trace CSV: step,x,y,theta,action,reward,d_polar,overlap_count,outcome.
pub fn lvs_trace_csv(trace: &LvsTrace) -> String {
    let outcome = if trace.success { "Success" } else { "MaxSteps" };
    let mut out = String::from("step,x,y,theta,action,reward,d_polar,overlap_count,outcome\n");
    for s in &trace.steps {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{},{:.6},{:.6},{},{}\n",
            s.step, s.pose.x, s.pose.y, s.pose.theta, s.action, s.reward, s.d_polar, s.overlap,
            outcome
        ));
    }
    out
}
