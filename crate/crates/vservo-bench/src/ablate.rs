//! Controller ablations: depth-policy comparison for classical IBVS
//! and reward-structure comparison for the learned policy.

use crate::config::BenchConfig;
use crate::runner::{run_ibvs_row, run_lvs_row};
use crate::suite::Suite;
use crate::table::{ResultTable, Row};
use anyhow::Result;
use vservo_core::dqn::{train, DqnError, QNetwork, TrainConfig};
use vservo_core::metrics::{DistanceMetric, RewardKind, RewardSpec};
use vservo_core::servo::{DepthPolicy, IbvsConfig};
use vservo_core::worldsim::NoiseSpec;

/// Depth-policy rows, each evaluated clean and with correspondence
/// noise (sigma 4 px, 90% coverage, smoothed).
pub const IBVS_LABELS: [&str; 4] = ["gt-depth", "const-depth-4.0", "noisy-depth-0.5", "no-depth"];

fn depth_policy(label: &str, seed: u64) -> DepthPolicy {
    match label {
        "gt-depth" => DepthPolicy::GroundTruth,
        "const-depth-4.0" => DepthPolicy::Constant(4.0),
        "noisy-depth-0.5" => DepthPolicy::Noisy { sigma: 0.5, seed },
        "no-depth" => DepthPolicy::None,
        other => unreachable!("unknown row {other}"),
    }
}

/// Paired comparison of IBVS depth policies, with and without feature
/// noise; appends a learned-policy row when a network is supplied.
pub fn run_ibvs_ablation(
    cfg: &BenchConfig,
    suite: &Suite,
    net: Option<&QNetwork>,
    jobs: usize,
) -> Result<ResultTable> {
    let mut rows = Vec::new();
    for &label in &IBVS_LABELS {
        let base = IbvsConfig {
            depth: depth_policy(label, cfg.seed),
            ..cfg.ibvs
        };
        rows.push(run_ibvs_row(suite, label, &base, jobs)?);

        let noisy = IbvsConfig {
            noise: Some(NoiseSpec {
                sigma: 4.0,
                coverage: 0.9,
                rng_seed: 0, // replaced per episode for pairing
            }),
            smoothing: cfg.smoothing,
            ..base
        };
        rows.push(run_ibvs_row(
            suite,
            &format!("{label}+corr-noise"),
            &noisy,
            jobs,
        )?);
    }
    if let Some(net) = net {
        rows.push(run_lvs_row(
            suite,
            "learned",
            net,
            RewardSpec::default(),
            None,
            None,
            jobs,
        )?);
    }
    Ok(ResultTable { rows })
}

/// The three reward structures compared in the reward ablation.
pub fn reward_rows() -> [(&'static str, RewardSpec); 3] {
    [
        (
            "dist-minimize_d-polar",
            RewardSpec {
                kind: RewardKind::DistMinimize,
                metric: DistanceMetric::Polar,
            },
        ),
        (
            "progress_d-polar",
            RewardSpec {
                kind: RewardKind::Progress,
                metric: DistanceMetric::Polar,
            },
        ),
        (
            "progress_d-pose",
            RewardSpec {
                kind: RewardKind::Progress,
                metric: DistanceMetric::Pose,
            },
        ),
    ]
}

/// Train one policy per reward structure and evaluate all three on the
/// shared suite. A diverged training run becomes a zeroed, flagged row
/// rather than an error.
pub fn run_reward_ablation(
    cfg: &BenchConfig,
    suite: &Suite,
    jobs: usize,
) -> Result<ResultTable> {
    let mut rows = Vec::new();
    for (label, reward) in reward_rows() {
        let train_cfg = TrainConfig {
            reward,
            sample: cfg.sample,
            max_steps: cfg.max_steps,
            ..cfg.train
        };
        match train(&suite.scenes, &suite.cam, &train_cfg, cfg.seed) {
            Ok(result) => {
                rows.push(run_lvs_row(suite, label, &result.net, reward, None, None, jobs)?);
            }
            Err(DqnError::Diverged(..)) => rows.push(Row {
                label: format!("{label}!diverged"),
                successes: 0,
                episodes: suite.episodes.len(),
                total_steps: 0,
                total_final_d: 0.0,
            }),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(ResultTable { rows })
}
