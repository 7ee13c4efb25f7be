//! Noise-robustness sweep for the learned policy: offset-noise
//! magnitude at full coverage, and coverage at zero offset noise.

use crate::config::BenchConfig;
use crate::runner::run_lvs_row;
use crate::suite::Suite;
use crate::table::ResultTable;
use anyhow::Result;
use vservo_core::dqn::QNetwork;
use vservo_core::metrics::RewardSpec;

pub const SIGMA_GRID: [f64; 5] = [0.0, 4.0, 8.0, 16.0, 32.0];
pub const COVERAGE_GRID: [f64; 6] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5];

/// Evaluate the trained policy across the full noise grid. Smoothing
/// uses the config kernel; rows share episode seeds.
pub fn run_noise_sweep(
    cfg: &BenchConfig,
    suite: &Suite,
    net: &QNetwork,
    jobs: usize,
) -> Result<ResultTable> {
    let reward = RewardSpec::default();
    let mut rows = Vec::new();
    for sigma in SIGMA_GRID {
        rows.push(run_lvs_row(
            suite,
            &format!("sigma-{sigma:.0}"),
            net,
            reward,
            Some((sigma, 1.0)),
            Some(cfg.smoothing),
            jobs,
        )?);
    }
    for coverage in COVERAGE_GRID {
        rows.push(run_lvs_row(
            suite,
            &format!("coverage-{coverage:.1}"),
            net,
            reward,
            Some((0.0, coverage)),
            Some(cfg.smoothing),
            jobs,
        )?);
    }
    Ok(ResultTable { rows })
}
