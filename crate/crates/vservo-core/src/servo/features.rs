//! Feature selection from correspondence maps and depth resolution.

use super::ServoError;
use crate::worldsim::{CorrespondenceMap, DepthImage};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Minimum resolved depth after noise clamping, meters.
const MIN_DEPTH: f64 = 0.05;

/// A matched pixel pair without a depth estimate: (u, v) in the current
/// view, (u_star, v_star) in the goal view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelMatch {
    pub u: f64,
    pub v: f64,
    pub u_star: f64,
    pub v_star: f64,
}

impl PixelMatch {
    pub fn offset_magnitude(&self) -> f64 {
        ((self.u_star - self.u).powi(2) + (self.v_star - self.v).powi(2)).sqrt()
    }
}

/// A matched pixel pair plus the depth used in the interaction matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFeature {
    pub u: f64,
    pub v: f64,
    pub u_star: f64,
    pub v_star: f64,
    pub z: f64,
}

/// How the feature depth for the interaction matrix is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DepthPolicy {
    GroundTruth,
    Constant(f64),
    Noisy { sigma: f64, seed: u64 },
    /// Angular-velocity-only control with constant forward speed;
    /// depth never enters the control law.
    None,
}

/// Pick up to `k` valid correspondences with the largest offset
/// magnitude, subject to a minimum pairwise pixel separation of
/// width/8. Ties break in raster order.
pub fn select_features(
    m: &CorrespondenceMap,
    k: usize,
) -> Result<Vec<PixelMatch>, ServoError> {
    let min_sep = m.width as f64 / 8.0;
    let mut candidates: Vec<(f64, PixelMatch)> = Vec::new();
    for j in 0..m.height {
        for i in 0..m.width {
            if let Some((dx, dy)) = m.offset(i, j) {
                let u = i as f64 + 0.5;
                let v = j as f64 + 0.5;
                let pm = PixelMatch { u, v, u_star: u + dx, v_star: v + dy };
                candidates.push((pm.offset_magnitude(), pm));
            }
        }
    }
    // stable sort keeps raster order among equal magnitudes
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut picked: Vec<PixelMatch> = Vec::new();
    for (_, c) in &candidates {
        if picked.len() >= k {
            break;
        }
        let spread = picked.iter().all(|p| {
            ((p.u - c.u).powi(2) + (p.v - c.v).powi(2)).sqrt() >= min_sep
        });
        if spread {
            picked.push(*c);
        }
    }
    if picked.len() < 2 {
        return Err(ServoError::FeatureStarvation);
    }
    Ok(picked)
}

/// Attach a depth estimate to a matched pixel according to the policy.
/// `rng` is consumed only by the `Noisy` variant.
pub fn resolve_depth(
    m: &PixelMatch,
    policy: &DepthPolicy,
    gt: &DepthImage,
    rng: &mut dyn RngCore,
) -> PixelFeature {
    let gt_at = || {
        let u = (m.u.floor() as u32).min(gt.width - 1);
        let v = (m.v.floor() as u32).min(gt.height - 1);
        gt.at(u, v)
    };
    let z = match policy {
        DepthPolicy::GroundTruth => gt_at(),
        DepthPolicy::Constant(c) => *c,
        DepthPolicy::Noisy { sigma, .. } => {
            let g: f64 = StandardNormal.sample(rng);
            (gt_at() + sigma * g).max(MIN_DEPTH)
        }
        // depth unused by the no-depth controller
        DepthPolicy::None => 1.0,
    };
    PixelFeature { u: m.u, v: m.v, u_star: m.u_star, v_star: m.v_star, z }
}

/// Resolve a whole feature set with a deterministic noise stream.
pub fn resolve_depths(
    matches: &[PixelMatch],
    policy: &DepthPolicy,
    gt: &DepthImage,
    stream_seed: u64,
) -> Vec<PixelFeature> {
    let seed = match policy {
        DepthPolicy::Noisy { seed, .. } => seed.wrapping_add(stream_seed),
        _ => stream_seed,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    matches
        .iter()
        .map(|m| resolve_depth(m, policy, gt, &mut rng))
        .collect()
}
