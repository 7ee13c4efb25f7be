//! Dense ground-truth correspondence between two views, smoothing, and
//! noise injection.
//!
//! For every pixel of the current view we back-project with rendered
//! depth, re-project into the goal camera, and store the pixel offset
//! (dx, dy) when the point is in-frame, in front, and not occluded in
//! the goal view. Invalid pixels hold a 0 sentinel.

use super::render::{depth_along_pixel_ray, render_depth, DepthImage};
use super::scene::Scene;
use super::SimError;
use crate::geom::{back_project, camera_to_world, project, world_to_camera, CameraIntrinsics, Pose2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Goal-view depth tolerance for the occlusion test, meters.
pub const OCCLUSION_EPS: f64 = 0.01;

const CORR_MAGIC: &[u8; 4] = b"CORR";

/// Two-channel per-pixel offset field with validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMap {
    pub width: u32,
    pub height: u32,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CorrespondenceMap {
    pub fn invalid(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self {
            width,
            height,
            dx: vec![0.0; n],
            dy: vec![0.0; n],
            valid: vec![false; n],
        }
    }

    #[inline]
    pub fn idx(&self, u: u32, v: u32) -> usize {
        (v * self.width + u) as usize
    }

    /// Offset at a pixel, None when invalid.
    pub fn offset(&self, u: u32, v: u32) -> Option<(f64, f64)> {
        let i = self.idx(u, v);
        self.valid[i].then(|| (self.dx[i], self.dy[i]))
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Correspondence-quality degradation model standing in for real
/// feature extraction error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Std-dev of Gaussian offset noise, pixels.
    pub sigma: f64,
    /// Probability of a valid pixel keeping its correspondence.
    pub coverage: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn clean(seed: u64) -> Self {
        Self { sigma: 0.0, coverage: 1.0, rng_seed: seed }
    }

    pub fn is_identity(&self) -> bool {
        self.sigma == 0.0 && self.coverage >= 1.0
    }
}

/// Number of valid correspondences; the FOV-overlap measure.
pub fn overlap_count(m: &CorrespondenceMap) -> usize {
    m.valid_count()
}

/// Build the dense correspondence map from `current` to `goal`,
/// rendering both depth images internally.
pub fn correspondence_map(
    scene: &Scene,
    current: &Pose2D,
    goal: &Pose2D,
    cam: &CameraIntrinsics,
) -> Result<CorrespondenceMap, SimError> {
    let cur_depth = render_depth(scene, current, cam)?;
    Ok(correspondence_map_with_depth(scene, &cur_depth, current, goal, cam))
}

/// Same as [`correspondence_map`] but reusing a pre-rendered current
/// depth image. Occlusion is tested by casting the exact goal-view ray
/// through the target sub-pixel coordinate and comparing first-hit
/// depth against the point's goal-camera Z.
pub fn correspondence_map_with_depth(
    scene: &Scene,
    cur_depth: &DepthImage,
    current: &Pose2D,
    goal: &Pose2D,
    cam: &CameraIntrinsics,
) -> CorrespondenceMap {
    let mut m = CorrespondenceMap::invalid(cam.width, cam.height);
    for j in 0..cam.height {
        for i in 0..cam.width {
            if !cur_depth.is_hit(i, j) {
                continue;
            }
            let uc = i as f64 + 0.5;
            let vc = j as f64 + 0.5;
            let p_cam = back_project(uc, vc, cur_depth.at(i, j), cam);
            let p_world = camera_to_world(p_cam, current, cam);
            let p_goal = world_to_camera(p_world, goal, cam);
            let Some((ug, vg)) = project(&p_goal, cam).pixel() else {
                continue;
            };
            let seen = depth_along_pixel_ray(scene, goal, cam, ug, vg, cur_depth.max_range);
            if (seen - p_goal.z).abs() > OCCLUSION_EPS {
                continue;
            }
            let k = m.idx(i, j);
            m.dx[k] = ug - uc;
            m.dy[k] = vg - vc;
            m.valid[k] = true;
        }
    }
    m
}

/// Box-average over valid neighbors only. A pixel becomes valid if its
/// window contains at least one valid pixel. `kernel` must be odd;
/// kernel 1 is the identity.
pub fn smooth_map(m: &CorrespondenceMap, kernel: u32) -> Result<CorrespondenceMap, SimError> {
    if kernel % 2 == 0 {
        return Err(SimError::EvenKernel(kernel));
    }
    if kernel == 1 {
        return Ok(m.clone());
    }
    let r = (kernel / 2) as i64;
    let (w, h) = (m.width as i64, m.height as i64);
    let mut out = CorrespondenceMap::invalid(m.width, m.height);
    for j in 0..h {
        for i in 0..w {
            let mut sx = 0.0;
            let mut sy = 0.0;
            let mut n = 0u32;
            for dj in -r..=r {
                let jj = j + dj;
                if jj < 0 || jj >= h {
                    continue;
                }
                for di in -r..=r {
                    let ii = i + di;
                    if ii < 0 || ii >= w {
                        continue;
                    }
                    let k = (jj * w + ii) as usize;
                    if m.valid[k] {
                        sx += m.dx[k];
                        sy += m.dy[k];
                        n += 1;
                    }
                }
            }
            if n > 0 {
                let k = (j * w + i) as usize;
                out.dx[k] = sx / n as f64;
                out.dy[k] = sy / n as f64;
                out.valid[k] = true;
            }
        }
    }
    Ok(out)
}

/// Add per-pixel Gaussian offset noise, then drop each pixel with
/// probability 1 - coverage. Deterministic in `spec.rng_seed`.
pub fn inject_noise(m: &CorrespondenceMap, spec: &NoiseSpec) -> CorrespondenceMap {
    let mut out = m.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.rng_seed);
    for k in 0..out.valid.len() {
        if !out.valid[k] {
            continue;
        }
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        out.dx[k] += spec.sigma * gx;
        out.dy[k] += spec.sigma * gy;
        if rng.gen::<f64>() >= spec.coverage {
            out.dx[k] = 0.0;
            out.dy[k] = 0.0;
            out.valid[k] = false;
        }
    }
    out
}

/// Binary dump: magic "CORR", little-endian u32 width and height, then
/// row-major f32 dx plane, f32 dy plane, u8 valid plane.
pub fn write_corr<W: Write>(m: &CorrespondenceMap, w: &mut W) -> Result<(), SimError> {
    w.write_all(CORR_MAGIC)?;
    w.write_all(&m.width.to_le_bytes())?;
    w.write_all(&m.height.to_le_bytes())?;
    for plane in [&m.dx, &m.dy] {
        for v in plane.iter() {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    for v in &m.valid {
        w.write_all(&[u8::from(*v)])?;
    }
    Ok(())
}

pub fn read_corr<R: Read>(r: &mut R) -> Result<CorrespondenceMap, SimError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CORR_MAGIC {
        return Err(SimError::BadCorrFile(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let width = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let height = u32::from_le_bytes(b4);
    let n = width
        .checked_mul(height)
        .ok_or_else(|| SimError::BadCorrFile("dimension overflow".into()))? as usize;
    let mut read_plane = |out: &mut Vec<f64>| -> Result<(), SimError> {
        out.clear();
        for _ in 0..n {
            r.read_exact(&mut b4)?;
            out.push(f32::from_le_bytes(b4) as f64);
        }
        Ok(())
    };
    let mut dx = Vec::with_capacity(n);
    let mut dy = Vec::with_capacity(n);
    read_plane(&mut dx)?;
    read_plane(&mut dy)?;
    let mut vbytes = vec![0u8; n];
    r.read_exact(&mut vbytes)?;
    Ok(CorrespondenceMap {
        width,
        height,
        dx,
        dy,
        valid: vbytes.into_iter().map(|b| b != 0).collect(),
    })
}
