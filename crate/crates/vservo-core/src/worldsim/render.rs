//! Per-pixel depth rendering by ray casting.
//!
//! Rays are cast through pixel centers. The stored value is the
//! camera-frame Z of the first hit (not the Euclidean ray length), so a
//! frontal plane renders to a constant depth row.

use super::scene::Scene;
use super::SimError;
use crate::geom::{CameraIntrinsics, Pose2D};

pub const DEFAULT_MAX_RANGE: f64 = 20.0;

/// width x height grid of camera-frame depths in (0, max_range].
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
    pub max_range: f64,
}

impl DepthImage {
    pub fn at(&self, u: u32, v: u32) -> f64 {
        self.values[(v * self.width + u) as usize]
    }

    /// True when the ray through this pixel actually hit a surface.
    pub fn is_hit(&self, u: u32, v: u32) -> bool {
        self.at(u, v) < self.max_range
    }
}

/// Camera basis in world coordinates; same convention as `geom`.
pub(crate) fn camera_basis(pose: &Pose2D) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (c, s) = (pose.theta.cos(), pose.theta.sin());
    ([s, -c, 0.0], [0.0, 0.0, -1.0], [c, s, 0.0])
}

/// First-hit distance along a ray, measured in camera-frame Z.
///
/// `dir` must have a unit forward (camera Z) component so the ray
/// parameter equals the camera-frame depth directly.
pub(crate) fn cast_ray(scene: &Scene, origin: [f64; 3], dir: [f64; 3], max_range: f64) -> f64 {
    let mut best = max_range;
    let eps = 1e-9;

    for w in &scene.walls {
        let ex = w.b[0] - w.a[0];
        let ey = w.b[1] - w.a[1];
        // wall normal in the ground plane
        let (nx, ny) = (ey, -ex);
        let denom = dir[0] * nx + dir[1] * ny;
        if denom.abs() < 1e-12 {
            continue;
        }
        let t = ((w.a[0] - origin[0]) * nx + (w.a[1] - origin[1]) * ny) / denom;
        if t <= eps || t >= best {
            continue;
        }
        let hx = origin[0] + t * dir[0];
        let hy = origin[1] + t * dir[1];
        let hz = origin[2] + t * dir[2];
        let len2 = ex * ex + ey * ey;
        let s = ((hx - w.a[0]) * ex + (hy - w.a[1]) * ey) / len2;
        if (0.0..=1.0).contains(&s) && hz >= w.z0 && hz <= w.z1 {
            best = t;
        }
    }

    for (plane_z, downward) in [(scene.floor_z, true), (scene.ceiling_z, false)] {
        if let Some(z) = plane_z {
            if (downward && dir[2] < -1e-12) || (!downward && dir[2] > 1e-12) {
                let t = (z - origin[2]) / dir[2];
                if t > eps && t < best {
                    best = t;
                }
            }
        }
    }

    best
}

/// Camera-frame depth of the first hit along the exact ray through the
/// continuous pixel coordinate (u, v). Used for sub-pixel occlusion
/// tests; skips the free-space precondition check.
pub(crate) fn depth_along_pixel_ray(
    scene: &Scene,
    pose: &Pose2D,
    cam: &CameraIntrinsics,
    u: f64,
    v: f64,
    max_range: f64,
) -> f64 {
    let origin = [pose.x, pose.y, cam.cam_height];
    let (right, down, forward) = camera_basis(pose);
    let xc = (u - cam.u0) / cam.focal;
    let yc = (v - cam.v0) / cam.focal;
    let dir = [
        xc * right[0] + yc * down[0] + forward[0],
        xc * right[1] + yc * down[1] + forward[1],
        xc * right[2] + yc * down[2] + forward[2],
    ];
    cast_ray(scene, origin, dir, max_range)
}

/// Ray-cast a depth image from `pose`. Pixels whose ray escapes within
/// `max_range` are clamped to `max_range`.
pub fn render_depth(
    scene: &Scene,
    pose: &Pose2D,
    cam: &CameraIntrinsics,
) -> Result<DepthImage, SimError> {
    render_depth_ranged(scene, pose, cam, DEFAULT_MAX_RANGE)
}

pub fn render_depth_ranged(
    scene: &Scene,
    pose: &Pose2D,
    cam: &CameraIntrinsics,
    max_range: f64,
) -> Result<DepthImage, SimError> {
    if !scene.is_free(pose.x, pose.y, 1e-6) {
        return Err(SimError::PoseOutsideFreeSpace(pose.x, pose.y));
    }
    let origin = [pose.x, pose.y, cam.cam_height];
    let (right, down, forward) = camera_basis(pose);
    let mut values = vec![max_range; (cam.width * cam.height) as usize];
    for j in 0..cam.height {
        let yc = (j as f64 + 0.5 - cam.v0) / cam.focal;
        for i in 0..cam.width {
            let xc = (i as f64 + 0.5 - cam.u0) / cam.focal;
            let dir = [
                xc * right[0] + yc * down[0] + forward[0],
                xc * right[1] + yc * down[1] + forward[1],
                xc * right[2] + yc * down[2] + forward[2],
            ];
            values[(j * cam.width + i) as usize] = cast_ray(scene, origin, dir, max_range);
        }
    }
    Ok(DepthImage {
        width: cam.width,
        height: cam.height,
        values,
        max_range,
    })
}
