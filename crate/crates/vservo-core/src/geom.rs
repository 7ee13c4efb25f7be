//! Planar poses, angle arithmetic, and the pinhole camera model.
//!
//! The robot moves on the ground plane (world x/y, z up) with heading
//! `theta` measured counterclockwise from the world +x axis. The camera
//! sits at `cam_height` above the robot center with a level optical
//! axis along the heading. Camera frame: X right, Y down, Z forward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("non-finite angle: {0}")]
    NonFiniteAngle(f64),
    #[error("invalid camera intrinsics: {0}")]
    BadIntrinsics(String),
}

/// Robot state (x, y, theta) on the ground plane. `theta` is kept
/// normalized to (-pi, pi] by the constructor and all pose operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta).expect("finite heading"),
        }
    }

    pub fn position_distance(&self, other: &Pose2D) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Unit heading vector (cos theta, sin theta).
    pub fn forward(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }
}

/// Pinhole camera parameters. `focal` is in pixels; (u0, v0) is the
/// principal point with a top-left pixel origin, u rightward, v downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: u32,
    pub height: u32,
    /// Camera elevation above the ground plane, meters.
    pub cam_height: f64,
}

impl CameraIntrinsics {
    pub fn new(
        focal: f64,
        u0: f64,
        v0: f64,
        width: u32,
        height: u32,
        cam_height: f64,
    ) -> Result<Self, GeomError> {
        if !(focal > 0.0) {
            return Err(GeomError::BadIntrinsics(format!("focal {focal} <= 0")));
        }
        if !(0.0 <= u0 && u0 < width as f64) || !(0.0 <= v0 && v0 < height as f64) {
            return Err(GeomError::BadIntrinsics(format!(
                "principal point ({u0}, {v0}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            focal,
            u0,
            v0,
            width,
            height,
            cam_height,
        })
    }

    /// Square image with a 90-degree horizontal field of view, principal
    /// point at the center, camera 1.2 m above ground.
    pub fn desk_default(resolution: u32) -> Self {
        let half = resolution as f64 / 2.0;
        Self {
            focal: half,
            u0: half,
            v0: half,
            width: resolution,
            height: resolution,
            cam_height: 1.2,
        }
    }
}

/// Point in the camera frame: X right, Y down, Z forward (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CamPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Projection result: pixel coordinates, or not visible in this camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Visible { u: f64, v: f64 },
    NotVisible,
}

impl Projection {
    pub fn pixel(&self) -> Option<(f64, f64)> {
        match *self {
            Projection::Visible { u, v } => Some((u, v)),
            Projection::NotVisible => None,
        }
    }
}

/// Wrap an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> Result<f64, GeomError> {
    if !a.is_finite() {
        return Err(GeomError::NonFiniteAngle(a));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    // rem_euclid can land exactly on -pi through rounding; keep the
    // open-interval representative.
    if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    Ok(r)
}

/// Absolute angular distance between two angles on the circle, in [0, pi].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).expect("finite angles").abs()
}

/// Camera basis vectors in world coordinates for a robot pose:
/// (right, down, forward). Right-handed with X right, Y down, Z forward.
fn camera_axes(robot: &Pose2D) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (c, s) = (robot.theta.cos(), robot.theta.sin());
    let right = [s, -c, 0.0];
    let down = [0.0, 0.0, -1.0];
    let forward = [c, s, 0.0];
    (right, down, forward)
}

/// Transform a 3D world point into the camera frame of a robot pose.
pub fn world_to_camera(p_world: [f64; 3], robot: &Pose2D, cam: &CameraIntrinsics) -> CamPoint {
    let d = [
        p_world[0] - robot.x,
        p_world[1] - robot.y,
        p_world[2] - cam.cam_height,
    ];
    let (right, down, forward) = camera_axes(robot);
    let dot = |a: [f64; 3]| d[0] * a[0] + d[1] * a[1] + d[2] * a[2];
    CamPoint {
        x: dot(right),
        y: dot(down),
        z: dot(forward),
    }
}

/// Transform a camera-frame point back to world coordinates.
pub fn camera_to_world(p: CamPoint, robot: &Pose2D, cam: &CameraIntrinsics) -> [f64; 3] {
    let (right, down, forward) = camera_axes(robot);
    let mut out = [robot.x, robot.y, cam.cam_height];
    for i in 0..3 {
        out[i] += p.x * right[i] + p.y * down[i] + p.z * forward[i];
    }
    out
}

/// Pinhole projection. Returns `NotVisible` for points at or behind the
/// camera plane or outside [0, width) x [0, height).
pub fn project(p: &CamPoint, cam: &CameraIntrinsics) -> Projection {
    if p.z <= 0.0 {
        return Projection::NotVisible;
    }
    let u = cam.u0 + cam.focal * p.x / p.z;
    let v = cam.v0 + cam.focal * p.y / p.z;
    if u < 0.0 || u >= cam.width as f64 || v < 0.0 || v >= cam.height as f64 {
        return Projection::NotVisible;
    }
    Projection::Visible { u, v }
}

/// Camera-frame point on the ray through pixel (u, v) at depth `z`
/// (camera-frame Z, not Euclidean ray length).
pub fn back_project(u: f64, v: f64, z: f64, cam: &CameraIntrinsics) -> CamPoint {
    CamPoint {
        x: (u - cam.u0) * z / cam.focal,
        y: (v - cam.v0) * z / cam.focal,
        z,
    }
}
