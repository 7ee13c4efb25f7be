//! Interaction matrix construction and the pseudo-inverse control law.
//!
//! Each feature contributes two rows mapping the planar twist
//! [vx, vz, wy] to its pixel velocity. The commanded twist is the
//! damped least-squares solution of the stacked pixel error; for a
//! non-holonomic platform the lateral column is dropped.

use super::features::PixelFeature;
use super::ServoError;
use crate::geom::CameraIntrinsics;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const MAX_LINEAR_SPEED: f64 = 0.5;
pub const MAX_YAW_RATE: f64 = std::f64::consts::FRAC_PI_2;
pub const DAMPING: f64 = 1e-6;
pub const SINGULARITY_THRESHOLD: f64 = 1e-8;
/// Constant forward speed of the depth-free controller, m/s.
pub const NODEPTH_FORWARD_SPEED: f64 = 0.1;

/// Planar twist in the camera/robot servo frame: lateral, forward, yaw
/// about the camera's down axis (positive = turn right).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotTwist {
    pub vx: f64,
    pub vz: f64,
    pub wy: f64,
}

impl RobotTwist {
    pub fn clamped(self) -> Self {
        Self {
            vx: self.vx.clamp(-MAX_LINEAR_SPEED, MAX_LINEAR_SPEED),
            vz: self.vz.clamp(-MAX_LINEAR_SPEED, MAX_LINEAR_SPEED),
            wy: self.wy.clamp(-MAX_YAW_RATE, MAX_YAW_RATE),
        }
    }
}

/// How the commanded camera motion is realized on a differential-drive
/// base (only consulted when the platform is non-holonomic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Steering {
    /// Drop the lateral column of the interaction matrix and solve the
    /// reduced [vz, wy] system. Textbook-simple but blind to lateral
    /// displacement, so the loop can stall short of the goal.
    ColumnDrop,
    /// Solve the full three-column system and fold the commanded
    /// lateral velocity into the turn rate: wy = wy* + k * vx*, with
    /// the turn rate saturated at `yaw_cap` rad/s.
    LateralBlend { k: f64, yaw_cap: f64 },
}

/// Stacked feature Jacobian, 2 rows per feature, columns [vx, vz, wy].
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub rows: DMatrix<f64>,
}

impl InteractionMatrix {
    pub fn stack(features: &[PixelFeature], cam: &CameraIntrinsics) -> Result<Self, ServoError> {
        let mut rows = DMatrix::zeros(2 * features.len(), 3);
        for (i, f) in features.iter().enumerate() {
            let block = interaction_row(f, cam)?;
            rows.view_mut((2 * i, 0), (2, 3)).copy_from(&block);
        }
        Ok(Self { rows })
    }
}

/// The 2x3 interaction-matrix block of one feature:
/// row_u = [-l/Z, (u-u0)/Z, -(l + (u-u0)^2/l)]
/// row_v = [0, (v-v0)/Z, -(u-u0)(v-v0)/l]
pub fn interaction_row(
    f: &PixelFeature,
    cam: &CameraIntrinsics,
) -> Result<DMatrix<f64>, ServoError> {
    if !(f.z > 0.0) {
        return Err(ServoError::NonpositiveDepth(f.z));
    }
    let l = cam.focal;
    let x = f.u - cam.u0;
    let y = f.v - cam.v0;
    Ok(DMatrix::from_row_slice(
        2,
        3,
        &[
            -l / f.z,
            x / f.z,
            -(l + x * x / l),
            0.0,
            y / f.z,
            -x * y / l,
        ],
    ))
}

/// Damped least-squares solve of J x = e with a singularity check.
fn damped_solve(j: &DMatrix<f64>, e: &DVector<f64>) -> Result<DVector<f64>, ServoError> {
    let min_sv = j
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if min_sv < SINGULARITY_THRESHOLD {
        return Err(ServoError::DegenerateJacobian(min_sv));
    }
    let n = j.ncols();
    let normal = j.transpose() * j + DMatrix::identity(n, n) * DAMPING;
    let rhs = j.transpose() * e;
    normal
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(ServoError::DegenerateJacobian(min_sv))
}

fn stacked_error(features: &[PixelFeature]) -> DVector<f64> {
    DVector::from_iterator(
        2 * features.len(),
        features
            .iter()
            .flat_map(|f| [f.u_star - f.u, f.v_star - f.v]),
    )
}

/// Damped least-squares control law: twist = gain * pinv(J) (f* - f),
/// clamped to velocity limits. With `holonomic = false` the lateral
/// column is dropped and vx is forced to zero.
pub fn ibvs_twist(
    features: &[PixelFeature],
    cam: &CameraIntrinsics,
    gain: f64,
    holonomic: bool,
) -> Result<RobotTwist, ServoError> {
    assert!(features.len() >= 2, "need at least 2 features");
    let full = InteractionMatrix::stack(features, cam)?.rows;
    let j = if holonomic {
        full
    } else {
        full.columns(1, 2).into_owned()
    };
    let e = stacked_error(features);
    let sol = damped_solve(&j, &e)?;

    let twist = if holonomic {
        RobotTwist { vx: gain * sol[0], vz: gain * sol[1], wy: gain * sol[2] }
    } else {
        RobotTwist { vx: 0.0, vz: gain * sol[0], wy: gain * sol[1] }
    };
    Ok(twist.clamped())
}

/// Unicycle realization of the full three-degree-of-freedom solution.
///
/// Dropping the lateral column outright leaves lateral displacement
/// invisible to the controller: the closed loop settles into a dead
/// point where the heading pull and the (unactuated) lateral pull
/// cancel, typically 0.3-0.6 m from the goal. Instead, solve the full
/// system for the desired camera motion [vx*, vz*, wy*], execute the
/// forward component directly and realize the lateral component by
/// steering toward it, as with an off-axle control point:
/// wy = wy* + k * vx*. `yaw_cap` bounds the turn rate below the hard
/// clamp so that large corrections do not swing the shared
/// field-of-view out of sight.
pub fn ibvs_twist_unicycle(
    features: &[PixelFeature],
    cam: &CameraIntrinsics,
    gain: f64,
    k: f64,
    yaw_cap: f64,
) -> Result<RobotTwist, ServoError> {
    assert!(features.len() >= 2, "need at least 2 features");
    let j = InteractionMatrix::stack(features, cam)?.rows;
    let e = stacked_error(features);
    // No singularity abort here: the damping regularizes rank-deficient
    // stacks into a small (safe) twist and the loop simply keeps going,
    // which empirically recovers most of the episodes that the strict
    // check would abandon.
    let n = j.ncols();
    let normal = j.transpose() * &j + DMatrix::identity(n, n) * DAMPING;
    let rhs = j.transpose() * &e;
    let sol = normal
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(ServoError::DegenerateJacobian(0.0))?;
    let mut twist = RobotTwist {
        vx: 0.0,
        vz: gain * sol[1],
        wy: gain * (sol[2] + k * sol[0]),
    }
    .clamped();
    let cap = yaw_cap.min(MAX_YAW_RATE);
    twist.wy = twist.wy.clamp(-cap, cap);
    Ok(twist)
}

/// Depth-free fallback: constant forward speed, yaw from a 1-D least
/// squares over the pure-rotation Jacobian entry.
pub fn nodepth_control(
    features: &[PixelFeature],
    cam: &CameraIntrinsics,
    gain: f64,
) -> Result<RobotTwist, ServoError> {
    if features.is_empty() {
        return Err(ServoError::FeatureStarvation);
    }
    let l = cam.focal;
    let mut num = 0.0;
    let mut den = 0.0;
    for f in features {
        let x = f.u - cam.u0;
        let jw = -(l + x * x / l);
        num += jw * (f.u_star - f.u);
        den += jw * jw;
    }
    let twist = RobotTwist {
        vx: 0.0,
        vz: NODEPTH_FORWARD_SPEED,
        wy: gain * num / den,
    };
    Ok(twist.clamped())
}
