//! Synthetic scenes and ground-truth visual measurements.
//!
//! A [`Scene`] is a set of vertical wall patches plus optional floor and
//! ceiling planes. From it we render per-pixel depth by ray casting and
//! build dense correspondence maps between two robot poses, which is
//! what both controllers consume. Correspondence degradation (Gaussian
//! offset noise, coverage dropout) and box smoothing live here as well.

mod correspond;
mod render;
mod scene;

pub use correspond::{
    correspondence_map, correspondence_map_with_depth, inject_noise, overlap_count, read_corr,
    smooth_map, write_corr, CorrespondenceMap, NoiseSpec, OCCLUSION_EPS,
};
pub use render::{render_depth, DepthImage, DEFAULT_MAX_RANGE};
pub use scene::{generate_scene, RoomSpec, Scene, Wall};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("degenerate room dimensions: {0}")]
    DegenerateRoom(String),
    #[error("pose ({0:.3}, {1:.3}) is outside free space")]
    PoseOutsideFreeSpace(f64, f64),
    #[error("smoothing kernel must be odd, got {0}")]
    EvenKernel(u32),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad correspondence file: {0}")]
    BadCorrFile(String),
}
