//! Planar mobile-robot visual servoing: synthetic world simulation,
//! classical image-based visual servoing, and a learned discrete-action
//! controller driven by dense correspondence maps.
//!
//! Module map:
//! - [`geom`] — poses, angles, pinhole camera model.
//! - [`worldsim`] — scenes, ray-cast depth, ground-truth correspondence.
//! - [`metrics`] — polar pose error, rewards, success criterion.
//! - [`servo`] — interaction matrix and pseudo-inverse control law.
//! - [`env`] — discrete-action episode MDP for the learned controller.
//! - [`dqn`] — from-scratch convolutional Q-network and training loop.

pub mod dqn;
pub mod env;
pub mod geom;
pub mod metrics;
pub mod servo;
pub mod worldsim;
