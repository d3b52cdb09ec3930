//! Simulation and power control for a URLLC-enabled UAV link.
//!
//! The crate is split along the processing chain:
//!
//! * [`env`] generates an urban building map, answers line-of-sight queries
//!   and produces UAV positions along the circular and vertical-ascent
//!   trajectories.
//! * [`channel`] synthesizes ground-truth BS-to-UAV and UAV-to-BS channels
//!   (antenna pattern, aerial path loss, Rayleigh/Rician fading) and the
//!   distance-normalized coefficients `theta = h * D^2`.
//! * [`estimator`] holds the per-antenna multilayer perceptrons that learn
//!   those coefficients from positions, trained with experience replay and
//!   Adam.
//! * [`link`] evaluates the finite-blocklength uplink rate, the Shannon
//!   downlink rate and the constraint set.
//! * [`solver`] builds the relaxed power-control program, solves it with a
//!   primal-dual interior-point method and extracts the rank-one beamformer.
//! * [`harness`] runs the full pre-train / estimate / optimize / online-train
//!   loop and writes per-slot records.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod channel;
pub mod env;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod link;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
