//! Wake-structure gait simulation for morphing flapping wings.
//!
//! The crate marches an unsteady lifting-line model with Wagner indicial lag
//! over a two-segment morphing wing, sheds a vortex-ring wake, and searches
//! wing-morphology parameters so that the resulting wake matches a target
//! wake mesh.
//!
//! Module map:
//! - [`morphology`]: wing geometry, gait waveforms, forward kinematics, body state.
//! - [`aero`]: Fourier circulation, downwash, Wagner deficiency states, time marching.
//! - [`wake`]: Biot-Savart kernels, vortex-ring lattice, vorticity sampling.
//! - [`sim`]: end-to-end composition producing the wake structure.
//! - [`gait_opt`]: wake distance, candidate evaluation, Nelder-Mead search.
//! - [`config`], [`export`], [`cli`], [`check`]: I/O and command-line entry points.

pub mod aero;
pub mod check;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod gait_opt;
pub mod morphology;
pub mod sim;
pub mod wake;

pub use error::{Error, Result};

/// Three-vector used throughout (metres, metres per second, newtons).
pub type Vec3 = nalgebra::Vector3<f64>;
