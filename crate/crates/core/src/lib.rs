//! Deterministic and stochastic point-vortex dynamics on the 2D torus.
//!
//! The library evaluates the periodic Biot-Savart kernel and its
//! delta-regularizations, integrates the vortex system under shared
//! multiplicative spectral noise, verifies span and bracket-generating
//! conditions for the lifted noise fields, and runs reproducible ensemble
//! experiments on coalescence statistics.

pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod hypo;
pub mod kernel;
pub mod mc;
pub mod output;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod torus;

pub use config::{parse_config, parse_config_str, ConfigDocument};
pub use dynamics::{SDEConfig, Scheme, Simulator, Trajectory, VortexState};
pub use error::{CoreError, Result};
pub use hypo::{BracketBasis, LiftedFamily, SpanGrid, SpanReport};
pub use kernel::{planar_kernel, BoundConstants, EvalPath, Kernel, KernelMode, KernelSpec};
pub use mc::{CollapseMode, CollisionTable, EnsembleSpec, InitialLaw, TrajectorySummary};
pub use spectral::{local_basis, sample_field, NoiseFamily, SpectralField};
pub use torus::{perp, TorusVec};
