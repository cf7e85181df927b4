//! Numerical simulation and invariant checks for the third-order dispersive
//! curve flow
//!
//! ```text
//! u_t = a ∇ₓ²uₓ + J_u ∇ₓuₓ + b g(uₓ, uₓ) uₓ
//! ```
//!
//! into embedded compact almost Hermitian targets, together with its
//! fourth-order parabolic regularization and the gauge-weighted energies and
//! conservation laws used to control it.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod geometry;
pub mod initial;
pub mod pde;
pub mod solver;

pub use config::{parse_config, Check, ExperimentConfig, Preset};
pub use error::{Error, Result};
pub use fields::{Grid, MapState, TangentSection, VectorField};
pub use geometry::{TargetKind, TargetManifold};
pub use initial::{make_initial_data, InitialData};
pub use pde::{FlowCoefficients, Model};
pub use solver::{SolverConfig, Termination, Trajectory};
