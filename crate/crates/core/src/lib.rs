//! Mesoscale energies for two-phase lipid membranes and numerical checks of
//! their sharp-interface limits.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: parameters, the ε-dependent double well, the optimal
//!   transition profile.
//! * [`grid`]: the diffuse phase-separation energy on 1D/2D grids.
//! * [`minimize`]: descent solvers and ε-sweeps on grids.
//! * [`curve`]: closed arclength curves and the ray map.
//! * [`meso`]: single-curve and family energies.
//! * [`recovery`]: mass-preserving recovery sequences for curves.

pub mod curve;
pub mod error;
pub mod grid;
pub mod meso;
pub mod minimize;
pub mod model;
pub mod parallel;
pub mod quadrature;
pub mod recovery;

pub use curve::{PeriodicCurve, Shape};
pub use error::{Error, Result};
pub use grid::{Grid, GridField, LimitValue, PhaseMap};
pub use meso::{Configuration, MassPair};
pub use model::{DerivedConstants, ModelParams, Phase};
pub use parallel::Reduction;
pub use recovery::{PhaseCurve, RecoveryReport};
