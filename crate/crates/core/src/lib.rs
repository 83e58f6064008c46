//! Scalar wave-optics simulation of long chains of apertured relay lenses:
//! angular-spectrum propagation, Gaussian and vortex sources, chain
//! builders and runners, atmospheric turbulence, loss budgets and Monte
//! Carlo setup-error analysis.

// Validation writes `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beams;
pub mod chain;
pub mod error;
mod fft;
pub mod field;
pub mod loss;
pub mod perturb;
pub mod scenario;
pub mod turbulence;
pub mod verify;

pub use error::{Result, SimError};
pub use field::{Grid, OpticalElement, Offset, PhaseMap, ScalarField};
