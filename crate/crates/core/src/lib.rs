//! Scattering model, time-domain dynamics and parameter estimation for a
//! flux-tunable two-level artificial atom in an open 1D waveguide, used as a
//! tunable microwave beam splitter and two-beam combiner.
//!
//! All rates and frequencies are angular (rad/s) inside the library. The
//! [`units`] module is the single place where Hz/2π values from configs and
//! tables are converted.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod interferometer;
pub mod scattering;
pub mod trace;
pub mod transmon;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scattering::{Coefficients, DriveCondition, QubitParams};
pub use trace::{IqTrace, TraceAxis, ValueKind};
pub use transmon::{FluxPulse, TransmonSpec};
