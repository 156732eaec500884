//! Resolution and disturbance characterization of generalized quantum
//! measurements on finite-dimensional Hilbert spaces.
//!
//! A measurement outcome is described by a single measurement (Kraus)
//! operator `M`. From it the toolkit derives
//!
//! - the retrodictive operator `R = M†M / tr{M†M}` and, for any observable,
//!   the optimal estimate of an unknown input eigenvalue together with its
//!   mean squared error (the measurement *resolution*),
//! - the *disturbance* of a second observable, defined through a final
//!   projective measurement performed on the output,
//! - numerical checks of the uncertainty relations linking resolutions of
//!   two observables, and resolution of one with disturbance of the other.
//!
//! The [`scenarios`] module builds the standard presets (single photon
//! detection, nondemolition photon counting, coherent-state projection) and a
//! seeded intercept-resend Monte Carlo on top of these primitives.

pub mod backaction;
pub mod characterize;
pub mod error;
pub mod io;
pub mod measurement;
pub mod mixture;
pub mod operators;
pub mod random;
pub mod scenarios;
pub mod verify;

pub use error::{QmeterError, Result};
pub use measurement::KrausSet;
pub use operators::{BosonicSpace, ComplexMatrix, HermitianObservable, StateVector, C64};
