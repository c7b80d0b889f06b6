//! Spin dynamics and analytic theory for polarization transfer from nuclear
//! singlet order to a heteronucleus, driven by a transverse rotating magnetic
//! field plus a weak z bias at zero to ultralow field (STORM pulses).
//!
//! The crate is organised in four layers:
//! * [`spin`] - product-basis operator algebra, rotations, Hermitian matrix
//!   exponentials and the singlet-triplet-Zeeman (STZ) basis;
//! * [`hamiltonians`] - lab-frame, interaction-frame and effective-field
//!   Hamiltonian builders plus per-species effective-frame parameters;
//! * [`analytics`] - closed-form resonance conditions, root finding, mixing
//!   angle, nutation frequency and two-level-system diagnostics;
//! * [`propagator`] - exact density-matrix evolution in both frames together
//!   with observables and population bookkeeping.
//!
//! All functions are pure; results are immutable values that are safe to
//! share across threads.

pub mod analytics;
pub mod error;
pub mod hamiltonians;
pub mod presets;
pub mod propagator;
pub mod spin;

pub use error::{Result, StormError};
pub use hamiltonians::{EffectiveFrame, FieldProtocol};
pub use spin::{Axis, CMat, CVec, Cx, Spin, SpinSpecies, SpinSystem, StzLabel};
