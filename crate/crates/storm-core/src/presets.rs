//! Reference spin systems and protocols used by the test suites and the
//! scenario runner.

use crate::hamiltonians::FieldProtocol;
use crate::spin::{SpinSpecies, SpinSystem};

/// Rotating-field amplitude used throughout the reference scenarios, Tesla.
pub const B_ROT_TESLA: f64 = 4e-6;

/// Calibrated scalar couplings of the (1-13C)fumarate three-spin system, Hz.
///
/// The set is calibrated, not taken from the literature: J12 and J13+J23 are
/// fitted so the analytic resonance condition at a 4 uT rotating field puts
/// the positive branch at 1150 Hz (zero bias) and within tolerance of 223 Hz
/// (2 uT bias), while J13-J23 matches the observed ~2 Hz transfer rate. The
/// sum/difference balance also cancels the second-order level repulsion from
/// the |T0 b'> state, so exact propagation peaks where the analytic condition
/// says it should.
pub const FUMARATE_J12: f64 = 12.279744720924;
pub const FUMARATE_J13: f64 = 2.601025516923;
pub const FUMARATE_J23: f64 = -0.450082057569;

/// Literature-style starting couplings for calibration runs, Hz.
pub const FUMARATE_J_START: [f64; 3] = [15.7, 6.6, 3.2];

/// The calibrated (1-13C)fumarate system: two protons plus one carbon-13.
pub fn fumarate_calibrated() -> SpinSystem {
    SpinSystem::i2s(
        SpinSpecies::proton(),
        SpinSpecies::carbon13(),
        FUMARATE_J12,
        FUMARATE_J13,
        FUMARATE_J23,
    )
    .expect("calibrated fumarate system is valid")
}

/// Fumarate with literature-style starting couplings (calibration input).
pub fn fumarate_literature_start() -> SpinSystem {
    SpinSystem::i2s(
        SpinSpecies::proton(),
        SpinSpecies::carbon13(),
        FUMARATE_J_START[0],
        FUMARATE_J_START[1],
        FUMARATE_J_START[2],
    )
    .expect("literature fumarate system is valid")
}

/// Protocol with the reference 4 uT rotating amplitude.
pub fn storm_protocol(b_bias: f64, nu_rot: f64, duration: f64) -> FieldProtocol {
    FieldProtocol::new(b_bias, B_ROT_TESLA, nu_rot, duration).expect("reference protocol is valid")
}
