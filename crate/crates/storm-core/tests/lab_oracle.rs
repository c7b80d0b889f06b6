//! Cross-validation of the interaction-frame propagator against stepped
//! lab-frame propagation mapped through the frame rotation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use storm_core::presets::{fumarate_calibrated, storm_protocol};
use storm_core::propagator::{
    evolve_interaction, evolve_lab, initial_density, to_interaction_picture,
};
use storm_core::spin::{CMat, SpinSpecies, SpinSystem};
use storm_core::FieldProtocol;

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn lab_vs_interaction_error(sys: &SpinSystem, prot: &FieldProtocol, dt: f64) -> f64 {
    let rho0 = initial_density(sys).unwrap();
    let lab = evolve_lab(&rho0, sys, prot, dt).unwrap();
    let mapped = to_interaction_picture(&lab.rho_final, sys, prot, prot.duration).unwrap();
    let reference = evolve_interaction(&rho0, sys, prot).unwrap();
    max_abs(&(mapped.matrix() - reference.rho_final.matrix()))
}

#[test]
fn lab_oracle_agrees_at_one_microsecond_step() {
    let sys = fumarate_calibrated();
    let prot = storm_protocol(0.0, 1150.0, 2e-3);
    let err = lab_vs_interaction_error(&sys, &prot, 1e-6);
    assert!(err < 1e-6, "lab-frame oracle error {err:.3e} at dt = 1 us");
}

#[test]
fn lab_oracle_error_drops_fourfold_when_halving_dt() {
    let sys = fumarate_calibrated();
    let prot = storm_protocol(2e-6, 223.0, 2e-3);
    let coarse = lab_vs_interaction_error(&sys, &prot, 2e-6);
    let fine = lab_vs_interaction_error(&sys, &prot, 1e-6);
    let ratio = coarse / fine;
    assert!(
        (3.0..5.5).contains(&ratio),
        "expected second-order convergence, got ratio {ratio:.2} ({coarse:.3e} -> {fine:.3e})"
    );
}

#[test]
fn lab_oracle_agrees_for_randomized_protocols() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260810);
    let pair = SpinSpecies::proton();
    let het = SpinSpecies::carbon13();
    for trial in 0..20 {
        let j12 = rng.random_range(2.0..25.0);
        let j13 = rng.random_range(-9.0..9.0);
        let j23 = rng.random_range(-9.0..9.0);
        let sys = SpinSystem::i2s(pair.clone(), het.clone(), j12, j13, j23).unwrap();
        let prot = FieldProtocol::new(
            rng.random_range(0.0..3e-6),
            rng.random_range(5e-7..6e-6),
            rng.random_range(-2000.0..2000.0),
            rng.random_range(2e-4..1.5e-3),
        )
        .unwrap();
        let err = lab_vs_interaction_error(&sys, &prot, 1e-6);
        assert!(
            err < 1e-6,
            "trial {trial}: oracle error {err:.3e} for {prot:?}"
        );
    }
}
