//! Consistency of the analytic resonance picture with exact diagonalization
//! and exact propagation at the located roots.

use storm_core::analytics::{find_storm_frequencies, mixing_params, Branch};
use storm_core::hamiltonians::{effective_frame, interaction_frame_hamiltonian};
use storm_core::presets::{fumarate_calibrated, storm_protocol, B_ROT_TESLA};
use storm_core::propagator::{evolve_interaction, initial_density};
use storm_core::spin::{hermitian_eigen, stz_basis, StzLabel};

/// Minimum eigenvalue gap between the two dressed levels with dominant
/// |S0 b'> / |T-1 a'> character, scanned around a frequency.
fn avoided_crossing_gap(bias: f64, center: f64) -> f64 {
    let sys = fumarate_calibrated();
    let mut min_gap = f64::INFINITY;
    let steps = 80;
    for i in 0..=steps {
        let nu = center - 5.0 + 10.0 * i as f64 / steps as f64;
        let prot = storm_protocol(bias, nu, 0.0);
        let h = interaction_frame_hamiltonian(&sys, &prot);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        let frame = effective_frame(&sys, &prot);
        let basis = stz_basis(frame.theta_i(), frame.theta_s());
        let singlet = basis.vector(StzLabel::SingletBeta);
        let triplet = basis.vector(StzLabel::TMinus1Alpha);
        // weight of each eigenvector inside the crossing plane
        let mut weights: Vec<(f64, usize)> = (0..8)
            .map(|k| {
                let v = vecs.column(k);
                let w = singlet.dotc(&v.clone_owned()).norm_sqr()
                    + triplet.dotc(&v.clone_owned()).norm_sqr();
                (w, k)
            })
            .collect();
        weights.sort_by(|a, b| b.0.total_cmp(&a.0));
        let gap = (vals[weights[0].1] - vals[weights[1].1]).abs();
        min_gap = min_gap.min(gap);
    }
    min_gap
}

#[test]
fn avoided_crossing_gap_matches_nutation_frequency() {
    let sys = fumarate_calibrated();
    for (bias, window) in [(0.0, (1100.0, 1200.0)), (2e-6, (200.0, 260.0))] {
        let root = find_storm_frequencies(&sys, bias, B_ROT_TESLA, window.0, window.1)
            .unwrap()
            .resonances
            .into_iter()
            .find(|r| r.branch == Branch::PositiveMagnetization)
            .expect("positive root");
        let frame = effective_frame(&sys, &storm_protocol(bias, root.nu_hz, 0.0));
        let omega_nut = mixing_params(&sys, &frame).unwrap().omega_nut.abs();
        let gap = avoided_crossing_gap(bias, root.nu_hz);
        let ratio = gap / omega_nut;
        assert!(
            (0.85..=1.15).contains(&ratio),
            "bias {bias}: minimum gap {gap:.4} vs omega_nut {omega_nut:.4} (ratio {ratio:.3})"
        );
    }
}

#[test]
fn branch_label_predicts_polarization_sign_of_a_full_pulse() {
    let sys = fumarate_calibrated();
    let found = find_storm_frequencies(&sys, 0.0, B_ROT_TESLA, -5000.0, 5000.0).unwrap();
    assert_eq!(found.resonances.len(), 2);
    let rho0 = initial_density(&sys).unwrap();
    for root in &found.resonances {
        let frame = effective_frame(&sys, &storm_protocol(0.0, root.nu_hz, 0.0));
        let tau_star = mixing_params(&sys, &frame).unwrap().tau_star;
        let out =
            evolve_interaction(&rho0, &sys, &storm_protocol(0.0, root.nu_hz, tau_star)).unwrap();
        match root.branch {
            Branch::PositiveMagnetization => {
                assert!(out.p_s > 0.9, "positive branch gave p_s = {}", out.p_s)
            }
            Branch::NegativeMagnetization => {
                assert!(out.p_s < -0.9, "negative branch gave p_s = {}", out.p_s)
            }
        }
        assert!(
            (out.p_s - root.predicted_polarization).abs() < 0.05,
            "p_s {} vs predicted {}",
            out.p_s,
            root.predicted_polarization
        );
    }
}
