//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p storm-scenarios --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use storm_core::analytics::{
    find_storm_frequencies, mixing_params, resonance_gap, restricted_v1, Branch, Manifold,
};
use storm_core::hamiltonians::{
    composite_rotation, effective_frame, effective_hamiltonian, frame_rotation,
    heteronuclear_split, interaction_frame_hamiltonian, lab_frame_hamiltonian,
};
use storm_core::presets::{fumarate_calibrated, storm_protocol, B_ROT_TESLA};
use storm_core::propagator::{
    evolve_interaction, evolve_lab, initial_density, to_interaction_picture,
};
use storm_core::spin::{collective_operator, stz_basis, Axis, CMat, Cx, SpinSpecies, StzLabel};
use storm_core::{FieldProtocol, SpinSystem};
use storm_scenarios::config::{ScenarioConfig, SearchWindow, SweepAxis, SweepSpec};
use storm_scenarios::quad::run_quadrupolar_scenario;
use storm_scenarios::sweep::{run_duration_sweep, run_frequency_sweep};

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn report(criterion: &str, ok: bool, detail: &str) -> bool {
    println!(
        "acceptance {criterion}: {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn base_config(system: SpinSystem, b_bias: f64) -> ScenarioConfig {
    ScenarioConfig {
        system,
        b_bias,
        b_rot: B_ROT_TESLA,
        nu_rot: None,
        tau: None,
        sweep: None,
        quad: None,
        calibrate: None,
        search: SearchWindow::default(),
        output: None,
    }
}

fn frequency_sweep(
    b_bias: f64,
    tau: f64,
    min: f64,
    max: f64,
    points: usize,
) -> storm_scenarios::sweep::SweepOutcome {
    let mut cfg = base_config(fumarate_calibrated(), b_bias);
    cfg.tau = Some(tau);
    cfg.sweep = Some(SweepSpec {
        axis: SweepAxis::Frequency,
        min,
        max,
        points,
    });
    run_frequency_sweep(&cfg).expect("frequency sweep runs")
}

fn duration_sweep(
    b_bias: f64,
    nu: f64,
    max_tau: f64,
    points: usize,
) -> storm_scenarios::sweep::SweepOutcome {
    let mut cfg = base_config(fumarate_calibrated(), b_bias);
    cfg.nu_rot = Some(nu);
    cfg.sweep = Some(SweepSpec {
        axis: SweepAxis::Duration,
        min: 0.0,
        max: max_tau,
        points,
    });
    run_duration_sweep(&cfg).expect("duration sweep runs")
}

#[test]
fn criterion_1_resonance_roots() {
    let sys = fumarate_calibrated();

    let start = Instant::now();
    let zero_field = find_storm_frequencies(&sys, 0.0, B_ROT_TESLA, -5000.0, 5000.0).unwrap();
    let elapsed_zero = start.elapsed();
    let root_zero = zero_field
        .resonances
        .iter()
        .find(|r| r.branch == Branch::PositiveMagnetization)
        .map(|r| r.nu_hz);

    let start = Instant::now();
    let biased = find_storm_frequencies(&sys, 2e-6, B_ROT_TESLA, -5000.0, 5000.0).unwrap();
    let elapsed_biased = start.elapsed();
    let root_biased = biased
        .resonances
        .iter()
        .filter(|r| r.branch == Branch::PositiveMagnetization)
        .min_by(|a, b| (a.nu_hz - 223.0).abs().total_cmp(&(b.nu_hz - 223.0).abs()))
        .map(|r| r.nu_hz);

    let ok_zero = root_zero.is_some_and(|nu| (nu - 1150.0).abs() <= 10.0);
    let ok_biased = root_biased.is_some_and(|nu| (nu - 223.0).abs() <= 5.0);
    let ok_time = elapsed_zero.as_secs_f64() < 1.0 && elapsed_biased.as_secs_f64() < 1.0;
    let ok = report(
        "1 (resonance roots)",
        ok_zero && ok_biased && ok_time,
        &format!(
            "zero-bias root {:?} Hz (1150 +- 10), 2 uT root {:?} Hz (223 +- 5), runtimes {:.0} ms / {:.0} ms",
            root_zero,
            root_biased,
            elapsed_zero.as_secs_f64() * 1e3,
            elapsed_biased.as_secs_f64() * 1e3
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_transfer_rate() {
    let sys = fumarate_calibrated();
    let biased_root = find_storm_frequencies(&sys, 2e-6, B_ROT_TESLA, 100.0, 320.0)
        .unwrap()
        .resonances
        .into_iter()
        .find(|r| r.branch == Branch::PositiveMagnetization)
        .expect("2 uT root")
        .nu_hz;

    let mut rates = Vec::new();
    for (bias, nu) in [(0.0, 1150.0), (2e-6, biased_root)] {
        let frame = effective_frame(&sys, &storm_protocol(bias, nu, 0.0));
        let params = mixing_params(&sys, &frame).unwrap();
        rates.push(params.omega_nut.abs() / std::f64::consts::TAU);
    }
    let ok_rates = rates.iter().all(|r| (r - 2.0).abs() <= 0.5);

    // duration sweeps at the fixed working frequencies used in the
    // experimental profiles
    let start = Instant::now();
    let sweep_zero = duration_sweep(0.0, 1100.0, 0.6, 241);
    let t_zero = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let sweep_biased = duration_sweep(2e-6, 222.0, 0.8, 321);
    let t_biased = start.elapsed().as_secs_f64();

    let osc_match = |sweep: &storm_scenarios::sweep::SweepOutcome| -> Option<f64> {
        let exact = sweep.summary.oscillation_exact_hz?;
        let analytic = sweep.summary.oscillation_analytic_hz?;
        Some((exact / analytic - 1.0).abs())
    };
    let dev_zero = osc_match(&sweep_zero);
    let dev_biased = osc_match(&sweep_biased);
    let ok_osc = dev_zero.is_some_and(|d| d < 0.15) && dev_biased.is_some_and(|d| d < 0.15);
    let ok_time = t_zero < 10.0 && t_biased < 10.0;

    let ok = report(
        "2 (transfer rate)",
        ok_rates && ok_osc && ok_time,
        &format!(
            "nutation rates {:.3} / {:.3} Hz (2 +- 0.5); exact-vs-analytic oscillation deviation {:.3?} / {:.3?} (< 0.15); sweep times {:.1} s / {:.1} s",
            rates[0], rates[1], dev_zero, dev_biased, t_zero, t_biased
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_3_profile_widths() {
    let start = Instant::now();
    let zero_field = frequency_sweep(0.0, 0.2, 300.0, 2000.0, 341);
    let biased = frequency_sweep(2e-6, 0.4, 193.0, 253.0, 61);
    let elapsed = start.elapsed().as_secs_f64();

    let fwhm_zero = zero_field.summary.exact.fwhm;
    let fwhm_biased = biased.summary.exact.fwhm;
    let ok_zero = fwhm_zero.is_some_and(|w| (280.0..=420.0).contains(&w));
    let ok_biased = fwhm_biased.is_some_and(|w| (3.0..=7.0).contains(&w));
    let ok = report(
        "3 (profile widths)",
        ok_zero && ok_biased,
        &format!(
            "zero-field FWHM {fwhm_zero:?} Hz (350 +- 20%), 2 uT FWHM {fwhm_biased:?} Hz (5 +- 40%); peaks at {:.0} / {:.0} Hz; total sweep time {elapsed:.1} s",
            zero_field.summary.exact.peak_value, biased.summary.exact.peak_value
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_sense_asymmetry() {
    // 2 uT: the mirrored window contains no signal
    let forward = frequency_sweep(2e-6, 0.4, 193.0, 253.0, 61);
    let reversed = frequency_sweep(2e-6, 0.4, -253.0, -193.0, 61);
    let forward_peak = forward.summary.exact.peak_p_s.abs();
    let reversed_max = reversed
        .records
        .iter()
        .fold(0.0f64, |m, r| m.max(r.p_s_exact.abs()));
    let ok_biased = reversed_max < 0.10 * forward_peak;

    // zero field: equal magnitude, opposite sign
    let positive = frequency_sweep(0.0, 0.2, 300.0, 2000.0, 341);
    let negative = frequency_sweep(0.0, 0.2, -2000.0, -300.0, 341);
    let p_pos = positive.summary.exact.peak_p_s;
    let p_neg = negative.summary.exact.peak_p_s;
    let ok_zero =
        p_pos > 0.0 && p_neg < 0.0 && ((p_pos.abs() - p_neg.abs()).abs() / p_pos.abs()) < 0.02;

    let ok = report(
        "4 (sense asymmetry)",
        ok_biased && ok_zero,
        &format!(
            "2 uT reversed-sense max |p_s| = {:.2e} vs peak {:.3} ({:.2}%); zero-field peaks {:+.4} / {:+.4}",
            reversed_max,
            forward_peak,
            100.0 * reversed_max / forward_peak,
            p_pos,
            p_neg
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_oracle_equivalence() {
    let sys = fumarate_calibrated();
    let prot = storm_protocol(0.0, 1150.0, 2e-3);
    let rho0 = initial_density(&sys).unwrap();

    let error_at = |dt: f64| -> f64 {
        let lab = evolve_lab(&rho0, &sys, &prot, dt).unwrap();
        let mapped = to_interaction_picture(&lab.rho_final, &sys, &prot, prot.duration).unwrap();
        let reference = evolve_interaction(&rho0, &sys, &prot).unwrap();
        max_abs(&(mapped.matrix() - reference.rho_final.matrix()))
    };
    let err_1us = error_at(1e-6);
    let err_05us = error_at(5e-7);
    let ratio = err_1us / err_05us;
    let ok_error = err_1us < 1e-6;
    let ok_order = (3.0..=5.5).contains(&ratio);

    // frame identity at three sampled times
    let h_tilde = interaction_frame_hamiltonian(&sys, &prot);
    let mz = collective_operator(&sys, &[0, 1, 2], Axis::Z).unwrap();
    let scale = max_abs(&h_tilde).max(1.0);
    let mut identity_defect = 0.0f64;
    for frac in [0.0, 0.17, 0.61] {
        let t = frac / prot.nu_rot;
        let k = frame_rotation(&sys, prot.nu_rot, t);
        let reconstructed = &k * lab_frame_hamiltonian(&sys, &prot, t) * k.adjoint()
            + &mz * Cx::new(prot.omega_rot(), 0.0);
        identity_defect = identity_defect.max(max_abs(&(reconstructed - &h_tilde)) / scale);
    }
    let ok_identity = identity_defect < 1e-10;

    let ok = report(
        "5 (oracle equivalence)",
        ok_error && ok_order && ok_identity,
        &format!(
            "lab-vs-interaction max error {err_1us:.2e} at dt = 1 us (< 1e-6), halving ratio {ratio:.2} (~4), frame-identity defect {identity_defect:.2e} (< 1e-10)"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_structural_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(61_803_398);
    let pair = SpinSpecies::proton();
    let het = SpinSpecies::carbon13();
    let mut worst_reconstruction = 0.0f64;
    let mut worst_coupling = 0.0f64;
    let mut worst_gap = 0.0f64;

    for _ in 0..24 {
        let sys = SpinSystem::i2s(
            pair.clone(),
            het.clone(),
            rng.random_range(1.0..30.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        )
        .unwrap();
        let prot = FieldProtocol::new(
            rng.random_range(0.0..4e-6),
            rng.random_range(5e-7..8e-6),
            rng.random_range(-3000.0..3000.0),
            0.1,
        )
        .unwrap();
        let frame = effective_frame(&sys, &prot);

        // X H_eff X^adj + H_asym = H~
        let h_eff = effective_hamiltonian(&sys, &frame).unwrap();
        let x = composite_rotation(&sys, &frame).unwrap();
        let (_, asym) = heteronuclear_split(&sys).unwrap();
        let h_int = interaction_frame_hamiltonian(&sys, &prot);
        let scale = max_abs(&h_int).max(1.0);
        let defect = max_abs(&(&x * &h_eff * x.adjoint() + &asym - &h_int)) / scale;
        worst_reconstruction = worst_reconstruction.max(defect);

        // reduction coupling = omega_nut / 2
        let params = mixing_params(&sys, &frame).unwrap();
        let restriction = restricted_v1(&sys, &prot).unwrap();
        worst_coupling = worst_coupling.max((restriction.coupling - 0.5 * params.omega_nut).abs());

        // analytic gaps = rotated-matrix diagonal differences
        let rotated = &x * &h_eff * x.adjoint();
        let basis = stz_basis(frame.theta_i(), frame.theta_s());
        let diag = |l: StzLabel| {
            let v = basis.vector(l);
            v.dotc(&(&rotated * v)).re
        };
        let beta = diag(StzLabel::SingletBeta) - diag(StzLabel::TMinus1Alpha);
        let alpha = diag(StzLabel::SingletAlpha) - diag(StzLabel::TPlus1Beta);
        let gap_beta = resonance_gap(&sys, &prot, Manifold::SingletBeta).unwrap();
        let gap_alpha = resonance_gap(&sys, &prot, Manifold::SingletAlpha).unwrap();
        worst_gap = worst_gap
            .max((gap_beta - beta).abs() / scale)
            .max((gap_alpha - alpha).abs() / scale);
    }

    let ok = worst_reconstruction < 1e-10 && worst_coupling < 1e-10 && worst_gap < 1e-10;
    let ok = report(
        "6 (structural identities)",
        ok,
        &format!(
            "24 random parameter sets: reconstruction defect {worst_reconstruction:.2e}, coupling-vs-nutation defect {worst_coupling:.2e}, gap-vs-matrix defect {worst_gap:.2e} (all < 1e-10)"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_conservation_and_selectivity() {
    // equivalent couplings: singlet conserved, no polarization ever
    let equivalent = SpinSystem::i2s(
        SpinSpecies::proton(),
        SpinSpecies::carbon13(),
        14.0,
        4.7,
        4.7,
    )
    .unwrap();
    let rho0 = initial_density(&equivalent).unwrap();
    let mut max_ps = 0.0f64;
    for tau in [0.02, 0.1, 0.23, 0.5, 1.0] {
        let out =
            evolve_interaction(&rho0, &equivalent, &storm_protocol(0.0, 1000.0, tau)).unwrap();
        max_ps = max_ps.max(out.p_s.abs());
    }
    let ok_kill_switch = max_ps < 1e-6;

    // unitarity / trace / purity drift and population completeness
    let sys = fumarate_calibrated();
    let rho0 = initial_density(&sys).unwrap();
    let mut worst_trace = 0.0f64;
    let mut worst_purity = 0.0f64;
    let mut worst_pop_sum = 0.0f64;
    for (bias, nu, tau) in [
        (0.0, 1150.0, 0.227),
        (2e-6, 226.4, 0.257),
        (1e-6, -600.0, 0.4),
    ] {
        let out = evolve_interaction(&rho0, &sys, &storm_protocol(bias, nu, tau)).unwrap();
        worst_trace = worst_trace.max((out.rho_final.trace_real() - 1.0).abs());
        worst_purity = worst_purity.max((out.rho_final.purity() - rho0.purity()).abs());
        worst_pop_sum = worst_pop_sum.max((out.populations.unwrap().sum() - 1.0).abs());
    }
    let ok_drift = worst_trace < 1e-10 && worst_purity < 1e-10;
    let ok_pops = worst_pop_sum < 1e-12;

    let ok = report(
        "7 (conservation and selectivity)",
        ok_kill_switch && ok_drift && ok_pops,
        &format!(
            "equivalent-pair max |p_s| {max_ps:.2e} (< 1e-6); trace drift {worst_trace:.2e}, purity drift {worst_purity:.2e} (< 1e-10); population-sum defect {worst_pop_sum:.2e} (< 1e-12)"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_ideal_bound_and_quadrupolar_map() {
    // ideal polarization bound at the zero-field condition
    let sys = fumarate_calibrated();
    let frame = effective_frame(&sys, &storm_protocol(0.0, 1150.0, 0.0));
    let bound = storm_core::analytics::polarization_bound(&frame).unwrap();
    let ok_bound = (bound - 0.999).abs() < 1e-3;

    // exploratory quadrupolar map: unit efficiency at zero coupling and
    // continuity in the partner coupling
    let mut cfg = base_config(fumarate_calibrated(), 0.0);
    cfg.nu_rot = Some(1150.0);
    cfg.tau = Some(0.227);
    cfg.quad = Some(storm_scenarios::config::QuadSpec {
        isotope: "2H".into(),
        j14: 0.0,
        j24: 0.0,
        j34: 0.0,
        j_min: 0.0,
        j_max: 0.5,
        j_points: 6,
        nu_halfspan: 0.0,
        nu_points: 1,
    });
    let map = run_quadrupolar_scenario(&cfg).unwrap();
    let ok_unit = (map.summary.zero_coupling_efficiency - 1.0).abs() < 1e-9;
    let mut max_jump = 0.0f64;
    for pair in map.records.windows(2) {
        max_jump = max_jump.max((pair[1].efficiency - pair[0].efficiency).abs());
    }
    let ok_continuous = max_jump < 0.25;

    let ok = report(
        "8 (ideal bound and quadrupolar map)",
        ok_bound && ok_unit && ok_continuous,
        &format!(
            "cos(theta_s) = {bound:.5} (~0.999); zero-coupling efficiency defect {:.2e}; max efficiency step {max_jump:.3} over 0.1 Hz coupling steps",
            (map.summary.zero_coupling_efficiency - 1.0).abs()
        ),
    );
    assert!(ok);
}
