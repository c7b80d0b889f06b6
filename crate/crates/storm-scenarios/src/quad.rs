//! Coherent quadrupolar-partner scenario: the I2S system plus a J-coupled
//! spin-1 nucleus, compared against the three-spin baseline.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use storm_core::propagator::{evolve_interaction, initial_density, singlet_order_density};
use storm_core::spin::Spin;
use storm_core::{FieldProtocol, SpinSpecies, SpinSystem, StormError};

use crate::config::{ConfigError, QuadSpec, ScenarioConfig};

#[derive(Debug, Error)]
pub enum QuadError {
    #[error(transparent)]
    Core(#[from] StormError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("quad scenario needs {0}")]
    MissingParameter(&'static str),

    #[error("quad partner must be a spin-1 isotope, got {0}")]
    NotSpinOne(String),
}

/// One grid point of the efficiency map.
#[derive(Debug, Clone, Serialize)]
pub struct QuadRecord {
    /// Uniform partner coupling applied to all three spins, Hz.
    pub j_quad_hz: f64,
    /// Rotation frequency, Hz.
    pub nu_rot_hz: f64,
    /// Polarization of the four-spin system.
    pub p_s_quad: f64,
    /// Polarization of the three-spin baseline at the same protocol.
    pub p_s_baseline: f64,
    /// p_s_quad / p_s_baseline.
    pub efficiency: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadSummary {
    pub partner: String,
    pub tau_s: f64,
    pub baseline_peak_p_s: f64,
    /// Efficiency at zero partner coupling on the working frequency.
    pub zero_coupling_efficiency: f64,
    pub min_efficiency: f64,
    pub max_efficiency: f64,
    /// Fixed-coupling comparison using quad.j14/j24/j34, if any is nonzero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_coupling: Option<QuadRecord>,
}

#[derive(Debug)]
pub struct QuadOutcome {
    pub records: Vec<QuadRecord>,
    pub summary: QuadSummary,
}

fn partner_species(spec: &QuadSpec) -> Result<SpinSpecies, QuadError> {
    let species = SpinSpecies::from_label(&spec.isotope)?;
    if species.spin != Spin::One {
        return Err(QuadError::NotSpinOne(spec.isotope.clone()));
    }
    Ok(species)
}

fn four_spin_system(
    base: &SpinSystem,
    partner: &SpinSpecies,
    j14: f64,
    j24: f64,
    j34: f64,
) -> Result<SpinSystem, StormError> {
    let mut j = nalgebra::DMatrix::zeros(4, 4);
    for k in 0..3 {
        for l in 0..3 {
            j[(k, l)] = base.j(k, l);
        }
    }
    j[(0, 3)] = j14;
    j[(3, 0)] = j14;
    j[(1, 3)] = j24;
    j[(3, 1)] = j24;
    j[(2, 3)] = j34;
    j[(3, 2)] = j34;
    let spins = vec![
        base.species(0).clone(),
        base.species(1).clone(),
        base.species(2).clone(),
        partner.clone(),
    ];
    SpinSystem::new(spins, j)
}

fn quad_point(
    base: &SpinSystem,
    partner: &SpinSpecies,
    couplings: (f64, f64, f64),
    protocol: &FieldProtocol,
    baseline_p: f64,
) -> Result<(f64, f64), QuadError> {
    let sys4 = four_spin_system(base, partner, couplings.0, couplings.1, couplings.2)?;
    let rho0 = singlet_order_density(&sys4)?;
    let out = evolve_interaction(&rho0, &sys4, protocol)?;
    let efficiency = if baseline_p.abs() < 1e-12 {
        f64::NAN
    } else {
        out.p_s / baseline_p
    };
    Ok((out.p_s, efficiency))
}

/// Run the efficiency map over a grid of uniform partner couplings and
/// rotation frequencies around the working frequency.
pub fn run_quadrupolar_scenario(config: &ScenarioConfig) -> Result<QuadOutcome, QuadError> {
    let spec = config
        .quad
        .clone()
        .ok_or(QuadError::MissingParameter("a [quad] section"))?;
    let nu_center = config
        .nu_rot
        .ok_or(QuadError::MissingParameter("protocol.nu_rot_hz"))?;
    let tau = config
        .tau
        .ok_or(QuadError::MissingParameter("protocol.tau_s"))?;
    let partner = partner_species(&spec)?;
    let base = &config.system;

    let j_grid: Vec<f64> = if spec.j_points < 2 {
        vec![spec.j_min]
    } else {
        (0..spec.j_points)
            .map(|i| spec.j_min + (spec.j_max - spec.j_min) * i as f64 / (spec.j_points - 1) as f64)
            .collect()
    };
    let nu_grid: Vec<f64> = if spec.nu_points < 2 {
        vec![nu_center]
    } else {
        (0..spec.nu_points)
            .map(|i| {
                nu_center - spec.nu_halfspan
                    + 2.0 * spec.nu_halfspan * i as f64 / (spec.nu_points - 1) as f64
            })
            .collect()
    };

    // three-spin baseline per frequency
    let rho0_base = initial_density(base)?;
    let baselines: Result<Vec<f64>, StormError> = nu_grid
        .par_iter()
        .map(|&nu| {
            let protocol = FieldProtocol::new(config.b_bias, config.b_rot, nu, tau)?;
            Ok(evolve_interaction(&rho0_base, base, &protocol)?.p_s)
        })
        .collect();
    let baselines = baselines?;

    let mut points: Vec<(f64, f64)> = Vec::new();
    for &jq in &j_grid {
        for &nu in &nu_grid {
            points.push((jq, nu));
        }
    }
    let records: Result<Vec<QuadRecord>, QuadError> = points
        .par_iter()
        .map(|&(jq, nu)| {
            let protocol = FieldProtocol::new(config.b_bias, config.b_rot, nu, tau)?;
            let idx = nu_grid.iter().position(|&x| x == nu).expect("nu from grid");
            let (p_quad, efficiency) =
                quad_point(base, &partner, (jq, jq, jq), &protocol, baselines[idx])?;
            Ok(QuadRecord {
                j_quad_hz: jq,
                nu_rot_hz: nu,
                p_s_quad: p_quad,
                p_s_baseline: baselines[idx],
                efficiency,
            })
        })
        .collect();
    let records = records?;

    let center_idx = nu_grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - nu_center).abs().total_cmp(&(b.1 - nu_center).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let center_protocol =
        FieldProtocol::new(config.b_bias, config.b_rot, nu_grid[center_idx], tau)?;
    let (_, zero_eff) = quad_point(
        base,
        &partner,
        (0.0, 0.0, 0.0),
        &center_protocol,
        baselines[center_idx],
    )?;

    let fixed_coupling = if spec.j14 != 0.0 || spec.j24 != 0.0 || spec.j34 != 0.0 {
        let (p_quad, efficiency) = quad_point(
            base,
            &partner,
            (spec.j14, spec.j24, spec.j34),
            &center_protocol,
            baselines[center_idx],
        )?;
        Some(QuadRecord {
            j_quad_hz: f64::NAN,
            nu_rot_hz: nu_grid[center_idx],
            p_s_quad: p_quad,
            p_s_baseline: baselines[center_idx],
            efficiency,
        })
    } else {
        None
    };

    let finite: Vec<f64> = records
        .iter()
        .map(|r| r.efficiency)
        .filter(|e| e.is_finite())
        .collect();
    let summary = QuadSummary {
        partner: partner.label.clone(),
        tau_s: tau,
        baseline_peak_p_s: baselines.iter().cloned().fold(f64::MIN, f64::max),
        zero_coupling_efficiency: zero_eff,
        min_efficiency: finite.iter().cloned().fold(f64::INFINITY, f64::min),
        max_efficiency: finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        fixed_coupling,
    };
    Ok(QuadOutcome { records, summary })
}
