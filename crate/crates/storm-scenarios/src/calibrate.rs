//! Least-squares adjustment of the scalar couplings against observed
//! resonance frequencies.
//!
//! Two observed roots constrain J12 and J13+J23; the difference J13-J23 is
//! root-insensitive and is left where the starting values put it. The
//! Gauss-Newton step uses the minimum-norm pseudoinverse of the 2x3 Jacobian,
//! which realises exactly that behaviour.

use serde::Serialize;
use thiserror::Error;

use storm_core::analytics::{find_storm_frequencies, resonance_gap, Branch, Manifold};
use storm_core::{FieldProtocol, SpinSpecies, SpinSystem, StormError};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Core(#[from] StormError),

    #[error("no resonance found near {target_hz} Hz at bias {bias_t} T")]
    RootNotFound { bias_t: f64, target_hz: f64 },

    #[error("calibration did not converge: max residual {residual_hz:.3} Hz > 5 Hz")]
    NotConverged { residual_hz: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationOutcome {
    pub j12: f64,
    pub j13: f64,
    pub j23: f64,
    /// root(J) - target per condition, Hz.
    pub residuals_hz: Vec<f64>,
    pub iterations: usize,
    /// Root shift per condition when its bias field grows by 5%, Hz.
    pub bias_sensitivity_hz: Vec<f64>,
}

/// Acceptable converged residual, Hz.
const TARGET_RESIDUAL_HZ: f64 = 1e-4;
/// Fits worse than this are refused, Hz.
const REFUSAL_RESIDUAL_HZ: f64 = 5.0;
/// Half-width of the root search window around each target, Hz.
const WINDOW_HZ: f64 = 600.0;

fn system_with(j: [f64; 3], template: &SpinSystem) -> Result<SpinSystem, StormError> {
    SpinSystem::i2s(
        template.species(0).clone(),
        template.species(2).clone(),
        j[0],
        j[1],
        j[2],
    )
}

/// Positive-magnetization root closest to `target` within the search window,
/// refined by a secant polish well below the scan tolerance so that
/// finite-difference Jacobians are clean.
fn nearest_root(
    system: &SpinSystem,
    b_bias: f64,
    b_rot: f64,
    target: f64,
) -> Result<Option<f64>, StormError> {
    let found = find_storm_frequencies(
        system,
        b_bias,
        b_rot,
        target - WINDOW_HZ,
        target + WINDOW_HZ,
    )?;
    let Some(coarse) = found
        .resonances
        .iter()
        .filter(|r| r.branch == Branch::PositiveMagnetization)
        .min_by(|a, b| {
            (a.nu_hz - target)
                .abs()
                .total_cmp(&(b.nu_hz - target).abs())
        })
    else {
        return Ok(None);
    };
    Ok(Some(refine_root(
        system,
        b_bias,
        b_rot,
        coarse.nu_hz,
        coarse.manifold,
    )?))
}

fn refine_root(
    system: &SpinSystem,
    b_bias: f64,
    b_rot: f64,
    guess: f64,
    manifold: Manifold,
) -> Result<f64, StormError> {
    let gap = |nu: f64| -> Result<f64, StormError> {
        resonance_gap(
            system,
            &FieldProtocol {
                b_bias,
                b_rot,
                nu_rot: nu,
                duration: 0.0,
            },
            manifold,
        )
    };
    let mut x0 = guess - 0.5;
    let mut x1 = guess + 0.5;
    let mut f0 = gap(x0)?;
    let mut f1 = gap(x1)?;
    for _ in 0..60 {
        if (f1 - f0).abs() < 1e-300 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !x2.is_finite() {
            break;
        }
        if (x2 - x1).abs() < 1e-10 {
            return Ok(x2);
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = gap(x1)?;
    }
    Ok(x1)
}

fn residuals(
    j: [f64; 3],
    template: &SpinSystem,
    b_rot: f64,
    conditions: &[(f64, f64)],
) -> Result<Vec<f64>, CalibrationError> {
    let system = system_with(j, template)?;
    conditions
        .iter()
        .map(|&(bias, target)| {
            nearest_root(&system, bias, b_rot, target)?
                .map(|root| root - target)
                .ok_or(CalibrationError::RootNotFound {
                    bias_t: bias,
                    target_hz: target,
                })
        })
        .collect()
}

/// Fit (J12, J13, J23) so the positive-branch resonances reproduce the
/// observed roots. `conditions` pairs each bias field with its observed
/// root; `b_rot` is shared. Starting values come from `start`.
pub fn calibrate_couplings(
    start: &SpinSystem,
    b_rot: f64,
    conditions: &[(f64, f64)],
) -> Result<CalibrationOutcome, CalibrationError> {
    start.require_i2s()?;
    let mut j = [start.j(0, 1), start.j(0, 2), start.j(1, 2)];
    let m = conditions.len();
    let mut iterations = 0;
    let mut res = residuals(j, start, b_rot, conditions)?;

    for _ in 0..30 {
        let worst = res.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
        if worst < TARGET_RESIDUAL_HZ {
            break;
        }
        iterations += 1;
        // finite-difference Jacobian d(root_k)/d(J_i), m x 3
        let h = 1e-5;
        let mut jac = vec![[0.0f64; 3]; m];
        for i in 0..3 {
            let mut jp = j;
            jp[i] += h;
            let rp = residuals(jp, start, b_rot, conditions)?;
            for k in 0..m {
                jac[k][i] = (rp[k] - res[k]) / h;
            }
        }
        // minimum-norm step: dJ = J^T (J J^T)^{-1} (-res), for m = 1 or 2
        let step = minimum_norm_step(&jac, &res)
            .ok_or(CalibrationError::NotConverged { residual_hz: worst })?;
        for i in 0..3 {
            j[i] += step[i];
        }
        res = residuals(j, start, b_rot, conditions)?;
    }

    let worst = res.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    if worst > REFUSAL_RESIDUAL_HZ {
        return Err(CalibrationError::NotConverged { residual_hz: worst });
    }

    // sensitivity: shift of each condition's root under a +5% bias change
    let system = system_with(j, start)?;
    let mut bias_sensitivity_hz = Vec::with_capacity(m);
    for &(bias, target) in conditions {
        let base =
            nearest_root(&system, bias, b_rot, target)?.ok_or(CalibrationError::RootNotFound {
                bias_t: bias,
                target_hz: target,
            })?;
        let shifted = nearest_root(&system, bias * 1.05, b_rot, base)?;
        bias_sensitivity_hz.push(shifted.map_or(f64::NAN, |s| s - base));
    }

    Ok(CalibrationOutcome {
        j12: j[0],
        j13: j[1],
        j23: j[2],
        residuals_hz: res,
        iterations,
        bias_sensitivity_hz,
    })
}

/// Minimum-norm solution of jac * dj = -res for up to two conditions.
fn minimum_norm_step(jac: &[[f64; 3]], res: &[f64]) -> Option<[f64; 3]> {
    let m = jac.len();
    match m {
        1 => {
            let g = jac[0];
            let gg: f64 = g.iter().map(|x| x * x).sum();
            if gg < 1e-300 {
                return None;
            }
            let scale = -res[0] / gg;
            Some([g[0] * scale, g[1] * scale, g[2] * scale])
        }
        2 => {
            let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            let a11 = dot(&jac[0], &jac[0]);
            let a12 = dot(&jac[0], &jac[1]);
            let a22 = dot(&jac[1], &jac[1]);
            let det = a11 * a22 - a12 * a12;
            if det.abs() < 1e-12 * (a11 * a22).max(1e-300) {
                return None;
            }
            let b0 = -res[0];
            let b1 = -res[1];
            let c0 = (a22 * b0 - a12 * b1) / det;
            let c1 = (a11 * b1 - a12 * b0) / det;
            Some([
                jac[0][0] * c0 + jac[1][0] * c1,
                jac[0][1] * c0 + jac[1][1] * c1,
                jac[0][2] * c0 + jac[1][2] * c1,
            ])
        }
        _ => {
            // general least squares is not needed for the shipped scenarios
            None
        }
    }
}

/// Convenience: the two-condition fumarate calibration against quoted roots.
pub fn calibrate_fumarate_defaults(
    start: &SpinSystem,
    b_rot: f64,
) -> Result<CalibrationOutcome, CalibrationError> {
    calibrate_couplings(start, b_rot, &[(0.0, 1150.0), (2e-6, 223.0)])
}

#[allow(dead_code)]
fn proton_carbon(j12: f64, j13: f64, j23: f64) -> SpinSystem {
    SpinSystem::i2s(
        SpinSpecies::proton(),
        SpinSpecies::carbon13(),
        j12,
        j13,
        j23,
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use storm_core::presets::{fumarate_literature_start, B_ROT_TESLA};

    #[test]
    fn synthetic_roots_are_recovered() {
        // generate roots from a known system, then refit from a perturbed start
        let truth = proton_carbon(14.0, 5.0, 1.0);
        let root0 = nearest_root(&truth, 0.0, B_ROT_TESLA, 1000.0)
            .unwrap()
            .unwrap();
        let root1 = nearest_root(&truth, 2e-6, B_ROT_TESLA, 230.0)
            .unwrap()
            .unwrap();
        let start = proton_carbon(12.5, 6.0, 0.0);
        let fit = calibrate_couplings(&start, B_ROT_TESLA, &[(0.0, root0), (2e-6, root1)]).unwrap();
        for r in &fit.residuals_hz {
            assert!(r.abs() < 1e-3, "residual {r}");
        }
        // the refit system reproduces the synthetic roots
        let refit = proton_carbon(fit.j12, fit.j13, fit.j23);
        let again = nearest_root(&refit, 0.0, B_ROT_TESLA, root0)
            .unwrap()
            .unwrap();
        assert!((again - root0).abs() < 1e-3);
    }

    #[test]
    fn literature_start_fits_quoted_roots() {
        let fit = calibrate_fumarate_defaults(&fumarate_literature_start(), B_ROT_TESLA).unwrap();
        for r in &fit.residuals_hz {
            assert!(r.abs() < 1.0, "residual {r} Hz");
        }
        // the hard two-root fit lands on the large coupling-sum family
        assert!((fit.j12 - 17.59).abs() < 0.1, "J12 = {}", fit.j12);
        assert!((fit.j13 + fit.j23 - 23.51).abs() < 0.1);
        // minimum-norm updates preserve the starting difference
        assert!((fit.j13 - fit.j23 - 3.4).abs() < 1e-6);
    }

    #[test]
    fn bias_sensitivity_distinguishes_conditions() {
        let fit = calibrate_fumarate_defaults(&fumarate_literature_start(), B_ROT_TESLA).unwrap();
        // zero-bias condition: scaling 0 T by 5% changes nothing
        assert!(fit.bias_sensitivity_hz[0].abs() < 1e-6);
        // biased condition: the root moves by several Hz
        assert!(fit.bias_sensitivity_hz[1].abs() > 1.0);
    }

    #[test]
    fn refuses_unreachable_targets() {
        let start = proton_carbon(15.7, 6.6, 3.2);
        // a zero-field root cannot sit at 40 kHz inside a +-600 Hz window
        let err = calibrate_couplings(&start, B_ROT_TESLA, &[(0.0, 40_000.0)]);
        assert!(err.is_err());
    }
}
