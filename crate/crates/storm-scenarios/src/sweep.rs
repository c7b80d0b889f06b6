//! Frequency and duration sweeps with exact propagation and the detuned
//! two-level prediction side by side.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use storm_core::analytics::{find_storm_frequencies, mixing_params, tls_polarization};
use storm_core::hamiltonians::effective_frame;
use storm_core::propagator::{
    evolve_interaction, initial_density, stz_populations, InteractionPropagator, StzPopulations,
};
use storm_core::{FieldProtocol, StormError};

use crate::config::{ConfigError, ScenarioConfig, SweepAxis, SweepSpec};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Core(#[from] StormError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("sweep needs {0}")]
    MissingParameter(&'static str),
}

/// One sweep point: swept value, exact and analytic polarization, and the
/// rotated-STZ population snapshot.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub value: f64,
    pub p_s_exact: f64,
    pub p_s_analytic: f64,
    pub populations: StzPopulations,
}

/// Peak and width diagnostics of a profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileStats {
    /// Swept value at the sampled maximum of |p_s|.
    pub peak_value: f64,
    /// Signed p_s at the peak.
    pub peak_p_s: f64,
    /// Full width at half maximum by linear interpolation, when both
    /// half-maximum crossings lie inside the window.
    pub fwhm: Option<f64>,
}

/// A resonance root relevant to the sweep, for the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct RootSummary {
    pub nu_hz: f64,
    pub branch: String,
    pub predicted_polarization: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub axis: &'static str,
    pub points: usize,
    pub exact: ProfileStats,
    pub analytic: ProfileStats,
    /// pi/|omega_nut| at the sweep's fixed working point, seconds.
    pub tau_star_s: f64,
    /// Resonance roots of the analytic condition near the sweep.
    pub roots: Vec<RootSummary>,
    /// Fitted oscillation frequencies of a duration sweep, Hz.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation_exact_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation_analytic_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn roots_in_window(
    config: &ScenarioConfig,
    nu_min: f64,
    nu_max: f64,
) -> Result<Vec<RootSummary>, StormError> {
    let found =
        find_storm_frequencies(&config.system, config.b_bias, config.b_rot, nu_min, nu_max)?;
    Ok(found
        .resonances
        .iter()
        .map(|r| RootSummary {
            nu_hz: r.nu_hz,
            branch: r.branch.to_string(),
            predicted_polarization: r.predicted_polarization,
        })
        .collect())
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub axis: SweepAxis,
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
}

/// Profiles flatter than this (max |p_s|) are reported as resonance-free.
const FLAT_PROFILE_FLOOR: f64 = 1e-3;

fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    let step = (max - min) / (points - 1) as f64;
    (0..points).map(|i| min + step * i as f64).collect()
}

/// Sweep the rotation frequency at fixed pulse duration.
pub fn run_frequency_sweep(config: &ScenarioConfig) -> Result<SweepOutcome, SweepError> {
    let sweep = sweep_spec(config, SweepAxis::Frequency)?;
    let tau = config
        .tau
        .ok_or(SweepError::MissingParameter("protocol.tau_s"))?;
    let system = &config.system;
    let rho0 = initial_density(system)?;
    let grid = linspace(sweep.min, sweep.max, sweep.points);

    let records: Result<Vec<SweepRecord>, StormError> = grid
        .par_iter()
        .map(|&nu| {
            let protocol = FieldProtocol::new(config.b_bias, config.b_rot, nu, tau)?;
            let out = evolve_interaction(&rho0, system, &protocol)?;
            Ok(SweepRecord {
                value: nu,
                p_s_exact: out.p_s,
                p_s_analytic: tls_polarization(system, &protocol)?,
                populations: out.populations.expect("I2S sweep has populations"),
            })
        })
        .collect();
    let records = records?;

    // nutation parameters at the exact peak's frequency
    let exact = profile_stats(&records, |r| r.p_s_exact);
    let analytic = profile_stats(&records, |r| r.p_s_analytic);
    let frame = effective_frame(
        system,
        &FieldProtocol::new(config.b_bias, config.b_rot, exact.peak_value, tau)?,
    );
    let params = mixing_params(system, &frame)?;
    let warning = flat_warning(&exact);

    let summary = SweepSummary {
        axis: SweepAxis::Frequency.column_name(),
        points: records.len(),
        exact,
        analytic,
        tau_star_s: params.tau_star,
        roots: roots_in_window(config, sweep.min, sweep.max)?,
        oscillation_exact_hz: None,
        oscillation_analytic_hz: None,
        warning,
    };
    Ok(SweepOutcome {
        axis: SweepAxis::Frequency,
        records,
        summary,
    })
}

/// Sweep the pulse duration at fixed rotation frequency.
pub fn run_duration_sweep(config: &ScenarioConfig) -> Result<SweepOutcome, SweepError> {
    let sweep = sweep_spec(config, SweepAxis::Duration)?;
    let nu = config
        .nu_rot
        .ok_or(SweepError::MissingParameter("protocol.nu_rot_hz"))?;
    let system = &config.system;
    let rho0 = initial_density(system)?;
    let grid = linspace(sweep.min, sweep.max, sweep.points);

    // one eigendecomposition serves every duration
    let base = FieldProtocol::new(config.b_bias, config.b_rot, nu, 0.0)?;
    let propagator = InteractionPropagator::new(system, &base)?;
    let records: Result<Vec<SweepRecord>, StormError> = grid
        .par_iter()
        .map(|&tau| {
            let rho_t = propagator.propagate(&rho0, tau)?;
            let p_s_exact = storm_core::propagator::measure_polarization(&rho_t, system)?;
            let populations = stz_populations(&rho_t, propagator.frame())?;
            let protocol = base.with_duration(tau);
            Ok(SweepRecord {
                value: tau,
                p_s_exact,
                p_s_analytic: tls_polarization(system, &protocol)?,
                populations,
            })
        })
        .collect();
    let records = records?;

    let exact = profile_stats(&records, |r| r.p_s_exact);
    let analytic = profile_stats(&records, |r| r.p_s_analytic);
    let params = mixing_params(system, propagator.frame())?;
    let warning = flat_warning(&exact);
    let summary = SweepSummary {
        axis: SweepAxis::Duration.column_name(),
        points: records.len(),
        oscillation_exact_hz: fitted_oscillation(&records, |r| r.p_s_exact),
        oscillation_analytic_hz: fitted_oscillation(&records, |r| r.p_s_analytic),
        exact,
        analytic,
        tau_star_s: params.tau_star,
        roots: roots_in_window(config, config.search.min, config.search.max)?,
        warning,
    };
    Ok(SweepOutcome {
        axis: SweepAxis::Duration,
        records,
        summary,
    })
}

fn sweep_spec(config: &ScenarioConfig, axis: SweepAxis) -> Result<SweepSpec, SweepError> {
    let sweep = config
        .sweep
        .clone()
        .ok_or(SweepError::MissingParameter("a [sweep] section"))?;
    if sweep.axis != axis {
        return Err(SweepError::MissingParameter(match axis {
            SweepAxis::Frequency => "sweep.axis = frequency",
            SweepAxis::Duration => "sweep.axis = duration",
        }));
    }
    Ok(sweep)
}

fn flat_warning(stats: &ProfileStats) -> Option<String> {
    if stats.peak_p_s.abs() < FLAT_PROFILE_FLOOR {
        Some(format!(
            "profile is flat (max |p_s| = {:.2e}); the window contains no resonance",
            stats.peak_p_s.abs()
        ))
    } else {
        None
    }
}

/// Peak location, peak height and FWHM of a profile. The width is measured
/// around the global |p_s| maximum, walking outward to the first crossings
/// of half the peak value and interpolating linearly.
pub fn profile_stats<F: Fn(&SweepRecord) -> f64>(
    records: &[SweepRecord],
    value: F,
) -> ProfileStats {
    let ys: Vec<f64> = records.iter().map(&value).collect();
    let xs: Vec<f64> = records.iter().map(|r| r.value).collect();
    let peak_idx = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let sign = ys[peak_idx].signum();
    let y: Vec<f64> = ys.iter().map(|v| v * sign).collect();
    let peak = y[peak_idx];
    let half = 0.5 * peak;

    let mut left = peak_idx;
    while left > 0 && y[left] > half {
        left -= 1;
    }
    let mut right = peak_idx;
    while right + 1 < y.len() && y[right] > half {
        right += 1;
    }
    let fwhm = if y[left] <= half && y[right] <= half && left < peak_idx && right > peak_idx {
        let xl = interpolate_crossing(xs[left], y[left], xs[left + 1], y[left + 1], half);
        let xr = interpolate_crossing(xs[right - 1], y[right - 1], xs[right], y[right], half);
        Some(xr - xl)
    } else {
        None
    };
    ProfileStats {
        peak_value: xs[peak_idx],
        peak_p_s: ys[peak_idx],
        fwhm,
    }
}

fn interpolate_crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if (y1 - y0).abs() < f64::EPSILON {
        0.5 * (x0 + x1)
    } else {
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    }
}

/// Oscillation frequency of a duration profile: the first local maximum above
/// half the global maximum marks half an oscillation period. The sample is
/// refined by parabolic interpolation.
pub fn fitted_oscillation<F: Fn(&SweepRecord) -> f64>(
    records: &[SweepRecord],
    value: F,
) -> Option<f64> {
    if records.len() < 5 {
        return None;
    }
    let ys: Vec<f64> = records.iter().map(&value).collect();
    let peak = ys.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak < FLAT_PROFILE_FLOOR {
        return None;
    }
    for i in 1..ys.len() - 1 {
        if ys[i] >= ys[i - 1] && ys[i] >= ys[i + 1] && ys[i].abs() > 0.5 * peak {
            let denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1];
            let offset = if denom.abs() < f64::EPSILON {
                0.0
            } else {
                0.5 * (ys[i - 1] - ys[i + 1]) / denom
            };
            let dt = records[1].value - records[0].value;
            let t_peak = records[i].value + offset * dt;
            if t_peak > 0.0 {
                return Some(0.5 / t_peak);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use storm_core::presets::{FUMARATE_J12, FUMARATE_J13, FUMARATE_J23};

    fn config(text: &str) -> ScenarioConfig {
        ScenarioConfig::parse_str(text).unwrap()
    }

    fn base_config(extra: &str) -> String {
        format!(
            "system.i_isotope = 1H\nsystem.s_isotope = 13C\n\
             system.j12_hz = {FUMARATE_J12}\nsystem.j13_hz = {FUMARATE_J13}\n\
             system.j23_hz = {FUMARATE_J23}\nprotocol.b_bias_t = 0.0\n\
             protocol.b_rot_t = 4e-6\n{extra}"
        )
    }

    #[test]
    fn frequency_sweep_finds_the_zero_field_peak() {
        let cfg = config(&base_config(
            "protocol.tau_s = 0.2\nsweep.axis = frequency\nsweep.min = 900.0\nsweep.max = 1400.0\nsweep.points = 101\n",
        ));
        let out = run_frequency_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 101);
        assert!((out.summary.exact.peak_value - 1150.0).abs() <= 10.0);
        assert!(out.summary.exact.peak_p_s > 0.9);
        assert!(out.summary.warning.is_none());
        // exact and analytic profiles agree in peak position within the grid
        // and in width within 20%
        assert!((out.summary.exact.peak_value - out.summary.analytic.peak_value).abs() <= 5.0);
        let (we, wa) = (
            out.summary.exact.fwhm.expect("exact width"),
            out.summary.analytic.fwhm.expect("analytic width"),
        );
        assert!((we / wa - 1.0).abs() < 0.2, "widths {we} vs {wa}");
    }

    #[test]
    fn zero_field_profile_is_antisymmetric() {
        let forward = config(&base_config(
            "protocol.tau_s = 0.2\nsweep.axis = frequency\nsweep.min = 900.0\nsweep.max = 1400.0\nsweep.points = 51\n",
        ));
        let mirrored = config(&base_config(
            "protocol.tau_s = 0.2\nsweep.axis = frequency\nsweep.min = -1400.0\nsweep.max = -900.0\nsweep.points = 51\n",
        ));
        let fwd = run_frequency_sweep(&forward).unwrap();
        let mir = run_frequency_sweep(&mirrored).unwrap();
        for (f, m) in fwd.records.iter().zip(mir.records.iter().rev()) {
            assert!((f.value + m.value).abs() < 1e-9);
            assert!(
                (f.p_s_exact + m.p_s_exact).abs() < 1e-9,
                "p_s({}) = {} vs p_s({}) = {}",
                f.value,
                f.p_s_exact,
                m.value,
                m.p_s_exact
            );
        }
    }

    #[test]
    fn oscillation_rate_is_stable_across_bias_conditions() {
        let zero_field = config(&base_config(
            "protocol.nu_rot_hz = 1100.0\nsweep.axis = duration\nsweep.min = 0.0\nsweep.max = 0.6\nsweep.points = 241\n",
        ));
        let biased_text = base_config(
            "protocol.nu_rot_hz = 222.0\nsweep.axis = duration\nsweep.min = 0.0\nsweep.max = 0.8\nsweep.points = 321\n",
        )
        .replace("protocol.b_bias_t = 0.0", "protocol.b_bias_t = 2e-6");
        let biased = config(&biased_text);
        let out0 = run_duration_sweep(&zero_field).unwrap();
        let out2 = run_duration_sweep(&biased).unwrap();
        let r0 = out0.summary.oscillation_exact_hz.unwrap();
        let r2 = out2.summary.oscillation_exact_hz.unwrap();
        assert!((r2 / r0 - 1.0).abs() < 0.25, "rates {r0} vs {r2}");
        // the first inversion sits near tau* = pi / omega_nut
        let first_max = 0.5 / r0;
        assert!((first_max / out0.summary.tau_star_s - 1.0).abs() < 0.15);
        assert!(
            (0.2125..=0.2875).contains(&first_max),
            "first max at {first_max}"
        );
    }

    #[test]
    fn off_resonance_window_warns_about_flat_profile() {
        // reversed sense at 2 uT bias: the window has no resonance at all
        let text = base_config(
            "protocol.tau_s = 0.4\nsweep.axis = frequency\nsweep.min = -253.0\nsweep.max = -193.0\nsweep.points = 61\n",
        )
        .replace("protocol.b_bias_t = 0.0", "protocol.b_bias_t = 2e-6");
        let out = run_frequency_sweep(&config(&text)).unwrap();
        assert!(out.summary.warning.is_some());
        assert!(out.summary.exact.peak_p_s.abs() < 1e-3);
    }

    #[test]
    fn duration_sweep_oscillates_at_the_nutation_rate() {
        let cfg = config(&base_config(
            "protocol.nu_rot_hz = 1150.0\nsweep.axis = duration\nsweep.min = 0.0\nsweep.max = 0.6\nsweep.points = 241\n",
        ));
        let out = run_duration_sweep(&cfg).unwrap();
        let exact = out.summary.oscillation_exact_hz.unwrap();
        let analytic = out.summary.oscillation_analytic_hz.unwrap();
        assert!((exact / analytic - 1.0).abs() < 0.15);
        // first sample is tau = 0 with no polarization
        assert!(out.records[0].p_s_exact.abs() < 1e-12);
    }

    #[test]
    fn profile_stats_interpolates_triangle_width() {
        let records: Vec<SweepRecord> = (0..11)
            .map(|i| {
                let x = i as f64;
                let y = (5.0 - (x - 5.0).abs()).max(0.0) / 5.0;
                SweepRecord {
                    value: x,
                    p_s_exact: y,
                    p_s_analytic: y,
                    populations: zero_populations(),
                }
            })
            .collect();
        let stats = profile_stats(&records, |r| r.p_s_exact);
        assert_eq!(stats.peak_value, 5.0);
        assert!((stats.fwhm.unwrap() - 5.0).abs() < 1e-12);
    }

    fn zero_populations() -> StzPopulations {
        // populations of the maximally mixed state sum to one
        let sys = storm_core::presets::fumarate_calibrated();
        let rho = storm_core::propagator::initial_density(&sys).unwrap();
        let frame = effective_frame(&sys, &storm_core::presets::storm_protocol(0.0, 100.0, 0.1));
        stz_populations(&rho, &frame).unwrap()
    }
}
