//! Closed-form resonance conditions, root finding, mixing angle, nutation
//! frequency and two-level-system diagnostics for the I2S transfer problem.
//!
//! The two nearly degenerate manifolds are
//! `{|S0 b'>, |T0 b'>, |T-1 a'>}` and `{|S0 a'>, |T0 a'>, |T+1 b'>}`.
//! Driving the first at its level crossing produces heteronuclear
//! magnetization of sign `+cos(theta_s)`, the second `-cos(theta_s)`.

use std::f64::consts::{PI, TAU};

use crate::error::{Result, StormError};
use crate::hamiltonians::{
    effective_frame, interaction_frame_hamiltonian, EffectiveFrame, FieldProtocol,
};
use crate::spin::{stz_basis, CMat, Cx, SpinSystem, StzLabel};

/// Which singlet sublevel's manifold a resonance condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// `{|S0 b'>, |T-1 a'>}` crossing; transfer yields +cos(theta_s).
    SingletBeta,
    /// `{|S0 a'>, |T+1 b'>}` crossing; transfer yields -cos(theta_s).
    SingletAlpha,
}

impl Manifold {
    pub const BOTH: [Manifold; 2] = [Manifold::SingletBeta, Manifold::SingletAlpha];

    /// Sign of the heteronuclear magnetization produced by this manifold's
    /// transfer, relative to cos(theta_s).
    pub fn polarization_sign(self) -> f64 {
        match self {
            Manifold::SingletBeta => 1.0,
            Manifold::SingletAlpha => -1.0,
        }
    }
}

/// Sign of the heteronuclear magnetization created at a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    PositiveMagnetization,
    NegativeMagnetization,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::PositiveMagnetization => f.write_str("positive-magnetization"),
            Branch::NegativeMagnetization => f.write_str("negative-magnetization"),
        }
    }
}

/// One root of a resonance condition.
#[derive(Debug, Clone)]
pub struct StormResonance {
    /// Signed rotation frequency of the root, Hz.
    pub nu_hz: f64,
    /// Which manifold's gap vanishes here.
    pub manifold: Manifold,
    /// Sign of the predicted heteronuclear magnetization.
    pub branch: Branch,
    /// d(gap)/d(nu) at the root, rad/s per Hz.
    pub gap_slope: f64,
    /// Ideal polarization after a perfect half-cycle pulse:
    /// polarization_sign * cos(theta_s) at the root.
    pub predicted_polarization: f64,
    /// True for grazing (double) roots where the slope vanishes.
    pub degenerate: bool,
}

/// Result of a resonance search over a frequency window.
#[derive(Debug, Clone, Default)]
pub struct ResonanceSearch {
    /// Roots in ascending frequency order.
    pub resonances: Vec<StormResonance>,
    /// Scan frequencies where the effective field of some spin vanished and
    /// the gap is undefined.
    pub degenerate_points: Vec<f64>,
}

/// Singlet-triplet mixing parameters.
#[derive(Debug, Clone, Copy)]
pub struct MixingParams {
    /// Mixing angle between |S0 b'> and |T0 b'>, rad.
    pub xi_st: f64,
    /// Singlet-triplet nutation frequency, rad/s (signed).
    pub omega_nut: f64,
    /// Duration of a complete population inversion, pi/|omega_nut| (s).
    pub tau_star: f64,
}

impl MixingParams {
    /// True when the couplings permit no transfer (omega_nut = 0).
    pub fn transfer_blocked(&self) -> bool {
        self.omega_nut == 0.0
    }
}

fn frame_for(system: &SpinSystem, protocol: &FieldProtocol) -> Result<EffectiveFrame> {
    system.require_i2s()?;
    let frame = effective_frame(system, protocol);
    for spin in [0usize, 2] {
        if frame.is_degenerate(spin) {
            return Err(StormError::DegenerateEffectiveField { spin });
        }
    }
    Ok(frame)
}

/// Energy separation of the manifold's singlet and triplet level, rad/s.
///
/// For [`Manifold::SingletBeta`] this is
/// `E(S0 b') - E(T-1 a') = w_eff^I - w_eff^S - 2 pi (J12 - (J13+J23)/4 cos dtheta)`;
/// for [`Manifold::SingletAlpha`] it is `E(S0 a') - E(T+1 b')`, which carries
/// the opposite sign on both terms. Either expression equals the
/// corresponding diagonal gap of the composite-rotated effective Hamiltonian.
pub fn resonance_gap(
    system: &SpinSystem,
    protocol: &FieldProtocol,
    manifold: Manifold,
) -> Result<f64> {
    let frame = frame_for(system, protocol)?;
    Ok(resonance_gap_from_frame(system, &frame, manifold))
}

pub(crate) fn resonance_gap_from_frame(
    system: &SpinSystem,
    frame: &EffectiveFrame,
    manifold: Manifold,
) -> f64 {
    let j12 = system.j(0, 1);
    let j_sum = system.j(0, 2) + system.j(1, 2);
    let base = frame.omega_eff_i() - frame.omega_eff_s();
    let coupling = TAU * (j12 - j_sum / 4.0 * frame.delta_theta().cos());
    match manifold {
        Manifold::SingletBeta => base - coupling,
        Manifold::SingletAlpha => -(base + coupling),
    }
}

/// Mixing angle between |S0 b'> and |T0 b'>: half the polar angle of the
/// point (-J12/2, (J13-J23)/4 cos dtheta).
pub fn mixing_angle(system: &SpinSystem, frame: &EffectiveFrame) -> Result<f64> {
    system.require_i2s()?;
    let j12 = system.j(0, 1);
    let j_diff = system.j(0, 2) - system.j(1, 2);
    let y = j_diff / 4.0 * frame.delta_theta().cos();
    let x = -j12 / 2.0;
    Ok(0.5 * y.atan2(x))
}

/// Nutation frequency of the singlet-triplet transfer and the matching
/// inversion duration.
pub fn mixing_params(system: &SpinSystem, frame: &EffectiveFrame) -> Result<MixingParams> {
    let xi = mixing_angle(system, frame)?;
    let j_sum = system.j(0, 2) + system.j(1, 2);
    let j_diff = system.j(0, 2) - system.j(1, 2);
    let half = 0.5 * frame.delta_theta();
    // magnetically equivalent pair: no antisymmetric coupling, no transfer
    // (xi is exactly +-pi/2 there, so the cos term vanishes analytically)
    let omega_nut = if j_diff == 0.0 {
        0.0
    } else {
        std::f64::consts::SQRT_2 * PI * half.cos().powi(2) * (xi.cos() * j_sum + xi.sin() * j_diff)
    };
    let tau_star = if omega_nut == 0.0 {
        f64::INFINITY
    } else {
        PI / omega_nut.abs()
    };
    Ok(MixingParams {
        xi_st: xi,
        omega_nut,
        tau_star,
    })
}

/// Resonant two-level populations of the singlet and triplet level at time
/// tau: (1 +- cos(omega_nut tau))/4, normalized so each singlet sublevel
/// starts at 1/2.
pub fn tls_populations(omega_nut: f64, tau: f64) -> (f64, f64) {
    let c = (omega_nut * tau).cos();
    (0.25 * (1.0 + c), 0.25 * (1.0 - c))
}

/// Ideal heteronuclear polarization after a perfect inversion pulse:
/// cos(theta_s) = (omega0^S + omega_rot)/omega_eff^S.
pub fn polarization_bound(frame: &EffectiveFrame) -> Result<f64> {
    frame.cos_theta_s()
}

/// Detuned two-level prediction of the heteronuclear polarization for a
/// protocol, summing both manifolds:
/// `sum_m sign_m cos(theta_s) (w_nut^2/W_m^2) sin^2(W_m tau/2)` with
/// `W_m = sqrt(w_nut^2 + gap_m^2)`.
pub fn tls_polarization(system: &SpinSystem, protocol: &FieldProtocol) -> Result<f64> {
    let frame = frame_for(system, protocol)?;
    let params = mixing_params(system, &frame)?;
    let cos_s = frame.cos_theta_s()?;
    let w = params.omega_nut;
    let mut total = 0.0;
    for manifold in Manifold::BOTH {
        let gap = resonance_gap_from_frame(system, &frame, manifold);
        let rabi = w.hypot(gap);
        if rabi == 0.0 {
            continue;
        }
        let amplitude = (w / rabi).powi(2) * (0.5 * rabi * protocol.duration).sin().powi(2);
        total += manifold.polarization_sign() * cos_s * amplitude;
    }
    Ok(total)
}

/// Tolerance on the polished root: |gap| < 2 pi * 1e-4 rad/s.
pub const ROOT_TOLERANCE: f64 = TAU * 1e-4;

/// Pre-scan resolution of the root search, Hz.
pub const SCAN_STEP_HZ: f64 = 1.0;

/// All roots of both resonance conditions inside `[nu_min, nu_max]`,
/// located by a 1 Hz pre-scan with sign-change bracketing and polished by
/// bisection to [`ROOT_TOLERANCE`].
pub fn find_storm_frequencies(
    system: &SpinSystem,
    b_bias: f64,
    b_rot: f64,
    nu_min: f64,
    nu_max: f64,
) -> Result<ResonanceSearch> {
    system.require_i2s()?;
    if !(nu_min.is_finite() && nu_max.is_finite() && nu_min < nu_max) {
        return Err(StormError::InvalidProtocol {
            reason: "search window must be finite and nonempty".into(),
        });
    }
    if b_rot < 0.0 || !b_rot.is_finite() || !b_bias.is_finite() {
        return Err(StormError::InvalidProtocol {
            reason: "fields must be finite with b_rot >= 0".into(),
        });
    }
    let protocol_at = |nu: f64| FieldProtocol {
        b_bias,
        b_rot,
        nu_rot: nu,
        duration: 0.0,
    };
    let mut search = ResonanceSearch::default();

    let steps = ((nu_max - nu_min) / SCAN_STEP_HZ).ceil() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (nu_min + i as f64 * SCAN_STEP_HZ).min(nu_max))
        .collect();

    // a gap value is unusable when some effective field vanishes within half
    // a scan step of the grid point (the polar angle flips there)
    let omega_floor = std::f64::consts::PI * SCAN_STEP_HZ;
    for manifold in Manifold::BOTH {
        let gap_at = |nu: f64| -> Option<f64> {
            let frame = effective_frame(system, &protocol_at(nu));
            if frame.omega_eff(0) < omega_floor || frame.omega_eff(2) < omega_floor {
                None
            } else {
                Some(resonance_gap_from_frame(system, &frame, manifold))
            }
        };
        let values: Vec<Option<f64>> = grid.iter().map(|&nu| gap_at(nu)).collect();
        if manifold == Manifold::SingletBeta {
            for (i, v) in values.iter().enumerate() {
                if v.is_none() {
                    search.degenerate_points.push(grid[i]);
                }
            }
        }
        for i in 0..grid.len() - 1 {
            if grid[i + 1] <= grid[i] {
                continue;
            }
            let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else {
                continue;
            };
            let root = if fa == 0.0 {
                Some(grid[i])
            } else if fa * fb < 0.0 {
                Some(bisect(&gap_at, grid[i], grid[i + 1], fa))
            } else {
                None
            };
            if let Some(nu_root) = root {
                search
                    .resonances
                    .push(classify_root(system, b_bias, b_rot, nu_root, manifold));
                continue;
            }
            // grazing roots: an interior |gap| minimum that dips below the
            // polish tolerance without any sign change around it
            if i > 0 {
                if let (Some(prev), Some(cur), Some(next)) =
                    (values[i - 1], values[i], values[i + 1])
                {
                    if cur.abs() < ROOT_TOLERANCE
                        && cur.abs() < prev.abs()
                        && cur.abs() <= next.abs()
                        && prev.signum() == cur.signum()
                        && cur.signum() == next.signum()
                    {
                        let mut res = classify_root(system, b_bias, b_rot, grid[i], manifold);
                        res.degenerate = true;
                        search.resonances.push(res);
                    }
                }
            }
        }
    }
    search
        .resonances
        .sort_by(|a, b| a.nu_hz.total_cmp(&b.nu_hz));
    Ok(search)
}

fn bisect(gap_at: &dyn Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let Some(fm) = gap_at(mid) else { break };
        if fm.abs() < ROOT_TOLERANCE || (hi - lo) < 1e-9 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn classify_root(
    system: &SpinSystem,
    b_bias: f64,
    b_rot: f64,
    nu_root: f64,
    manifold: Manifold,
) -> StormResonance {
    let protocol_at = |nu: f64| FieldProtocol {
        b_bias,
        b_rot,
        nu_rot: nu,
        duration: 0.0,
    };
    let gap = |nu: f64| {
        let frame = effective_frame(system, &protocol_at(nu));
        resonance_gap_from_frame(system, &frame, manifold)
    };
    let h = 1e-3;
    let slope = (gap(nu_root + h) - gap(nu_root - h)) / (2.0 * h);
    let frame = effective_frame(system, &protocol_at(nu_root));
    let cos_s = frame.theta_s().cos();
    let polarization = manifold.polarization_sign() * cos_s;
    let branch = if polarization >= 0.0 {
        Branch::PositiveMagnetization
    } else {
        Branch::NegativeMagnetization
    };
    StormResonance {
        nu_hz: nu_root,
        manifold,
        branch,
        gap_slope: slope,
        predicted_polarization: polarization,
        degenerate: slope.abs() < 1e-6,
    }
}

/// One off-manifold coupling margin of the two-level reduction.
#[derive(Debug, Clone)]
pub struct TlsMargin {
    pub state: StzLabel,
    pub outside: StzLabel,
    /// |<state|H~|outside>|, rad/s.
    pub coupling: f64,
    /// |<state|H~|state> - <outside|H~|outside>|, rad/s.
    pub gap: f64,
    /// coupling / gap; infinite when the gap vanishes.
    pub ratio: f64,
}

/// Margin report for the isolation of the transfer manifold.
#[derive(Debug, Clone)]
pub struct TlsValidityReport {
    pub margins: Vec<TlsMargin>,
    pub max_ratio: f64,
    pub threshold: f64,
}

impl TlsValidityReport {
    pub fn is_valid(&self) -> bool {
        self.max_ratio < self.threshold
    }
}

pub const DEFAULT_TLS_THRESHOLD: f64 = 0.1;

const MANIFOLD_V1: [StzLabel; 3] = [
    StzLabel::SingletBeta,
    StzLabel::TZeroBeta,
    StzLabel::TMinus1Alpha,
];

/// Ratios |<a|H~|n>| / |<a|H~|a> - <n|H~|n>| between every manifold state
/// `a` and every outside state `n`. The approximation is considered valid
/// when the largest ratio stays below `threshold`.
pub fn tls_validity(
    system: &SpinSystem,
    protocol: &FieldProtocol,
    threshold: f64,
) -> Result<TlsValidityReport> {
    let frame = frame_for(system, protocol)?;
    let h = interaction_frame_hamiltonian(system, protocol);
    let basis = stz_basis(frame.theta_i(), frame.theta_s());
    let outside: Vec<StzLabel> = StzLabel::ALL
        .into_iter()
        .filter(|l| !MANIFOLD_V1.contains(l))
        .collect();
    let mut margins = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for &a in &MANIFOLD_V1 {
        let va = basis.vector(a);
        let ea = va.dotc(&(&h * va)).re;
        for &n in &outside {
            let vn = basis.vector(n);
            let en = vn.dotc(&(&h * vn)).re;
            let coupling = va.dotc(&(&h * vn)).norm();
            let gap = (ea - en).abs();
            let ratio = if gap == 0.0 {
                if coupling == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                coupling / gap
            };
            max_ratio = max_ratio.max(ratio);
            margins.push(TlsMargin {
                state: a,
                outside: n,
                coupling,
                gap,
                ratio,
            });
        }
    }
    Ok(TlsValidityReport {
        margins,
        max_ratio,
        threshold,
    })
}

/// Interaction-frame Hamiltonian restricted to the transfer manifold
/// `{|S0 b'>, |T0 b'>, |T-1 a'>}`, plus the two-level reduction after the
/// mixing-angle rotation.
#[derive(Debug, Clone)]
pub struct ManifoldRestriction {
    /// Basis labels of the 3x3 restriction, in order.
    pub labels: [StzLabel; 3],
    /// 3x3 matrix of H~ in that basis. The |T0 b'> vector enters with
    /// inverted phase, which makes the (0,1) element
    /// +(pi/2) cos(dtheta) (J13-J23).
    pub matrix: CMat,
    /// Mixing angle used for the two-level reduction.
    pub xi_st: f64,
    /// 2x2 block after rotating the singlet-like pair by xi: rows/columns are
    /// the rotated singlet-like state and |T-1 a'>.
    pub reduced: [[f64; 2]; 2],
    /// Coupling of the rotated singlet-like state to |T-1 a'>, rad/s; equals
    /// half the nutation frequency.
    pub coupling: f64,
}

/// Restriction of the interaction-frame Hamiltonian to the transfer manifold.
pub fn restricted_v1(system: &SpinSystem, protocol: &FieldProtocol) -> Result<ManifoldRestriction> {
    let frame = frame_for(system, protocol)?;
    let h = interaction_frame_hamiltonian(system, protocol);
    let basis = stz_basis(frame.theta_i(), frame.theta_s());
    let minus = Cx::new(-1.0, 0.0);
    let states = [
        basis.vector(StzLabel::SingletBeta).clone(),
        basis.vector(StzLabel::TZeroBeta) * minus,
        basis.vector(StzLabel::TMinus1Alpha).clone(),
    ];
    let mut matrix = CMat::zeros(3, 3);
    for (i, vi) in states.iter().enumerate() {
        for (j, vj) in states.iter().enumerate() {
            matrix[(i, j)] = vi.dotc(&(&h * vj));
        }
    }
    let xi = mixing_angle(system, &frame)?;
    let (sin_xi, cos_xi) = xi.sin_cos();
    // singlet-like combination: sin(xi)|S0 b'> - cos(xi)(-|T0 b'>)
    let coupling = sin_xi * matrix[(0, 2)].re - cos_xi * matrix[(1, 2)].re;
    let lambda_s = sin_xi * sin_xi * matrix[(0, 0)].re + cos_xi * cos_xi * matrix[(1, 1)].re
        - 2.0 * sin_xi * cos_xi * matrix[(0, 1)].re;
    let reduced = [[lambda_s, coupling], [coupling, matrix[(2, 2)].re]];
    Ok(ManifoldRestriction {
        labels: MANIFOLD_V1,
        matrix,
        xi_st: xi,
        reduced,
        coupling,
    })
}
