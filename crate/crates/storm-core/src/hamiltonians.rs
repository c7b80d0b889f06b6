//! Lab-frame, interaction-frame and effective-field Hamiltonians for a spin
//! system in a rotating transverse field plus a static z bias.
//!
//! Field couplings follow omega0 = -gamma * B_bias and
//! omega1 = -gamma * B_rot; the rotation frequency enters as
//! omega_rot = 2*pi*nu_rot with the sign of nu_rot encoding the sense of
//! rotation.

use std::f64::consts::TAU;

use crate::error::{Result, StormError};
use crate::spin::{
    collective_operator, hermitian_propagator, spin_operator, Axis, CMat, Cx, SpinSystem,
};

/// Field protocol: bias field, rotating-field amplitude, signed rotation
/// frequency and pulse duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldProtocol {
    /// Static z field in Tesla (signed).
    pub b_bias: f64,
    /// Transverse rotating-field amplitude in Tesla (>= 0).
    pub b_rot: f64,
    /// Rotation frequency in Hz; the sign selects the sense of rotation.
    pub nu_rot: f64,
    /// Pulse duration in seconds (>= 0).
    pub duration: f64,
}

impl FieldProtocol {
    pub fn new(b_bias: f64, b_rot: f64, nu_rot: f64, duration: f64) -> Result<Self> {
        if b_rot < 0.0 || !b_rot.is_finite() {
            return Err(StormError::InvalidProtocol {
                reason: "b_rot must be finite and >= 0".into(),
            });
        }
        if duration < 0.0 || !duration.is_finite() {
            return Err(StormError::InvalidProtocol {
                reason: "duration must be finite and >= 0".into(),
            });
        }
        if !b_bias.is_finite() || !nu_rot.is_finite() {
            return Err(StormError::InvalidProtocol {
                reason: "b_bias and nu_rot must be finite".into(),
            });
        }
        Ok(Self {
            b_bias,
            b_rot,
            nu_rot,
            duration,
        })
    }

    pub fn omega_rot(&self) -> f64 {
        TAU * self.nu_rot
    }

    pub fn with_nu_rot(self, nu_rot: f64) -> Self {
        Self { nu_rot, ..self }
    }

    pub fn with_duration(self, duration: f64) -> Self {
        Self { duration, ..self }
    }
}

/// Per-spin effective-field parameters in the rotating interaction frame.
#[derive(Debug, Clone)]
pub struct EffectiveFrame {
    omega_rot: f64,
    omega0: Vec<f64>,
    omega1: Vec<f64>,
    omega_eff: Vec<f64>,
    theta_eff: Vec<f64>,
}

impl EffectiveFrame {
    pub fn spin_count(&self) -> usize {
        self.omega0.len()
    }

    pub fn omega_rot(&self) -> f64 {
        self.omega_rot
    }

    /// omega0 = -gamma * B_bias, rad/s.
    pub fn omega0(&self, spin: usize) -> f64 {
        self.omega0[spin]
    }

    /// omega1 = -gamma * B_rot, rad/s.
    pub fn omega1(&self, spin: usize) -> f64 {
        self.omega1[spin]
    }

    /// Effective nutation frequency sqrt((omega0+omega_rot)^2 + omega1^2), rad/s.
    pub fn omega_eff(&self, spin: usize) -> f64 {
        self.omega_eff[spin]
    }

    /// Polar angle of the effective field: the angle of the point
    /// (omega0+omega_rot, omega1), so cos(theta) * omega_eff = omega0 + omega_rot.
    pub fn theta_eff(&self, spin: usize) -> f64 {
        self.theta_eff[spin]
    }

    /// True where the effective field vanishes and the angle is undefined.
    pub fn is_degenerate(&self, spin: usize) -> bool {
        self.omega_eff[spin] == 0.0
    }

    pub fn any_degenerate(&self) -> bool {
        (0..self.spin_count()).any(|k| self.is_degenerate(k))
    }

    fn require_nondegenerate(&self, spin: usize) -> Result<()> {
        if self.is_degenerate(spin) {
            Err(StormError::DegenerateEffectiveField { spin })
        } else {
            Ok(())
        }
    }

    /// Effective frequency of the equivalent pair (spin 0) of an I2S system.
    pub fn omega_eff_i(&self) -> f64 {
        self.omega_eff[0]
    }

    /// Effective frequency of the heteronucleus (spin 2) of an I2S system.
    pub fn omega_eff_s(&self) -> f64 {
        self.omega_eff[2]
    }

    pub fn theta_i(&self) -> f64 {
        self.theta_eff[0]
    }

    pub fn theta_s(&self) -> f64 {
        self.theta_eff[2]
    }

    /// theta_i - theta_s.
    pub fn delta_theta(&self) -> f64 {
        self.theta_i() - self.theta_s()
    }

    /// cos(theta_s): the ideal heteronuclear polarization bound.
    pub fn cos_theta_s(&self) -> Result<f64> {
        self.require_nondegenerate(2)?;
        Ok(self.theta_s().cos())
    }
}

/// Scalar-coupling Hamiltonian H_J = sum_{k<l} 2*pi*J_kl I_k . I_l.
pub fn scalar_coupling_hamiltonian(system: &SpinSystem) -> CMat {
    let dim = system.dim();
    let mut h = CMat::zeros(dim, dim);
    for k in 0..system.spin_count() {
        for l in (k + 1)..system.spin_count() {
            let j = system.j(k, l);
            if j == 0.0 {
                continue;
            }
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let a = spin_operator(system, k, axis).expect("valid index");
                let b = spin_operator(system, l, axis).expect("valid index");
                h += (a * b) * Cx::new(TAU * j, 0.0);
            }
        }
    }
    h
}

/// Symmetric / antisymmetric split of the heteronuclear coupling of an I2S
/// system: pi(J13+J23)(I1+I2).S and pi(J13-J23)(I1-I2).S.
pub fn heteronuclear_split(system: &SpinSystem) -> Result<(CMat, CMat)> {
    system.require_i2s()?;
    let mut sym = CMat::zeros(8, 8);
    let mut asym = CMat::zeros(8, 8);
    let j_sum = system.j(0, 2) + system.j(1, 2);
    let j_diff = system.j(0, 2) - system.j(1, 2);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let i1 = spin_operator(system, 0, axis)?;
        let i2 = spin_operator(system, 1, axis)?;
        let s = spin_operator(system, 2, axis)?;
        sym += (&i1 + &i2) * &s * Cx::new(std::f64::consts::PI * j_sum, 0.0);
        asym += (&i1 - &i2) * &s * Cx::new(std::f64::consts::PI * j_diff, 0.0);
    }
    Ok((sym, asym))
}

/// Static-bias Zeeman term: sum_k omega0_k I_kz.
fn bias_hamiltonian(system: &SpinSystem, b_bias: f64) -> CMat {
    let dim = system.dim();
    let mut h = CMat::zeros(dim, dim);
    for k in 0..system.spin_count() {
        let w0 = -system.gamma(k) * b_bias;
        if w0 != 0.0 {
            h += spin_operator(system, k, Axis::Z).expect("valid index") * Cx::new(w0, 0.0);
        }
    }
    h
}

/// Full lab-frame Hamiltonian H(t) = H_J + H_bias + H_rot(t).
pub fn lab_frame_hamiltonian(system: &SpinSystem, protocol: &FieldProtocol, t: f64) -> CMat {
    let mut h = scalar_coupling_hamiltonian(system) + bias_hamiltonian(system, protocol.b_bias);
    let phase = protocol.omega_rot() * t;
    let (cos_p, sin_p) = (phase.cos(), phase.sin());
    for k in 0..system.spin_count() {
        let w1 = -system.gamma(k) * protocol.b_rot;
        if w1 == 0.0 {
            continue;
        }
        let ix = spin_operator(system, k, Axis::X).expect("valid index");
        let iy = spin_operator(system, k, Axis::Y).expect("valid index");
        h += ix * Cx::new(w1 * cos_p, 0.0);
        h += iy * Cx::new(-w1 * sin_p, 0.0);
    }
    h
}

/// Time-independent interaction-frame Hamiltonian
/// H~ = H_J + sum_k [ omega1_k I_kx + (omega0_k + omega_rot) I_kz ].
pub fn interaction_frame_hamiltonian(system: &SpinSystem, protocol: &FieldProtocol) -> CMat {
    let mut h = scalar_coupling_hamiltonian(system);
    let w_rot = protocol.omega_rot();
    for k in 0..system.spin_count() {
        let w0 = -system.gamma(k) * protocol.b_bias;
        let w1 = -system.gamma(k) * protocol.b_rot;
        if w1 != 0.0 {
            h += spin_operator(system, k, Axis::X).expect("valid index") * Cx::new(w1, 0.0);
        }
        if w0 + w_rot != 0.0 {
            h += spin_operator(system, k, Axis::Z).expect("valid index") * Cx::new(w0 + w_rot, 0.0);
        }
    }
    h
}

/// Frame rotation K_z(t) = exp(-i (sum_k I_kz) omega_rot t).
///
/// Diagonal in the Zeeman product basis.
pub fn frame_rotation(system: &SpinSystem, nu_rot: f64, t: f64) -> CMat {
    let mz = collective_operator(
        system,
        &(0..system.spin_count()).collect::<Vec<_>>(),
        Axis::Z,
    )
    .expect("nonempty system");
    let dim = system.dim();
    let mut k = CMat::zeros(dim, dim);
    let w_rot = TAU * nu_rot;
    for i in 0..dim {
        k[(i, i)] = Cx::from_polar(1.0, -mz[(i, i)].re * w_rot * t);
    }
    k
}

/// Per-spin effective nutation frequencies and polar angles.
pub fn effective_frame(system: &SpinSystem, protocol: &FieldProtocol) -> EffectiveFrame {
    let w_rot = protocol.omega_rot();
    let n = system.spin_count();
    let mut omega0 = Vec::with_capacity(n);
    let mut omega1 = Vec::with_capacity(n);
    let mut omega_eff = Vec::with_capacity(n);
    let mut theta_eff = Vec::with_capacity(n);
    for k in 0..n {
        let w0 = -system.gamma(k) * protocol.b_bias;
        let w1 = -system.gamma(k) * protocol.b_rot;
        let z = w0 + w_rot;
        let weff = z.hypot(w1);
        omega0.push(w0);
        omega1.push(w1);
        omega_eff.push(weff);
        theta_eff.push(if weff == 0.0 { 0.0 } else { w1.atan2(z) });
    }
    EffectiveFrame {
        omega_rot: w_rot,
        omega0,
        omega1,
        omega_eff,
        theta_eff,
    }
}

/// Composite rotation X = R_y^{12}(theta_i) R_y^{3}(theta_s) aligning the
/// STZ states with the effective fields.
pub fn composite_rotation(system: &SpinSystem, frame: &EffectiveFrame) -> Result<CMat> {
    system.require_i2s()?;
    let r_pair = hermitian_propagator(
        &collective_operator(system, &[0, 1], Axis::Y)?,
        frame.theta_i(),
    )?;
    let r_het = hermitian_propagator(&spin_operator(system, 2, Axis::Y)?, frame.theta_s())?;
    Ok(r_pair * r_het)
}

/// Effective-field Hamiltonian of an I2S system:
/// omega_eff^I (I1z+I2z) + omega_eff^S S_z + H_II + X^adj H_IS^sym X.
///
/// The symmetric heteronuclear coupling enters in the composite-rotated
/// frame, which makes X H_eff X^adj + H_IS^asym reproduce the interaction-frame
/// Hamiltonian exactly; when theta_i = theta_s it reduces to the bare
/// symmetric coupling.
pub fn effective_hamiltonian(system: &SpinSystem, frame: &EffectiveFrame) -> Result<CMat> {
    let mut h = effective_zeeman_hamiltonian(system, frame)?;
    let (sym, _) = heteronuclear_split(system)?;
    let x = composite_rotation(system, frame)?;
    let rotated = x.adjoint() * sym * &x;
    h += &rotated;
    // rotation by a unitary leaves hermiticity intact only up to roundoff
    Ok((&h + h.adjoint()) * Cx::new(0.5, 0.0))
}

/// The part of the effective Hamiltonian that is diagonal in the STZ basis:
/// omega_eff^I (I1z+I2z) + omega_eff^S S_z + H_II.
///
/// The rotated STZ states are exact eigenstates of the composite-rotated
/// image of this operator.
pub fn effective_zeeman_hamiltonian(system: &SpinSystem, frame: &EffectiveFrame) -> Result<CMat> {
    system.require_i2s()?;
    let mut h = collective_operator(system, &[0, 1], Axis::Z)? * Cx::new(frame.omega_eff_i(), 0.0);
    h += spin_operator(system, 2, Axis::Z)? * Cx::new(frame.omega_eff_s(), 0.0);
    let j12 = system.j(0, 1);
    if j12 != 0.0 {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let i1 = spin_operator(system, 0, axis)?;
            let i2 = spin_operator(system, 1, axis)?;
            h += (i1 * i2) * Cx::new(TAU * j12, 0.0);
        }
    }
    Ok(h)
}
