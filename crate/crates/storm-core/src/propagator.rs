//! Exact density-matrix evolution in the lab and interaction frames, with
//! observables and population bookkeeping in the rotated STZ basis.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Result, StormError};
use crate::hamiltonians::{
    effective_frame, frame_rotation, interaction_frame_hamiltonian, lab_frame_hamiltonian,
    EffectiveFrame, FieldProtocol,
};
use crate::spin::{
    hermitian_eigen, hermitian_propagator, hermiticity_defect, spin_operator, stz_basis, Axis,
    CMat, Cx, Spin, SpinSystem, StzLabel,
};

/// A validated density matrix: Hermitian, unit trace, positive within
/// numerical drift. Construction fails loudly when an evolution has drifted.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

const DRIFT_TOLERANCE: f64 = 1e-8;

impl DensityMatrix {
    pub fn try_new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(StormError::InvalidDensity {
                reason: "matrix not square".into(),
            });
        }
        let herm = hermiticity_defect(&mat);
        if herm > DRIFT_TOLERANCE {
            return Err(StormError::InvalidDensity {
                reason: format!("hermiticity defect {herm:.3e}"),
            });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > DRIFT_TOLERANCE || trace.im.abs() > DRIFT_TOLERANCE {
            return Err(StormError::InvalidDensity {
                reason: format!("trace {trace} differs from 1"),
            });
        }
        let (eigs, _) = hermitian_eigen(&mat)?;
        if eigs.iter().any(|&x| x < -DRIFT_TOLERANCE) {
            return Err(StormError::InvalidDensity {
                reason: format!("negative eigenvalue {:.3e}", eigs[0]),
            });
        }
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace_real(&self) -> f64 {
        self.mat.trace().re
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }
}

/// Populations of the eight rotated STZ states, stored in basis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StzPopulations([f64; 8]);

impl StzPopulations {
    pub fn get(&self, label: StzLabel) -> f64 {
        let idx = StzLabel::ALL.iter().position(|&l| l == label).unwrap();
        self.0[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (StzLabel, f64)> + '_ {
        StzLabel::ALL.iter().copied().zip(self.0.iter().copied())
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_map(&self) -> BTreeMap<StzLabel, f64> {
        self.iter().collect()
    }
}

/// One sampled point of an evolution.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub p_s: f64,
    pub populations: Option<StzPopulations>,
}

/// Final state of an evolution plus derived observables.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub rho_final: DensityMatrix,
    /// Heteronuclear polarization 2 Tr(rho S_z).
    pub p_s: f64,
    /// Rotated-STZ populations; present only for 8-dimensional systems.
    pub populations: Option<StzPopulations>,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

/// rho(0) = |S0><S0| x (1/2) for the canonical I2S system.
pub fn initial_density(system: &SpinSystem) -> Result<DensityMatrix> {
    system.require_i2s()?;
    singlet_order_density(system)
}

/// Singlet order on spins 0 and 1, maximally mixed on every other spin.
///
/// Requires spins 0 and 1 to be an equivalent spin-1/2 pair; additional
/// spins of any kind are allowed (quadrupolar partners included).
pub fn singlet_order_density(system: &SpinSystem) -> Result<DensityMatrix> {
    if system.spin_count() < 3 {
        return Err(StormError::InvalidSystem {
            reason: "singlet order needs the spin pair plus at least one more spin".into(),
        });
    }
    let pair_ok = system.species(0) == system.species(1) && system.species(0).spin == Spin::Half;
    if !pair_ok {
        return Err(StormError::NotI2S {
            reason: "spins 0 and 1 must be an equivalent spin-1/2 pair".into(),
        });
    }
    // |S0><S0| on the pair
    let mut singlet = CMat::zeros(4, 4);
    let half = Cx::new(0.5, 0.0);
    singlet[(1, 1)] = half;
    singlet[(2, 2)] = half;
    singlet[(1, 2)] = -half;
    singlet[(2, 1)] = -half;
    let mut rho = singlet;
    for k in 2..system.spin_count() {
        let d = system.species(k).spin.multiplicity();
        let mixed = CMat::identity(d, d) * Cx::new(1.0 / d as f64, 0.0);
        rho = rho.kronecker(&mixed);
    }
    DensityMatrix::try_new(rho)
}

/// p_s = 2 Tr(rho S_z) for the heteronucleus (spin index 2).
pub fn measure_polarization(rho: &DensityMatrix, system: &SpinSystem) -> Result<f64> {
    if system.spin_count() < 3 {
        return Err(StormError::SpinIndexOutOfRange {
            index: 2,
            count: system.spin_count(),
        });
    }
    if system.dim() != rho.dim() {
        return Err(StormError::InvalidDensity {
            reason: format!(
                "density dim {} does not match system dim {}",
                rho.dim(),
                system.dim()
            ),
        });
    }
    let sz = spin_operator(system, 2, Axis::Z)?;
    Ok(2.0 * (rho.matrix() * sz).trace().re)
}

/// Diagonal of rho in the rotated STZ basis defined by the frame angles.
pub fn stz_populations(rho: &DensityMatrix, frame: &EffectiveFrame) -> Result<StzPopulations> {
    if rho.dim() != 8 {
        return Err(StormError::NotI2S {
            reason: format!("STZ populations need dimension 8, got {}", rho.dim()),
        });
    }
    let basis = stz_basis(frame.theta_i(), frame.theta_s());
    let mut pops = [0.0; 8];
    for (idx, (_, v)) in basis.iter().enumerate() {
        pops[idx] = v.dotc(&(rho.matrix() * v)).re;
    }
    Ok(StzPopulations(pops))
}

/// Eigendecomposed interaction-frame generator, reusable across many
/// evolution durations of the same protocol.
pub struct InteractionPropagator {
    eigenvalues: DVector<f64>,
    eigenvectors: CMat,
    frame: EffectiveFrame,
    dim: usize,
}

impl InteractionPropagator {
    pub fn new(system: &SpinSystem, protocol: &FieldProtocol) -> Result<Self> {
        let h = interaction_frame_hamiltonian(system, protocol);
        let (eigenvalues, eigenvectors) = hermitian_eigen(&h)?;
        Ok(Self {
            eigenvalues,
            eigenvectors,
            frame: effective_frame(system, protocol),
            dim: system.dim(),
        })
    }

    pub fn frame(&self) -> &EffectiveFrame {
        &self.frame
    }

    /// U(t) rho U(t)^adj with U(t) = exp(-i H~ t).
    pub fn propagate(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho0.dim() != self.dim {
            return Err(StormError::InvalidDensity {
                reason: format!(
                    "density dim {} does not match system dim {}",
                    rho0.dim(),
                    self.dim
                ),
            });
        }
        let mut u = self.eigenvectors.clone();
        for j in 0..self.dim {
            let phase = Cx::from_polar(1.0, -self.eigenvalues[j] * t);
            for i in 0..self.dim {
                u[(i, j)] *= phase;
            }
        }
        let u = u * self.eigenvectors.adjoint();
        DensityMatrix::try_new(&u * rho0.matrix() * u.adjoint())
    }
}

fn observables(
    rho: &DensityMatrix,
    system: &SpinSystem,
    frame: &EffectiveFrame,
) -> Result<(f64, Option<StzPopulations>)> {
    let p_s = measure_polarization(rho, system)?;
    let populations = if rho.dim() == 8 {
        Some(stz_populations(rho, frame)?)
    } else {
        None
    };
    Ok((p_s, populations))
}

/// Evolve under the time-independent interaction-frame Hamiltonian for the
/// protocol duration.
pub fn evolve_interaction(
    rho0: &DensityMatrix,
    system: &SpinSystem,
    protocol: &FieldProtocol,
) -> Result<EvolutionResult> {
    evolve_interaction_sampled(rho0, system, protocol, 0)
}

/// Like [`evolve_interaction`], sampling `samples` trajectory points evenly
/// over `[0, duration]` when `samples > 0`.
pub fn evolve_interaction_sampled(
    rho0: &DensityMatrix,
    system: &SpinSystem,
    protocol: &FieldProtocol,
    samples: usize,
) -> Result<EvolutionResult> {
    let propagator = InteractionPropagator::new(system, protocol)?;
    let trajectory = if samples > 0 {
        let mut points = Vec::with_capacity(samples);
        for i in 0..samples {
            let t = protocol.duration * i as f64 / (samples.max(2) - 1) as f64;
            let rho_t = propagator.propagate(rho0, t)?;
            let (p_s, populations) = observables(&rho_t, system, propagator.frame())?;
            points.push(TrajectoryPoint {
                t,
                p_s,
                populations,
            });
        }
        Some(points)
    } else {
        None
    };
    let rho_final = propagator.propagate(rho0, protocol.duration)?;
    let (p_s, populations) = observables(&rho_final, system, propagator.frame())?;
    Ok(EvolutionResult {
        rho_final,
        p_s,
        populations,
        trajectory,
    })
}

/// Map a lab-frame state into the rotating interaction picture:
/// K_z(t) rho K_z(t)^adj.
pub fn to_interaction_picture(
    rho_lab: &DensityMatrix,
    system: &SpinSystem,
    protocol: &FieldProtocol,
    t: f64,
) -> Result<DensityMatrix> {
    let k = frame_rotation(system, protocol.nu_rot, t);
    DensityMatrix::try_new(&k * rho_lab.matrix() * k.adjoint())
}

/// Largest frequency scale the lab-frame stepper must resolve, Hz.
fn guard_frequency(system: &SpinSystem, protocol: &FieldProtocol) -> f64 {
    let frame = effective_frame(system, protocol);
    let mut nu_max = protocol.nu_rot.abs();
    for k in 0..system.spin_count() {
        nu_max = nu_max.max(frame.omega_eff(k).abs() / std::f64::consts::TAU);
    }
    nu_max
}

/// Piecewise-constant lab-frame propagation with the Hamiltonian sampled at
/// step midpoints (second-order accurate). Serves as an independent oracle
/// for [`evolve_interaction`]; the returned state is in the lab frame, while
/// `p_s` and the populations are computed on its interaction-picture image.
pub fn evolve_lab(
    rho0: &DensityMatrix,
    system: &SpinSystem,
    protocol: &FieldProtocol,
    dt: f64,
) -> Result<EvolutionResult> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(StormError::InvalidProtocol {
            reason: "dt must be positive".into(),
        });
    }
    let nu_guard = guard_frequency(system, protocol);
    if nu_guard > 0.0 {
        let max_dt = 1.0 / (50.0 * nu_guard);
        if dt > max_dt {
            return Err(StormError::StepTooCoarse { dt, max_dt });
        }
    }
    let tau = protocol.duration;
    let dim = system.dim();
    let mut u_total = CMat::identity(dim, dim);
    let full_steps = (tau / dt).floor() as usize;
    let remainder = tau - full_steps as f64 * dt;
    let mut t = 0.0;
    for _ in 0..full_steps {
        let h = lab_frame_hamiltonian(system, protocol, t + 0.5 * dt);
        u_total = hermitian_propagator(&h, dt)? * u_total;
        t += dt;
    }
    if remainder > 1e-15 * tau.max(1.0) {
        let h = lab_frame_hamiltonian(system, protocol, t + 0.5 * remainder);
        u_total = hermitian_propagator(&h, remainder)? * u_total;
    }
    let rho_final = DensityMatrix::try_new(&u_total * rho0.matrix() * u_total.adjoint())?;
    let frame = effective_frame(system, protocol);
    let rho_rotating = to_interaction_picture(&rho_final, system, protocol, tau)?;
    let p_s = measure_polarization(&rho_final, system)?;
    let populations = if dim == 8 {
        Some(stz_populations(&rho_rotating, &frame)?)
    } else {
        None
    };
    Ok(EvolutionResult {
        rho_final,
        p_s,
        populations,
        trajectory: None,
    })
}
