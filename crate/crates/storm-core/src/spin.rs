//! Product-basis operator algebra for small multi-spin systems.
//!
//! Conventions used throughout the crate:
//! * basis states are ordered lexicographically with spin 0 slowest, and
//!   within each spin the projections run from +I down to -I (alpha first
//!   for spin-1/2);
//! * hbar = 1, so Hamiltonian matrix elements are angular frequencies in
//!   rad/s while user-facing frequencies are in Hz;
//! * propagators are exp(-i H t).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, StormError};

pub type Cx = Complex64;
pub type CMat = DMatrix<Cx>;
pub type CVec = DVector<Cx>;

/// Spin quantum number of a single nucleus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn multiplicity(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }

    pub fn quantum_number(self) -> f64 {
        match self {
            Spin::Half => 0.5,
            Spin::One => 1.0,
        }
    }
}

/// A nuclear species: label, spin quantum number and gyromagnetic ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSpecies {
    pub label: String,
    pub spin: Spin,
    /// Gyromagnetic ratio in rad s^-1 T^-1.
    pub gamma: f64,
}

pub const GAMMA_1H: f64 = 2.675_221_874_4e8;
pub const GAMMA_13C: f64 = 6.728_284e7;
pub const GAMMA_2H: f64 = 4.106_6e7;

impl SpinSpecies {
    pub fn new(label: impl Into<String>, spin: Spin, gamma: f64) -> Result<Self> {
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(StormError::InvalidSpecies {
                reason: "gamma must be finite and nonzero".into(),
            });
        }
        Ok(Self {
            label: label.into(),
            spin,
            gamma,
        })
    }

    pub fn proton() -> Self {
        Self {
            label: "1H".into(),
            spin: Spin::Half,
            gamma: GAMMA_1H,
        }
    }

    pub fn carbon13() -> Self {
        Self {
            label: "13C".into(),
            spin: Spin::Half,
            gamma: GAMMA_13C,
        }
    }

    pub fn deuterium() -> Self {
        Self {
            label: "2H".into(),
            spin: Spin::One,
            gamma: GAMMA_2H,
        }
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "1H" => Ok(Self::proton()),
            "13C" => Ok(Self::carbon13()),
            "2H" => Ok(Self::deuterium()),
            other => Err(StormError::InvalidSpecies {
                reason: format!("unknown isotope label '{other}' (supported: 1H, 13C, 2H)"),
            }),
        }
    }
}

/// An ordered list of spins plus their scalar-coupling matrix (Hz).
#[derive(Debug, Clone)]
pub struct SpinSystem {
    spins: Vec<SpinSpecies>,
    j_couplings: DMatrix<f64>,
}

impl SpinSystem {
    pub fn new(spins: Vec<SpinSpecies>, j_couplings: DMatrix<f64>) -> Result<Self> {
        let n = spins.len();
        if n == 0 {
            return Err(StormError::InvalidSystem {
                reason: "no spins".into(),
            });
        }
        if j_couplings.nrows() != n || j_couplings.ncols() != n {
            return Err(StormError::InvalidSystem {
                reason: format!(
                    "J matrix is {}x{}, expected {n}x{n}",
                    j_couplings.nrows(),
                    j_couplings.ncols()
                ),
            });
        }
        for k in 0..n {
            if j_couplings[(k, k)] != 0.0 {
                return Err(StormError::InvalidSystem {
                    reason: format!("J matrix diagonal entry ({k},{k}) must be zero"),
                });
            }
            for l in 0..k {
                if (j_couplings[(k, l)] - j_couplings[(l, k)]).abs() > 1e-12 {
                    return Err(StormError::InvalidSystem {
                        reason: format!("J matrix not symmetric at ({k},{l})"),
                    });
                }
            }
        }
        Ok(Self { spins, j_couplings })
    }

    /// Canonical I2S system: two equivalent `pair` spins plus one `hetero` spin.
    pub fn i2s(
        pair: SpinSpecies,
        hetero: SpinSpecies,
        j12: f64,
        j13: f64,
        j23: f64,
    ) -> Result<Self> {
        let mut j = DMatrix::zeros(3, 3);
        j[(0, 1)] = j12;
        j[(1, 0)] = j12;
        j[(0, 2)] = j13;
        j[(2, 0)] = j13;
        j[(1, 2)] = j23;
        j[(2, 1)] = j23;
        Self::new(vec![pair.clone(), pair, hetero], j)
    }

    pub fn spin_count(&self) -> usize {
        self.spins.len()
    }

    pub fn dim(&self) -> usize {
        self.spins.iter().map(|s| s.spin.multiplicity()).product()
    }

    pub fn species(&self, index: usize) -> &SpinSpecies {
        &self.spins[index]
    }

    pub fn spins(&self) -> &[SpinSpecies] {
        &self.spins
    }

    pub fn gamma(&self, index: usize) -> f64 {
        self.spins[index].gamma
    }

    pub fn j(&self, k: usize, l: usize) -> f64 {
        self.j_couplings[(k, l)]
    }

    pub fn j_matrix(&self) -> &DMatrix<f64> {
        &self.j_couplings
    }

    pub fn is_canonical_i2s(&self) -> bool {
        self.spins.len() == 3
            && self.spins.iter().all(|s| s.spin == Spin::Half)
            && self.spins[0] == self.spins[1]
    }

    pub fn require_i2s(&self) -> Result<()> {
        if self.is_canonical_i2s() {
            Ok(())
        } else {
            Err(StormError::NotI2S {
                reason: if self.spins.len() != 3 {
                    format!("system has {} spins", self.spins.len())
                } else if self.spins.iter().any(|s| s.spin != Spin::Half) {
                    "all three spins must be spin-1/2".into()
                } else {
                    "spins 0 and 1 must share one species".into()
                },
            })
        }
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.spins.len() {
            Ok(())
        } else {
            Err(StormError::SpinIndexOutOfRange {
                index,
                count: self.spins.len(),
            })
        }
    }
}

/// Cartesian axis of an angular-momentum component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

fn single_spin_matrix(spin: Spin, axis: Axis) -> CMat {
    let re = |x: f64| Cx::new(x, 0.0);
    let im = |x: f64| Cx::new(0.0, x);
    match spin {
        Spin::Half => match axis {
            Axis::X => CMat::from_row_slice(2, 2, &[re(0.0), re(0.5), re(0.5), re(0.0)]),
            Axis::Y => CMat::from_row_slice(2, 2, &[re(0.0), im(-0.5), im(0.5), re(0.0)]),
            Axis::Z => CMat::from_row_slice(2, 2, &[re(0.5), re(0.0), re(0.0), re(-0.5)]),
        },
        Spin::One => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            match axis {
                Axis::X => CMat::from_row_slice(
                    3,
                    3,
                    &[
                        re(0.0),
                        re(s),
                        re(0.0),
                        re(s),
                        re(0.0),
                        re(s),
                        re(0.0),
                        re(s),
                        re(0.0),
                    ],
                ),
                Axis::Y => CMat::from_row_slice(
                    3,
                    3,
                    &[
                        re(0.0),
                        im(-s),
                        re(0.0),
                        im(s),
                        re(0.0),
                        im(-s),
                        re(0.0),
                        im(s),
                        re(0.0),
                    ],
                ),
                Axis::Z => CMat::from_row_slice(
                    3,
                    3,
                    &[
                        re(1.0),
                        re(0.0),
                        re(0.0),
                        re(0.0),
                        re(0.0),
                        re(0.0),
                        re(0.0),
                        re(0.0),
                        re(-1.0),
                    ],
                ),
            }
        }
    }
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Angular-momentum component of one spin, embedded in the full product basis.
pub fn spin_operator(system: &SpinSystem, index: usize, axis: Axis) -> Result<CMat> {
    system.check_index(index)?;
    let mut op = CMat::identity(1, 1);
    for (k, sp) in system.spins().iter().enumerate() {
        let factor = if k == index {
            single_spin_matrix(sp.spin, axis)
        } else {
            identity(sp.spin.multiplicity())
        };
        op = op.kronecker(&factor);
    }
    Ok(op)
}

/// Sum of one axis component over a set of spins.
pub fn collective_operator(system: &SpinSystem, indices: &[usize], axis: Axis) -> Result<CMat> {
    if indices.is_empty() {
        return Err(StormError::EmptyIndexSet);
    }
    let dim = system.dim();
    let mut op = CMat::zeros(dim, dim);
    for &k in indices {
        op += spin_operator(system, k, axis)?;
    }
    Ok(op)
}

/// exp(-i angle * sum_k I_k,axis) over the given spins.
pub fn rotation_operator(
    system: &SpinSystem,
    indices: &[usize],
    axis: Axis,
    angle: f64,
) -> Result<CMat> {
    let generator = collective_operator(system, indices, axis)?;
    hermitian_propagator(&generator, angle)
}

/// Max absolute element of M - M^adj.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Max absolute element of M^adj M - 1.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let d = m.adjoint() * m - identity(m.nrows());
    d.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Propagator U = exp(-i H t) of a Hermitian generator, via eigendecomposition.
///
/// Rejects inputs whose hermiticity defect exceeds 1e-10 relative to the
/// largest element.
pub fn hermitian_propagator(h: &CMat, t: f64) -> Result<CMat> {
    let defect = hermiticity_defect(h);
    let scale = h.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if defect > 1e-10 * scale {
        return Err(StormError::NotHermitian { defect });
    }
    let herm = (h + h.adjoint()) * Cx::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..scaled.ncols() {
        let phase = Cx::from_polar(1.0, -eig.eigenvalues[j] * t);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues and
/// the matching orthonormal eigenvector columns.
pub fn hermitian_eigen(h: &CMat) -> Result<(DVector<f64>, CMat)> {
    let defect = hermiticity_defect(h);
    let scale = h.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if defect > 1e-10 * scale {
        return Err(StormError::NotHermitian { defect });
    }
    let herm = (h + h.adjoint()) * Cx::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMat::zeros(eig.eigenvectors.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Permutation operator exchanging spins 0 and 1 of an I2S system.
pub fn pair_swap_operator(system: &SpinSystem) -> Result<CMat> {
    system.require_i2s()?;
    let mut p = CMat::zeros(8, 8);
    for m1 in 0..2usize {
        for m2 in 0..2usize {
            for m3 in 0..2usize {
                let from = (m1 * 2 + m2) * 2 + m3;
                let to = (m2 * 2 + m1) * 2 + m3;
                p[(to, from)] = Cx::new(1.0, 0.0);
            }
        }
    }
    Ok(p)
}

/// Labels of the singlet-triplet-Zeeman product states of an I2S system.
///
/// `Alpha`/`Beta` refer to the heteronuclear spin; primed (field-aligned)
/// states carry the same labels after the composite rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StzLabel {
    TPlus1Alpha,
    TPlus1Beta,
    TZeroAlpha,
    TZeroBeta,
    TMinus1Alpha,
    TMinus1Beta,
    SingletAlpha,
    SingletBeta,
}

impl StzLabel {
    /// Basis order used for state vectors returned by [`stz_basis`].
    pub const ALL: [StzLabel; 8] = [
        StzLabel::TPlus1Alpha,
        StzLabel::TPlus1Beta,
        StzLabel::TZeroAlpha,
        StzLabel::TZeroBeta,
        StzLabel::TMinus1Alpha,
        StzLabel::TMinus1Beta,
        StzLabel::SingletAlpha,
        StzLabel::SingletBeta,
    ];

    /// Column order used in CSV output.
    pub const CSV_ORDER: [StzLabel; 8] = [
        StzLabel::SingletAlpha,
        StzLabel::SingletBeta,
        StzLabel::TPlus1Alpha,
        StzLabel::TPlus1Beta,
        StzLabel::TZeroAlpha,
        StzLabel::TZeroBeta,
        StzLabel::TMinus1Alpha,
        StzLabel::TMinus1Beta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StzLabel::TPlus1Alpha => "T+1a",
            StzLabel::TPlus1Beta => "T+1b",
            StzLabel::TZeroAlpha => "T0a",
            StzLabel::TZeroBeta => "T0b",
            StzLabel::TMinus1Alpha => "T-1a",
            StzLabel::TMinus1Beta => "T-1b",
            StzLabel::SingletAlpha => "S0a",
            StzLabel::SingletBeta => "S0b",
        }
    }

    fn position(self) -> usize {
        StzLabel::ALL.iter().position(|&l| l == self).unwrap()
    }
}

impl std::fmt::Display for StzLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The eight rotated STZ states of an I2S system.
#[derive(Debug, Clone)]
pub struct StzBasis {
    theta_i: f64,
    theta_s: f64,
    vectors: Vec<CVec>,
}

impl StzBasis {
    pub fn theta_i(&self) -> f64 {
        self.theta_i
    }

    pub fn theta_s(&self) -> f64 {
        self.theta_s
    }

    pub fn vector(&self, label: StzLabel) -> &CVec {
        &self.vectors[label.position()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (StzLabel, &CVec)> {
        StzLabel::ALL.iter().copied().zip(self.vectors.iter())
    }
}

fn canonical_i2s_shape() -> SpinSystem {
    // Couplings and gammas are irrelevant here; only the 2x2x2 shape matters.
    SpinSystem::i2s(
        SpinSpecies::proton(),
        SpinSpecies::carbon13(),
        0.0,
        0.0,
        0.0,
    )
    .expect("canonical shape")
}

fn stz_unrotated() -> Vec<CVec> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let unit = |i: usize| {
        let mut v = CVec::zeros(8);
        v[i] = Cx::new(1.0, 0.0);
        v
    };
    let mix = |i: usize, j: usize, sign: f64| {
        let mut v = CVec::zeros(8);
        v[i] = Cx::new(s, 0.0);
        v[j] = Cx::new(sign * s, 0.0);
        v
    };
    // basis index = ((m1*2)+m2)*2+m3 with alpha = 0
    vec![
        unit(0),         // T+1 alpha = |aaa>
        unit(1),         // T+1 beta
        mix(2, 4, 1.0),  // T0 alpha = (|ab>+|ba>)/sqrt2 x |a>
        mix(3, 5, 1.0),  // T0 beta
        unit(6),         // T-1 alpha
        unit(7),         // T-1 beta
        mix(2, 4, -1.0), // S0 alpha = (|ab>-|ba>)/sqrt2 x |a>
        mix(3, 5, -1.0), // S0 beta
    ]
}

/// Rotated STZ basis: X |T_m mu> and X |S0 mu> with
/// X = R_y^{12}(theta_i) R_y^{3}(theta_s).
pub fn stz_basis(theta_i: f64, theta_s: f64) -> StzBasis {
    let shape = canonical_i2s_shape();
    let x = rotation_operator(&shape, &[0, 1], Axis::Y, theta_i)
        .and_then(|r12| Ok(r12 * rotation_operator(&shape, &[2], Axis::Y, theta_s)?))
        .expect("rotation of canonical shape");
    let vectors = stz_unrotated().into_iter().map(|v| &x * v).collect();
    StzBasis {
        theta_i,
        theta_s,
        vectors,
    }
}
