//! Physical model layer: the two qutrit Hamiltonians, their eigensystems,
//! thermal states, and the two-pulse preparation/readout gates.
//!
//! Basis ordering throughout is (+1, 0, −1) for the three S_z levels, i.e.
//! index 0 ↔ m_s = +1, index 1 ↔ m_s = 0, index 2 ↔ m_s = −1. Energies are
//! angular frequencies (rad/s) with ħ = 1.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linops::{cr, eigh, CMatrix};
use crate::Error;

/// Which of the two spin Hamiltonians to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// Static splitting: H = diag(Δ + γ_eB, 0, Δ − γ_eB).
    Nv,
    /// Resonant drive in the rotating frame: H = ω·S_x.
    Mw,
}

/// Parameters for [`build_hamiltonian`]. Fields not used by the chosen kind
/// are ignored.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    /// Zero-field splitting Δ (rad/s); NV kind only.
    pub delta: f64,
    /// Zeeman shift stored as the product γ_e·B (rad/s); NV kind only.
    pub zeeman: f64,
    /// Rabi frequency ω (rad/s); MW kind only.
    pub rabi: f64,
}

impl HamiltonianSpec {
    pub fn nv(delta: f64, zeeman: f64) -> Self {
        HamiltonianSpec {
            kind: HamiltonianKind::Nv,
            delta,
            zeeman,
            rabi: 0.0,
        }
    }

    pub fn mw(rabi: f64) -> Self {
        HamiltonianSpec {
            kind: HamiltonianKind::Mw,
            delta: 0.0,
            zeeman: 0.0,
            rabi,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self.kind {
            HamiltonianKind::Nv => {
                if !(self.delta > 0.0) || !self.delta.is_finite() || !self.zeeman.is_finite() {
                    return Err(Error::InconsistentInputs {
                        what: "NV Hamiltonian requires finite zeeman and delta > 0",
                    });
                }
            }
            HamiltonianKind::Mw => {
                if !(self.rabi > 0.0) || !self.rabi.is_finite() {
                    return Err(Error::InconsistentInputs {
                        what: "MW Hamiltonian requires finite rabi > 0",
                    });
                }
            }
        }
        Ok(())
    }
}

/// Spin-1 S_x in the (+1, 0, −1) basis: (1/√2) with ones on the off-diagonal.
pub fn spin_x() -> CMatrix {
    let s = cr(1.0 / libm::sqrt(2.0));
    let mut m = CMatrix::zeros(3, 3);
    m.set(0, 1, s);
    m.set(1, 0, s);
    m.set(1, 2, s);
    m.set(2, 1, s);
    m
}

/// Builds the 3×3 Hamiltonian for the given spec (rad/s, ħ = 1).
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> CMatrix {
    match spec.kind {
        HamiltonianKind::Nv => CMatrix::from_diag(&[
            cr(spec.delta + spec.zeeman),
            cr(0.0),
            cr(spec.delta - spec.zeeman),
        ]),
        HamiltonianKind::Mw => spin_x().scale(cr(spec.rabi)),
    }
}

/// Diagonalized Hamiltonian: energies ascending, orthonormal eigenvectors
/// (each column's first nonzero component real positive), and the rank-1
/// energy projectors P_i = |E_i⟩⟨E_i|.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// E_1 ≤ E_2 ≤ E_3 (rad/s).
    pub energies: [f64; 3],
    /// Eigenvectors as columns, ordered like `energies`.
    pub vectors: CMatrix,
    /// P_i = |E_i⟩⟨E_i| in the same order.
    pub projectors: [CMatrix; 3],
}

impl EigenSystem {
    /// Largest eigenvalue; the natural energy scale of the spectrum.
    pub fn e_max(&self) -> f64 {
        self.energies[2]
    }

    /// The i-th eigenvector (0-based) as a 3-component column.
    pub fn vector(&self, i: usize) -> [Complex64; 3] {
        [
            self.vectors.get(0, i),
            self.vectors.get(1, i),
            self.vectors.get(2, i),
        ]
    }
}

/// Diagonalizes a Hermitian 3×3 Hamiltonian.
pub fn eigensystem(h: &CMatrix) -> Result<EigenSystem, Error> {
    if h.rows() != 3 || h.cols() != 3 {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let eig = eigh(h)?;
    let energies = [eig.values[0], eig.values[1], eig.values[2]];
    let projector = |col: usize| -> CMatrix {
        CMatrix::from_fn(3, 3, |i, j| {
            eig.vectors.get(i, col) * eig.vectors.get(j, col).conj()
        })
    };
    Ok(EigenSystem {
        energies,
        projectors: [projector(0), projector(1), projector(2)],
        vectors: eig.vectors,
    })
}

/// Gibbs state of an [`EigenSystem`] at inverse temperature β (s/rad).
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub beta: f64,
    /// ρth = Σ_i (e^{−βE_i}/Z) P_i.
    pub rho: CMatrix,
    /// Partition function Z = Σ_i e^{−βE_i}. May overflow to +∞ for extreme
    /// β·E; `log_partition` never does.
    pub partition: f64,
    /// ln Z, computed via shifted exponentials.
    pub log_partition: f64,
    /// F = −β⁻¹ ln Z (−∞ at β = 0 since Z > 1; use `log_partition` there).
    pub free_energy: f64,
    /// Occupations P_i = e^{−βE_i}/Z, ordered like the eigensystem.
    pub probs: [f64; 3],
    /// True when β < 0: the state is population-inverted, not passive.
    pub population_inverted: bool,
}

/// Builds the thermal state e^{−βH}/Z. Negative β is accepted (population
/// inversion) and flagged. Overflow-safe: exponentials are shifted by the
/// energy that dominates at this β before normalizing.
pub fn thermal_state(es: &EigenSystem, beta: f64) -> Result<ThermalState, Error> {
    if !beta.is_finite() {
        return Err(Error::InconsistentInputs {
            what: "thermal_state requires finite beta",
        });
    }
    // The dominant term is min E for β ≥ 0, max E for β < 0; shifting by it
    // keeps every exponent ≤ 0.
    let e_shift = if beta >= 0.0 {
        es.energies[0]
    } else {
        es.energies[2]
    };
    let w: Vec<f64> = es
        .energies
        .iter()
        .map(|&e| libm::exp(-beta * (e - e_shift)))
        .collect();
    let wsum: f64 = w.iter().sum();
    let probs = [w[0] / wsum, w[1] / wsum, w[2] / wsum];
    let log_partition = libm::log(wsum) - beta * e_shift;
    let partition = libm::exp(log_partition);
    let free_energy = -log_partition / beta;
    let mut rho = CMatrix::zeros(3, 3);
    for (i, &p) in probs.iter().enumerate() {
        rho = &rho + &es.projectors[i].scale(cr(p));
    }
    Ok(ThermalState {
        beta,
        rho,
        partition,
        log_partition,
        free_energy,
        probs,
        population_inverted: beta < 0.0,
    })
}

/// The two S_z level pairs a resonant pulse can address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationPair {
    /// Couples |0⟩ and |−1⟩.
    ZeroMinus,
    /// Couples |0⟩ and |+1⟩.
    ZeroPlus,
}

/// Unitary rotation by `theta` with microwave phase `phi` on the named level
/// pair, identity on the third level. The convention on the pair (|0⟩, |b⟩)
/// with m_b = ±1 the S_z quantum number of |b⟩:
///
/// U|0⟩ = cos(θ/2)|0⟩ − i·e^{+i·m_b·φ}·sin(θ/2)|b⟩
/// U|b⟩ = −i·e^{−i·m_b·φ}·sin(θ/2)|0⟩ + cos(θ/2)|b⟩
pub fn two_level_rotation(pair: RotationPair, theta: f64, phi: f64) -> CMatrix {
    let (b_idx, m_b) = match pair {
        RotationPair::ZeroPlus => (0usize, 1.0f64),
        RotationPair::ZeroMinus => (2usize, -1.0f64),
    };
    let zero_idx = 1usize;
    let c = cr(libm::cos(theta / 2.0));
    let s = libm::sin(theta / 2.0);
    let minus_i = Complex64::new(0.0, -1.0);
    let phase_fwd = Complex64::new(0.0, m_b * phi).exp();
    let mut u = CMatrix::identity(3);
    u.set(zero_idx, zero_idx, c);
    u.set(b_idx, b_idx, c);
    u.set(b_idx, zero_idx, minus_i * phase_fwd * cr(s));
    u.set(zero_idx, b_idx, minus_i * phase_fwd.conj() * cr(s));
    u
}

/// Builds the gate G_i that prepares the i-th eigenstate from |0⟩
/// (`target` is 1-based into the ascending eigensystem), composed of a
/// (0,−1)-pulse followed by a (0,+1)-pulse. The readout gate is `G_i†`.
///
/// Guarantees |⟨E_i|G_i|0⟩| = 1 up to rounding for any target eigenvector.
pub fn preparation_gate(target: usize, es: &EigenSystem) -> Result<CMatrix, Error> {
    if !(1..=3).contains(&target) {
        return Err(Error::InvalidTarget { target });
    }
    let t = es.vector(target - 1);
    // Components of the target in the (+1, 0, −1) basis.
    let (t_plus, t_zero, t_minus) = (t[0], t[1], t[2]);

    // G|0⟩ = c₁c₂|0⟩ − i·e^{iφ₂}c₁s₂|+1⟩ − i·e^{−iφ₁}s₁|−1⟩ with
    // cᵢ = cos(θᵢ/2), sᵢ = sin(θᵢ/2); match against e^{iχ}·t.
    let s1 = f64::min(1.0, t_minus.norm());
    let theta1 = 2.0 * libm::asin(s1);
    let theta2 = 2.0 * libm::atan2(t_plus.norm(), t_zero.norm());

    // Pick the free global phase χ so a nonzero matched component is real.
    let chi = if t_zero.norm() > 1e-14 {
        -t_zero.arg()
    } else if t_plus.norm() > 1e-14 {
        -t_plus.arg()
    } else {
        -t_minus.arg()
    };
    let rot = Complex64::new(0.0, chi).exp();
    let phi2 = if t_plus.norm() > 1e-14 {
        (rot * t_plus).arg() + core::f64::consts::FRAC_PI_2
    } else {
        0.0
    };
    let phi1 = if t_minus.norm() > 1e-14 {
        -((rot * t_minus).arg() + core::f64::consts::FRAC_PI_2)
    } else {
        0.0
    };

    let first = two_level_rotation(RotationPair::ZeroMinus, theta1, phi1);
    let second = two_level_rotation(RotationPair::ZeroPlus, theta2, phi2);
    Ok(&second * &first)
}
