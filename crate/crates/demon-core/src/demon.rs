//! The autonomous feedback-loop map: POVM elements, conditioned dissipators,
//! the single-block superoperator 𝓑 = 𝓐·𝑼, its powers, and the steady state.
//!
//! One block is: coherent evolution 𝑼 = conj(U)⊗U with U = exp(−iτH), then
//! the readout stage 𝓐 = Σ_j 𝓓_j·(m̄_j ⊗ m_j) — a weak S_z measurement
//! (absorbed with probability p_a) whose "click" outcomes are followed by
//! optical decay towards |0⟩ for a time t_L.

use num_complex::Complex64;

use crate::linops::{
    cr, eigh, expm_hermitian_generator, kron, trace_of_vectorized, vectorize, CMatrix, VecState,
};
use crate::qutrit::{build_hamiltonian, HamiltonianSpec};
use crate::Error;

/// Laser-pulse duration t_L = 41 ns.
pub const DEFAULT_T_LASER: f64 = 41e-9;
/// Optical decay rate Γ = 12.2e6 s⁻¹ (a plain rate, not an angular frequency).
pub const DEFAULT_GAMMA_RATE: f64 = 12.2e6;
/// Inter-pulse spacing τ = 424 ns.
pub const DEFAULT_TAU: f64 = 424e-9;

/// Full parameter set for one feedback-loop experiment.
#[derive(Debug, Clone, Copy)]
pub struct DemonConfig {
    pub hamiltonian: HamiltonianSpec,
    /// Free-evolution time per block, τ (s).
    pub tau: f64,
    /// Laser-pulse duration, t_L (s).
    pub t_laser: f64,
    /// Optical decay rate, Γ (1/s).
    pub gamma_rate: f64,
    /// Photon absorption probability per block, p_a.
    pub p_absorb: f64,
    /// Number of feedback blocks, N_L.
    pub n_pulses: u32,
}

impl DemonConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.hamiltonian.validate()?;
        if !(0.0..=1.0).contains(&self.p_absorb) || !self.p_absorb.is_finite() {
            return Err(Error::ProbabilityOutOfRange {
                value: self.p_absorb,
            });
        }
        for (v, what) in [
            (self.tau, "tau must be finite and >= 0"),
            (self.t_laser, "t_laser must be finite and >= 0"),
            (self.gamma_rate, "gamma_rate must be finite and >= 0"),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InconsistentInputs { what });
            }
        }
        Ok(())
    }

    /// Dissipation probability per absorbed photon: p_d = 1 − e^{−Γ·t_L}.
    pub fn p_dissipation(&self) -> f64 {
        1.0 - libm::exp(-self.gamma_rate * self.t_laser)
    }
}

/// All superoperators and measurement operators of one feedback block.
///
/// Immutable after construction; every consumer is pure, so values can be
/// shared freely across threads for parameter sweeps.
#[derive(Debug, Clone)]
pub struct DemonMap {
    pub config: DemonConfig,
    /// 𝑼 = conj(U) ⊗ U, the vectorized pulse-spacing unitary.
    pub u_super: CMatrix,
    /// 𝓐, the mean effect of the readout stage.
    pub a_super: CMatrix,
    /// 𝓑 = 𝓐·𝑼, one full block.
    pub b_super: CMatrix,
    /// 𝓛, the optical-decay channel for one laser pulse.
    pub lind_super: CMatrix,
    /// m_1..m_4: the four POVM operators (√p_a · S_z projectors, √(1−p_a)·I).
    pub povm: [CMatrix; 4],
    /// 𝓓_1..𝓓_4: decay follows the three "click" outcomes, nothing follows
    /// the no-click outcome.
    pub dissipators: [CMatrix; 4],
    /// L_0 = √Γ|0⟩⟨+1| and L_1 = √Γ|0⟩⟨−1|.
    pub jump_ops: [CMatrix; 2],
}

/// The four POVM operators: m_{1..3} = √p_a·(|+1⟩⟨+1|, |0⟩⟨0|, |−1⟩⟨−1|),
/// m_4 = √(1−p_a)·I. Satisfies Σ_j m_j m_j† = I.
pub fn build_povm(p_absorb: f64) -> Result<[CMatrix; 4], Error> {
    if !(0.0..=1.0).contains(&p_absorb) || !p_absorb.is_finite() {
        return Err(Error::ProbabilityOutOfRange { value: p_absorb });
    }
    let sq_pa = cr(libm::sqrt(p_absorb));
    let mut povm = [
        CMatrix::zeros(3, 3),
        CMatrix::zeros(3, 3),
        CMatrix::zeros(3, 3),
        CMatrix::identity(3).scale(cr(libm::sqrt(1.0 - p_absorb))),
    ];
    for i in 0..3 {
        povm[i].set(i, i, sq_pa);
    }
    Ok(povm)
}

/// Jump operators of the optical decay: L_0 = √Γ|0⟩⟨+1|, L_1 = √Γ|0⟩⟨−1|.
pub fn jump_operators(gamma_rate: f64) -> [CMatrix; 2] {
    let sq = cr(libm::sqrt(gamma_rate));
    let mut l0 = CMatrix::zeros(3, 3);
    l0.set(1, 0, sq);
    let mut l1 = CMatrix::zeros(3, 3);
    l1.set(1, 2, sq);
    [l0, l1]
}

/// Closed form of the decay channel 𝓛 = exp(t_L·𝔏) for the two jump
/// operators above: coherences and bright populations decay as
/// e^{−Γt_L·(d_i+d_j)/2} with d = (1, 0, 1) on the (+1, 0, −1) levels, and
/// the lost bright population feeds the |0⟩⟨0| slot.
pub fn build_lindblad_super(t_laser: f64, gamma_rate: f64) -> CMatrix {
    debug_assert!(t_laser * gamma_rate >= 0.0);
    let gt = gamma_rate * t_laser;
    let d = [1.0f64, 0.0, 1.0];
    let mut m = CMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            let k = i + 3 * j;
            m.set(k, k, cr(libm::exp(-gt * (d[i] + d[j]) / 2.0)));
        }
    }
    let feed = cr(1.0 - libm::exp(-gt));
    // Row 4 is the |0⟩⟨0| slot; columns 0 and 8 are the bright populations.
    m.set(4, 0, feed);
    m.set(4, 8, feed);
    m
}

/// The same channel built the defining way: matrix exponential of the
/// vectorized Lindblad generator Σ_k [L̄_k⊗L_k − ½ I⊗L_k†L_k − ½ (L_k†L_k)ᵀ⊗I].
/// Exists so tests can cross-assert the two constructions.
pub fn lindblad_generator_expm(t_laser: f64, gamma_rate: f64) -> Result<CMatrix, Error> {
    let id = CMatrix::identity(3);
    let mut gen = CMatrix::zeros(9, 9);
    for l in jump_operators(gamma_rate) {
        let ldag_l = &l.adjoint() * &l;
        let jump = kron(&l.conj(), &l);
        let left = kron(&id, &ldag_l).scale(cr(0.5));
        let right = kron(&ldag_l.transpose(), &id).scale(cr(0.5));
        gen = &gen + &(&jump - &(&left + &right));
    }
    expm_hermitian_generator(&gen, cr(t_laser))
}

/// The auxiliary 9×9 matrices of the closed-form block algebra:
/// A₁ keeps the three population slots, A₂ dumps their sum into the |0⟩⟨0|
/// slot, A₃ = I − A₁ keeps the coherence slots.
pub fn aux_matrices() -> (CMatrix, CMatrix, CMatrix) {
    let mut a1 = CMatrix::zeros(9, 9);
    let mut a2 = CMatrix::zeros(9, 9);
    for k in [0usize, 4, 8] {
        a1.set(k, k, cr(1.0));
        a2.set(4, k, cr(1.0));
    }
    let a3 = &CMatrix::identity(9) - &a1;
    (a1, a2, a3)
}

/// The readout-stage superoperator 𝓐 = Σ_{j=1..4} 𝓓_j·(m̄_j ⊗ m_j) with
/// 𝓓_{1..3} = 𝓛 and 𝓓_4 = I: measurement outcome first, conditioned decay
/// after. Equals μA₁ + (1−μ)A₂ + (1−p_a)A₃ with μ = 1 − p_d·p_a.
pub fn build_pulse_super(cfg: &DemonConfig) -> Result<CMatrix, Error> {
    cfg.validate()?;
    let povm = build_povm(cfg.p_absorb)?;
    let lind = build_lindblad_super(cfg.t_laser, cfg.gamma_rate);
    let id9 = CMatrix::identity(9);
    let mut a = CMatrix::zeros(9, 9);
    for (j, m) in povm.iter().enumerate() {
        let meas = kron(&m.conj(), m);
        let diss = if j < 3 { &lind } else { &id9 };
        a = &a + &(diss * &meas);
    }
    Ok(a)
}

/// Builds every operator of one feedback block for the given config.
pub fn build_block(cfg: &DemonConfig) -> Result<DemonMap, Error> {
    cfg.validate()?;
    let h = build_hamiltonian(&cfg.hamiltonian);
    let u = expm_hermitian_generator(&h, Complex64::new(0.0, -cfg.tau))?;
    let u_super = kron(&u.conj(), &u);
    let a_super = build_pulse_super(cfg)?;
    let b_super = &a_super * &u_super;
    let lind_super = build_lindblad_super(cfg.t_laser, cfg.gamma_rate);
    let povm = build_povm(cfg.p_absorb)?;
    let id9 = CMatrix::identity(9);
    let dissipators = [
        lind_super.clone(),
        lind_super.clone(),
        lind_super.clone(),
        id9,
    ];
    Ok(DemonMap {
        config: *cfg,
        u_super,
        a_super,
        b_super,
        lind_super,
        povm,
        dissipators,
        jump_ops: jump_operators(cfg.gamma_rate),
    })
}

/// Checks that a devectorized evolution output is a physical state and
/// returns it cleaned: Hermitian part taken, eigenvalues in [−1e-10, 0)
/// clipped to zero, renormalized to unit trace. Violations beyond tolerance
/// signal a convention bug and are reported as errors.
pub(crate) fn validate_and_clean_state(m: &CMatrix) -> Result<CMatrix, Error> {
    let herm_dev = m.max_abs_diff(&m.adjoint());
    if herm_dev > 1e-10 {
        return Err(Error::StateInvariantViolated {
            what: "hermiticity",
            value: herm_dev,
        });
    }
    let tr = m.trace();
    if (tr - cr(1.0)).norm() > 1e-10 {
        return Err(Error::StateInvariantViolated {
            what: "unit trace",
            value: (tr - cr(1.0)).norm(),
        });
    }
    let sym = m.hermitized();
    let eig = eigh(&sym)?;
    let mut vals = eig.values.clone();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 {
                return Err(Error::StateInvariantViolated {
                    what: "positivity",
                    value: *v,
                });
            }
            *v = 0.0;
        }
    }
    let total: f64 = vals.iter().sum();
    let n = sym.rows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let w = v / total;
        for i in 0..n {
            for j in 0..n {
                let add = eig.vectors.get(i, k) * eig.vectors.get(j, k).conj() * cr(w);
                let cur = out.get(i, j) + add;
                out.set(i, j, cur);
            }
        }
    }
    Ok(out)
}

/// Applies n feedback blocks to a state: devec(𝓑ⁿ·vec(ρ₀)).
pub fn evolve(map: &DemonMap, rho0: &CMatrix, n: u32) -> Result<CMatrix, Error> {
    let tr_dev = (rho0.trace() - cr(1.0)).norm();
    if rho0.rows() != 3 || rho0.cols() != 3 || tr_dev > 1e-8 {
        return Err(Error::StateInvariantViolated {
            what: "input state trace",
            value: tr_dev,
        });
    }
    let mut v = vectorize(rho0)?;
    for _ in 0..n {
        v = v.apply(&map.b_super);
    }
    let out = crate::linops::devectorize(&v)?;
    validate_and_clean_state(&out)
}

/// Fixed point ρ∞ of the block map, computed by shifted inverse iteration
/// and cross-checked by long power iteration from three basis-state seeds.
///
/// Uniqueness gate: the second-largest eigenvalue modulus of 𝓑 must stay
/// below 1 − 1e-9, otherwise the fixed-point space is degenerate (e.g.
/// p_a = 0 makes the block unitary) and an error is returned instead of an
/// arbitrary member.
pub fn steady_state(map: &DemonMap) -> Result<CMatrix, Error> {
    let eigs = crate::linops::eigenvalues(&map.b_super)?;
    let lambda2_mod = eigs[1].norm();
    if lambda2_mod >= 1.0 - 1e-9 {
        return Err(Error::NonUniqueFixedPoint { lambda2_mod });
    }

    // Shifted inverse iteration: (𝓑 − σI)⁻¹ amplifies the eigenvalue-1
    // direction by ~1/|1−σ| per step.
    let sigma = cr(1.0 + 1e-8);
    let shifted = &map.b_super - &CMatrix::identity(9).scale(sigma);
    let mut x = CMatrix::from_fn(9, 1, |i, _| if i % 4 == 0 { cr(1.0 / 3.0) } else { cr(0.0) });
    for _ in 0..4 {
        x = crate::linops::lu_solve_matrix(&shifted, &x)?;
        let norm = libm::sqrt((0..9).map(|i| x.get(i, 0).norm_sqr()).sum());
        if norm < 1e-300 {
            return Err(Error::ConvergenceFailed {
                what: "inverse iteration for the fixed point",
            });
        }
        x = x.scale(cr(1.0 / norm));
    }
    let raw = VecState::from_vec((0..9).map(|i| x.get(i, 0)).collect())?;
    let tr = trace_of_vectorized(&raw);
    if tr.norm() < 1e-12 {
        return Err(Error::ConvergenceFailed {
            what: "fixed point has vanishing trace",
        });
    }
    let normalized =
        VecState::from_vec(raw.as_slice().iter().map(|z| z / tr).collect())?;

    // Residual check: 𝓑·vec(ρ∞) = vec(ρ∞).
    let image = normalized.apply(&map.b_super);
    let residual = image
        .as_slice()
        .iter()
        .zip(normalized.as_slice().iter())
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).norm()));
    if residual > 1e-10 {
        return Err(Error::ConvergenceFailed {
            what: "fixed-point residual exceeds tolerance",
        });
    }

    // Independence of the initial state: run 𝓑^(2^45) by repeated squaring
    // and push the three S_z basis projectors through it.
    let mut pow = map.b_super.clone();
    for _ in 0..45 {
        pow = &pow * &pow;
    }
    for seed in 0..3usize {
        let mut rho_seed = CMatrix::zeros(3, 3);
        rho_seed.set(seed, seed, cr(1.0));
        let v = vectorize(&rho_seed)?.apply(&pow);
        let tr_seed = trace_of_vectorized(&v);
        let dev = v
            .as_slice()
            .iter()
            .zip(normalized.as_slice().iter())
            .fold(0.0, |m, (a, b)| f64::max(m, (a / tr_seed - b).norm()));
        if dev > 1e-8 {
            return Err(Error::ConvergenceFailed {
                what: "power-iteration seeds disagree on the fixed point",
            });
        }
    }

    let rho = crate::linops::devectorize(&normalized)?;
    validate_and_clean_state(&rho)
}
