//! The fluctuation identity of the feedback loop and its solvers.
//!
//! The central quantity is the efficacy γ: the trace left behind when the
//! *adjoint* block (𝓑†)ⁿ acts on the vectorized thermal state. Because the
//! block is not unital in general, γ ≠ 1, and it exactly equals the
//! characteristic function G(η) of the two-point energy statistics evaluated
//! at η = β. This module computes γ three ways (numeric power iteration,
//! closed form for the diagonal Hamiltonian, fixed-point overlap for the
//! asymptotic regime), checks the identity, classifies fixed points by how
//! they enter γ∞, and solves for the nontrivial crossing η* where G(η*) = 1
//! in the steady-state-ensemble regime.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::demon::{steady_state, validate_and_clean_state, DemonConfig, DemonMap};
use crate::error::Error;
use crate::linops::{cr, eigenvalues, hs_inner, trace_of_vectorized, vectorize, CMatrix};
use crate::qutrit::{build_hamiltonian, eigensystem, EigenSystem, HamiltonianKind, ThermalState};
use crate::statistics::{
    characteristic_function, sse_characteristic_function, tpm_statistics, TpmStatistics,
};

/// Model-exact tolerance for the identity G(β) = γ.
pub const SUT_TOLERANCE: f64 = 1e-10;

/// How an efficacy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficacyMethod {
    /// (𝓑†)ⁿ applied to the vectorized thermal state.
    Numeric,
    /// Closed form μⁿ + 3(1 − μⁿ)e^{βF} for the diagonal Hamiltonian.
    Analytic,
    /// Fixed-point overlap 3·Tr[ρ∞·ρth].
    Asymptotic,
}

/// Efficacy of the feedback loop at a given block count, bundled with the
/// characteristic-function value it must match.
#[derive(Debug, Clone)]
pub struct EfficacyReport {
    /// γ = Tr[(𝓑†)ⁿ vec(ρth)].
    pub gamma: f64,
    /// γ∞ = 3·Tr[ρ∞·ρth]; `None` when the map has no unique fixed point
    /// (e.g. p_a = 0, where every density matrix is stationary in norm).
    pub gamma_asymptotic: Option<f64>,
    /// G(β) from the two-point-measurement statistics at the same n.
    pub characteristic_at_beta: f64,
    /// Block count the transient values refer to.
    pub n_pulses: u32,
    /// Provenance of `gamma`.
    pub method: EfficacyMethod,
}

/// Promotes a nominally-real scalar to `f64`. A significant imaginary
/// residue signals a Hermiticity bug upstream and is reported as an error
/// rather than silently discarded.
fn require_real(z: Complex64, what: &'static str) -> Result<f64, Error> {
    if libm::fabs(z.im) > 1e-10 {
        return Err(Error::StateInvariantViolated { what, value: z.im });
    }
    Ok(z.re)
}

/// Trace left after the adjoint block acts n times on a vectorized state.
fn backward_trace(map: &DemonMap, rho: &CMatrix, n: u32) -> Result<f64, Error> {
    let b_adj = map.b_super.adjoint();
    let mut v = vectorize(rho)?;
    for _ in 0..n {
        v = v.apply(&b_adj);
    }
    require_real(trace_of_vectorized(&v), "backward trace")
}

/// Transient efficacy γ = Tr[(𝓑†)ⁿ vec(ρth)]. Equals 1 for n = 0 and stays
/// 1 for all n when the readout never fires (p_a = 0).
pub fn efficacy_numeric(map: &DemonMap, rho_th: &ThermalState, n: u32) -> Result<f64, Error> {
    backward_trace(map, &rho_th.rho, n)
}

/// Closed-form efficacy for the diagonal (level-preserving) Hamiltonian:
/// γ = μⁿ + 3(1 − μⁿ)/Z with μ = 1 − p_d·p_a and n = cfg.n_pulses.
/// 1/Z is taken from ln Z so extreme β cannot overflow.
pub fn efficacy_analytic_nv(cfg: &DemonConfig, thermal: &ThermalState) -> Result<f64, Error> {
    if cfg.hamiltonian.kind != HamiltonianKind::Nv {
        return Err(Error::WrongHamiltonianKind {
            expected: "diagonal (level-preserving)",
        });
    }
    cfg.validate()?;
    let mu = 1.0 - cfg.p_dissipation() * cfg.p_absorb;
    let mu_n = libm::pow(mu, cfg.n_pulses as f64);
    let inv_z = libm::exp(-thermal.log_partition);
    Ok(mu_n + (1.0 - mu_n) * 3.0 * inv_z)
}

/// Asymptotic efficacy γ∞ = 3·Tr[ρ∞·ρth], the thermal overlap of the map's
/// fixed point.
pub fn efficacy_asymptotic(rho_inf: &CMatrix, rho_th: &ThermalState) -> Result<f64, Error> {
    validate_and_clean_state(rho_inf)?;
    // ρ∞ is Hermitian, so ⟨ρ∞, ρth⟩ = Tr[ρ∞ ρth].
    let overlap = hs_inner(rho_inf, &rho_th.rho)?;
    require_real(overlap * 3.0, "fixed-point thermal overlap")
}

/// Assembles the full efficacy picture at one block count: the transient γ,
/// the matching G(β), and (when the fixed point is unique) γ∞.
pub fn efficacy_report(
    map: &DemonMap,
    es: &EigenSystem,
    thermal: &ThermalState,
    n: u32,
) -> Result<EfficacyReport, Error> {
    let gamma = efficacy_numeric(map, thermal, n)?;
    if !(gamma > 0.0) {
        return Err(Error::StateInvariantViolated {
            what: "efficacy must be positive",
            value: gamma,
        });
    }
    let stats = tpm_statistics(map, es, thermal, n)?;
    let characteristic_at_beta = characteristic_function(&stats, thermal.beta);
    let gamma_asymptotic = match steady_state(map) {
        Ok(rho_inf) => Some(efficacy_asymptotic(&rho_inf, thermal)?),
        Err(Error::NonUniqueFixedPoint { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(EfficacyReport {
        gamma,
        gamma_asymptotic,
        characteristic_at_beta,
        n_pulses: n,
        method: EfficacyMethod::Numeric,
    })
}

/// Outcome of checking the identity G(β) = γ on one configuration.
#[derive(Debug, Clone, Copy)]
pub struct SutReport {
    /// G(β) evaluated from the two-point statistics.
    pub characteristic_at_beta: f64,
    /// γ from the adjoint block acting on the same initial state.
    pub gamma: f64,
    /// |G(β) − γ|.
    pub deviation: f64,
    /// Whether the deviation is below [`SUT_TOLERANCE`].
    pub passes: bool,
}

/// Checks the fluctuation identity: the characteristic function of the
/// recorded statistics at its own β must equal the backward trace of the
/// state those statistics started from. The measurement basis is rebuilt
/// from the map's own Hamiltonian, and the recorded spectrum must match it.
pub fn sut_check(stats: &TpmStatistics, map: &DemonMap) -> Result<SutReport, Error> {
    stats.validate()?;
    let es = eigensystem(&build_hamiltonian(&map.config.hamiltonian))?;
    let scale = f64::max(1.0, es.e_max());
    for k in 0..3 {
        if libm::fabs(stats.energies[k] - es.energies[k]) > 1e-6 * scale {
            return Err(Error::InconsistentInputs {
                what: "statistics energies do not match the map's spectrum",
            });
        }
    }
    // First-measurement state: Σ_i P_i |E_i⟩⟨E_i|.
    let mut rho = CMatrix::zeros(3, 3);
    for i in 0..3 {
        rho = &rho + &es.projectors[i].scale(cr(stats.initial_probs[i]));
    }
    let gamma = backward_trace(map, &rho, stats.n_pulses)?;
    let characteristic_at_beta = characteristic_function(stats, stats.beta);
    let deviation = libm::fabs(characteristic_at_beta - gamma);
    Ok(SutReport {
        characteristic_at_beta,
        gamma,
        deviation,
        passes: deviation < SUT_TOLERANCE,
    })
}

/// How a fixed point enters the asymptotic efficacy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitalityClass {
    /// ρ∞ = I/3: the map is unital and γ∞ = 1 for every temperature.
    Unital,
    /// γ∞ = 1 although ρ∞ ≠ I/3: the fixed point lies on the one-parameter
    /// family where the thermal overlap still averages to one.
    GammaOneNonUnital,
    /// γ∞ ≠ 1.
    Generic,
}

/// Fixed-point classification together with the population constraint that
/// characterizes γ∞ = 1 at the probe temperature.
#[derive(Debug, Clone)]
pub struct UnitalityReport {
    pub class: UnitalityClass,
    /// γ∞ = 3·Tr[ρ∞·ρth].
    pub gamma_asymptotic: f64,
    /// Populations of ρ∞ in the energy basis, ascending-energy order.
    pub populations: [f64; 3],
    /// The top population that *would* put this fixed point on the γ∞ = 1
    /// family given its measured middle population; `None` at degenerate
    /// thermal weights (β = 0), where every state already has γ∞ = 1.
    pub family_top_population: Option<f64>,
}

/// The one-parameter family of γ∞ = 1 populations. γ∞ = 1 is equivalent to
/// Σ_k (p_k − 1/3)·P_k = 0 with P_k the thermal weights; eliminating the
/// bottom population through normalization leaves
///   p₃ = 1/3 − (p₂ − 1/3)·(P₁ − P₂)/(P₁ − P₃),
/// the top population as a function of the middle one. Returns `None` when
/// the weights are degenerate (β = 0) and the constraint is vacuous.
pub fn gamma_one_family_population(p_middle: f64, thermal_probs: &[f64; 3]) -> Option<f64> {
    let [p1, p2, p3] = *thermal_probs;
    let denom = p1 - p3;
    if libm::fabs(denom) <= 1e-12 {
        return None;
    }
    Some(1.0 / 3.0 - (p_middle - 1.0 / 3.0) * (p1 - p2) / denom)
}

/// Classifies a fixed point: unital (ρ∞ = I/3 within 1e-10), γ∞ = 1 without
/// unitality (within 1e-10), or generic. Also reports the energy-basis
/// populations and where the γ∞ = 1 family would place the top one.
pub fn unitality_witness(
    rho_inf: &CMatrix,
    thermal: &ThermalState,
    es: &EigenSystem,
) -> Result<UnitalityReport, Error> {
    validate_and_clean_state(rho_inf)?;
    let gamma_asymptotic = efficacy_asymptotic(rho_inf, thermal)?;
    let mut populations = [0.0f64; 3];
    for k in 0..3 {
        populations[k] = require_real(
            hs_inner(&es.projectors[k], rho_inf)?,
            "fixed-point population",
        )?;
    }
    let uniform = CMatrix::identity(3).scale(cr(1.0 / 3.0));
    let class = if rho_inf.max_abs_diff(&uniform) < 1e-10 {
        UnitalityClass::Unital
    } else if libm::fabs(gamma_asymptotic - 1.0) < 1e-10 {
        UnitalityClass::GammaOneNonUnital
    } else {
        UnitalityClass::Generic
    };
    let family_top_population = gamma_one_family_population(populations[1], &thermal.probs);
    Ok(UnitalityReport {
        class,
        gamma_asymptotic,
        populations,
        family_top_population,
    })
}

/// Solution record for the steady-state-ensemble crossing G(η*) = 1 on the
/// symmetric spectrum (−Ē, 0, Ē).
#[derive(Debug, Clone)]
pub struct EtaStarSolution {
    /// η* = −ln(x)/Ē from the unique positive-real root x.
    pub eta_star: f64,
    /// The positive-real root x = e^{−η*Ē} itself.
    pub root: f64,
    /// All roots of the reduced polynomial (degree ≤ 3).
    pub all_roots: Vec<Complex64>,
    /// Signs of the cubic coefficients (a, b, c, d). The structural pattern
    /// (+, +, −, −) has a single sign change, which certifies exactly one
    /// positive-real root.
    pub sign_pattern: [i8; 4],
    /// Polynomial degree actually solved after trimming negligible leading
    /// coefficients (degenerate distributions lower it).
    pub degree: usize,
    /// G(η*) on the factorized form; guaranteed within 1e-9 of 1.
    pub g_at_eta_star: f64,
}

fn check_distribution(p: &[f64; 3]) -> Result<(), Error> {
    let mut sum = 0.0;
    for &x in p {
        if !x.is_finite() || x < -1e-12 || x > 1.0 + 1e-12 {
            return Err(Error::ProbabilityOutOfRange { value: x });
        }
        sum += x;
    }
    if libm::fabs(sum - 1.0) > 1e-8 {
        return Err(Error::InconsistentInputs {
            what: "probabilities must sum to one",
        });
    }
    Ok(())
}

/// Roots of a real polynomial given highest-power-first coefficients with a
/// nonzero leading entry, via the companion matrix.
fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>, Error> {
    let n = coeffs.len() - 1;
    if n == 1 {
        let mut out = Vec::with_capacity(1);
        out.push(cr(-coeffs[1] / coeffs[0]));
        return Ok(out);
    }
    let lead = coeffs[0];
    let mut comp = CMatrix::zeros(n, n);
    for i in 1..n {
        comp.set(i, i - 1, cr(1.0));
    }
    for i in 0..n {
        comp.set(i, n - 1, cr(-coeffs[n - i] / lead));
    }
    eigenvalues(&comp)
}

/// Solves the steady-state-ensemble crossing G(η*) = 1 on the symmetric
/// spectrum (−Ē, 0, Ē). Substituting x = e^{−ηĒ} into the factorized
/// characteristic function turns G(η) = 1 into
///   (P₁x² + P₂x + P₃)(P̃₃x² + P̃₂x + P̃₁) = x²,
/// and dividing out the guaranteed trivial root x = 1 (G(0) = 1) leaves the
/// cubic a·x³ + b·x² + c·x + d with
///   a = P₁P̃₃, b = P₁P̃₂ + P₁P̃₃ + P₂P̃₃,
///   c = −(P₂P̃₁ + P₃P̃₁ + P₃P̃₂), d = −P₃P̃₁.
/// Since a, b ≥ 0 and c, d ≤ 0, the coefficient sequence has at most one
/// sign change, so at most one positive-real root exists; the solver demands
/// exactly one and verifies G(η*) = 1 within 1e-9 before returning.
pub fn solve_eta_star_cubic(
    initial_probs: &[f64; 3],
    ss_probs: &[f64; 3],
    e_bar: f64,
) -> Result<EtaStarSolution, Error> {
    check_distribution(initial_probs)?;
    check_distribution(ss_probs)?;
    if !e_bar.is_finite() || !(e_bar > 0.0) {
        return Err(Error::InconsistentInputs {
            what: "energy half-spacing must be positive and finite",
        });
    }
    let p = initial_probs;
    let q = ss_probs;
    let a = p[0] * q[2];
    let b = p[0] * q[1] + p[0] * q[2] + p[1] * q[2];
    let c = -(p[1] * q[0] + p[2] * q[0] + p[2] * q[1]);
    let d = -(p[2] * q[0]);
    let coeffs = [a, b, c, d];
    let scale = coeffs
        .iter()
        .fold(0.0f64, |m, &x| f64::max(m, libm::fabs(x)));
    let tol = 1e-14 * scale;
    let sign_of = |x: f64| -> i8 {
        if libm::fabs(x) <= tol {
            0
        } else if x > 0.0 {
            1
        } else {
            -1
        }
    };
    let sign_pattern = [sign_of(a), sign_of(b), sign_of(c), sign_of(d)];
    if scale == 0.0 {
        // Every cross product vanishes: the two distributions share a single
        // support point, G ≡ 1, and only the trivial crossing remains.
        return Ok(EtaStarSolution {
            eta_star: 0.0,
            root: 1.0,
            all_roots: Vec::new(),
            sign_pattern,
            degree: 0,
            g_at_eta_star: 1.0,
        });
    }
    // Trim negligible leading coefficients; boundary probabilities lower the
    // degree (e.g. P₁P̃₃ = 0).
    let mut first = 0;
    while first < 3 && libm::fabs(coeffs[first]) <= tol {
        first += 1;
    }
    let degree = 3 - first;
    if degree == 0 {
        return Err(Error::InconsistentInputs {
            what: "no positive-real root for the crossing",
        });
    }
    let all_roots = poly_roots(&coeffs[first..])?;
    // Polish candidates on the full cubic (trimmed leading terms are
    // numerically negligible there) and keep the positive-real ones.
    let poly = |x: f64| ((a * x + b) * x + c) * x + d;
    let dpoly = |x: f64| (3.0 * a * x + 2.0 * b) * x + c;
    let mut candidates: Vec<f64> = Vec::new();
    for r in &all_roots {
        if r.re <= 0.0 || libm::fabs(r.im) > 1e-8 * f64::max(1.0, libm::fabs(r.re)) {
            continue;
        }
        let mut x = r.re;
        for _ in 0..8 {
            let der = dpoly(x);
            if der == 0.0 {
                break;
            }
            let step = poly(x) / der;
            x -= step;
            if libm::fabs(step) <= 1e-15 * f64::max(1.0, libm::fabs(x)) {
                break;
            }
        }
        // x = e^{−ηĒ} is strictly positive for any finite crossing; roots
        // collapsing to zero are artifacts of a vanished constant term.
        if x > 1e-12 {
            candidates.push(x);
        }
    }
    candidates.sort_by(|u, v| u.partial_cmp(v).expect("roots are finite"));
    candidates.dedup_by(|u, v| libm::fabs(*u - *v) <= 1e-8 * f64::max(1.0, libm::fabs(*v)));
    if candidates.is_empty() {
        return Err(Error::InconsistentInputs {
            what: "no positive-real root for the crossing",
        });
    }
    if candidates.len() > 1 {
        return Err(Error::InconsistentInputs {
            what: "multiple positive-real roots; crossing is not unique",
        });
    }
    let root = candidates[0];
    let eta_star = -libm::log(root) / e_bar;
    let energies = [-e_bar, 0.0, e_bar];
    let g_at_eta_star = sse_characteristic_function(&energies, p, q, eta_star);
    if libm::fabs(g_at_eta_star - 1.0) > 1e-9 {
        return Err(Error::ConvergenceFailed {
            what: "crossing root does not satisfy G = 1 within 1e-9",
        });
    }
    Ok(EtaStarSolution {
        eta_star,
        root,
        all_roots,
        sign_pattern,
        degree,
        g_at_eta_star,
    })
}

/// Steady-state populations split into an effective inverse temperature and
/// a geometric-distance parameter.
#[derive(Debug, Clone)]
pub struct SteadyStateDecomposition {
    /// Effective final inverse temperature β_fin (s/rad).
    pub beta_fin: f64,
    /// Distance parameter λ (s²/rad²): weight of the squared complementary
    /// gap in each exponent.
    pub lambda: f64,
    /// Populations reproduced from (β_fin, λ) through the parametrization.
    pub populations: [f64; 3],
    /// Coherent remainder ξ = ρ∞ − Σ_j p_j|E_j⟩⟨E_j|; `None` until attached
    /// from a full density matrix via [`coherent_residual`].
    pub coherent_residual: Option<CMatrix>,
    /// Final max-norm residual of the two log-ratio equations.
    pub residual: f64,
    /// Newton iterations consumed (0 when the direct solve already lands).
    pub iterations: u32,
}

/// d_j = (E_k − E_l)² for the complementary pairs (2,3), (3,1), (1,2).
fn pair_gaps_squared(energies: &[f64; 3]) -> [f64; 3] {
    let e = energies;
    [
        (e[1] - e[2]) * (e[1] - e[2]),
        (e[2] - e[0]) * (e[2] - e[0]),
        (e[0] - e[1]) * (e[0] - e[1]),
    ]
}

/// Forward parametrization P̃_j ∝ exp(−β_fin·E_j + λ·d_j), where d_j is the
/// squared gap of the complementary pair. Exponents are shifted by their
/// maximum before normalizing, so extreme arguments cannot overflow.
pub fn parametrized_populations(beta_fin: f64, lambda: f64, energies: &[f64; 3]) -> [f64; 3] {
    let d = pair_gaps_squared(energies);
    let mut x = [0.0f64; 3];
    let mut xmax = f64::NEG_INFINITY;
    for j in 0..3 {
        x[j] = -beta_fin * energies[j] + lambda * d[j];
        xmax = f64::max(xmax, x[j]);
    }
    let mut w = [0.0f64; 3];
    let mut z = 0.0;
    for j in 0..3 {
        w[j] = libm::exp(x[j] - xmax);
        z += w[j];
    }
    [w[0] / z, w[1] / z, w[2] / z]
}

/// Recovers (β_fin, λ) from steady-state populations. Taking logarithms of
/// the two independent population ratios makes the parametrization *linear*
/// in (β_fin, λ), so the direct 2×2 solve is already exact; a damped Newton
/// loop (factor 0.5 backtracking) polishes rounding and guards the contract
/// residual of 1e-8.
pub fn decompose_steady_state(
    ss_probs: &[f64; 3],
    energies: &[f64; 3],
) -> Result<SteadyStateDecomposition, Error> {
    for (k, &p) in ss_probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 || p > 1.0 + 1e-12 {
            return Err(Error::ProbabilityOutOfRange { value: p });
        }
        if p == 0.0 {
            return Err(Error::BoundaryProbability { index: k });
        }
    }
    let sum: f64 = ss_probs.iter().sum();
    if libm::fabs(sum - 1.0) > 1e-8 {
        return Err(Error::InconsistentInputs {
            what: "steady-state probabilities must sum to one",
        });
    }
    for &e in energies {
        if !e.is_finite() {
            return Err(Error::InconsistentInputs {
                what: "energies must be finite",
            });
        }
    }
    let d = pair_gaps_squared(energies);
    // ln(p_j/p_{j+1}) = −β_fin(E_j − E_{j+1}) + λ(d_j − d_{j+1})
    let lin = [
        [-(energies[0] - energies[1]), d[0] - d[1]],
        [-(energies[1] - energies[2]), d[1] - d[2]],
    ];
    let rhs = [
        libm::log(ss_probs[0] / ss_probs[1]),
        libm::log(ss_probs[1] / ss_probs[2]),
    ];
    let det = lin[0][0] * lin[1][1] - lin[0][1] * lin[1][0];
    let lin_scale = lin
        .iter()
        .flatten()
        .fold(0.0f64, |m, &x| f64::max(m, libm::fabs(x)));
    if libm::fabs(det) <= 1e-12 * lin_scale * lin_scale {
        return Err(Error::InconsistentInputs {
            what: "degenerate spectrum: population-ratio equations are singular",
        });
    }
    let solve2 = |r: [f64; 2]| -> [f64; 2] {
        [
            (r[0] * lin[1][1] - r[1] * lin[0][1]) / det,
            (lin[0][0] * r[1] - lin[1][0] * r[0]) / det,
        ]
    };
    let residual_of = |theta: &[f64; 2]| -> [f64; 2] {
        [
            lin[0][0] * theta[0] + lin[0][1] * theta[1] - rhs[0],
            lin[1][0] * theta[0] + lin[1][1] * theta[1] - rhs[1],
        ]
    };
    let norm = |r: &[f64; 2]| f64::max(libm::fabs(r[0]), libm::fabs(r[1]));
    let mut theta = solve2(rhs);
    let mut r = residual_of(&theta);
    let mut iterations = 0u32;
    while norm(&r) > 1e-12 && iterations < 200 {
        iterations += 1;
        let step = solve2([-r[0], -r[1]]);
        let mut t = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [theta[0] + t * step[0], theta[1] + t * step[1]];
            let rt = residual_of(&trial);
            if norm(&rt) < norm(&r) {
                theta = trial;
                r = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break; // at numerical floor
        }
    }
    let residual = norm(&r);
    if residual > 1e-8 {
        return Err(Error::ConvergenceFailed {
            what: "steady-state decomposition stalled above residual 1e-8",
        });
    }
    let populations = parametrized_populations(theta[0], theta[1], energies);
    let mut dev = 0.0f64;
    for j in 0..3 {
        dev = f64::max(dev, libm::fabs(populations[j] - ss_probs[j]));
    }
    if dev > 1e-8 {
        return Err(Error::ConvergenceFailed {
            what: "parametrization does not reproduce the populations to 1e-8",
        });
    }
    Ok(SteadyStateDecomposition {
        beta_fin: theta[0],
        lambda: theta[1],
        populations,
        coherent_residual: None,
        residual,
        iterations,
    })
}

/// Coherent remainder ξ = ρ∞ − Σ_j p_j |E_j⟩⟨E_j|: whatever the fixed point
/// carries beyond its energy-basis populations. Identically zero whenever
/// the block commutes with the measured Hamiltonian.
pub fn coherent_residual(rho_inf: &CMatrix, es: &EigenSystem) -> Result<CMatrix, Error> {
    let mut xi = rho_inf.clone();
    for k in 0..3 {
        let pk = require_real(hs_inner(&es.projectors[k], rho_inf)?, "population")?;
        xi = &xi - &es.projectors[k].scale(cr(pk));
    }
    Ok(xi)
}

/// Solves the steady-state crossing directly from the model parameters
/// (β, β_fin, λ) on the symmetric spectrum: builds the thermal initial
/// distribution and the parametrized final one, then finds the nontrivial
/// root of G(η) = 1 by bracketed bisection plus a Newton polish.
///
/// G is a positive sum of exponentials in η, hence strictly convex, with
/// G(0) = 1 always; a second crossing exists exactly when G′(0) ≠ 0, on the
/// side where G first dips below one. When only the trivial root exists the
/// function reports η* = 0.
pub fn solve_ness_condition(
    beta: f64,
    beta_fin: f64,
    lambda: f64,
    e_bar: f64,
) -> Result<f64, Error> {
    if !e_bar.is_finite()
        || !(e_bar > 0.0)
        || !beta.is_finite()
        || !beta_fin.is_finite()
        || !lambda.is_finite()
    {
        return Err(Error::InconsistentInputs {
            what: "crossing parameters must be finite with a positive energy scale",
        });
    }
    let energies = [-e_bar, 0.0, e_bar];
    let p = parametrized_populations(beta, 0.0, &energies);
    let q = parametrized_populations(beta_fin, lambda, &energies);
    let g = |eta: f64| sse_characteristic_function(&energies, &p, &q, eta);
    // G′(0) = ⟨E⟩_P − ⟨E⟩_P̃ decides whether a dip (and hence a return
    // crossing) exists and on which side.
    let mean = |w: &[f64; 3]| w[0] * energies[0] + w[1] * energies[1] + w[2] * energies[2];
    let slope0 = mean(&p) - mean(&q);
    if libm::fabs(slope0) <= 1e-12 * e_bar {
        return Ok(0.0);
    }
    let dir = if slope0 < 0.0 { 1.0 } else { -1.0 };
    // Shrink into the dip: between the two crossings G < 1 everywhere by
    // convexity, so halving the probe always lands inside eventually.
    let mut inner = dir * 0.25 / e_bar;
    let mut tries = 0;
    while g(inner) >= 1.0 {
        inner *= 0.5;
        tries += 1;
        if tries > 200 {
            return Ok(0.0); // dip numerically invisible: trivial root only
        }
    }
    // Expand past the dip until G climbs back above one.
    let mut outer = 2.0 * inner;
    tries = 0;
    while g(outer) <= 1.0 {
        outer *= 2.0;
        tries += 1;
        if tries > 300 {
            return Err(Error::ConvergenceFailed {
                what: "crossing bracket expansion found no return above one",
            });
        }
    }
    let (mut lo, mut hi) = (inner, outer); // G(lo) < 1 < G(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut eta = 0.5 * (lo + hi);
    // Newton polish with the analytic derivative of the factorized form.
    for _ in 0..8 {
        let mut f1 = 0.0f64;
        let mut df1 = 0.0f64;
        let mut f2 = 0.0f64;
        let mut df2 = 0.0f64;
        for k in 0..3 {
            let up = libm::exp(eta * energies[k]);
            let dn = libm::exp(-eta * energies[k]);
            f1 += p[k] * up;
            df1 += p[k] * energies[k] * up;
            f2 += q[k] * dn;
            df2 -= q[k] * energies[k] * dn;
        }
        let dg = df1 * f2 + f1 * df2;
        if dg == 0.0 {
            break;
        }
        let step = (f1 * f2 - 1.0) / dg;
        let next = eta - step;
        if !next.is_finite() {
            break;
        }
        eta = next;
        if libm::fabs(step) <= 1e-15 * f64::max(1.0, libm::fabs(eta)) {
            break;
        }
    }
    Ok(eta)
}
