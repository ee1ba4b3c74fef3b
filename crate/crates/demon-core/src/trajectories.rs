//! Exhaustive enumeration of measurement-record trajectories.
//!
//! One feedback block factors into four exclusive branches, one per readout
//! outcome: branch_k = 𝓓_k · (m̄_k ⊗ m_k) · 𝑼, with Σ_k branch_k = 𝓑. A
//! trajectory is an outcome record (k₁, …, k_n); its probability is the
//! trace left after the matching branch product acts on the vectorized
//! initial state. This module enumerates all 4ⁿ records by depth-first
//! search with prefix sharing, computes their Shannon entropy (the
//! error-free limit of the demon's mutual information), resolves the
//! efficacy as a backward trajectory sum, and evaluates the
//! energy-extraction bound β⟨ΔE⟩ ≥ max(−ln γ, −⟨S⟩) together with the
//! asymptotic-population phase diagram it implies.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::demon::{build_block, DemonConfig, DemonMap};
use crate::error::Error;
use crate::fluctuation::{efficacy_numeric, parametrized_populations};
use crate::linops::{kron, vectorize, CMatrix};
use crate::qutrit::{build_hamiltonian, eigensystem, thermal_state, EigenSystem, ThermalState};
use crate::statistics::{mean_energy_change, tpm_statistics};

/// Default enumeration budget: 4¹² ≈ 1.7×10⁷ records.
pub const DEFAULT_TRAJECTORY_CAP: u32 = 12;

/// Hard ceiling from the 2-bit outcome packing (a u32 holds 16 symbols).
pub const MAX_TRAJECTORY_BLOCKS: u32 = 15;

/// One measurement record and its probability. Outcomes are the four
/// readout results per block: 1..3 the projective "click" outcomes
/// (basis order +1, 0, −1), 4 the no-click outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    /// Outcomes packed two bits per block, first block in the low bits.
    packed: u32,
    len: u8,
    /// p(k₁, …, k_n) ∈ [0, 1].
    pub probability: f64,
}

impl TrajectoryRecord {
    /// Number of blocks in the record.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Outcome of block `i` (0-based) as the symbol 1..=4.
    pub fn outcome(&self, i: usize) -> u8 {
        assert!(i < self.len as usize, "block index out of range");
        ((self.packed >> (2 * i)) & 0b11) as u8 + 1
    }

    /// The full outcome sequence as symbols 1..=4.
    pub fn outcomes(&self) -> Vec<u8> {
        (0..self.len as usize).map(|i| self.outcome(i)).collect()
    }
}

/// Enumeration controls.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    /// Maximum block count admitted without error.
    pub cap: u32,
    /// When set, subtrees whose prefix weight falls below this mass are
    /// dropped and accounted in `pruned_mass`.
    pub prune_threshold: Option<f64>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            cap: DEFAULT_TRAJECTORY_CAP,
            prune_threshold: None,
        }
    }
}

/// Full enumeration result.
#[derive(Debug, Clone)]
pub struct TrajectoryEnumeration {
    /// Records in lexicographic outcome order; exactly 4ⁿ of them unless
    /// pruning dropped subtrees.
    pub records: Vec<TrajectoryRecord>,
    /// Total probability mass dropped by pruning.
    pub pruned_mass: f64,
    /// Max-entropy bound on the entropy the dropped mass could carry:
    /// m·ln(4ⁿ/m). Estimates beyond the exact budget are extrapolations
    /// and carry this label.
    pub entropy_error_bound: f64,
    pub n_pulses: u32,
}

/// Compensated (Kahan) accumulator for long sums of tiny terms.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// The four exclusive per-outcome block superoperators; they sum to 𝓑.
fn branch_supers(map: &DemonMap) -> [CMatrix; 4] {
    core::array::from_fn(|k| {
        let sandwich = kron(&map.povm[k].conj(), &map.povm[k]);
        &(&map.dissipators[k] * &sandwich) * &map.u_super
    })
}

fn trace9(v: &[Complex64; 9]) -> Complex64 {
    v[0] + v[4] + v[8]
}

struct ForwardWalk<'a> {
    branches: &'a [CMatrix; 4],
    n: u32,
    prune: Option<f64>,
    records: Vec<TrajectoryRecord>,
    pruned: Kahan,
}

impl ForwardWalk<'_> {
    fn walk(&mut self, v: &[Complex64; 9], depth: u32, packed: u32) -> Result<(), Error> {
        for k in 0..4u32 {
            let mut w = [Complex64::new(0.0, 0.0); 9];
            self.branches[k as usize].matvec_into(v, &mut w);
            let tr = trace9(&w);
            if libm::fabs(tr.im) > 1e-10 {
                return Err(Error::StateInvariantViolated {
                    what: "trajectory weight must be real",
                    value: tr.im,
                });
            }
            let mass = tr.re;
            if mass < -1e-10 {
                return Err(Error::StateInvariantViolated {
                    what: "trajectory weight must be nonnegative",
                    value: mass,
                });
            }
            if let Some(threshold) = self.prune {
                if mass < threshold {
                    self.pruned.add(f64::max(mass, 0.0));
                    continue;
                }
            }
            let next_packed = packed | (k << (2 * depth));
            if depth + 1 == self.n {
                self.records.push(TrajectoryRecord {
                    packed: next_packed,
                    len: self.n as u8,
                    probability: f64::min(f64::max(mass, 0.0), 1.0),
                });
            } else {
                self.walk(&w, depth + 1, next_packed)?;
            }
        }
        Ok(())
    }
}

fn state_as_array(rho: &CMatrix) -> Result<[Complex64; 9], Error> {
    let v = vectorize(rho)?;
    let s = v.as_slice();
    Ok(core::array::from_fn(|i| s[i]))
}

/// Enumerates every outcome record of `n` blocks starting from the thermal
/// state, with explicit budget and pruning controls. Cost is one 9×9
/// matrix-vector product per tree node — prefixes are shared, never
/// recomputed.
pub fn enumerate_trajectories_with_options(
    map: &DemonMap,
    rho_th: &ThermalState,
    n: u32,
    options: &TrajectoryOptions,
) -> Result<TrajectoryEnumeration, Error> {
    if n == 0 {
        return Err(Error::InconsistentInputs {
            what: "trajectory enumeration needs at least one block",
        });
    }
    if options.cap > MAX_TRAJECTORY_BLOCKS {
        return Err(Error::InconsistentInputs {
            what: "cap exceeds the packed-outcome capacity of 15 blocks",
        });
    }
    if n > options.cap {
        return Err(Error::BudgetExceeded {
            n,
            cap: options.cap,
        });
    }
    let branches = branch_supers(map);
    let v0 = state_as_array(&rho_th.rho)?;
    let capacity = if options.prune_threshold.is_some() {
        1usize << 12
    } else {
        4usize.pow(n)
    };
    let mut walk = ForwardWalk {
        branches: &branches,
        n,
        prune: options.prune_threshold,
        records: Vec::with_capacity(capacity),
        pruned: Kahan::default(),
    };
    walk.walk(&v0, 0, 0)?;
    let pruned_mass = walk.pruned.sum;
    let entropy_error_bound = if pruned_mass > 0.0 {
        pruned_mass * ((n as f64) * libm::log(4.0) - libm::log(pruned_mass))
    } else {
        0.0
    };
    Ok(TrajectoryEnumeration {
        records: walk.records,
        pruned_mass,
        entropy_error_bound,
        n_pulses: n,
    })
}

/// Enumerates all 4ⁿ records (zero-probability ones included) under the
/// default budget of n ≤ 12.
pub fn enumerate_trajectories(
    map: &DemonMap,
    rho_th: &ThermalState,
    n: u32,
) -> Result<Vec<TrajectoryRecord>, Error> {
    Ok(enumerate_trajectories_with_options(map, rho_th, n, &TrajectoryOptions::default())?.records)
}

/// −Σ p ln p with 0·ln 0 = 0, accumulated in compensated summation.
/// Requires the records to carry a normalized distribution (Σp = 1 within
/// 1e-8, e.g. an unpruned enumeration).
pub fn shannon_entropy(records: &[TrajectoryRecord]) -> Result<f64, Error> {
    let mut total = Kahan::default();
    for r in records {
        if !r.probability.is_finite() || r.probability < -1e-12 || r.probability > 1.0 + 1e-12 {
            return Err(Error::ProbabilityOutOfRange {
                value: r.probability,
            });
        }
        total.add(r.probability);
    }
    if libm::fabs(total.sum - 1.0) > 1e-8 {
        return Err(Error::InconsistentInputs {
            what: "record probabilities must sum to one",
        });
    }
    let mut entropy = Kahan::default();
    for r in records {
        if r.probability > 0.0 {
            entropy.add(-r.probability * libm::log(r.probability));
        }
    }
    Ok(entropy.sum)
}

fn backward_walk(
    branches_adj: &[CMatrix; 4],
    v: &[Complex64; 9],
    depth_left: u32,
    acc: &mut Kahan,
) -> Result<(), Error> {
    if depth_left == 0 {
        let tr = trace9(v);
        if libm::fabs(tr.im) > 1e-10 {
            return Err(Error::StateInvariantViolated {
                what: "backward trajectory weight must be real",
                value: tr.im,
            });
        }
        acc.add(tr.re);
        return Ok(());
    }
    for k in 0..4 {
        let mut w = [Complex64::new(0.0, 0.0); 9];
        branches_adj[k].matvec_into(v, &mut w);
        backward_walk(branches_adj, &w, depth_left - 1, acc)?;
    }
    Ok(())
}

/// Efficacy as the explicit backward sum over all 4ⁿ adjoint branch
/// products. Exists to certify that the (𝓑†)ⁿ route computes the same
/// number without visiting a single trajectory; the superoperator route is
/// what production paths use.
pub fn efficacy_from_trajectories(
    map: &DemonMap,
    rho_th: &ThermalState,
    n: u32,
) -> Result<f64, Error> {
    if n > DEFAULT_TRAJECTORY_CAP {
        return Err(Error::BudgetExceeded {
            n,
            cap: DEFAULT_TRAJECTORY_CAP,
        });
    }
    let v0 = state_as_array(&rho_th.rho)?;
    if n == 0 {
        return Ok(trace9(&v0).re);
    }
    let branches = branch_supers(map);
    let branches_adj: [CMatrix; 4] = core::array::from_fn(|k| branches[k].adjoint());
    let mut acc = Kahan::default();
    backward_walk(&branches_adj, &v0, n, &mut acc)?;
    Ok(acc.sum)
}

/// The three sides of the energy-extraction bound at one block count.
#[derive(Debug, Clone, Copy)]
pub struct BoundsReport {
    /// β⟨ΔE⟩ from the two-point statistics.
    pub beta_delta_e: f64,
    /// −ln γ from the adjoint-block efficacy.
    pub neg_ln_gamma: f64,
    /// −⟨S⟩, the error-free limit of the demon's information; `None` when
    /// the block count exceeds the enumeration budget.
    pub neg_entropy: Option<f64>,
    pub n_pulses: u32,
}

/// Evaluates β⟨ΔE⟩ ≥ max(−ln γ, −⟨S⟩) at one configuration. ⟨ΔE⟩ and γ
/// come from 𝓑ⁿ and (𝓑†)ⁿ and carry no enumeration budget; the entropy
/// side enumerates 4ⁿ records and is omitted beyond the budget. A violated
/// bound is reported as an error — it cannot happen in-model.
pub fn bounds_report(cfg: &DemonConfig, beta: f64, n: u32) -> Result<BoundsReport, Error> {
    let map = build_block(cfg)?;
    let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian))?;
    let ts = thermal_state(&es, beta)?;
    if n == 0 {
        return Ok(BoundsReport {
            beta_delta_e: 0.0,
            neg_ln_gamma: 0.0,
            neg_entropy: Some(0.0),
            n_pulses: 0,
        });
    }
    let stats = tpm_statistics(&map, &es, &ts, n)?;
    let beta_delta_e = beta * mean_energy_change(&stats);
    let gamma = efficacy_numeric(&map, &ts, n)?;
    let neg_ln_gamma = -libm::log(gamma);
    let neg_entropy = if n <= DEFAULT_TRAJECTORY_CAP {
        let records = enumerate_trajectories(&map, &ts, n)?;
        Some(-shannon_entropy(&records)?)
    } else {
        None
    };
    let mut floor = neg_ln_gamma;
    if let Some(ns) = neg_entropy {
        floor = f64::max(floor, ns);
    }
    if beta_delta_e < floor - 1e-8 {
        return Err(Error::StateInvariantViolated {
            what: "extraction bound violated",
            value: beta_delta_e - floor,
        });
    }
    Ok(BoundsReport {
        beta_delta_e,
        neg_ln_gamma,
        neg_entropy,
        n_pulses: n,
    })
}

/// Sign of β⟨ΔE⟩ for one asymptotic population point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseClass {
    /// β⟨ΔE⟩ < 0: net energy flows out of the system.
    Extraction,
    /// β⟨ΔE⟩ = 0 within tolerance: on the hyperplane Σ p_j∞E_j = ⟨E⟩₀.
    ZeroLine,
    /// β⟨ΔE⟩ > 0.
    Injection,
}

/// One point of the asymptotic-population phase diagram.
#[derive(Debug, Clone, Copy)]
pub struct PhasePoint {
    /// Population of the lowest energy eigenstate.
    pub p_low: f64,
    /// Population of the middle energy eigenstate.
    pub p_mid: f64,
    pub beta_delta_e: f64,
    pub class: PhaseClass,
}

/// Thermal-line annotation: the populations a thermal state at β∞ would
/// place on the simplex axes.
#[derive(Debug, Clone, Copy)]
pub struct ThermalLinePoint {
    pub beta_inf: f64,
    pub p_low: f64,
    pub p_mid: f64,
}

/// Phase diagram over asymptotic populations at fixed initial temperature.
#[derive(Debug, Clone)]
pub struct PhaseDiagram {
    /// Simplex grid points, row-major in (p_low, p_mid).
    pub points: Vec<PhasePoint>,
    /// The maximally-mixed fixed point I/3.
    pub unital: PhasePoint,
    /// Thermal states at a sweep of β∞ values, for annotation.
    pub thermal_line: Vec<ThermalLinePoint>,
    /// Initial inverse temperature the diagram is drawn at.
    pub beta: f64,
}

/// Classifies one asymptotic population point: β⟨ΔE⟩ = β(Σ p_j∞E_j − ⟨E⟩₀)
/// with ⟨E⟩₀ the thermal mean energy. The zero line is the hyperplane where
/// the asymptotic mean energy equals the initial one.
pub fn classify_extraction_point(
    es: &EigenSystem,
    thermal: &ThermalState,
    p_low: f64,
    p_mid: f64,
) -> Result<PhasePoint, Error> {
    for &p in &[p_low, p_mid] {
        if !p.is_finite() || p < -1e-12 || p > 1.0 + 1e-12 {
            return Err(Error::ProbabilityOutOfRange { value: p });
        }
    }
    let p_top = 1.0 - p_low - p_mid;
    if p_top < -1e-12 {
        return Err(Error::InconsistentInputs {
            what: "population point lies off the simplex",
        });
    }
    let e = &es.energies;
    let mean_inf = p_low * e[0] + p_mid * e[1] + f64::max(p_top, 0.0) * e[2];
    let mut mean_0 = 0.0;
    for j in 0..3 {
        mean_0 += thermal.probs[j] * e[j];
    }
    let beta_delta_e = thermal.beta * (mean_inf - mean_0);
    let tol = 1e-9 * libm::fabs(thermal.beta) * (e[2] - e[0]);
    let class = if beta_delta_e < -tol {
        PhaseClass::Extraction
    } else if beta_delta_e > tol {
        PhaseClass::Injection
    } else {
        PhaseClass::ZeroLine
    };
    Ok(PhasePoint {
        p_low,
        p_mid,
        beta_delta_e,
        class,
    })
}

/// Tabulates the extraction phase diagram on a simplex grid of the given
/// resolution: points (i/g, j/g) with i + j ≤ g. Adds the unital point and
/// a thermal-line sweep β∞·E_max ∈ [−6, 6] for annotation.
pub fn extraction_phase_diagram(
    es: &EigenSystem,
    beta: f64,
    grid: u32,
) -> Result<PhaseDiagram, Error> {
    if grid == 0 {
        return Err(Error::InconsistentInputs {
            what: "phase-diagram resolution must be at least 1",
        });
    }
    let thermal = thermal_state(es, beta)?;
    let g = grid as f64;
    let mut points = Vec::with_capacity(((grid + 1) * (grid + 2) / 2) as usize);
    for i in 0..=grid {
        for j in 0..=(grid - i) {
            points.push(classify_extraction_point(
                es,
                &thermal,
                i as f64 / g,
                j as f64 / g,
            )?);
        }
    }
    let unital = classify_extraction_point(es, &thermal, 1.0 / 3.0, 1.0 / 3.0)?;
    let mut thermal_line = Vec::with_capacity(81);
    let scale = es.e_max();
    for k in -40i32..=40 {
        let beta_inf = (k as f64) * 0.15 / scale;
        let probs = parametrized_populations(beta_inf, 0.0, &es.energies);
        thermal_line.push(ThermalLinePoint {
            beta_inf,
            p_low: probs[0],
            p_mid: probs[1],
        });
    }
    Ok(PhaseDiagram {
        points,
        unital,
        thermal_line,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demon::{DemonConfig, DEFAULT_GAMMA_RATE, DEFAULT_TAU};
    use crate::linops::{devectorize, hs_inner, matrix_power, trace_of_vectorized};
    use crate::qutrit::{HamiltonianKind, HamiltonianSpec};
    use crate::statistics::conditional_probabilities;

    const TWO_PI: f64 = core::f64::consts::TAU;

    fn cfg_of(kind: HamiltonianKind, p_absorb: f64, gamma_t: f64) -> DemonConfig {
        let hamiltonian = match kind {
            HamiltonianKind::Nv => HamiltonianSpec::nv(TWO_PI * 2.87e9, TWO_PI * 1e8),
            HamiltonianKind::Mw => HamiltonianSpec::mw(4.94 / DEFAULT_TAU),
        };
        DemonConfig {
            hamiltonian,
            tau: DEFAULT_TAU,
            t_laser: gamma_t / DEFAULT_GAMMA_RATE,
            gamma_rate: DEFAULT_GAMMA_RATE,
            p_absorb,
            n_pulses: 1,
        }
    }

    fn setup(
        kind: HamiltonianKind,
        p_absorb: f64,
        gamma_t: f64,
        beta_e: f64,
    ) -> (DemonMap, EigenSystem, ThermalState) {
        let cfg = cfg_of(kind, p_absorb, gamma_t);
        let map = build_block(&cfg).unwrap();
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let ts = thermal_state(&es, beta_e / es.e_max()).unwrap();
        (map, es, ts)
    }

    #[test]
    fn silent_readout_yields_single_certain_record() {
        let (map, _, ts) = setup(HamiltonianKind::Nv, 0.0, 0.5, 0.297);
        let records = enumerate_trajectories(&map, &ts, 1).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            let expected = if r.outcome(0) == 4 { 1.0 } else { 0.0 };
            assert!((r.probability - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn certain_readout_reproduces_basis_populations() {
        let (map, _, ts) = setup(HamiltonianKind::Nv, 1.0, 0.5, 0.297);
        let records = enumerate_trajectories(&map, &ts, 1).unwrap();
        // Outcomes 1..3 project onto basis states (+1, 0, −1); the thermal
        // state is diagonal, so probabilities are its diagonal entries.
        for r in &records {
            let k = r.outcome(0) as usize;
            let expected = if k == 4 {
                0.0
            } else {
                ts.rho.get(k - 1, k - 1).re
            };
            assert!(
                (r.probability - expected).abs() < 1e-13,
                "outcome {k}: {} vs {expected}",
                r.probability
            );
        }
    }

    #[test]
    fn records_are_lexicographic_and_complete() {
        let (map, _, ts) = setup(HamiltonianKind::Mw, 0.33, 0.5, 1.0);
        let records = enumerate_trajectories(&map, &ts, 3).unwrap();
        assert_eq!(records.len(), 64);
        for (idx, r) in records.iter().enumerate() {
            assert_eq!(r.len(), 3);
            let seq = r.outcomes();
            let rebuilt = (seq[0] as usize - 1)
                + 4 * (seq[1] as usize - 1)
                + 16 * (seq[2] as usize - 1);
            // Lexicographic order: the first block is the most significant
            // digit, later blocks vary faster.
            assert_eq!(idx, (rebuilt % 4) * 16 + (rebuilt / 4 % 4) * 4 + rebuilt / 16);
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_marginal_matches_evolved_state() {
        let (map, _, ts) = setup(HamiltonianKind::Mw, 0.33, 0.5, 1.0);
        let records = enumerate_trajectories(&map, &ts, 3).unwrap();
        let mut total = Kahan::default();
        for r in &records {
            total.add(r.probability);
        }
        assert!((total.sum - 1.0).abs() < 1e-10);
        // Marginal over the last outcome must equal the branch weight of
        // the 𝓑²-evolved state.
        let branches = branch_supers(&map);
        let b2 = matrix_power(&map.b_super, 2).unwrap();
        let v2 = vectorize(&ts.rho).unwrap().apply(&b2);
        for k in 1..=4u8 {
            let mut marginal = 0.0;
            for r in &records {
                if r.outcome(2) == k {
                    marginal += r.probability;
                }
            }
            let expected = trace_of_vectorized(&v2.apply(&branches[k as usize - 1])).re;
            assert!(
                (marginal - expected).abs() < 1e-12,
                "outcome {k}: {marginal} vs {expected}"
            );
        }
    }

    #[test]
    fn record_probability_matches_explicit_branch_product() {
        let (map, _, ts) = setup(HamiltonianKind::Mw, 0.7, 0.5, 0.297);
        let records = enumerate_trajectories(&map, &ts, 2).unwrap();
        let branches = branch_supers(&map);
        for r in &records {
            let product = &branches[r.outcome(1) as usize - 1] * &branches[r.outcome(0) as usize - 1];
            let v = vectorize(&ts.rho).unwrap().apply(&product);
            let expected = trace_of_vectorized(&v).re;
            assert!((r.probability - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn trajectory_sum_reproduces_conditional_statistics() {
        // Summing final-readout projections over every record rebuilt from
        // the raw map pieces must reproduce the conditional matrix.
        let (map, es, _) = setup(HamiltonianKind::Mw, 0.33, 0.5, 1.0);
        let n = 2;
        let branches = branch_supers(&map);
        let cond = conditional_probabilities(&map, &es, n).unwrap();
        for i in 0..3 {
            let mut totals = [0.0f64; 3];
            let v0 = vectorize(&es.projectors[i]).unwrap();
            for k1 in 0..4 {
                let v1 = v0.apply(&branches[k1]);
                for k2 in 0..4 {
                    let v2 = v1.apply(&branches[k2]);
                    let rho = devectorize(&v2).unwrap();
                    for j in 0..3 {
                        totals[j] += hs_inner(&es.projectors[j], &rho).unwrap().re;
                    }
                }
            }
            for j in 0..3 {
                assert!(
                    (totals[j] - cond[i][j]).abs() < 1e-10,
                    "P({j}|{i}): {} vs {}",
                    totals[j],
                    cond[i][j]
                );
            }
        }
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let (map, _, ts) = setup(HamiltonianKind::Nv, 0.5, 0.5, 0.297);
        assert!(matches!(
            enumerate_trajectories(&map, &ts, 13),
            Err(Error::BudgetExceeded { n: 13, cap: 12 })
        ));
        assert!(matches!(
            enumerate_trajectories(&map, &ts, 0),
            Err(Error::InconsistentInputs { .. })
        ));
        let options = TrajectoryOptions {
            cap: 16,
            prune_threshold: None,
        };
        assert!(matches!(
            enumerate_trajectories_with_options(&map, &ts, 16, &options),
            Err(Error::InconsistentInputs { .. })
        ));
    }

    #[test]
    fn pruning_drops_dead_branches_without_losing_mass_or_entropy() {
        // p_a = 1 makes the readout projective and the pump makes outcome 2
        // absorbing (a projected |±1⟩ only decays toward |0⟩, never across),
        // so the only records with weight are k^a 2^(8−a): 9 runs of 1s plus
        // 8 runs of 3s. Pruning must find exactly that support and drop no
        // probability mass.
        let (map, _, ts) = setup(HamiltonianKind::Nv, 1.0, 0.5, 0.297);
        let full = enumerate_trajectories(&map, &ts, 8).unwrap();
        assert_eq!(full.len(), 65536);
        let options = TrajectoryOptions {
            cap: 12,
            prune_threshold: Some(1e-15),
        };
        let pruned = enumerate_trajectories_with_options(&map, &ts, 8, &options).unwrap();
        assert_eq!(pruned.records.len(), 17);
        for r in &pruned.records {
            let seq = r.outcomes();
            let first = seq[0];
            assert!(first != 4);
            let run = seq.iter().take_while(|&&k| k == first).count();
            assert!(seq[run..].iter().all(|&k| k == 2));
        }
        assert!(pruned.pruned_mass < 1e-10);
        assert!(pruned.entropy_error_bound < 1e-8);
        let s_full = shannon_entropy(&full).unwrap();
        let s_pruned = shannon_entropy(&pruned.records).unwrap();
        assert!((s_full - s_pruned).abs() < 1e-9);
    }

    #[test]
    fn entropy_of_certain_and_uniform_records() {
        let certain = [TrajectoryRecord {
            packed: 0,
            len: 1,
            probability: 1.0,
        }];
        assert!(shannon_entropy(&certain).unwrap().abs() < 1e-15);
        let uniform: Vec<TrajectoryRecord> = (0..4)
            .map(|k| TrajectoryRecord {
                packed: k,
                len: 1,
                probability: 0.25,
            })
            .collect();
        let s = shannon_entropy(&uniform).unwrap();
        assert!((s - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn entropy_agrees_with_sorted_reference_sum() {
        let (map, _, ts) = setup(HamiltonianKind::Mw, 0.33, 0.5, 0.297);
        let records = enumerate_trajectories(&map, &ts, 2).unwrap();
        let s = shannon_entropy(&records).unwrap();
        // Reference: ascending-magnitude summation, a different rounding
        // path than the compensated loop.
        let mut terms: Vec<f64> = records
            .iter()
            .filter(|r| r.probability > 0.0)
            .map(|r| -r.probability * r.probability.ln())
            .collect();
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let reference: f64 = terms.iter().sum();
        assert!((s - reference).abs() < 1e-13);
        assert!(s >= 0.0 && s <= 2.0 * 4.0f64.ln());
    }

    #[test]
    fn entropy_grows_with_block_count() {
        let (map, _, ts) = setup(HamiltonianKind::Mw, 0.33, 0.5, 1.0);
        let mut prev = 0.0;
        for n in 1..=6 {
            let s = shannon_entropy(&enumerate_trajectories(&map, &ts, n).unwrap()).unwrap();
            assert!(s + 1e-12 >= prev, "n {n}: {s} < {prev}");
            prev = s;
        }
    }

    #[test]
    fn backward_sum_matches_superoperator_efficacy() {
        for (kind, p_absorb) in [
            (HamiltonianKind::Nv, 0.5),
            (HamiltonianKind::Mw, 0.33),
            (HamiltonianKind::Mw, 1.0),
        ] {
            let (map, _, ts) = setup(kind, p_absorb, 0.5, 0.891);
            for n in [0u32, 1, 3, 6] {
                let by_sum = efficacy_from_trajectories(&map, &ts, n).unwrap();
                let by_super = efficacy_numeric(&map, &ts, n).unwrap();
                assert!(
                    (by_sum - by_super).abs() < 1e-10,
                    "kind {kind:?} n {n}: {by_sum} vs {by_super}"
                );
            }
        }
    }

    #[test]
    fn full_depth_nine_enumeration_stays_under_a_second() {
        let (map, _, ts) = setup(HamiltonianKind::Mw, 0.33, 0.5, 3.0);
        let start = std::time::Instant::now();
        let records = enumerate_trajectories(&map, &ts, 9).unwrap();
        let elapsed = start.elapsed();
        assert_eq!(records.len(), 262_144);
        assert!(
            elapsed.as_secs_f64() < 1.0,
            "enumeration took {elapsed:?}"
        );
        let s = shannon_entropy(&records).unwrap();
        assert!(s > 0.0 && s <= 9.0 * 4.0f64.ln());
    }

    #[test]
    fn level_pumping_extracts_energy_at_every_block_count() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let beta = 0.891 / es.e_max();
        for n in [1u32, 3, 6] {
            let report = bounds_report(&cfg, beta, n).unwrap();
            assert!(report.beta_delta_e < 0.0, "n {n}: {}", report.beta_delta_e);
            let floor = report.neg_ln_gamma.max(report.neg_entropy.unwrap());
            assert!(report.beta_delta_e >= floor - 1e-8);
            assert!(report.neg_entropy.unwrap() <= 0.0);
        }
    }

    #[test]
    fn transverse_drive_always_injects_energy() {
        let cfg = cfg_of(HamiltonianKind::Mw, 0.33, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let beta = 3.0 / es.e_max();
        for n in [1u32, 3, 6] {
            let report = bounds_report(&cfg, beta, n).unwrap();
            assert!(report.beta_delta_e > 0.0, "n {n}: {}", report.beta_delta_e);
            let floor = report.neg_ln_gamma.max(report.neg_entropy.unwrap());
            assert!(report.beta_delta_e >= floor - 1e-8);
        }
    }

    #[test]
    fn unital_block_sits_exactly_on_the_bound() {
        // Γt = 0 with a diagonal Hamiltonian: the thermal state never moves,
        // so β⟨ΔE⟩ = 0 = −ln γ while the record entropy keeps growing.
        let cfg = cfg_of(HamiltonianKind::Nv, 0.7, 0.0);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let report = bounds_report(&cfg, 2.0 / es.e_max(), 5).unwrap();
        assert!(report.beta_delta_e.abs() < 1e-12);
        assert!(report.neg_ln_gamma.abs() < 1e-12);
        assert!(report.neg_entropy.unwrap() <= 0.0);
    }

    #[test]
    fn zero_blocks_give_a_zero_report() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let report = bounds_report(&cfg, 1e-10, 0).unwrap();
        assert_eq!(report.beta_delta_e, 0.0);
        assert_eq!(report.neg_ln_gamma, 0.0);
        assert_eq!(report.neg_entropy, Some(0.0));
    }

    #[test]
    fn entropy_side_is_unavailable_beyond_budget() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let report = bounds_report(&cfg, 0.297 / es.e_max(), 14).unwrap();
        assert!(report.neg_entropy.is_none());
        assert!(report.beta_delta_e >= report.neg_ln_gamma - 1e-8);
    }

    #[test]
    fn thermal_point_sits_on_the_zero_line() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let ts = thermal_state(&es, 0.891 / es.e_max()).unwrap();
        let point = classify_extraction_point(&es, &ts, ts.probs[0], ts.probs[1]).unwrap();
        assert_eq!(point.class, PhaseClass::ZeroLine);
        assert!(point.beta_delta_e.abs() < 1e-12);
    }

    #[test]
    fn ground_corner_extracts_everything_available() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let beta = 0.891 / es.e_max();
        let ts = thermal_state(&es, beta).unwrap();
        let point = classify_extraction_point(&es, &ts, 1.0, 0.0).unwrap();
        assert_eq!(point.class, PhaseClass::Extraction);
        let mean_0: f64 = (0..3).map(|j| ts.probs[j] * es.energies[j]).sum();
        assert!((point.beta_delta_e + beta * mean_0).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_kills_the_extraction_region() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let diagram = extraction_phase_diagram(&es, 1e4 / es.e_max(), 24).unwrap();
        for p in &diagram.points {
            assert_ne!(
                p.class,
                PhaseClass::Extraction,
                "({}, {}) extracts at near-zero temperature",
                p.p_low,
                p.p_mid
            );
        }
        // The ground corner is the lone zero-line survivor.
        let corner = diagram
            .points
            .iter()
            .find(|p| p.p_low == 1.0 && p.p_mid == 0.0)
            .unwrap();
        assert_eq!(corner.class, PhaseClass::ZeroLine);
    }

    #[test]
    fn diagram_covers_the_simplex_with_annotations() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let beta = 0.891 / es.e_max();
        let diagram = extraction_phase_diagram(&es, beta, 20).unwrap();
        assert_eq!(diagram.points.len(), 21 * 22 / 2);
        for p in &diagram.points {
            assert!(p.p_low + p.p_mid <= 1.0 + 1e-12);
            let sign_ok = match p.class {
                PhaseClass::Extraction => p.beta_delta_e < 0.0,
                PhaseClass::Injection => p.beta_delta_e > 0.0,
                PhaseClass::ZeroLine => true,
            };
            assert!(sign_ok);
        }
        assert!((diagram.unital.p_low - 1.0 / 3.0).abs() < 1e-15);
        // Thermal-line entries are genuine thermal populations.
        for sample in diagram.thermal_line.iter().step_by(20) {
            let ts = thermal_state(&es, sample.beta_inf).unwrap();
            assert!((sample.p_low - ts.probs[0]).abs() < 1e-12);
            assert!((sample.p_mid - ts.probs[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn off_simplex_points_are_rejected() {
        let cfg = cfg_of(HamiltonianKind::Nv, 0.5, 0.5);
        let es = eigensystem(&build_hamiltonian(&cfg.hamiltonian)).unwrap();
        let ts = thermal_state(&es, 1.0 / es.e_max()).unwrap();
        assert!(matches!(
            classify_extraction_point(&es, &ts, 0.8, 0.5),
            Err(Error::InconsistentInputs { .. })
        ));
        assert!(matches!(
            classify_extraction_point(&es, &ts, -0.1, 0.5),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
        assert!(extraction_phase_diagram(&es, 1.0 / es.e_max(), 0).is_err());
    }
}
