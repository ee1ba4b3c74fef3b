//! Two-point-measurement (TPM) energy statistics for the feedback loop:
//! conditional transition probabilities P_{j|i} after n blocks, the induced
//! distribution of the energy change ΔE = E_j − E_i, its exponential moment
//! G(η) = ⟨e^{−η·ΔE}⟩, and the mean energy change.

use alloc::vec::Vec;

use crate::demon::DemonMap;
use crate::linops::{devectorize, hs_inner, vectorize};
use crate::qutrit::{EigenSystem, ThermalState};
use crate::Error;

/// Everything a TPM run produces: spectrum, initial thermal occupations,
/// and the 3×3 conditional matrix (row i = initial eigenstate).
#[derive(Debug, Clone, PartialEq)]
pub struct TpmStatistics {
    /// E_1 ≤ E_2 ≤ E_3 (rad/s).
    pub energies: [f64; 3],
    /// P_i = e^{−βE_i}/Z.
    pub initial_probs: [f64; 3],
    /// P_{j|i} = Tr[P_j · devec(𝓑ⁿ·vec(P_i))]; `conditional[i][j]`.
    pub conditional: [[f64; 3]; 3],
    /// Inverse temperature of the first measurement (s/rad).
    pub beta: f64,
    /// Number of feedback blocks between the two measurements.
    pub n_pulses: u32,
}

impl TpmStatistics {
    /// Checks row normalization and entry range. Model values must satisfy
    /// these exactly up to rounding; a violation signals a convention bug.
    pub fn validate(&self) -> Result<(), Error> {
        const EPS: f64 = 1e-10;
        for row in &self.conditional {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > EPS {
                return Err(Error::StateInvariantViolated {
                    what: "conditional row normalization",
                    value: (sum - 1.0).abs(),
                });
            }
            for &p in row {
                if !(-EPS..=1.0 + EPS).contains(&p) {
                    return Err(Error::StateInvariantViolated {
                        what: "conditional probability range",
                        value: p,
                    });
                }
            }
        }
        let psum: f64 = self.initial_probs.iter().sum();
        if (psum - 1.0).abs() > EPS {
            return Err(Error::StateInvariantViolated {
                what: "initial probability normalization",
                value: (psum - 1.0).abs(),
            });
        }
        Ok(())
    }

    /// Marginal occupations after the loop: P̃_j = Σ_i P_i·P_{j|i}.
    pub fn final_probs(&self) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[j] += self.initial_probs[i] * self.conditional[i][j];
            }
        }
        out
    }
}

/// P_{j|i} = Tr[P_j · devec(𝓑ⁿ·vec(P_i))] for all nine (i, j) pairs.
pub fn conditional_probabilities(
    map: &DemonMap,
    es: &EigenSystem,
    n: u32,
) -> Result<[[f64; 3]; 3], Error> {
    let mut cond = [[0.0f64; 3]; 3];
    for i in 0..3 {
        let mut v = vectorize(&es.projectors[i])?;
        for _ in 0..n {
            v = v.apply(&map.b_super);
        }
        let rho_final = devectorize(&v)?;
        for j in 0..3 {
            cond[i][j] = hs_inner(&es.projectors[j], &rho_final)?.re;
        }
    }
    Ok(cond)
}

/// Runs the full TPM pipeline: thermal occupations from `thermal`,
/// conditional matrix from `n` feedback blocks, validated packaging.
pub fn tpm_statistics(
    map: &DemonMap,
    es: &EigenSystem,
    thermal: &ThermalState,
    n: u32,
) -> Result<TpmStatistics, Error> {
    let stats = TpmStatistics {
        energies: es.energies,
        initial_probs: thermal.probs,
        conditional: conditional_probabilities(map, es, n)?,
        beta: thermal.beta,
        n_pulses: n,
    };
    stats.validate()?;
    Ok(stats)
}

/// Atomic distribution of the energy change ΔE = E_j − E_i.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyChangeDistribution {
    /// (ΔE, probability) pairs, ΔE ascending, zero-weight atoms dropped,
    /// coincident atoms merged.
    pub support: Vec<(f64, f64)>,
}

impl EnergyChangeDistribution {
    pub fn total_probability(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }
}

/// Collects the nine TPM atoms δ(ΔE − (E_j−E_i))·P_{j|i}·P_i, merging atoms
/// closer than 1e-9·max|E| (the ± symmetric spectrum produces exact
/// coincidences) and dropping zero-weight ones.
pub fn energy_distribution(stats: &TpmStatistics) -> EnergyChangeDistribution {
    let e_scale = stats
        .energies
        .iter()
        .fold(0.0f64, |m, &e| f64::max(m, libm::fabs(e)));
    let tol = 1e-9 * e_scale;
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let w = stats.conditional[i][j] * stats.initial_probs[i];
            if w != 0.0 {
                atoms.push((stats.energies[j] - stats.energies[i], w));
            }
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite energies"));
    let mut support: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (de, w) in atoms {
        match support.last_mut() {
            Some((last_de, last_w)) if libm::fabs(de - *last_de) <= tol => {
                // Weighted position keeps the merged atom centered.
                let total = *last_w + w;
                *last_de = (*last_de * *last_w + de * w) / total;
                *last_w = total;
            }
            _ => support.push((de, w)),
        }
    }
    EnergyChangeDistribution { support }
}

/// G(η) = Σ_{i,j} e^{−η(E_j−E_i)}·P_{j|i}·P_i, evaluated with max-exponent
/// shifting so large |η·E| cannot produce spurious NaNs. G(0) = 1 exactly.
pub fn characteristic_function(stats: &TpmStatistics, eta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    let mut max_x = f64::NEG_INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            let w = stats.conditional[i][j] * stats.initial_probs[i];
            if w > 0.0 {
                let x = -eta * (stats.energies[j] - stats.energies[i]);
                max_x = f64::max(max_x, x);
            }
        }
    }
    if max_x == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut acc = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let w = stats.conditional[i][j] * stats.initial_probs[i];
            if w > 0.0 {
                let x = -eta * (stats.energies[j] - stats.energies[i]);
                acc += w * libm::exp(x - max_x);
            }
        }
    }
    libm::exp(max_x) * acc
}

/// Factorized G for a steady state in the energy basis, where the
/// conditional rows are all equal to the final occupations:
/// G(η) = (Σ_i P_i e^{ηE_i})·(Σ_j P̃_j e^{−ηE_j}).
pub fn sse_characteristic_function(
    energies: &[f64; 3],
    initial_probs: &[f64; 3],
    final_probs: &[f64; 3],
    eta: f64,
) -> f64 {
    let factor = |probs: &[f64; 3], sign: f64| -> f64 {
        let mut max_x = f64::NEG_INFINITY;
        for k in 0..3 {
            if probs[k] > 0.0 {
                max_x = f64::max(max_x, sign * eta * energies[k]);
            }
        }
        if max_x == f64::NEG_INFINITY {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 0..3 {
            if probs[k] > 0.0 {
                acc += probs[k] * libm::exp(sign * eta * energies[k] - max_x);
            }
        }
        libm::exp(max_x) * acc
    };
    factor(initial_probs, 1.0) * factor(final_probs, -1.0)
}

/// ⟨ΔE⟩ = Σ_{i,j} (E_j − E_i)·P_{j|i}·P_i. In the steady-state regime this
/// reduces to ⟨E⟩_∞ − ⟨E⟩_0.
pub fn mean_energy_change(stats: &TpmStatistics) -> f64 {
    let mut acc = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            acc += (stats.energies[j] - stats.energies[i])
                * stats.conditional[i][j]
                * stats.initial_probs[i];
        }
    }
    acc
}
