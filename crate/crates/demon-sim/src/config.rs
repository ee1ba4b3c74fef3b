//! JSON run configuration: parsing, unit conversion, validation.

use crate::CliError;
use demon_core::demon::{DemonConfig, DEFAULT_GAMMA_RATE, DEFAULT_TAU, DEFAULT_T_LASER};
use demon_core::qutrit::{build_hamiltonian, eigensystem, HamiltonianSpec};
use serde::Deserialize;
use std::path::{Path, PathBuf};

const TWO_PI: f64 = std::f64::consts::TAU;

/// How frequency-like numbers in the file are to be read.
#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Units {
    /// Plain frequencies f; converted internally as omega = 2*pi*f, and
    /// `beta` as beta_internal = beta / (2*pi) so that beta*E is unchanged.
    Hz,
    /// Angular frequencies, used as-is.
    RadPerS,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum HamiltonianInput {
    /// Level-preserving splitting with zero-field and Zeeman terms.
    Nv { delta: f64, zeeman: f64 },
    /// Resonant transverse drive at the given Rabi frequency.
    Mw { rabi: f64 },
}

/// Root-finding strategy for the `eta-star` command.
#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EtaMethod {
    /// Closed-form reduction to a cubic; requires a symmetric level ladder.
    Cubic,
    /// Slope-directed bracketing and bisection; works for any spectrum.
    Bisection,
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_t_laser() -> f64 {
    DEFAULT_T_LASER
}
fn default_gamma_rate() -> f64 {
    DEFAULT_GAMMA_RATE
}
fn default_n_pulses_max() -> u32 {
    12
}
fn default_grid() -> u32 {
    40
}

/// The JSON document as written by the user. Unknown fields are rejected so
/// typos fail loudly instead of silently running defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    units: Units,
    hamiltonian: HamiltonianInput,
    /// Drive-pulse spacing in seconds.
    #[serde(default = "default_tau")]
    tau: f64,
    /// Readout/reset stage duration in seconds.
    #[serde(default = "default_t_laser")]
    t_laser: f64,
    /// Optical decay rate in plain 1/s under either unit convention (it is
    /// a rate, not an angular frequency).
    #[serde(default = "default_gamma_rate")]
    gamma_rate: f64,
    p_absorb: f64,
    /// Inverse energy; exclusive with `beta_over_e_max`.
    #[serde(default)]
    beta: Option<f64>,
    /// Dimensionless beta times the top eigenenergy; exclusive with `beta`.
    #[serde(default)]
    beta_over_e_max: Option<f64>,
    #[serde(default = "default_n_pulses_max")]
    n_pulses_max: u32,
    /// Simplex resolution for `phase-diagram`.
    #[serde(default = "default_grid")]
    grid: u32,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    emit_plots: bool,
    /// `eta-star` only; defaults to the cubic when the ladder is symmetric.
    #[serde(default)]
    eta_star_method: Option<EtaMethod>,
}

/// Fully resolved run parameters, everything in internal units (rad/s).
pub struct RunConfig {
    pub demon: DemonConfig,
    pub beta: f64,
    pub n_pulses_max: u32,
    pub grid: u32,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    pub eta_star_method: Option<EtaMethod>,
}

pub fn load(
    path: &Path,
    out_override: Option<&Path>,
    plots_flag: bool,
) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let file: FileConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
    resolve(file, out_override, plots_flag)
}

fn resolve(
    file: FileConfig,
    out_override: Option<&Path>,
    plots_flag: bool,
) -> Result<RunConfig, CliError> {
    let freq_factor = match file.units {
        Units::Hz => TWO_PI,
        Units::RadPerS => 1.0,
    };
    let hamiltonian = match file.hamiltonian {
        HamiltonianInput::Nv { delta, zeeman } => {
            HamiltonianSpec::nv(freq_factor * delta, freq_factor * zeeman)
        }
        HamiltonianInput::Mw { rabi } => HamiltonianSpec::mw(freq_factor * rabi),
    };
    let demon = DemonConfig {
        hamiltonian,
        tau: file.tau,
        t_laser: file.t_laser,
        gamma_rate: file.gamma_rate,
        p_absorb: file.p_absorb,
        n_pulses: file.n_pulses_max,
    };
    demon
        .validate()
        .map_err(|e| CliError::Config(format!("invalid parameters: {e}")))?;
    let beta = match (file.beta, file.beta_over_e_max) {
        (Some(b), None) => b / freq_factor,
        (None, Some(x)) => {
            let es = eigensystem(&build_hamiltonian(&demon.hamiltonian))
                .map_err(|e| CliError::Config(format!("invalid spectrum: {e}")))?;
            x / es.e_max()
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of `beta` and `beta_over_e_max` must be set".into(),
            ))
        }
    };
    if !beta.is_finite() {
        return Err(CliError::Config(format!(
            "resolved inverse temperature {beta} is not finite"
        )));
    }
    if file.grid == 0 {
        return Err(CliError::Config("`grid` must be at least 1".into()));
    }
    let output_dir = out_override
        .map(Path::to_path_buf)
        .or(file.output_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(RunConfig {
        demon,
        beta,
        n_pulses_max: file.n_pulses_max,
        grid: file.grid,
        output_dir,
        emit_plots: file.emit_plots || plots_flag,
        eta_star_method: file.eta_star_method,
    })
}
