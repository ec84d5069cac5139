//! Run configuration: one JSON file describing the model, backend, seeds and
//! durations. Every run writes its resolved configuration next to its
//! outputs so any artifact can be regenerated.

use excidyn::analysis::Encoding;
use excidyn::hamiltonians::{
    build_fullspace, build_tfi, encode_frenkel_binary, FrenkelSnapshot, HamiltonianSource,
    HamiltonianTrajectory, Interpolation, MoleculeElectronicSpec,
};
use excidyn::pauli::PauliSum;
use excidyn::units::{HBAR_EV_FS, KAPPA_COULOMB_EV_ANG};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    /// Static Frenkel snapshot from a one-row trajectory CSV.
    FrenkelSnapshot { path: PathBuf },
    /// Time-dependent Frenkel Hamiltonian from a trajectory CSV.
    FrenkelTrajectory {
        path: PathBuf,
        #[serde(default = "default_interpolation")]
        interpolation: String,
    },
    /// Full-Hilbert-space multi-exciton model from a molecule JSON file.
    Fullspace {
        path: PathBuf,
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// Transverse-field Ising benchmark (dimensionless units).
    Tfi { h: f64, j: f64 },
    /// Raw Pauli-sum Hamiltonian from a text file.
    PauliSum { path: PathBuf },
}

fn default_interpolation() -> String {
    "linear".into()
}

fn default_kappa() -> f64 {
    KAPPA_COULOMB_EV_ANG
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnsatzConfig {
    /// One generator per Hamiltonian term (at t = 0), canonical order.
    Hamiltonian {
        #[serde(default = "default_layers")]
        layers: usize,
    },
    /// All single- and two-qubit rotations.
    Default {
        #[serde(default = "default_layers")]
        layers: usize,
    },
}

fn default_layers() -> usize {
    1
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig::Hamiltonian { layers: 1 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    #[default]
    Analytic,
    Sampled {
        shots: Option<u64>,
    },
    Noisy {
        lambda: f64,
        shots: Option<u64>,
    },
}

/// Ornstein-Uhlenbeck fluctuation parameters for synthesized trajectories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationConfig {
    pub stddev_energy_ev: f64,
    pub stddev_coupling_ev: f64,
    pub correlation_fs: f64,
    /// Frame spacing of the synthesized trajectory.
    pub frame_dt_fs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    #[serde(default = "default_ensemble_count")]
    pub count: usize,
}

fn default_ensemble_count() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// 1-based initially excited site (Frenkel) or molecule (fullspace).
    #[serde(default = "default_initial_site")]
    pub initial_site: usize,
    /// Raw initial bitstring (qubit 1 leftmost); overrides `initial_site`.
    #[serde(default)]
    pub initial_bitstring: Option<String>,
    pub dt_fs: f64,
    pub total_time_fs: f64,
    #[serde(default = "default_micro_dt")]
    pub micro_dt_fs: f64,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Shot-sampled population readout for exact/trotter methods.
    #[serde(default)]
    pub shots: Option<u64>,
    /// Per-gate depolarizing strength for the trotter method.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default = "default_t_cutoff")]
    pub t_cutoff_fs: f64,
    #[serde(default = "default_alpha_range")]
    pub alpha_range: (f64, f64),
    #[serde(default)]
    pub fluctuations: Option<FluctuationConfig>,
    #[serde(default)]
    pub ensemble: Option<EnsembleConfig>,
}

fn default_initial_site() -> usize {
    1
}
fn default_micro_dt() -> f64 {
    0.01
}
fn default_eps() -> f64 {
    1e-6
}
fn default_alpha() -> f64 {
    1.0
}
fn default_hbar() -> f64 {
    HBAR_EV_FS
}
fn default_t_cutoff() -> f64 {
    20.0
}
fn default_alpha_range() -> (f64, f64) {
    (0.5, 3.0)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::config(format!("serialize config: {e}")))?;
        std::fs::write(dir.join("resolved_config.json"), text)
            .map_err(|e| CliError::config(format!("write resolved config: {e}")))?;
        Ok(())
    }
}

/// A fully materialized model: Hamiltonian source plus population semantics.
pub struct Model {
    pub source: HamiltonianSource,
    pub encoding: Encoding,
    pub n_sites: usize,
}

fn read_molecules(path: &Path) -> Result<Vec<MoleculeElectronicSpec>, CliError> {
    #[derive(Deserialize)]
    struct MoleculeJson {
        excited_energy_ev: f64,
        mu_gg: [f64; 3],
        mu_ee: [f64; 3],
        mu_ge: [f64; 3],
        position_ang: [f64; 3],
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let raw: Vec<MoleculeJson> = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad molecule file {}: {e}", path.display())))?;
    Ok(raw
        .into_iter()
        .map(|m| MoleculeElectronicSpec {
            excited_energy_ev: m.excited_energy_ev,
            mu_gg: m.mu_gg,
            mu_ee: m.mu_ee,
            mu_ge: m.mu_ge,
            position_ang: m.position_ang,
        })
        .collect())
}

fn parse_interpolation(s: &str) -> Result<Interpolation, CliError> {
    match s {
        "linear" => Ok(Interpolation::Linear),
        "piecewise_constant" => Ok(Interpolation::PiecewiseConstant),
        other => Err(CliError::config(format!(
            "unknown interpolation '{other}' (use linear or piecewise_constant)"
        ))),
    }
}

/// Load a single-snapshot CSV (a trajectory file; the first frame is used).
pub fn read_snapshot(path: &Path) -> Result<FrenkelSnapshot, CliError> {
    let traj = HamiltonianTrajectory::read_csv(path, Interpolation::PiecewiseConstant)
        .map_err(CliError::from_core_config)?;
    Ok(traj.snapshots()[0].clone())
}

impl ModelConfig {
    pub fn build(&self) -> Result<Model, CliError> {
        match self {
            ModelConfig::FrenkelSnapshot { path } => {
                let snap = read_snapshot(path)?;
                let n = snap.n_sites();
                let (h, offset) = encode_frenkel_binary(&snap).map_err(CliError::numerical)?;
                Ok(Model {
                    source: HamiltonianSource::Static { h, offset },
                    encoding: Encoding::Binary { n_sites: n },
                    n_sites: n,
                })
            }
            ModelConfig::FrenkelTrajectory {
                path,
                interpolation,
            } => {
                let interp = parse_interpolation(interpolation)?;
                let traj = HamiltonianTrajectory::read_csv(path, interp)
                    .map_err(CliError::from_core_config)?;
                let n = traj.n_sites();
                Ok(Model {
                    source: HamiltonianSource::from_trajectory(traj),
                    encoding: Encoding::Binary { n_sites: n },
                    n_sites: n,
                })
            }
            ModelConfig::Fullspace { path, kappa } => {
                let specs = read_molecules(path)?;
                let n = specs.len();
                let h = build_fullspace(&specs, *kappa).map_err(CliError::numerical)?;
                let (stripped, offset) = h.strip_identity();
                Ok(Model {
                    source: HamiltonianSource::Static {
                        h: stripped,
                        offset: offset.re,
                    },
                    encoding: Encoding::FullSpace,
                    n_sites: n,
                })
            }
            ModelConfig::Tfi { h, j } => {
                // the benchmark observable is the |00> probability, so the
                // series reports all four basis-state probabilities
                let sum = build_tfi(*h, *j);
                Ok(Model {
                    source: HamiltonianSource::from_pauli_sum(&sum),
                    encoding: Encoding::Binary { n_sites: 4 },
                    n_sites: 4,
                })
            }
            ModelConfig::PauliSum { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                let sum = PauliSum::parse_text(&text, None).map_err(CliError::from_core_config)?;
                let n = 1usize << sum.qubit_count();
                Ok(Model {
                    source: HamiltonianSource::from_pauli_sum(&sum),
                    encoding: Encoding::Binary { n_sites: n },
                    n_sites: n,
                })
            }
        }
    }
}

impl Model {
    pub fn qubit_count(&self) -> usize {
        self.source.qubit_count()
    }

    /// Basis index of the configured initial state.
    pub fn initial_index(&self, config: &RunConfig) -> Result<usize, CliError> {
        let qubits = self.qubit_count();
        if let Some(bits) = &config.initial_bitstring {
            if bits.len() != qubits || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(CliError::config(format!(
                    "initial_bitstring must be {qubits} binary digits"
                )));
            }
            return Ok(usize::from_str_radix(bits, 2).unwrap());
        }
        let site = config.initial_site;
        if site == 0 || site > self.n_sites {
            return Err(CliError::config(format!(
                "initial_site must be 1..={}",
                self.n_sites
            )));
        }
        match self.encoding {
            // site m (1-based) sits at basis index m-1
            Encoding::Binary { .. } => Ok(site - 1),
            // molecule m excited = qubit m-1 set
            Encoding::FullSpace => Ok(1usize << (qubits - site)),
        }
    }
}
