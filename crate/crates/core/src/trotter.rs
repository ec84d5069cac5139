//! First-order Trotterized evolution: e^{-i H dt/hbar} approximated by the
//! ordered product of per-term exponentials, runnable on the noiseless
//! statevector backend or the noisy density-matrix backend. Doubles as the
//! short-time reference for the error-mitigation scheme.

use crate::analysis;
use crate::analysis::{series_from_histograms, Encoding, PopulationSeries};
use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianSource;
use crate::linalg::derive_seed;
use crate::pauli::PauliSum;
use crate::sim::{sample_bitstrings, Circuit, DensityMatrix, Gate, NoiseModel, StateVector};
use crate::units::HBAR_EV_FS;

/// One first-order Trotter step: one generator-exponential gate per term, in
/// the canonical term order. Exact whenever all terms commute. Identity terms
/// contribute only a global phase and are dropped.
pub fn trotter_step_circuit(h: &PauliSum, dt_fs: f64, hbar: f64) -> Result<Circuit> {
    if !h.is_hermitian(1e-9) {
        return Err(Error::NonHermitian(h.max_imag_coeff()));
    }
    let mut circuit = Circuit::new(h.qubit_count());
    for (c, string) in h.terms() {
        if string.is_identity() {
            continue;
        }
        circuit.push(Gate::PauliExp {
            angle: -c.re * dt_fs / hbar,
            string: string.clone(),
        })?;
    }
    Ok(circuit)
}

#[derive(Debug, Clone, Copy)]
pub struct TrotterConfig {
    pub dt_fs: f64,
    pub total_time_fs: f64,
    /// Per-gate depolarizing strength; 0 selects the statevector backend.
    pub lambda: f64,
    /// When set, populations are estimated from sampled bitstring histograms
    /// instead of exact Born probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    pub hbar: f64,
}

impl TrotterConfig {
    pub fn new(dt_fs: f64, total_time_fs: f64) -> Self {
        TrotterConfig {
            dt_fs,
            total_time_fs,
            lambda: 0.0,
            shots: None,
            seed: 0,
            hbar: HBAR_EV_FS,
        }
    }
}

/// Run Trotterized evolution, recording site populations after every step
/// (including t = 0). With noise each gate incurs a depolarizing channel on
/// its support, so the error grows with circuit depth, i.e. with time.
pub fn run_trotter(
    source: &HamiltonianSource,
    psi0: &StateVector,
    config: &TrotterConfig,
    encoding: &Encoding,
) -> Result<PopulationSeries> {
    if config.dt_fs <= 0.0 {
        return Err(Error::invalid("dt must be positive"));
    }
    if !(0.0..=1.0).contains(&config.lambda) {
        return Err(Error::BadNoiseProbability(config.lambda));
    }
    if psi0.qubit_count() != source.qubit_count() {
        return Err(Error::QubitCountMismatch {
            left: psi0.qubit_count(),
            right: source.qubit_count(),
        });
    }
    let n_steps = (config.total_time_fs / config.dt_fs + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * config.dt_fs).collect();
    let qubits = psi0.qubit_count();

    let mut prob_rows: Vec<Vec<f64>> = Vec::with_capacity(n_steps + 1);
    if config.lambda > 0.0 {
        let noise = NoiseModel::per_gate(config.lambda)?;
        let mut rho = DensityMatrix::from_pure(psi0);
        prob_rows.push(rho.probabilities());
        for step in 0..n_steps {
            let (h, _) = source.at(step as f64 * config.dt_fs)?;
            let circuit = trotter_step_circuit(&h, config.dt_fs, config.hbar)?;
            rho.run_circuit(&circuit, &noise)?;
            prob_rows.push(rho.probabilities());
        }
    } else {
        let mut psi = psi0.clone();
        prob_rows.push(psi.probabilities());
        for step in 0..n_steps {
            let (h, _) = source.at(step as f64 * config.dt_fs)?;
            let circuit = trotter_step_circuit(&h, config.dt_fs, config.hbar)?;
            psi.run_circuit(&circuit)?;
            prob_rows.push(psi.probabilities());
        }
    }

    match config.shots {
        None => {
            let populations: Result<Vec<Vec<f64>>> = prob_rows
                .iter()
                .map(|p| analysis::site_populations(p, qubits, encoding).map(|(v, _)| v))
                .collect();
            PopulationSeries::new(times, populations?)
        }
        Some(shots) => {
            let histograms: Vec<Vec<u64>> = prob_rows
                .iter()
                .enumerate()
                .map(|(k, p)| sample_bitstrings(p, shots, derive_seed(config.seed, &[k as u64])))
                .collect();
            series_from_histograms(times, &histograms, qubits, encoding)
        }
    }
}
