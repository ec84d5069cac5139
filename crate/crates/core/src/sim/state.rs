//! Quantum states and gate application.
//!
//! A gate is either a generator exponential exp(i*angle*P) for a Pauli string
//! P, one of the named gates H, X, Rz(phi) = exp(-i*phi*Z/2), or an
//! ancilla-controlled Pauli / Pauli exponential. The statevector backend is
//! strictly noiseless; the density-matrix backend applies a depolarizing
//! channel on each gate's support qubits when per-gate noise is enabled.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::pauli::{PauliLetter, PauliString, PauliSum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

/// Depolarizing-noise configuration shared by all noisy execution paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub lambda: f64,
    pub mode: NoiseMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Off,
    /// Depolarize the support qubits of every gate with probability lambda.
    PerGate,
    /// One all-qubit depolarizing channel applied once per circuit run.
    GlobalOnce,
}

impl NoiseModel {
    pub fn off() -> Self {
        NoiseModel {
            lambda: 0.0,
            mode: NoiseMode::Off,
        }
    }

    pub fn per_gate(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::BadNoiseProbability(lambda));
        }
        Ok(NoiseModel {
            lambda,
            mode: NoiseMode::PerGate,
        })
    }

    pub fn global_once(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::BadNoiseProbability(lambda));
        }
        Ok(NoiseModel {
            lambda,
            mode: NoiseMode::GlobalOnce,
        })
    }

    pub fn is_noisy(&self) -> bool {
        self.mode != NoiseMode::Off && self.lambda > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    /// Rz(phi) = exp(-i*phi*Z/2) = diag(e^{-i phi/2}, e^{+i phi/2}).
    Rz(usize, f64),
    /// exp(i*angle*P); the string spans the full register.
    PauliExp {
        angle: f64,
        string: PauliString,
    },
    /// Applies `string` when `control` is |1>. The string must carry I at the
    /// control position.
    ControlledPauli {
        control: usize,
        string: PauliString,
    },
    /// Applies exp(i*angle*string) when `control` is |1>.
    ControlledPauliExp {
        control: usize,
        angle: f64,
        string: PauliString,
    },
}

impl Gate {
    /// Qubits the gate acts on non-trivially; depolarizing noise hits these.
    pub fn support(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Rz(q, _) => vec![*q],
            Gate::PauliExp { string, .. } => string.support(),
            Gate::ControlledPauli { control, string }
            | Gate::ControlledPauliExp {
                control, string, ..
            } => {
                let mut s = string.support();
                s.push(*control);
                s.sort_unstable();
                s
            }
        }
    }

    pub fn validate(&self, qubit_count: usize) -> Result<()> {
        let check_q = |q: usize| {
            if q >= qubit_count {
                Err(Error::QubitOutOfRange {
                    index: q,
                    qubit_count,
                })
            } else {
                Ok(())
            }
        };
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Rz(q, _) => check_q(*q),
            Gate::PauliExp { string, .. } => {
                if string.len() != qubit_count {
                    return Err(Error::QubitCountMismatch {
                        left: string.len(),
                        right: qubit_count,
                    });
                }
                Ok(())
            }
            Gate::ControlledPauli { control, string }
            | Gate::ControlledPauliExp {
                control, string, ..
            } => {
                check_q(*control)?;
                if string.len() != qubit_count {
                    return Err(Error::QubitCountMismatch {
                        left: string.len(),
                        right: qubit_count,
                    });
                }
                if string.letter(*control) != PauliLetter::I {
                    return Err(Error::invalid(
                        "controlled gate string must be identity at the control qubit",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// An ordered gate list over a declared number of qubits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Self {
        Circuit {
            qubit_count,
            gates: vec![],
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.qubit_count)?;
        self.gates.push(gate);
        Ok(())
    }

    /// X gates preparing the computational basis state `index` from |0...0>.
    pub fn basis_prep(qubit_count: usize, index: usize) -> Self {
        let mut c = Circuit::new(qubit_count);
        for q in 0..qubit_count {
            if (index >> (qubit_count - 1 - q)) & 1 == 1 {
                c.gates.push(Gate::X(q));
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            g.validate(self.qubit_count)?;
        }
        Ok(())
    }
}

// qubit q of an L-qubit register sits at bit position L-1-q (qubit 1 is the
// most significant bit)
fn bit_pos(qubit_count: usize, qubit: usize) -> usize {
    qubit_count - 1 - qubit
}

/// Apply a gate as a unitary to a raw amplitude vector.
fn apply_gate_amps(amps: &mut Vec<C64>, qubit_count: usize, gate: &Gate) {
    let dim = amps.len();
    match gate {
        Gate::H(q) => {
            let s = 1usize << bit_pos(qubit_count, *q);
            let inv = std::f64::consts::FRAC_1_SQRT_2;
            for base in 0..dim {
                if base & s == 0 {
                    let a0 = amps[base];
                    let a1 = amps[base | s];
                    amps[base] = (a0 + a1) * inv;
                    amps[base | s] = (a0 - a1) * inv;
                }
            }
        }
        Gate::X(q) => {
            let s = 1usize << bit_pos(qubit_count, *q);
            for base in 0..dim {
                if base & s == 0 {
                    amps.swap(base, base | s);
                }
            }
        }
        Gate::Rz(q, phi) => {
            let s = 1usize << bit_pos(qubit_count, *q);
            let p0 = C64::from_polar(1.0, -phi / 2.0);
            let p1 = C64::from_polar(1.0, phi / 2.0);
            for (idx, a) in amps.iter_mut().enumerate() {
                *a *= if idx & s == 0 { p0 } else { p1 };
            }
        }
        Gate::PauliExp { angle, string } => {
            // exp(i a P) = cos(a) I + i sin(a) P
            let (c, s) = (angle.cos(), angle.sin());
            let is = C64::new(0.0, s);
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (b, a) in amps.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let (b2, phase) = string.apply_to_basis(b);
                out[b] += a * c;
                out[b2] += a * is * phase;
            }
            *amps = out;
        }
        Gate::ControlledPauli { control, string } => {
            let cbit = 1usize << bit_pos(qubit_count, *control);
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (b, a) in amps.iter().enumerate() {
                if b & cbit == 0 {
                    out[b] += a;
                } else {
                    let (b2, phase) = string.apply_to_basis(b);
                    out[b2] += a * phase;
                }
            }
            *amps = out;
        }
        Gate::ControlledPauliExp {
            control,
            angle,
            string,
        } => {
            let cbit = 1usize << bit_pos(qubit_count, *control);
            let (c, s) = (angle.cos(), angle.sin());
            let is = C64::new(0.0, s);
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (b, a) in amps.iter().enumerate() {
                if b & cbit == 0 {
                    out[b] += a;
                } else {
                    let (b2, phase) = string.apply_to_basis(b);
                    out[b] += a * c;
                    out[b2] += a * is * phase;
                }
            }
            *amps = out;
        }
    }
}

/// Pure state of `qubit_count` qubits; amplitude index is the big-endian
/// value of the bitstring (qubit 1 = most significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(qubit_count: usize) -> Self {
        Self::basis(qubit_count, 0)
    }

    pub fn basis(qubit_count: usize, index: usize) -> Self {
        let dim = 1usize << qubit_count;
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        StateVector { qubit_count, amps }
    }

    pub fn from_amplitudes(qubit_count: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << qubit_count {
            return Err(Error::invalid(format!(
                "amplitude vector length {} != 2^{}",
                amps.len(),
                qubit_count
            )));
        }
        Ok(StateVector { qubit_count, amps })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scale(&mut self, c: C64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    /// P|psi> for a full-register Pauli string.
    pub fn apply_pauli(&self, string: &PauliString) -> StateVector {
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let (b2, phase) = string.apply_to_basis(b);
            out[b2] = a * phase;
        }
        StateVector {
            qubit_count: self.qubit_count,
            amps: out,
        }
    }

    /// H|psi> for a Pauli-sum operator.
    pub fn apply_pauli_sum(&self, sum: &PauliSum) -> Result<StateVector> {
        if sum.qubit_count() != self.qubit_count {
            return Err(Error::QubitCountMismatch {
                left: sum.qubit_count(),
                right: self.qubit_count,
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (coeff, string) in sum.terms() {
            for (b, a) in self.amps.iter().enumerate() {
                let (b2, phase) = string.apply_to_basis(b);
                out[b2] += a * phase * coeff;
            }
        }
        Ok(StateVector {
            qubit_count: self.qubit_count,
            amps: out,
        })
    }

    /// Apply a single gate. Per-gate noise is a density-matrix concept, so a
    /// noisy model here is an error.
    pub fn apply_gate(&mut self, gate: &Gate, noise: &NoiseModel) -> Result<()> {
        if noise.mode == NoiseMode::PerGate && noise.lambda > 0.0 {
            return Err(Error::NoiseOnStateVector);
        }
        gate.validate(self.qubit_count)?;
        apply_gate_amps(&mut self.amps, self.qubit_count, gate);
        Ok(())
    }

    pub fn run_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.qubit_count != self.qubit_count {
            return Err(Error::QubitCountMismatch {
                left: circuit.qubit_count,
                right: self.qubit_count,
            });
        }
        for gate in &circuit.gates {
            self.apply_gate(gate, &NoiseModel::off())?;
        }
        Ok(())
    }

    /// <psi|O|psi> for a Hermitian Pauli sum.
    pub fn expectation(&self, obs: &PauliSum) -> Result<f64> {
        if !obs.is_hermitian(1e-9) {
            return Err(Error::NonHermitian(obs.max_imag_coeff()));
        }
        let h_psi = self.apply_pauli_sum(obs)?;
        Ok(self.inner(&h_psi).re)
    }

    /// Append an ancilla qubit in |0> as the last (least significant) qubit.
    pub fn with_ancilla(&self) -> StateVector {
        let dim = self.amps.len();
        let mut amps = vec![C64::new(0.0, 0.0); dim * 2];
        for (b, a) in self.amps.iter().enumerate() {
            amps[b << 1] = *a;
        }
        StateVector {
            qubit_count: self.qubit_count + 1,
            amps,
        }
    }
}

/// Mixed state as a dense density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubit_count: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let mut mat = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        DensityMatrix {
            qubit_count: psi.qubit_count,
            mat,
        }
    }

    pub fn basis(qubit_count: usize, index: usize) -> Self {
        Self::from_pure(&StateVector::basis(qubit_count, index))
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// Diagonal of rho, the Born probabilities in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.mat.dim).map(|i| self.mat[(i, i)].re).collect()
    }

    /// rho <- U rho U^dagger for a gate unitary U.
    fn conjugate_by_gate(&mut self, gate: &Gate) {
        let dim = self.mat.dim;
        // columns: rho <- U rho
        for j in 0..dim {
            let mut col: Vec<C64> = (0..dim).map(|i| self.mat[(i, j)]).collect();
            apply_gate_amps(&mut col, self.qubit_count, gate);
            for i in 0..dim {
                self.mat[(i, j)] = col[i];
            }
        }
        // rows: rho <- rho U^dagger == conj(U conj(row)) per row
        for i in 0..dim {
            let mut row: Vec<C64> = (0..dim).map(|j| self.mat[(i, j)].conj()).collect();
            apply_gate_amps(&mut row, self.qubit_count, gate);
            for j in 0..dim {
                self.mat[(i, j)] = row[j].conj();
            }
        }
    }

    /// Depolarizing channel on a subset of qubits:
    /// `E(rho) = (1-lambda) rho + lambda Tr_S[rho] (x) I_S / 2^(support size)`.
    pub fn depolarize_support(&mut self, support: &[usize], lambda: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::BadNoiseProbability(lambda));
        }
        if lambda == 0.0 || support.is_empty() {
            return Ok(());
        }
        let l = self.qubit_count;
        let k = support.len();
        let sup_positions: Vec<usize> = support.iter().map(|&q| bit_pos(l, q)).collect();
        let non_positions: Vec<usize> = (0..l).filter(|p| !sup_positions.contains(p)).collect();
        let expand = |outer: usize, sup: usize| -> usize {
            let mut idx = 0usize;
            for (bit, &p) in non_positions.iter().enumerate() {
                idx |= ((outer >> bit) & 1) << p;
            }
            for (bit, &p) in sup_positions.iter().enumerate() {
                idx |= ((sup >> bit) & 1) << p;
            }
            idx
        };
        let n_outer = 1usize << (l - k);
        let n_sup = 1usize << k;
        let keep = 1.0 - lambda;
        let mix = lambda / n_sup as f64;
        for oa in 0..n_outer {
            for ob in 0..n_outer {
                let mut t = C64::new(0.0, 0.0);
                for s in 0..n_sup {
                    t += self.mat[(expand(oa, s), expand(ob, s))];
                }
                for sa in 0..n_sup {
                    for sb in 0..n_sup {
                        let (ia, ib) = (expand(oa, sa), expand(ob, sb));
                        let mut v = self.mat[(ia, ib)] * keep;
                        if sa == sb {
                            v += t * mix;
                        }
                        self.mat[(ia, ib)] = v;
                    }
                }
            }
        }
        Ok(())
    }

    /// Global depolarizing channel E(rho) = (1-lambda) rho + lambda I/2^N.
    pub fn depolarize_global(&mut self, lambda: f64) -> Result<()> {
        let all: Vec<usize> = (0..self.qubit_count).collect();
        self.depolarize_support(&all, lambda)
    }

    pub fn apply_gate(&mut self, gate: &Gate, noise: &NoiseModel) -> Result<()> {
        gate.validate(self.qubit_count)?;
        self.conjugate_by_gate(gate);
        if noise.mode == NoiseMode::PerGate && noise.lambda > 0.0 {
            self.depolarize_support(&gate.support(), noise.lambda)?;
        }
        Ok(())
    }

    pub fn run_circuit(&mut self, circuit: &Circuit, noise: &NoiseModel) -> Result<()> {
        if circuit.qubit_count != self.qubit_count {
            return Err(Error::QubitCountMismatch {
                left: circuit.qubit_count,
                right: self.qubit_count,
            });
        }
        for gate in &circuit.gates {
            self.apply_gate(gate, noise)?;
        }
        if noise.mode == NoiseMode::GlobalOnce {
            self.depolarize_global(noise.lambda)?;
        }
        Ok(())
    }

    /// Tr[rho O] for a Hermitian Pauli sum.
    pub fn expectation(&self, obs: &PauliSum) -> Result<f64> {
        if obs.qubit_count() != self.qubit_count {
            return Err(Error::QubitCountMismatch {
                left: obs.qubit_count(),
                right: self.qubit_count,
            });
        }
        if !obs.is_hermitian(1e-9) {
            return Err(Error::NonHermitian(obs.max_imag_coeff()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (coeff, string) in obs.terms() {
            let mut tr = C64::new(0.0, 0.0);
            for b in 0..self.mat.dim {
                let (b2, phase) = string.apply_to_basis(b);
                tr += phase * self.mat[(b, b2)];
            }
            acc += coeff * tr;
        }
        Ok(acc.re)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.mat.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Sample measurement outcomes in the computational basis. Counts are indexed
/// by basis index; rendering uses the usual big-endian bitstring.
pub fn sample_bitstrings(probabilities: &[f64], shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p.max(0.0);
        cumulative.push(acc);
    }
    let total = acc;
    let last = probabilities.len() - 1;
    let mut counts = vec![0u64; probabilities.len()];
    for _ in 0..shots {
        let x: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c < x);
        counts[idx.min(last)] += 1;
    }
    counts
}

/// Render a basis index as its bitstring (qubit 1 leftmost).
pub fn bitstring(index: usize, qubit_count: usize) -> String {
    format!("{:0width$b}", index, width = qubit_count.max(1))
}

/// Histogram export: `bitstring,count` lines with a header.
pub fn write_histogram_csv(path: &Path, counts: &[u64], qubit_count: usize) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "bitstring,count")?;
    for (idx, c) in counts.iter().enumerate() {
        writeln!(f, "{},{}", bitstring(idx, qubit_count), c)?;
    }
    Ok(())
}
