//! Measurement-error calibration: a column-stochastic matrix W maps ideal
//! outcome probabilities to observed ones, C_noisy = W C_ideal; correction
//! solves the linear system and projects back onto the probability simplex.

use crate::error::{Error, Result};
use crate::linalg::{condition_number_1, lu_solve};

#[derive(Debug, Clone)]
pub struct ReadoutCalibration {
    qubit_count: usize,
    dim: usize,
    /// Row-major dim x dim, columns sum to 1.
    w: Vec<f64>,
}

impl ReadoutCalibration {
    /// Build W from independent per-qubit flip probabilities
    /// (p_read1_given0, p_read0_given1), one pair per qubit; W is the tensor
    /// product of the per-qubit confusion matrices in register order.
    pub fn from_flip_probs(flip_probs: &[(f64, f64)]) -> Result<Self> {
        let qubit_count = flip_probs.len();
        for &(p01, p10) in flip_probs {
            if !(0.0..=1.0).contains(&p01) || !(0.0..=1.0).contains(&p10) {
                return Err(Error::invalid("flip probabilities must lie in [0, 1]"));
            }
        }
        let mut w = vec![1.0];
        let mut dim = 1usize;
        for &(p01, p10) in flip_probs {
            // per-qubit confusion matrix, column-stochastic:
            // [[P(0|0), P(0|1)], [P(1|0), P(1|1)]]
            let q = [1.0 - p01, p10, p01, 1.0 - p10];
            let nd = dim * 2;
            let mut next = vec![0.0; nd * nd];
            for i in 0..dim {
                for j in 0..dim {
                    let v = w[i * dim + j];
                    for a in 0..2 {
                        for b in 0..2 {
                            next[(i * 2 + a) * nd + (j * 2 + b)] = v * q[a * 2 + b];
                        }
                    }
                }
            }
            w = next;
            dim = nd;
        }
        Self::from_matrix(qubit_count, w)
    }

    /// Build from an explicit matrix, validating the type invariants.
    pub fn from_matrix(qubit_count: usize, w: Vec<f64>) -> Result<Self> {
        let dim = 1usize << qubit_count;
        if w.len() != dim * dim {
            return Err(Error::invalid(format!(
                "calibration matrix must be {dim}x{dim}"
            )));
        }
        for j in 0..dim {
            let col: f64 = (0..dim).map(|i| w[i * dim + j]).sum();
            if (col - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(format!(
                    "column {j} sums to {col}, expected 1"
                )));
            }
        }
        if w.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::invalid("calibration entries must lie in [0, 1]"));
        }
        Ok(ReadoutCalibration {
            qubit_count,
            dim,
            w,
        })
    }

    pub fn identity(qubit_count: usize) -> Self {
        Self::from_flip_probs(&vec![(0.0, 0.0); qubit_count]).expect("identity is valid")
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.w
    }

    /// 1-norm condition number of W; errors when W is singular.
    pub fn condition_number(&self) -> Result<f64> {
        condition_number_1(&self.w, self.dim).map_err(|_| Error::SingularCalibration)
    }

    /// Forward model: observed probabilities from ideal ones.
    pub fn apply(&self, ideal: &[f64]) -> Vec<f64> {
        assert_eq!(ideal.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.w[i * self.dim + j] * ideal[j];
            }
        }
        out
    }

    /// Solve W x = observed without the simplex projection. Exposed so the
    /// round-trip accuracy can be checked before clipping.
    pub fn invert_raw(&self, observed: &[f64]) -> Result<Vec<f64>> {
        if observed.len() != self.dim {
            return Err(Error::invalid("probability vector length mismatch"));
        }
        lu_solve(&self.w, observed, self.dim).map_err(|_| Error::SingularCalibration)
    }
}

/// Build the calibration for `qubit_count` qubits from per-qubit flip
/// probabilities.
pub fn build_readout_calibration(
    flip_probs: &[(f64, f64)],
    qubit_count: usize,
) -> Result<ReadoutCalibration> {
    if flip_probs.len() != qubit_count {
        return Err(Error::invalid(format!(
            "expected {qubit_count} flip-probability pairs, got {}",
            flip_probs.len()
        )));
    }
    ReadoutCalibration::from_flip_probs(flip_probs)
}

/// Correct a measured histogram: solve the linear system, clip negative
/// entries to zero and renormalize to a valid probability vector.
pub fn correct_readout(counts: &[u64], cal: &ReadoutCalibration) -> Result<Vec<f64>> {
    if counts.len() != cal.dim {
        return Err(Error::invalid("histogram length mismatch"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let mut x = cal.invert_raw(&observed)?;
    for v in &mut x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = x.iter().sum();
    if sum <= 0.0 {
        return Err(Error::invalid("correction produced an all-zero vector"));
    }
    for v in &mut x {
        *v /= sum;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_calibration_changes_nothing() {
        let cal = ReadoutCalibration::identity(2);
        let counts = [100u64, 300, 500, 100];
        let corrected = correct_readout(&counts, &cal).unwrap();
        let expect = [0.1, 0.3, 0.5, 0.1];
        for (c, e) in corrected.iter().zip(expect) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!((cal.condition_number().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_qubit_example() {
        // W = [[0.9, 0.2], [0.1, 0.8]]
        let cal = build_readout_calibration(&[(0.1, 0.2)], 1).unwrap();
        let noisy = cal.apply(&[1.0, 0.0]);
        assert!((noisy[0] - 0.9).abs() < 1e-14);
        assert!((noisy[1] - 0.1).abs() < 1e-14);
        let counts = [9000u64, 1000];
        let corrected = correct_readout(&counts, &cal).unwrap();
        assert!((corrected[0] - 1.0).abs() < 1e-12);
        assert!(corrected[1].abs() < 1e-12);
    }

    #[test]
    fn forward_then_invert_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cal = build_readout_calibration(&[(0.03, 0.07), (0.05, 0.02)], 2).unwrap();
        for _ in 0..50 {
            let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = p.iter().sum();
            for v in &mut p {
                *v /= s;
            }
            let noisy = cal.apply(&p);
            let back = cal.invert_raw(&noisy).unwrap();
            for (b, t) in back.iter().zip(&p) {
                assert!((b - t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        // columns both (0.5, 0.5): column-stochastic but singular
        let w = vec![0.5, 0.5, 0.5, 0.5];
        let cal = ReadoutCalibration::from_matrix(1, w).unwrap();
        assert!(matches!(
            cal.condition_number(),
            Err(Error::SingularCalibration)
        ));
        assert!(matches!(
            correct_readout(&[10, 20], &cal),
            Err(Error::SingularCalibration)
        ));
    }

    #[test]
    fn clipping_keeps_simplex() {
        let cal = build_readout_calibration(&[(0.2, 0.3)], 1).unwrap();
        // counts not producible by the forward model force negative raw output
        let corrected = correct_readout(&[0, 100], &cal).unwrap();
        assert!(corrected.iter().all(|&v| v >= 0.0));
        assert!((corrected.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
