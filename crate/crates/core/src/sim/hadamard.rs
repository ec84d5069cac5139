//! Ancilla-based Hadamard test.
//!
//! The ancilla is appended as the last qubit, prepared in
//! (|0> + e^{-i phi}|1>)/sqrt(2); gates assigned to the |0> branch are applied
//! through X-sandwiched controls, gates of the |1> branch through direct
//! controls, and a final H precedes the ancilla `<Z>` readout. With branch
//! unitaries B0 and B1 the analytic outcome is
//! Re <psi0| B0^dag B1 |psi0>  at phi = 0 and
//! Im <psi0| B0^dag B1 |psi0>  at phi = pi/2.

use super::state::{Circuit, DensityMatrix, Gate, NoiseModel, StateVector};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::pauli::{PauliLetter, PauliString, PauliSum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Execution options for a single Hadamard-test circuit.
#[derive(Debug, Clone, Copy)]
pub struct HtRun {
    pub noise: NoiseModel,
    /// `None` means the analytic ancilla expectation (infinite shots).
    pub shots: Option<u64>,
    pub seed: u64,
}

impl HtRun {
    pub fn analytic() -> Self {
        HtRun {
            noise: NoiseModel::off(),
            shots: None,
            seed: 0,
        }
    }
}

/// A branch insertion with a controlled form in the gate set: a bare Pauli
/// string or a Pauli exponential, both on the system register.
#[derive(Debug, Clone)]
pub enum CtrlOp {
    Pauli(PauliString),
    PauliExp(f64, PauliString),
}

impl CtrlOp {
    fn into_gate(self, ancilla: usize, total: usize) -> Gate {
        match self {
            CtrlOp::Pauli(s) => Gate::ControlledPauli {
                control: ancilla,
                string: extend_string(&s, total),
            },
            CtrlOp::PauliExp(angle, s) => Gate::ControlledPauliExp {
                control: ancilla,
                angle,
                string: extend_string(&s, total),
            },
        }
    }

    fn validate(&self, system: usize) -> Result<()> {
        let s = match self {
            CtrlOp::Pauli(s) | CtrlOp::PauliExp(_, s) => s,
        };
        if s.len() != system {
            return Err(Error::QubitCountMismatch {
                left: s.len(),
                right: system,
            });
        }
        Ok(())
    }
}

/// One step of the interleaved Hadamard-test pattern: either a gate shared by
/// both branches (applied unconditionally) or a controlled insertion on one
/// branch. All operands live on the system register.
#[derive(Debug, Clone)]
pub enum HtEvent {
    Shared(Gate),
    Ctrl0(CtrlOp),
    Ctrl1(CtrlOp),
}

fn extend_string(s: &PauliString, total: usize) -> PauliString {
    let mut letters = s.letters().to_vec();
    letters.resize(total, PauliLetter::I);
    PauliString::new(letters)
}

/// Lift an L-qubit gate to the (L+1)-qubit register (ancilla appended last).
fn lift_gate(gate: &Gate, total: usize) -> Gate {
    match gate {
        Gate::H(q) => Gate::H(*q),
        Gate::X(q) => Gate::X(*q),
        Gate::Rz(q, phi) => Gate::Rz(*q, *phi),
        Gate::PauliExp { angle, string } => Gate::PauliExp {
            angle: *angle,
            string: extend_string(string, total),
        },
        Gate::ControlledPauli { control, string } => Gate::ControlledPauli {
            control: *control,
            string: extend_string(string, total),
        },
        Gate::ControlledPauliExp {
            control,
            angle,
            string,
        } => Gate::ControlledPauliExp {
            control: *control,
            angle: *angle,
            string: extend_string(string, total),
        },
    }
}

/// Controlled form of a branch gate, or an error when the gate set has none.
fn gate_to_ctrl_op(gate: &Gate, system: usize) -> Result<CtrlOp> {
    match gate {
        Gate::PauliExp { angle, string } => Ok(CtrlOp::PauliExp(*angle, string.clone())),
        Gate::X(q) => Ok(CtrlOp::Pauli(PauliString::single(
            system,
            *q,
            PauliLetter::X,
        ))),
        other => Err(Error::UncontrollableGate(format!("{other:?}"))),
    }
}

/// Execute the interleaved control pattern and return the ancilla `<Z>`.
pub fn run_hadamard_pattern(
    psi0_prep: &Circuit,
    events: &[HtEvent],
    phi: f64,
    run: &HtRun,
) -> Result<f64> {
    let system = psi0_prep.qubit_count;
    let total = system + 1;
    let ancilla = system;

    let mut circuit = Circuit::new(total);
    circuit.push(Gate::H(ancilla))?;
    if phi != 0.0 {
        // Rz(-phi) puts relative phase e^{-i phi} on |1>
        circuit.push(Gate::Rz(ancilla, -phi))?;
    }
    for gate in &psi0_prep.gates {
        gate.validate(system)?;
        circuit.push(lift_gate(gate, total))?;
    }
    for event in events {
        match event {
            HtEvent::Shared(g) => {
                g.validate(system)?;
                circuit.push(lift_gate(g, total))?;
            }
            HtEvent::Ctrl0(op) => {
                op.validate(system)?;
                circuit.push(Gate::X(ancilla))?;
                circuit.push(op.clone().into_gate(ancilla, total))?;
                circuit.push(Gate::X(ancilla))?;
            }
            HtEvent::Ctrl1(op) => {
                op.validate(system)?;
                circuit.push(op.clone().into_gate(ancilla, total))?;
            }
        }
    }
    circuit.push(Gate::H(ancilla))?;

    let z_anc = PauliSum::from_terms(
        total,
        vec![(
            C64::new(1.0, 0.0),
            PauliString::single(total, ancilla, PauliLetter::Z),
        )],
    )
    .expect("valid observable");

    let expectation = if run.noise.is_noisy() {
        let mut rho = DensityMatrix::basis(total, 0);
        rho.run_circuit(&circuit, &run.noise)?;
        rho.expectation(&z_anc)?
    } else {
        let mut psi = StateVector::zero(total);
        psi.run_circuit(&circuit)?;
        psi.expectation(&z_anc)?
    };

    match run.shots {
        None => Ok(expectation),
        Some(shots) => {
            // sample the ancilla outcome only
            let p1 = ((1.0 - expectation) / 2.0).clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            let ones = (0..shots).filter(|_| rng.gen::<f64>() < p1).count() as u64;
            Ok(1.0 - 2.0 * ones as f64 / shots as f64)
        }
    }
}

/// Hadamard test over two whole branch circuits: every branch0 gate is
/// applied through X-sandwiched controls, every branch1 gate through direct
/// controls.
pub fn hadamard_test(
    psi0_prep: &Circuit,
    branch0: &Circuit,
    branch1: &Circuit,
    phi: f64,
    run: &HtRun,
) -> Result<f64> {
    let system = psi0_prep.qubit_count;
    if branch0.qubit_count != system || branch1.qubit_count != system {
        return Err(Error::BranchTouchesAncilla);
    }
    let mut events: Vec<HtEvent> = vec![];
    for g in &branch0.gates {
        events.push(HtEvent::Ctrl0(gate_to_ctrl_op(g, system)?));
    }
    for g in &branch1.gates {
        events.push(HtEvent::Ctrl1(gate_to_ctrl_op(g, system)?));
    }
    run_hadamard_pattern(psi0_prep, &events, phi, run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn pauli_exp(angle: f64, s: &str) -> Gate {
        Gate::PauliExp {
            angle,
            string: PauliString::parse(s).unwrap(),
        }
    }

    #[test]
    fn identity_branches_give_one() {
        let prep = Circuit::new(2);
        let b0 = Circuit::new(2);
        let b1 = Circuit::new(2);
        let v = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_state_z_overlap_is_zero() {
        // psi0 = |+>, branch1 = Z, branch0 = I, phi = 0 -> <+|Z|+> = 0
        let mut prep = Circuit::new(1);
        prep.push(Gate::H(0)).unwrap();
        let b0 = Circuit::new(1);
        let mut b1 = Circuit::new(1);
        // Z as a Pauli exponential: exp(i (pi/2) Z) = i Z up to global phase;
        // instead use exp(i*pi/2*Z) whose global phase cancels in <B0^dag B1>?
        // It does not cancel, so build Z via two X-free ops: use the
        // ControlledPauli path by putting a bare Pauli in the branch.
        b1.push(Gate::PauliExp {
            angle: FRAC_PI_2,
            string: PauliString::parse("Z").unwrap(),
        })
        .unwrap();
        // exp(i pi/2 Z) = i Z, so the test returns Re(i <+|Z|+>) = 0 as well
        let v = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn zero_state_z_overlap_imaginary_part_is_zero() {
        // psi0 = |0>, branch1 = exp(i pi/2 Z) = i Z, branch0 = I.
        // <0| iZ |0> = i, so phi = 0 (Re) gives 0 and phi = pi/2 (Im) gives 1.
        let prep = Circuit::new(1);
        let b0 = Circuit::new(1);
        let mut b1 = Circuit::new(1);
        b1.push(pauli_exp(FRAC_PI_2, "Z")).unwrap();
        let re = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
        let im = hadamard_test(&prep, &b0, &b1, FRAC_PI_2, &HtRun::analytic()).unwrap();
        assert!(re.abs() < 1e-12);
        assert!((im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bare_pauli_branch_overlap_is_purely_real() {
        // psi0 = |0>, branch1 = Z (bare Pauli insertion): <0|Z|0> = 1 exactly,
        // so phi = 0 reads 1 and phi = pi/2 reads 0
        let prep = Circuit::new(1);
        let z = CtrlOp::Pauli(PauliString::parse("Z").unwrap());
        let re = run_hadamard_pattern(&prep, &[HtEvent::Ctrl1(z.clone())], 0.0, &HtRun::analytic())
            .unwrap();
        let im = run_hadamard_pattern(&prep, &[HtEvent::Ctrl1(z)], FRAC_PI_2, &HtRun::analytic())
            .unwrap();
        assert!((re - 1.0).abs() < 1e-12);
        assert!(im.abs() < 1e-12);
    }

    #[test]
    fn phi_half_pi_returns_imaginary_part() {
        // psi0 = |+>, branch1 = exp(i a X): <+|e^{iaX}|+> = e^{ia}
        let a = 0.3;
        let mut prep = Circuit::new(1);
        prep.push(Gate::H(0)).unwrap();
        let b0 = Circuit::new(1);
        let mut b1 = Circuit::new(1);
        b1.push(pauli_exp(a, "X")).unwrap();
        let re = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
        let im = hadamard_test(&prep, &b0, &b1, FRAC_PI_2, &HtRun::analytic()).unwrap();
        assert!((re - a.cos()).abs() < 1e-12);
        assert!((im - a.sin()).abs() < 1e-12);
    }

    #[test]
    fn analytic_matches_direct_inner_products_on_random_branches() {
        use rand::prelude::*;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let strings = ["XII", "IYI", "IIZ", "XYI", "IZX", "ZZY", "XXX"];
        for _ in 0..20 {
            let l = 3;
            let mut prep = Circuit::new(l);
            prep.push(Gate::H(rng.gen_range(0..l))).unwrap();
            prep.push(pauli_exp(
                rng.gen_range(-1.5..1.5),
                strings[rng.gen_range(0..7)],
            ))
            .unwrap();
            let mut b0 = Circuit::new(l);
            let mut b1 = Circuit::new(l);
            for _ in 0..rng.gen_range(0..3) {
                b0.push(pauli_exp(
                    rng.gen_range(-1.5..1.5),
                    strings[rng.gen_range(0..7)],
                ))
                .unwrap();
            }
            for _ in 0..rng.gen_range(1..3) {
                b1.push(pauli_exp(
                    rng.gen_range(-1.5..1.5),
                    strings[rng.gen_range(0..7)],
                ))
                .unwrap();
            }
            let mut psi0 = StateVector::zero(l);
            psi0.run_circuit(&prep).unwrap();
            let mut psi_b0 = psi0.clone();
            psi_b0.run_circuit(&b0).unwrap();
            let mut psi_b1 = psi0.clone();
            psi_b1.run_circuit(&b1).unwrap();
            let z = psi_b0.inner(&psi_b1);

            let re = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
            let im = hadamard_test(&prep, &b0, &b1, FRAC_PI_2, &HtRun::analytic()).unwrap();
            assert!((re - z.re).abs() < 1e-10);
            assert!((im - z.im).abs() < 1e-10);
        }
    }

    #[test]
    fn shots_estimate_is_deterministic_and_close() {
        let prep = Circuit::new(1);
        let b0 = Circuit::new(1);
        let mut b1 = Circuit::new(1);
        b1.push(pauli_exp(0.4, "X")).unwrap();
        let run = HtRun {
            noise: NoiseModel::off(),
            shots: Some(8192),
            seed: 99,
        };
        let a = run_hadamard_pattern(
            &prep,
            &[HtEvent::Ctrl1(CtrlOp::PauliExp(
                0.4,
                PauliString::parse("X").unwrap(),
            ))],
            0.0,
            &run,
        )
        .unwrap();
        let b = hadamard_test(&prep, &b0, &b1, 0.0, &run).unwrap();
        assert_eq!(a, b);
        let exact = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
        // 5 binomial sigma
        let sigma = ((1.0 - exact * exact) / 8192.0).sqrt();
        assert!((a - exact).abs() < 5.0 * sigma.max(1e-3));
    }

    #[test]
    fn branch_with_wrong_width_is_rejected() {
        let prep = Circuit::new(2);
        let b0 = Circuit::new(3);
        let b1 = Circuit::new(2);
        assert!(matches!(
            hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()),
            Err(Error::BranchTouchesAncilla)
        ));
    }

    #[test]
    fn uncontrollable_branch_gate_is_rejected() {
        let prep = Circuit::new(1);
        let mut b1 = Circuit::new(1);
        b1.push(Gate::H(0)).unwrap();
        let b0 = Circuit::new(1);
        assert!(matches!(
            hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()),
            Err(Error::UncontrollableGate(_))
        ));
    }

    #[test]
    fn noisy_mode_attenuates_toward_zero() {
        let prep = Circuit::new(1);
        let b0 = Circuit::new(1);
        let b1 = Circuit::new(1);
        let noisy = HtRun {
            noise: NoiseModel::per_gate(0.2).unwrap(),
            shots: None,
            seed: 0,
        };
        let v = run_hadamard_pattern(&prep, &[], 0.0, &noisy).unwrap();
        // identity branches: noiseless value 1, noise pulls it down
        assert!(v < 1.0 && v > 0.0);
        let clean = hadamard_test(&prep, &b0, &b1, 0.0, &HtRun::analytic()).unwrap();
        assert!((clean - 1.0).abs() < 1e-12);
    }
}
