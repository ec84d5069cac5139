//! McLachlan variational time evolution.
//!
//! The parametrized state is |psi(theta)> = prod_k e^{i theta_k R_k} |psi0>
//! and the parameters follow M thetadot = V with
//! M_kl = Re <d_k psi | d_l psi> and V_k = Im <d_k psi | H | psi>.
//! That V sign reproduces Schrodinger evolution on the one-parameter oracle
//! case (H = cX, ansatz e^{i theta X}|0>), which is the convention anchor for
//! the whole module. M and V come either from direct statevector algebra or
//! from Hadamard-test circuits, optionally shot-sampled and noisy.

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianSource;
use crate::linalg::{derive_seed, symmetric_eigen, C64};
use crate::pauli::{PauliLetter, PauliString, PauliSum};
use crate::sim::{
    run_hadamard_pattern, Circuit, CtrlOp, Gate, HtEvent, HtRun, NoiseModel, StateVector,
};
use crate::units::HBAR_EV_FS;
use std::io::Write;
use std::path::Path;

/// Ordered generator list with an initial-state preparation circuit. The
/// parameter count is `generators per layer * layer_count`; layer l repeats
/// the base generator list.
#[derive(Debug, Clone)]
pub struct Ansatz {
    psi0_prep: Circuit,
    base_generators: Vec<PauliString>,
    layer_count: usize,
}

impl Ansatz {
    pub fn new(
        psi0_prep: Circuit,
        base_generators: Vec<PauliString>,
        layer_count: usize,
    ) -> Result<Self> {
        if base_generators.is_empty() || layer_count == 0 {
            return Err(Error::invalid("ansatz needs generators and >= 1 layer"));
        }
        let l = psi0_prep.qubit_count;
        if base_generators.iter().any(|g| g.len() != l) {
            return Err(Error::QubitCountMismatch {
                left: base_generators[0].len(),
                right: l,
            });
        }
        psi0_prep.validate()?;
        Ok(Ansatz {
            psi0_prep,
            base_generators,
            layer_count,
        })
    }

    /// Hamiltonian ansatz: one generator per Hamiltonian term, in the
    /// canonical term order.
    pub fn hamiltonian_ansatz(
        psi0_prep: Circuit,
        h: &PauliSum,
        layer_count: usize,
    ) -> Result<Self> {
        let generators: Vec<PauliString> = h.terms().iter().map(|(_, s)| s.clone()).collect();
        Ansatz::new(psi0_prep, generators, layer_count)
    }

    pub fn qubit_count(&self) -> usize {
        self.psi0_prep.qubit_count
    }

    pub fn param_count(&self) -> usize {
        self.base_generators.len() * self.layer_count
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn psi0_prep(&self) -> &Circuit {
        &self.psi0_prep
    }

    pub fn generator(&self, k: usize) -> &PauliString {
        &self.base_generators[k % self.base_generators.len()]
    }

    pub fn generators(&self) -> impl Iterator<Item = &PauliString> {
        (0..self.param_count()).map(move |k| self.generator(k))
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "theta has {} entries, ansatz has {} parameters",
                theta.len(),
                self.param_count()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(())
    }

    /// |psi(theta)>
    pub fn prepare(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut psi = StateVector::zero(self.qubit_count());
        psi.run_circuit(&self.psi0_prep)?;
        for (k, &t) in theta.iter().enumerate() {
            psi.apply_gate(
                &Gate::PauliExp {
                    angle: t,
                    string: self.generator(k).clone(),
                },
                &NoiseModel::off(),
            )?;
        }
        Ok(psi)
    }

    /// |d psi / d theta_k> = U_K ... U_{k+1} (i R_k) U_k ... U_1 |psi0>;
    /// unit norm for single-Pauli generators.
    pub fn tangent_state(&self, theta: &[f64], k: usize) -> Result<StateVector> {
        self.check_theta(theta)?;
        if k >= self.param_count() {
            return Err(Error::invalid(format!(
                "parameter index {k} out of range ({})",
                self.param_count()
            )));
        }
        let mut psi = StateVector::zero(self.qubit_count());
        psi.run_circuit(&self.psi0_prep)?;
        for (j, &t) in theta.iter().enumerate() {
            psi.apply_gate(
                &Gate::PauliExp {
                    angle: t,
                    string: self.generator(j).clone(),
                },
                &NoiseModel::off(),
            )?;
            if j == k {
                psi = psi.apply_pauli(self.generator(k));
                psi.scale(C64::new(0.0, 1.0));
            }
        }
        Ok(psi)
    }
}

/// All single- and two-qubit rotation generators: per layer, 3L single-qubit
/// generators (qubit-major, axes X, Y, Z) followed by 9 L(L-1)/2 two-qubit
/// generators in lexicographic (qubit-pair, axis-pair) order.
pub fn make_default_ansatz(psi0_prep: Circuit, layer_count: usize) -> Result<Ansatz> {
    let l = psi0_prep.qubit_count;
    if l == 0 {
        return Err(Error::invalid("need at least one qubit"));
    }
    let axes = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    let mut generators = vec![];
    for q in 0..l {
        for a in axes {
            generators.push(PauliString::single(l, q, a));
        }
    }
    for qa in 0..l {
        for qb in (qa + 1)..l {
            for a in axes {
                for b in axes {
                    generators.push(PauliString::two(l, qa, a, qb, b));
                }
            }
        }
    }
    Ansatz::new(psi0_prep, generators, layer_count)
}

/// Parameter snapshot at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub theta: Vec<f64>,
    pub t_fs: f64,
}

/// How M and V are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VqaBackend {
    /// Direct statevector inner products.
    Analytic,
    /// Hadamard-test circuits on the statevector backend; `shots: None` means
    /// the analytic ancilla expectation (infinite shots).
    Sampled { shots: Option<u64>, seed: u64 },
    /// Hadamard-test circuits on the density-matrix backend with per-gate
    /// depolarizing noise.
    Noisy {
        lambda: f64,
        shots: Option<u64>,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct VqaConfig {
    pub dt_fs: f64,
    pub total_time_fs: f64,
    /// Tikhonov regularization strength for the M thetadot = V solve.
    pub eps: f64,
    pub backend: VqaBackend,
    /// Time-dilation correction factor; the Euler step uses dt/alpha.
    pub alpha: f64,
    pub hbar: f64,
}

impl VqaConfig {
    pub fn new(dt_fs: f64, total_time_fs: f64) -> Self {
        VqaConfig {
            dt_fs,
            total_time_fs,
            eps: 1e-6,
            backend: VqaBackend::Analytic,
            alpha: 1.0,
            hbar: HBAR_EV_FS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dt_fs <= 0.0 {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.eps < 0.0 {
            return Err(Error::invalid("eps must be non-negative"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha must be positive"));
        }
        if let VqaBackend::Noisy { lambda, .. } = self.backend {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::BadNoiseProbability(lambda));
            }
        }
        Ok(())
    }
}

/// M and V from direct statevector algebra.
pub fn build_mv_analytic(
    ansatz: &Ansatz,
    theta: &[f64],
    h: &PauliSum,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !h.is_hermitian(1e-9) {
        return Err(Error::NonHermitian(h.max_imag_coeff()));
    }
    let k = ansatz.param_count();
    let tangents: Result<Vec<StateVector>> =
        (0..k).map(|i| ansatz.tangent_state(theta, i)).collect();
    let tangents = tangents?;
    let psi = ansatz.prepare(theta)?;
    let h_psi = psi.apply_pauli_sum(h)?;
    let mut m = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v = tangents[a].inner(&tangents[b]).re;
            m[a * k + b] = v;
            m[b * k + a] = v;
        }
    }
    let v: Vec<f64> = tangents.iter().map(|t| t.inner(&h_psi).im).collect();
    Ok((m, v))
}

/// Hadamard-test estimate of one M element (k <= l): the Fig.-2 pattern with
/// shared ansatz gates, an X-sandwiched controlled R_k and a direct
/// controlled R_l.
fn m_element_events(ansatz: &Ansatz, theta: &[f64], k: usize, l: usize) -> Vec<HtEvent> {
    let mut events = vec![];
    for (j, &t) in theta.iter().enumerate().take(l + 1) {
        events.push(HtEvent::Shared(Gate::PauliExp {
            angle: t,
            string: ansatz.generator(j).clone(),
        }));
        if j == k {
            events.push(HtEvent::Ctrl0(CtrlOp::Pauli(ansatz.generator(k).clone())));
        }
    }
    events.push(HtEvent::Ctrl1(CtrlOp::Pauli(ansatz.generator(l).clone())));
    events
}

/// Events for one V term: controlled R_k inside the ansatz chain, controlled
/// h_j after it.
fn v_element_events(
    ansatz: &Ansatz,
    theta: &[f64],
    k: usize,
    h_string: &PauliString,
) -> Vec<HtEvent> {
    let mut events = vec![];
    for (j, &t) in theta.iter().enumerate() {
        events.push(HtEvent::Shared(Gate::PauliExp {
            angle: t,
            string: ansatz.generator(j).clone(),
        }));
        if j == k {
            events.push(HtEvent::Ctrl0(CtrlOp::Pauli(ansatz.generator(k).clone())));
        }
    }
    events.push(HtEvent::Ctrl1(CtrlOp::Pauli(h_string.clone())));
    events
}

/// M and V estimated element-by-element with Hadamard-test circuits.
///
/// At `shots: None` and zero noise the estimates coincide with
/// [`build_mv_analytic`] to numerical precision. Each element uses its own
/// deterministic seed derived from the backend seed.
pub fn build_mv_sampled(
    ansatz: &Ansatz,
    theta: &[f64],
    h: &PauliSum,
    backend: &VqaBackend,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !h.is_hermitian(1e-9) {
        return Err(Error::NonHermitian(h.max_imag_coeff()));
    }
    let (noise, shots, seed) = match backend {
        VqaBackend::Analytic => {
            return Err(Error::invalid(
                "build_mv_sampled needs a sampled or noisy backend",
            ))
        }
        VqaBackend::Sampled { shots, seed } => (NoiseModel::off(), *shots, *seed),
        VqaBackend::Noisy {
            lambda,
            shots,
            seed,
        } => (NoiseModel::per_gate(*lambda)?, *shots, *seed),
    };
    let kp = ansatz.param_count();
    let mut m = vec![0.0; kp * kp];
    for k in 0..kp {
        for l in k..kp {
            let run = HtRun {
                noise,
                shots,
                seed: derive_seed(seed, &[0, k as u64, l as u64]),
            };
            let events = m_element_events(ansatz, theta, k, l);
            let re = run_hadamard_pattern(ansatz.psi0_prep(), &events, 0.0, &run)?;
            m[k * kp + l] = re;
            m[l * kp + k] = re;
        }
    }
    let mut v = vec![0.0; kp];
    for k in 0..kp {
        for (j, (c, h_string)) in h.terms().iter().enumerate() {
            let run = HtRun {
                noise,
                shots,
                seed: derive_seed(seed, &[1, k as u64, j as u64]),
            };
            let events = v_element_events(ansatz, theta, k, h_string);
            let re = run_hadamard_pattern(ansatz.psi0_prep(), &events, 0.0, &run)?;
            // V_k = Im <d_k psi|H|psi> = -sum_j c_j Re z_{k,j}
            v[k] -= c.re * re;
        }
    }
    Ok((m, v))
}

/// Solution of the regularized linear system, with the spectrum of M kept
/// for diagnostics.
#[derive(Debug, Clone)]
pub struct ThetaDotSolution {
    pub thetadot: Vec<f64>,
    /// Singular values of M (eigenvalue magnitudes; M is symmetric PSD).
    pub singular_values: Vec<f64>,
}

/// argmin_x ||M x - V||^2 + eps ||x||^2, solved in the eigenbasis of the
/// symmetric M. At eps = 0 this is the pseudo-inverse (rank-deficient
/// directions dropped at relative tolerance 1e-12).
pub fn solve_thetadot_report(m: &[f64], v: &[f64], eps: f64) -> Result<ThetaDotSolution> {
    let dim = v.len();
    if m.len() != dim * dim {
        return Err(Error::invalid("M and V dimensions do not match"));
    }
    let (values, vectors) = symmetric_eigen(m, dim)?;
    // b = Q^T v
    let mut b = vec![0.0; dim];
    for j in 0..dim {
        for i in 0..dim {
            b[j] += vectors[i * dim + j] * v[i];
        }
    }
    let max_sv = values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut xhat = vec![0.0; dim];
    for j in 0..dim {
        let mu = values[j];
        if eps > 0.0 {
            xhat[j] = mu * b[j] / (mu * mu + eps);
        } else if mu.abs() > 1e-12 * max_sv.max(1e-300) {
            xhat[j] = b[j] / mu;
        }
    }
    let mut x = vec![0.0; dim];
    for i in 0..dim {
        for j in 0..dim {
            x[i] += vectors[i * dim + j] * xhat[j];
        }
    }
    let mut singular_values: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(ThetaDotSolution {
        thetadot: x,
        singular_values,
    })
}

pub fn solve_thetadot(m: &[f64], v: &[f64], eps: f64) -> Result<Vec<f64>> {
    solve_thetadot_report(m, v, eps).map(|s| s.thetadot)
}

/// One full variational run.
#[derive(Debug, Clone)]
pub struct VqaRun {
    pub params: Vec<ParameterVector>,
    pub states: Vec<StateVector>,
}

impl VqaRun {
    pub fn times(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.t_fs).collect()
    }

    /// theta-trajectory CSV: `t_fs,theta_1..theta_K`.
    pub fn write_theta_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let k = self.params.first().map(|p| p.theta.len()).unwrap_or(0);
        let mut header = String::from("t_fs");
        for i in 1..=k {
            header.push_str(&format!(",theta_{i}"));
        }
        writeln!(f, "{header}")?;
        for p in &self.params {
            let mut row = format!("{}", p.t_fs);
            for th in &p.theta {
                row.push_str(&format!(",{th}"));
            }
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// Euler-integrate the McLachlan equation of motion:
/// theta <- theta + M^{-1} V * dt / (alpha * hbar), with H re-evaluated at
/// the start of every step. Emits theta and the prepared state at every grid
/// time including t = 0.
pub fn run_vqa(source: &HamiltonianSource, ansatz: &Ansatz, config: &VqaConfig) -> Result<VqaRun> {
    run_vqa_from(source, ansatz, config, None, 0.0)
}

/// As [`run_vqa`] but starting from given parameters at time `t_start`
/// (source time); emitted times remain relative to `t_start`.
pub fn run_vqa_from(
    source: &HamiltonianSource,
    ansatz: &Ansatz,
    config: &VqaConfig,
    theta0: Option<&[f64]>,
    t_start: f64,
) -> Result<VqaRun> {
    config.validate()?;
    if source.qubit_count() != ansatz.qubit_count() {
        return Err(Error::QubitCountMismatch {
            left: source.qubit_count(),
            right: ansatz.qubit_count(),
        });
    }
    let kp = ansatz.param_count();
    let mut theta = match theta0 {
        Some(t0) => {
            if t0.len() != kp {
                return Err(Error::invalid("theta0 length mismatch"));
            }
            t0.to_vec()
        }
        None => vec![0.0; kp],
    };
    let n_steps = (config.total_time_fs / config.dt_fs + 1e-9).floor() as usize;
    let mut params = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    params.push(ParameterVector {
        theta: theta.clone(),
        t_fs: 0.0,
    });
    states.push(ansatz.prepare(&theta)?);
    for step in 0..n_steps {
        let t = step as f64 * config.dt_fs;
        let (h, _) = source.at(t_start + t)?;
        let (m, v) = match &config.backend {
            VqaBackend::Analytic => build_mv_analytic(ansatz, &theta, &h)?,
            other => {
                // fold the step index into the element seeds
                let stepped = match *other {
                    VqaBackend::Sampled { shots, seed } => VqaBackend::Sampled {
                        shots,
                        seed: derive_seed(seed, &[step as u64]),
                    },
                    VqaBackend::Noisy {
                        lambda,
                        shots,
                        seed,
                    } => VqaBackend::Noisy {
                        lambda,
                        shots,
                        seed: derive_seed(seed, &[step as u64]),
                    },
                    VqaBackend::Analytic => unreachable!(),
                };
                build_mv_sampled(ansatz, &theta, &h, &stepped)?
            }
        };
        let thetadot = solve_thetadot(&m, &v, config.eps)?;
        let scale = config.dt_fs / (config.alpha * config.hbar);
        for (th, td) in theta.iter_mut().zip(&thetadot) {
            *th += td * scale;
        }
        params.push(ParameterVector {
            theta: theta.clone(),
            t_fs: (step + 1) as f64 * config.dt_fs,
        });
        states.push(ansatz.prepare(&theta)?);
    }
    Ok(VqaRun { params, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{evolve_exact, ExactOptions};
    use crate::hamiltonians::encode_frenkel_binary;
    use crate::hamiltonians::four_site_chain_snapshot;

    fn one_param_x_ansatz() -> Ansatz {
        Ansatz::new(Circuit::new(1), vec![PauliString::parse("X").unwrap()], 1).unwrap()
    }

    fn section_v_hamiltonian() -> PauliSum {
        encode_frenkel_binary(&four_site_chain_snapshot())
            .unwrap()
            .0
    }

    fn section_v_ansatz() -> Ansatz {
        // e^{i t3 X1X2} e^{i t2 X2} e^{i t1 Z1} |00>
        Ansatz::hamiltonian_ansatz(Circuit::new(2), &section_v_hamiltonian(), 1).unwrap()
    }

    #[test]
    fn default_ansatz_counts() {
        let a = make_default_ansatz(Circuit::new(2), 1).unwrap();
        assert_eq!(a.param_count(), 15);
        let a = make_default_ansatz(Circuit::new(1), 1).unwrap();
        assert_eq!(a.param_count(), 3);
        let gens: Vec<String> = a.generators().map(|g| g.to_string()).collect();
        assert_eq!(gens, vec!["X", "Y", "Z"]);
        let a = make_default_ansatz(Circuit::new(3), 2).unwrap();
        assert_eq!(a.param_count(), 72);
    }

    #[test]
    fn default_ansatz_generator_order() {
        let a = make_default_ansatz(Circuit::new(2), 1).unwrap();
        let gens: Vec<String> = a.generators().map(|g| g.to_string()).collect();
        assert_eq!(
            &gens[..6],
            &["XI", "YI", "ZI", "IX", "IY", "IZ"],
            "single-qubit generators qubit-major"
        );
        assert_eq!(&gens[6..9], &["XX", "XY", "XZ"]);
    }

    #[test]
    fn tangent_of_single_x_rotation() {
        let a = one_param_x_ansatz();
        let theta = [0.37];
        let tangent = a.tangent_state(&theta, 0).unwrap();
        assert!((tangent.norm() - 1.0).abs() < 1e-12);
        // tangent = i X e^{i theta X} |0>
        let mut expect = StateVector::zero(1);
        expect
            .apply_gate(
                &Gate::PauliExp {
                    angle: theta[0],
                    string: PauliString::parse("X").unwrap(),
                },
                &NoiseModel::off(),
            )
            .unwrap();
        let expect = {
            let mut e = expect.apply_pauli(&PauliString::parse("X").unwrap());
            e.scale(C64::new(0.0, 1.0));
            e
        };
        for (t, e) in tangent.amplitudes().iter().zip(expect.amplitudes()) {
            assert!((t - e).norm() < 1e-12);
        }
    }

    #[test]
    fn tangent_at_zero_theta_is_i_r_psi0() {
        let a = section_v_ansatz();
        let theta = vec![0.0; 3];
        for k in 0..3 {
            let tangent = a.tangent_state(&theta, k).unwrap();
            let mut expect = StateVector::zero(2).apply_pauli(a.generator(k));
            expect.scale(C64::new(0.0, 1.0));
            for (t, e) in tangent.amplitudes().iter().zip(expect.amplitudes()) {
                assert!((t - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tangent_matches_central_differences() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = make_default_ansatz(Circuit::new(2), 1).unwrap();
        let theta: Vec<f64> = (0..a.param_count())
            .map(|_| rng.gen_range(-0.8..0.8))
            .collect();
        let eps = 1e-5;
        for k in 0..a.param_count() {
            let tangent = a.tangent_state(&theta, k).unwrap();
            let mut tp = theta.clone();
            tp[k] += eps;
            let mut tm = theta.clone();
            tm[k] -= eps;
            let pp = a.prepare(&tp).unwrap();
            let pm = a.prepare(&tm).unwrap();
            let err: f64 = pp
                .amplitudes()
                .iter()
                .zip(pm.amplitudes())
                .zip(tangent.amplitudes())
                .map(|((p, m), t)| ((p - m) / (2.0 * eps) - t).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-6, "k={k}, err={err}");
        }
    }

    #[test]
    fn one_parameter_oracle_m_and_v() {
        // H = c X, ansatz e^{i theta X}|0>: M = [1], V = [-c]
        let c = 0.040;
        let a = one_param_x_ansatz();
        let h = PauliSum::parse_text(&format!("{c} 0 X"), None).unwrap();
        let (m, v) = build_mv_analytic(&a, &[0.3], &h).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-12);
        assert!((v[0] + c).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_hamiltonian_gives_zero_v() {
        // theta = 0, generator X on |0>, H = c Z: no overlap direction
        let a = one_param_x_ansatz();
        let h = PauliSum::parse_text("0.7 0 Z", None).unwrap();
        let (_, v) = build_mv_analytic(&a, &[0.0], &h).unwrap();
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn duplicate_generators_make_rank_one_m() {
        let a = Ansatz::new(
            Circuit::new(1),
            vec![
                PauliString::parse("X").unwrap(),
                PauliString::parse("X").unwrap(),
            ],
            1,
        )
        .unwrap();
        let h = PauliSum::parse_text("0.1 0 Z", None).unwrap();
        let (m, _) = build_mv_analytic(&a, &[0.2, 0.2], &h).unwrap();
        for entry in &m {
            assert!((entry - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn m_is_symmetric_psd_for_random_theta() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a = section_v_ansatz();
        let h = section_v_hamiltonian();
        for _ in 0..5 {
            let theta: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let (m, _) = build_mv_analytic(&a, &theta, &h).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((m[i * 3 + j] - m[j * 3 + i]).abs() < 1e-10);
                }
            }
            let (values, _) = symmetric_eigen(&m, 3).unwrap();
            assert!(values.iter().all(|&x| x > -1e-10));
        }
    }

    #[test]
    fn sampled_infinite_shot_matches_analytic() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = section_v_ansatz();
        let h = section_v_hamiltonian();
        for _ in 0..3 {
            let theta: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (m0, v0) = build_mv_analytic(&a, &theta, &h).unwrap();
            let (m1, v1) = build_mv_sampled(
                &a,
                &theta,
                &h,
                &VqaBackend::Sampled {
                    shots: None,
                    seed: 0,
                },
            )
            .unwrap();
            for (x, y) in m0.iter().zip(&m1) {
                assert!((x - y).abs() < 1e-10, "M mismatch: {x} vs {y}");
            }
            for (x, y) in v0.iter().zip(&v1) {
                assert!((x - y).abs() < 1e-10, "V mismatch: {x} vs {y}");
            }
        }
    }

    #[test]
    fn noisy_backend_shrinks_v() {
        let a = section_v_ansatz();
        let h = section_v_hamiltonian();
        let theta = [0.4, -0.3, 0.2];
        let (_, v0) = build_mv_analytic(&a, &theta, &h).unwrap();
        let norm0: f64 = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (_, v1) = build_mv_sampled(
            &a,
            &theta,
            &h,
            &VqaBackend::Noisy {
                lambda: 0.2,
                shots: None,
                seed: 0,
            },
        )
        .unwrap();
        let norm1: f64 = v1.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm1 < norm0, "noisy |V| = {norm1} vs analytic {norm0}");
    }

    #[test]
    fn solve_thetadot_cases() {
        // identity
        let x = solve_thetadot(&[1.0, 0.0, 0.0, 1.0], &[0.3, -0.7], 0.0).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-12);
        assert!((x[1] + 0.7).abs() < 1e-12);
        // rank-deficient with regularization: minimal-norm solution
        let x = solve_thetadot(&[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0], 1e-6).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-5);
        assert!(x[1].abs() < 1e-12);
        // random SPD: residual <= 1e-8 at eps = 0
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let n = 6;
        let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut spd = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    spd[i * n + j] += a[k * n + i] * a[k * n + j];
                }
            }
            spd[i * n + i] += 0.5;
        }
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = solve_thetadot_report(&spd, &v, 0.0).unwrap();
        let mut residual = 0.0f64;
        for i in 0..n {
            let mut mx = 0.0;
            for j in 0..n {
                mx += spd[i * n + j] * sol.thetadot[j];
            }
            residual += (mx - v[i]).powi(2);
        }
        assert!(residual.sqrt() < 1e-8);
        assert_eq!(sol.singular_values.len(), n);
    }

    #[test]
    fn zero_hamiltonian_freezes_theta() {
        let a = section_v_ansatz();
        let h = PauliSum::zero(2);
        let source = HamiltonianSource::from_pauli_sum(&h);
        let mut config = VqaConfig::new(1.0, 10.0);
        config.eps = 1e-6;
        let run = run_vqa(&source, &a, &config).unwrap();
        for p in &run.params {
            assert!(p.theta.iter().all(|&t| t == 0.0));
        }
    }

    #[test]
    fn one_parameter_oracle_tracks_exact_propagator() {
        // the sign anchor: theta(t) must reproduce e^{-i c t X / hbar}|0>
        let c = 0.040;
        let a = one_param_x_ansatz();
        let h = PauliSum::parse_text(&format!("{c} 0 X"), None).unwrap();
        let source = HamiltonianSource::from_pauli_sum(&h);
        let mut config = VqaConfig::new(0.05, 40.0);
        config.eps = 0.0; // M = [1] exactly; no regularization bias
        let run = run_vqa(&source, &a, &config).unwrap();
        let grid = run.times();
        let exact = evolve_exact(
            &source,
            &StateVector::zero(1),
            &grid,
            &ExactOptions::default(),
        )
        .unwrap();
        for (s_vqa, s_exact) in run.states.iter().zip(&exact) {
            let p_vqa = s_vqa.probabilities();
            let p_exact = s_exact.probabilities();
            assert!((p_vqa[1] - p_exact[1]).abs() < 1e-3);
        }
        // theta moves in the negative direction: theta(t) = -c t / hbar
        let last = run.params.last().unwrap();
        assert!((last.theta[0] + c * last.t_fs / HBAR_EV_FS).abs() < 1e-6);
    }

    #[test]
    fn section_v_three_parameter_ansatz_short_time_tracking() {
        // characterization: the printed 3-parameter ansatz has only two
        // effective parameters from a basis state (the Z1 factor acts first
        // and is a pure global phase), so it tracks the exact populations
        // tightly at short times and drifts later. The acceptance suite
        // asserts the full-horizon threshold and reports the measured
        // deviation.
        let h = section_v_hamiltonian();
        let source = HamiltonianSource::from_pauli_sum(&h);
        let a = section_v_ansatz();
        let config = VqaConfig::new(1.9746, 200.0);
        let run = run_vqa(&source, &a, &config).unwrap();
        let grid = run.times();
        let exact = evolve_exact(
            &source,
            &StateVector::zero(2),
            &grid,
            &ExactOptions::default(),
        )
        .unwrap();
        let mut worst = 0.0f64;
        for ((s_vqa, s_exact), t) in run.states.iter().zip(&exact).zip(&grid) {
            let p_vqa = s_vqa.probabilities();
            let p_exact = s_exact.probabilities();
            let dev = p_vqa
                .iter()
                .zip(&p_exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if *t <= 24.0 {
                assert!(dev <= 0.05, "short-time deviation {dev} at t={t}");
            }
            worst = worst.max(dev);
        }
        // the flow stays qualitatively locked to the exact oscillations
        assert!(worst < 0.35, "late-time drift unexpectedly large: {worst}");
        assert!(worst > 0.1, "tracking got unexpectedly tight; acceptance criterion 3 may now be attainable: {worst}");
    }

    #[test]
    fn constant_energy_shift_leaves_populations_unchanged() {
        use crate::hamiltonians::FrenkelSnapshot;
        let base = four_site_chain_snapshot();
        let shifted = FrenkelSnapshot::from_upper(
            base.site_energies().iter().map(|e| e + 3.7).collect(),
            &base.upper_triangle(),
        )
        .unwrap();
        let (h0, off0) = encode_frenkel_binary(&base).unwrap();
        let (h1, off1) = encode_frenkel_binary(&shifted).unwrap();
        // the shift lands entirely in the identity offset (up to roundoff)
        assert_eq!(h0.len(), h1.len());
        for (c, s) in h0.terms() {
            assert!((h1.coefficient(s) - c).norm() < 1e-12);
        }
        assert!((off1 - off0 - 3.7).abs() < 1e-12);
        let a = section_v_ansatz();
        let config = VqaConfig::new(1.9746, 20.0);
        let run0 = run_vqa(&HamiltonianSource::from_pauli_sum(&h0), &a, &config).unwrap();
        let run1 = run_vqa(&HamiltonianSource::from_pauli_sum(&h1), &a, &config).unwrap();
        for (s0, s1) in run0.states.iter().zip(&run1.states) {
            for (p0, p1) in s0.probabilities().iter().zip(s1.probabilities()) {
                assert!((p0 - p1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ansatz_norm_is_unit_for_any_theta() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let a = make_default_ansatz(Circuit::new(2), 1).unwrap();
        for _ in 0..10 {
            let theta: Vec<f64> = (0..15).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let psi = a.prepare(&theta).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_rescales_the_effective_step() {
        // a run at (dt, alpha) walks the same theta sequence as (dt/alpha, 1)
        let h = section_v_hamiltonian();
        let source = HamiltonianSource::from_pauli_sum(&h);
        let a = section_v_ansatz();
        let alpha = 2.0;
        let mut corrected = VqaConfig::new(1.0, 10.0);
        corrected.alpha = alpha;
        let mut halved = VqaConfig::new(0.5, 5.0);
        halved.alpha = 1.0;
        let run_c = run_vqa(&source, &a, &corrected).unwrap();
        let run_h = run_vqa(&source, &a, &halved).unwrap();
        assert_eq!(run_c.params.len(), run_h.params.len());
        for (pc, ph) in run_c.params.iter().zip(&run_h.params) {
            assert!((pc.t_fs - alpha * ph.t_fs).abs() < 1e-12);
            for (tc, th) in pc.theta.iter().zip(&ph.theta) {
                assert!((tc - th).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn theta_csv_export() {
        let a = one_param_x_ansatz();
        let h = PauliSum::parse_text("0.04 0 X", None).unwrap();
        let source = HamiltonianSource::from_pauli_sum(&h);
        let run = run_vqa(&source, &a, &VqaConfig::new(1.0, 3.0)).unwrap();
        let dir = std::env::temp_dir().join("excidyn_vqa_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("thetas.csv");
        run.write_theta_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t_fs,theta_1\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
