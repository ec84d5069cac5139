//! Numerically exact reference propagator: piecewise-constant Hamiltonian
//! over micro-steps, each step applied as the exact matrix exponential
//! e^{-i H dt / hbar} via Hermitian eigendecomposition. This is the ground
//! truth every other evolver in the crate is judged against.

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianSource;
use crate::linalg::{hermitian_eigen, HermitianEigen, C64};
use crate::sim::StateVector;
use crate::units::HBAR_EV_FS;

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    /// Micro-step length in fs.
    pub micro_dt_fs: f64,
    /// hbar in (energy unit)*(time unit); the default pairs eV with fs.
    pub hbar: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            micro_dt_fs: 0.01,
            hbar: HBAR_EV_FS,
        }
    }
}

fn apply_propagator(eig: &HermitianEigen, dt_over_hbar: f64, psi: &[C64]) -> Vec<C64> {
    let n = psi.len();
    // coefficients in the eigenbasis: c = V^dagger psi
    let mut c = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            acc += eig.vectors[(i, j)].conj() * psi[i];
        }
        c[j] = acc;
    }
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= C64::from_polar(1.0, -eig.values[j] * dt_over_hbar);
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += eig.vectors[(i, j)] * c[j];
        }
        out[i] = acc;
    }
    out
}

/// Evolve `psi0` under the source Hamiltonian, returning one state per grid
/// time. The grid must be strictly increasing and start at 0 (the t = 0 entry
/// returns `psi0` itself).
pub fn evolve_exact(
    source: &HamiltonianSource,
    psi0: &StateVector,
    t_grid: &[f64],
    opts: &ExactOptions,
) -> Result<Vec<StateVector>> {
    if opts.micro_dt_fs <= 0.0 {
        return Err(Error::invalid("micro_dt must be positive"));
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    if t_grid[0] != 0.0 || !t_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("time grid must increase strictly from 0"));
    }
    let t_final = *t_grid.last().unwrap();
    if let Some(t_last) = source.t_last() {
        if t_final > t_last + 1e-9 {
            return Err(Error::SeriesTooShort {
                needed: t_final,
                available: t_last,
            });
        }
    }
    let qubits = source.qubit_count();
    if psi0.qubit_count() != qubits {
        return Err(Error::QubitCountMismatch {
            left: psi0.qubit_count(),
            right: qubits,
        });
    }

    // static Hamiltonians are decomposed once
    let static_eig = if source.is_static() {
        let (m, _) = source.matrix_at(0.0)?;
        Some(hermitian_eigen(&m)?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(t_grid.len());
    let mut amps = psi0.amplitudes().to_vec();
    let mut t_cur = 0.0;
    for &t_next in t_grid {
        if t_next > t_cur {
            let span = t_next - t_cur;
            let n_steps = (span / opts.micro_dt_fs).ceil().max(1.0) as usize;
            let sub = span / n_steps as f64;
            for k in 0..n_steps {
                let eig_owned;
                let eig = match &static_eig {
                    Some(e) => e,
                    None => {
                        // midpoint sampling keeps the piecewise-constant
                        // stepping second-order in the micro step
                        let (m, _) = source.matrix_at(t_cur + (k as f64 + 0.5) * sub)?;
                        eig_owned = hermitian_eigen(&m)?;
                        &eig_owned
                    }
                };
                amps = apply_propagator(eig, sub / opts.hbar, &amps);
            }
            t_cur = t_next;
        }
        out.push(StateVector::from_amplitudes(qubits, amps.clone())?);
    }
    Ok(out)
}

/// Evolve with automatic micro-step halving until two successive refinements
/// differ by less than `tol` (L2, final grid point). Returns the converged
/// states and the micro-step that achieved convergence.
pub fn evolve_exact_converged(
    source: &HamiltonianSource,
    psi0: &StateVector,
    t_grid: &[f64],
    opts: &ExactOptions,
    tol: f64,
) -> Result<(Vec<StateVector>, f64)> {
    let mut micro = opts.micro_dt_fs;
    let mut current = evolve_exact(
        source,
        psi0,
        t_grid,
        &ExactOptions {
            micro_dt_fs: micro,
            hbar: opts.hbar,
        },
    )?;
    for _ in 0..16 {
        let halved = micro / 2.0;
        let refined = evolve_exact(
            source,
            psi0,
            t_grid,
            &ExactOptions {
                micro_dt_fs: halved,
                hbar: opts.hbar,
            },
        )?;
        let a = current.last().unwrap();
        let b = refined.last().unwrap();
        let diff: f64 = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if diff < tol {
            return Ok((refined, halved));
        }
        micro = halved;
        current = refined;
    }
    Ok((current, micro))
}
