//! Pauli-encoded Hamiltonians: binary-encoded Frenkel excitons, the
//! full-Hilbert-space multi-exciton model with dipole-dipole couplings, the
//! transverse-field Ising benchmark, and time-dependent trajectories (file
//! loaded or synthesized as Ornstein-Uhlenbeck noise).

use crate::error::{Error, Result};
use crate::linalg::{derive_seed, CMatrix, C64};
use crate::pauli::{PauliLetter, PauliString, PauliSum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;

/// Site energy assigned to padding sites when the site count is not a power
/// of two; high enough to decouple them from the physical dynamics.
pub const PAD_SITE_ENERGY_EV: f64 = 10.0;

/// Site energies and couplings of a Frenkel exciton Hamiltonian at one
/// instant. Couplings are symmetric with an exactly zero diagonal, in eV.
#[derive(Debug, Clone, PartialEq)]
pub struct FrenkelSnapshot {
    site_energies: Vec<f64>,
    /// Row-major n x n, symmetric, zero diagonal.
    couplings: Vec<f64>,
}

impl FrenkelSnapshot {
    pub fn new(site_energies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        let n = site_energies.len();
        if n == 0 {
            return Err(Error::invalid("snapshot needs at least one site"));
        }
        if couplings.len() != n * n {
            return Err(Error::invalid(format!(
                "couplings must be {n}x{n}, got {} entries",
                couplings.len()
            )));
        }
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("coupling diagonal ({i},{i}) not 0")));
            }
            for j in (i + 1)..n {
                if (couplings[i * n + j] - couplings[j * n + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "couplings not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(FrenkelSnapshot {
            site_energies,
            couplings,
        })
    }

    /// Build from site energies and the strict upper triangle in row-major
    /// order (1,2), (1,3), ..., (N-1,N).
    pub fn from_upper(site_energies: Vec<f64>, upper: &[f64]) -> Result<Self> {
        let n = site_energies.len();
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::invalid(format!(
                "expected {} upper-triangle couplings, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        let mut couplings = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                couplings[i * n + j] = upper[k];
                couplings[j * n + i] = upper[k];
                k += 1;
            }
        }
        FrenkelSnapshot::new(site_energies, couplings)
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n_sites() + j]
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n_sites();
        let mut out = vec![];
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.coupling(i, j));
            }
        }
        out
    }

    /// The N x N matrix of the exciton Hamiltonian (no padding).
    pub fn matrix(&self) -> CMatrix {
        let n = self.n_sites();
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(self.site_energies[i], 0.0);
            for j in 0..n {
                if i != j {
                    m[(i, j)] = C64::new(self.coupling(i, j), 0.0);
                }
            }
        }
        m
    }

    /// Padded to the next power of two with decoupled high-energy sites.
    pub fn padded(&self) -> FrenkelSnapshot {
        let n = self.n_sites();
        let p = n.next_power_of_two();
        if p == n {
            return self.clone();
        }
        let mut energies = self.site_energies.clone();
        energies.resize(p, PAD_SITE_ENERGY_EV);
        let mut couplings = vec![0.0; p * p];
        for i in 0..n {
            for j in 0..n {
                couplings[i * p + j] = self.couplings[i * n + j];
            }
        }
        FrenkelSnapshot {
            site_energies: energies,
            couplings,
        }
    }
}

/// Binary-encode a Frenkel snapshot onto log2(N) qubits.
///
/// Each |m><n| is expanded qubit by qubit through the operator identities
/// |0><0| = (I+Z)/2, |1><1| = (I-Z)/2, |0><1| = (X+iY)/2, |1><0| = (X-iY)/2,
/// so the construction is independent of the trace-decomposition oracle it is
/// tested against. The identity component is split off into `offset` (eV).
/// Non-power-of-two site counts are padded with decoupled +10 eV sites.
pub fn encode_frenkel_binary(snap: &FrenkelSnapshot) -> Result<(PauliSum, f64)> {
    let padded = snap.padded();
    let n = padded.n_sites();
    let l = n.trailing_zeros() as usize;
    let mut terms: Vec<(C64, PauliString)> = vec![];
    // qubit q of an L-qubit register carries bit L-1-q of the site index
    let bit_of = |m: usize, q: usize| (m >> (l - 1 - q)) & 1;
    for row in 0..n {
        for col in 0..n {
            let coeff = if row == col {
                padded.site_energies()[row]
            } else {
                padded.coupling(row, col)
            };
            if coeff == 0.0 {
                continue;
            }
            // expand the tensor product of single-qubit |x><x'| factors
            let choices = 1usize << l;
            for pick in 0..choices {
                let mut c = C64::new(coeff, 0.0);
                let mut letters = Vec::with_capacity(l);
                for q in 0..l {
                    let second = (pick >> q) & 1 == 1;
                    let (xm, xn) = (bit_of(row, q), bit_of(col, q));
                    let (letter, factor) = match (xm, xn, second) {
                        (0, 0, false) => (PauliLetter::I, C64::new(0.5, 0.0)),
                        (0, 0, true) => (PauliLetter::Z, C64::new(0.5, 0.0)),
                        (1, 1, false) => (PauliLetter::I, C64::new(0.5, 0.0)),
                        (1, 1, true) => (PauliLetter::Z, C64::new(-0.5, 0.0)),
                        (0, 1, false) => (PauliLetter::X, C64::new(0.5, 0.0)),
                        (0, 1, true) => (PauliLetter::Y, C64::new(0.0, 0.5)),
                        (1, 0, false) => (PauliLetter::X, C64::new(0.5, 0.0)),
                        (1, 0, true) => (PauliLetter::Y, C64::new(0.0, -0.5)),
                        _ => unreachable!(),
                    };
                    letters.push(letter);
                    c *= factor;
                }
                terms.push((c, PauliString::new(letters)));
            }
        }
    }
    let sum = PauliSum::from_terms(l, terms)?;
    let (stripped, offset) = sum.strip_identity();
    Ok((stripped, offset.re))
}

/// Electronic data of one chromophore for the full-Hilbert-space model:
/// excited-state energy (eV), ground/excited/transition dipoles (e*Angstrom)
/// and center-of-mass position (Angstrom).
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeElectronicSpec {
    pub excited_energy_ev: f64,
    pub mu_gg: [f64; 3],
    pub mu_ee: [f64; 3],
    pub mu_ge: [f64; 3],
    pub position_ang: [f64; 3],
}

/// Dipole-dipole interaction energy
/// kappa * [mu_a . mu_b - 3 (mu_a . r_hat)(mu_b . r_hat)] / r^3.
pub fn dipole_coupling(
    mu_a: [f64; 3],
    mu_b: [f64; 3],
    r_a: [f64; 3],
    r_b: [f64; 3],
    kappa: f64,
) -> Result<f64> {
    let d = [r_b[0] - r_a[0], r_b[1] - r_a[1], r_b[2] - r_a[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if r < 1e-12 {
        return Err(Error::invalid("zero separation in dipole coupling"));
    }
    let rhat = [d[0] / r, d[1] / r, d[2] / r];
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    Ok(kappa * (dot(mu_a, mu_b) - 3.0 * dot(mu_a, rhat) * dot(mu_b, rhat)) / (r * r * r))
}

/// Per-molecule and per-pair coefficients of the full-space Hamiltonian,
/// kept for inspection alongside the assembled Pauli sum.
#[derive(Debug, Clone)]
pub struct FullSpaceCoefficients {
    pub n: usize,
    pub identity: f64,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    /// Pair arrays indexed by (m, n) with n < m, flattened as m*(m-1)/2 + n.
    pub xx: Vec<f64>,
    pub xz: Vec<f64>,
    pub zx: Vec<f64>,
    pub zz: Vec<f64>,
    /// One-body bookkeeping values.
    pub s_one: Vec<f64>,
    pub d_one: Vec<f64>,
    pub x_one: Vec<f64>,
}

impl FullSpaceCoefficients {
    pub fn pair_index(m: usize, n: usize) -> usize {
        assert!(n < m);
        m * (m - 1) / 2 + n
    }
}

/// Compute the full-space coefficients from molecular specs.
///
/// One-body matrix elements use the approximation (0|h|0) = (0|h|1) = 0 and
/// (1|h|1) = excited energy, so S_m = E_m/2, D_m = -E_m/2, X_m = 0. Two-body
/// couplings are dipole-dipole with the dressed dipoles
/// |S) -> (mu_gg + mu_ee)/2, |D) -> (mu_gg - mu_ee)/2, |T) -> mu_ge.
pub fn compute_fullspace_coefficients(
    specs: &[MoleculeElectronicSpec],
    kappa: f64,
) -> Result<FullSpaceCoefficients> {
    let n = specs.len();
    if n == 0 {
        return Err(Error::invalid("need at least one molecule"));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if specs[a].position_ang == specs[b].position_ang {
                return Err(Error::invalid(format!(
                    "molecules {a} and {b} are at the same position"
                )));
            }
        }
    }
    let half = |v: [f64; 3], w: [f64; 3], sign: f64| {
        [
            (v[0] + sign * w[0]) / 2.0,
            (v[1] + sign * w[1]) / 2.0,
            (v[2] + sign * w[2]) / 2.0,
        ]
    };
    let mu_s: Vec<[f64; 3]> = specs.iter().map(|m| half(m.mu_gg, m.mu_ee, 1.0)).collect();
    let mu_d: Vec<[f64; 3]> = specs.iter().map(|m| half(m.mu_gg, m.mu_ee, -1.0)).collect();
    let mu_t: Vec<[f64; 3]> = specs.iter().map(|m| m.mu_ge).collect();
    let pos: Vec<[f64; 3]> = specs.iter().map(|m| m.position_ang).collect();

    let s_one: Vec<f64> = specs.iter().map(|m| m.excited_energy_ev / 2.0).collect();
    let d_one: Vec<f64> = specs.iter().map(|m| -m.excited_energy_ev / 2.0).collect();
    let x_one: Vec<f64> = vec![0.0; n];

    let pair = |mu_a: &[[f64; 3]], a: usize, mu_b: &[[f64; 3]], b: usize| -> Result<f64> {
        dipole_coupling(mu_a[a], mu_b[b], pos[a], pos[b], kappa)
    };

    let mut identity = s_one.iter().sum::<f64>();
    let mut z = d_one.clone();
    let mut x = x_one.clone();
    for m in 0..n {
        for nn in 0..n {
            if m == nn {
                continue;
            }
            z[m] += pair(&mu_d, m, &mu_s, nn)?;
            x[m] += pair(&mu_t, m, &mu_s, nn)?;
            if nn < m {
                identity += pair(&mu_s, m, &mu_s, nn)?;
            }
        }
    }
    let mut xx = vec![];
    let mut xz = vec![];
    let mut zx = vec![];
    let mut zz = vec![];
    for m in 0..n {
        for nn in 0..m {
            xx.push(pair(&mu_t, m, &mu_t, nn)?);
            xz.push(pair(&mu_t, m, &mu_d, nn)?);
            zx.push(pair(&mu_d, m, &mu_t, nn)?);
            zz.push(pair(&mu_d, m, &mu_d, nn)?);
        }
    }
    Ok(FullSpaceCoefficients {
        n,
        identity,
        z,
        x,
        xx,
        xz,
        zx,
        zz,
        s_one,
        d_one,
        x_one,
    })
}

/// Assemble the N-qubit multi-exciton Hamiltonian (one qubit per molecule,
/// |1> = excited). Includes the identity term.
pub fn build_fullspace(specs: &[MoleculeElectronicSpec], kappa: f64) -> Result<PauliSum> {
    let coeffs = compute_fullspace_coefficients(specs, kappa)?;
    let n = coeffs.n;
    let mut terms: Vec<(C64, PauliString)> =
        vec![(C64::new(coeffs.identity, 0.0), PauliString::identity(n))];
    for m in 0..n {
        terms.push((
            C64::new(coeffs.z[m], 0.0),
            PauliString::single(n, m, PauliLetter::Z),
        ));
        terms.push((
            C64::new(coeffs.x[m], 0.0),
            PauliString::single(n, m, PauliLetter::X),
        ));
    }
    for m in 0..n {
        for nn in 0..m {
            let k = FullSpaceCoefficients::pair_index(m, nn);
            use PauliLetter::{X, Z};
            for (c, la, lb) in [
                (coeffs.xx[k], X, X),
                (coeffs.xz[k], X, Z),
                (coeffs.zx[k], Z, X),
                (coeffs.zz[k], Z, Z),
            ] {
                terms.push((C64::new(c, 0.0), PauliString::two(n, m, la, nn, lb)));
            }
        }
    }
    PauliSum::from_terms(n, terms)
}

/// Transverse-field Ising benchmark: H = h (X1 + X2) + J Z1 Z2.
pub fn build_tfi(h: f64, j: f64) -> PauliSum {
    PauliSum::from_terms(
        2,
        vec![
            (C64::new(h, 0.0), PauliString::single(2, 0, PauliLetter::X)),
            (C64::new(h, 0.0), PauliString::single(2, 1, PauliLetter::X)),
            (
                C64::new(j, 0.0),
                PauliString::two(2, 0, PauliLetter::Z, 1, PauliLetter::Z),
            ),
        ],
    )
    .expect("static term list")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    PiecewiseConstant,
    Linear,
}

/// A time-ordered sequence of Frenkel snapshots.
#[derive(Debug, Clone)]
pub struct HamiltonianTrajectory {
    times: Vec<f64>,
    snapshots: Vec<FrenkelSnapshot>,
    pub interpolation: Interpolation,
}

impl HamiltonianTrajectory {
    pub fn new(
        times: Vec<f64>,
        snapshots: Vec<FrenkelSnapshot>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::invalid(
                "times and snapshots must align and be non-empty",
            ));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        let n = snapshots[0].n_sites();
        if snapshots.iter().any(|s| s.n_sites() != n) {
            return Err(Error::invalid("all snapshots must share the site count"));
        }
        Ok(HamiltonianTrajectory {
            times,
            snapshots,
            interpolation,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.snapshots[0].n_sites()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[FrenkelSnapshot] {
        &self.snapshots
    }

    pub fn t_first(&self) -> f64 {
        self.times[0]
    }

    pub fn t_last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Snapshot at time t (fs) under the configured interpolation mode.
    pub fn interpolate(&self, t: f64) -> Result<FrenkelSnapshot> {
        if t < self.t_first() - 1e-12 || t > self.t_last() + 1e-12 {
            return Err(Error::TimeOutOfRange {
                t,
                first: self.t_first(),
                last: self.t_last(),
            });
        }
        let t = t.clamp(self.t_first(), self.t_last());
        // last frame index with time <= t
        let idx = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            k => k - 1,
        };
        match self.interpolation {
            Interpolation::PiecewiseConstant => Ok(self.snapshots[idx].clone()),
            Interpolation::Linear => {
                if idx + 1 >= self.times.len() || self.times[idx] == t {
                    return Ok(self.snapshots[idx].clone());
                }
                let (t0, t1) = (self.times[idx], self.times[idx + 1]);
                let w = (t - t0) / (t1 - t0);
                let (a, b) = (&self.snapshots[idx], &self.snapshots[idx + 1]);
                let energies: Vec<f64> = a
                    .site_energies()
                    .iter()
                    .zip(b.site_energies())
                    .map(|(ea, eb)| ea + w * (eb - ea))
                    .collect();
                let n = a.n_sites();
                let mut couplings = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let (va, vb) = (a.coupling(i, j), b.coupling(i, j));
                        couplings[i * n + j] = va + w * (vb - va);
                    }
                }
                FrenkelSnapshot::new(energies, couplings)
            }
        }
    }

    /// CSV export: header `t_fs,E_1..E_N,V_1_2,...,V_(N-1)_N`, one row per
    /// frame.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let n = self.n_sites();
        let mut header = String::from("t_fs");
        for i in 1..=n {
            header.push_str(&format!(",E_{i}"));
        }
        for i in 1..=n {
            for j in (i + 1)..=n {
                header.push_str(&format!(",V_{i}_{j}"));
            }
        }
        writeln!(f, "{header}")?;
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            let mut row = format!("{t}");
            for e in snap.site_energies() {
                row.push_str(&format!(",{e}"));
            }
            for v in snap.upper_triangle() {
                row.push_str(&format!(",{v}"));
            }
            writeln!(f, "{row}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path, interpolation: Interpolation) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, interpolation)
    }

    pub fn parse_csv(text: &str, interpolation: Interpolation) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::invalid("empty trajectory file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t_fs") {
            return Err(Error::Parse {
                line: 1,
                msg: "header must start with t_fs".into(),
            });
        }
        let n = cols.iter().filter(|c| c.starts_with("E_")).count();
        if n == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: "no E_ columns in header".into(),
            });
        }
        let expected = 1 + n + n * (n - 1) / 2;
        if cols.len() != expected {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected {expected} columns for N={n}, got {}", cols.len()),
            });
        }
        let mut times = vec![];
        let mut snapshots = vec![];
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != expected {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {expected} fields, got {}", fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad number '{s}': {e}"),
                })
            };
            times.push(parse(fields[0])?);
            let energies: Result<Vec<f64>> = fields[1..=n].iter().map(|s| parse(s)).collect();
            let upper: Result<Vec<f64>> = fields[n + 1..].iter().map(|s| parse(s)).collect();
            snapshots.push(FrenkelSnapshot::from_upper(energies?, &upper?)?);
        }
        HamiltonianTrajectory::new(times, snapshots, interpolation)
    }
}

/// Synthesize a stationary Ornstein-Uhlenbeck trajectory: every site energy
/// and coupling follows an independent OU process around its mean with the
/// given standard deviation and correlation time. The exact discretization
/// x' = mu + (x - mu) e^{-dt/tau} + sigma sqrt(1 - e^{-2 dt/tau}) xi
/// is used, with the initial value drawn from the stationary distribution.
pub fn synthesize_trajectory(
    means: &FrenkelSnapshot,
    stddevs: &FrenkelSnapshot,
    correlation_time_fs: f64,
    dt_fs: f64,
    duration_fs: f64,
    seed: u64,
    interpolation: Interpolation,
) -> Result<HamiltonianTrajectory> {
    if dt_fs <= 0.0 {
        return Err(Error::invalid("dt must be positive"));
    }
    if correlation_time_fs <= 0.0 {
        return Err(Error::invalid("correlation time must be positive"));
    }
    if duration_fs < 0.0 {
        return Err(Error::invalid("duration must be non-negative"));
    }
    let n = means.n_sites();
    if stddevs.n_sites() != n {
        return Err(Error::invalid(
            "means and stddevs must share the site count",
        ));
    }
    let steps = (duration_fs / dt_fs).floor() as usize + 1;
    let decay = (-dt_fs / correlation_time_fs).exp();
    let diffuse = (1.0 - decay * decay).sqrt();

    let gaussian = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let run_stream = |mean: f64, sigma: f64, tag: &[u64]| -> Vec<f64> {
        if sigma == 0.0 {
            return vec![mean; steps];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, tag));
        let mut x = mean + sigma * gaussian(&mut rng);
        let mut out = Vec::with_capacity(steps);
        out.push(x);
        for _ in 1..steps {
            x = mean + (x - mean) * decay + sigma * diffuse * gaussian(&mut rng);
            out.push(x);
        }
        out
    };

    let energy_streams: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            run_stream(
                means.site_energies()[i],
                stddevs.site_energies()[i],
                &[0, i as u64],
            )
        })
        .collect();
    let mut coupling_streams: Vec<((usize, usize), Vec<f64>)> = vec![];
    for i in 0..n {
        for j in (i + 1)..n {
            coupling_streams.push((
                (i, j),
                run_stream(
                    means.coupling(i, j),
                    stddevs.coupling(i, j),
                    &[1, i as u64, j as u64],
                ),
            ));
        }
    }

    let mut times = Vec::with_capacity(steps);
    let mut snapshots = Vec::with_capacity(steps);
    for k in 0..steps {
        times.push(k as f64 * dt_fs);
        let energies: Vec<f64> = energy_streams.iter().map(|s| s[k]).collect();
        let mut couplings = vec![0.0; n * n];
        for ((i, j), stream) in &coupling_streams {
            couplings[i * n + j] = stream[k];
            couplings[j * n + i] = stream[k];
        }
        snapshots.push(FrenkelSnapshot::new(energies, couplings)?);
    }
    HamiltonianTrajectory::new(times, snapshots, interpolation)
}

/// Hamiltonian provider for the evolvers: a static Pauli sum or a Frenkel
/// trajectory encoded on the fly. The identity component is always stripped
/// and reported as an offset; it contributes only a global phase.
#[derive(Debug, Clone)]
pub enum HamiltonianSource {
    Static { h: PauliSum, offset: f64 },
    Frenkel { trajectory: HamiltonianTrajectory },
}

impl HamiltonianSource {
    pub fn from_pauli_sum(h: &PauliSum) -> Self {
        let (stripped, offset) = h.strip_identity();
        HamiltonianSource::Static {
            h: stripped,
            offset: offset.re,
        }
    }

    pub fn from_trajectory(trajectory: HamiltonianTrajectory) -> Self {
        HamiltonianSource::Frenkel { trajectory }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, HamiltonianSource::Static { .. })
    }

    pub fn qubit_count(&self) -> usize {
        match self {
            HamiltonianSource::Static { h, .. } => h.qubit_count(),
            HamiltonianSource::Frenkel { trajectory } => {
                let padded = trajectory.n_sites().next_power_of_two();
                padded.trailing_zeros() as usize
            }
        }
    }

    /// Identity-stripped Hamiltonian and offset at time t (fs).
    pub fn at(&self, t: f64) -> Result<(PauliSum, f64)> {
        match self {
            HamiltonianSource::Static { h, offset } => Ok((h.clone(), *offset)),
            HamiltonianSource::Frenkel { trajectory } => {
                encode_frenkel_binary(&trajectory.interpolate(t)?)
            }
        }
    }

    /// Dense identity-stripped Hamiltonian matrix at time t. For Frenkel
    /// sources this skips the Pauli expansion: the padded site-basis matrix
    /// equals the encoded operator (the decomposition-oracle invariant), so
    /// only the identity component needs subtracting from the diagonal.
    pub fn matrix_at(&self, t: f64) -> Result<(CMatrix, f64)> {
        match self {
            HamiltonianSource::Static { h, offset } => Ok((h.to_matrix()?, *offset)),
            HamiltonianSource::Frenkel { trajectory } => {
                let padded = trajectory.interpolate(t)?.padded();
                let mut m = padded.matrix();
                let offset = m.trace().re / m.dim as f64;
                for i in 0..m.dim {
                    m[(i, i)] -= C64::new(offset, 0.0);
                }
                Ok((m, offset))
            }
        }
    }

    /// Latest time the source can be evaluated at, if bounded.
    pub fn t_last(&self) -> Option<f64> {
        match self {
            HamiltonianSource::Static { .. } => None,
            HamiltonianSource::Frenkel { trajectory } => Some(trajectory.t_last()),
        }
    }
}

/// The static 4-site chain model of the hardware experiments: E1 = E2 = +10
/// meV, E3 = E4 = -10 meV, nearest-neighbor coupling 40 meV with periodic
/// boundary, V13 = V24 = 0. Encodes to 0.010 Z1 + 0.040 X2 + 0.040 X1X2 eV.
pub fn four_site_chain_snapshot() -> FrenkelSnapshot {
    let e = 0.010;
    let v = 0.040;
    FrenkelSnapshot::from_upper(
        vec![e, e, -e, -e],
        // (1,2), (1,3), (1,4), (2,3), (2,4), (3,4)
        &[v, 0.0, v, v, 0.0, v],
    )
    .expect("static snapshot")
}
