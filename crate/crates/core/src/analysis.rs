//! Observables over simulation output: site populations, the inverse
//! participation ratio, ensemble averaging and the PopulationSeries CSV
//! format shared by every evolver.

use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::sim::{DensityMatrix, StateVector};
use std::io::Write;
use std::path::Path;

/// How a state maps onto excitonic site populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Binary-encoded Frenkel register: site m is basis index m. Padding
    /// sites are dropped and the vector renormalized.
    Binary { n_sites: usize },
    /// One qubit per molecule: p_m = <(I - Z_m)/2>, not normalized across
    /// sites.
    FullSpace,
}

impl Encoding {
    pub fn n_sites(&self, qubit_count: usize) -> usize {
        match self {
            Encoding::Binary { n_sites } => *n_sites,
            Encoding::FullSpace => qubit_count,
        }
    }
}

/// Site populations from Born probabilities in the computational basis.
/// Returns the populations and the renormalization factor that was divided
/// out (always 1.0 for the full-space readout).
pub fn site_populations(
    probs: &[f64],
    qubit_count: usize,
    encoding: &Encoding,
) -> Result<(Vec<f64>, f64)> {
    let dim = 1usize << qubit_count;
    if probs.len() != dim {
        return Err(Error::invalid(format!(
            "probability vector length {} != 2^{qubit_count}",
            probs.len()
        )));
    }
    match encoding {
        Encoding::Binary { n_sites } => {
            if *n_sites == 0 || *n_sites > dim {
                return Err(Error::invalid(format!(
                    "binary encoding with {n_sites} sites does not fit {qubit_count} qubits"
                )));
            }
            let mut p: Vec<f64> = probs[..*n_sites].to_vec();
            let total: f64 = p.iter().sum();
            if total <= 0.0 {
                return Err(Error::invalid(
                    "all population on padding sites; cannot renormalize",
                ));
            }
            for v in &mut p {
                *v /= total;
            }
            Ok((p, total))
        }
        Encoding::FullSpace => {
            let mut p = vec![0.0; qubit_count];
            for (b, prob) in probs.iter().enumerate() {
                for (m, pm) in p.iter_mut().enumerate() {
                    if (b >> (qubit_count - 1 - m)) & 1 == 1 {
                        *pm += prob;
                    }
                }
            }
            Ok((p, 1.0))
        }
    }
}

pub fn state_populations(state: &StateVector, encoding: &Encoding) -> Result<(Vec<f64>, f64)> {
    site_populations(&state.probabilities(), state.qubit_count(), encoding)
}

pub fn density_populations(rho: &DensityMatrix, encoding: &Encoding) -> Result<(Vec<f64>, f64)> {
    site_populations(&rho.probabilities(), rho.qubit_count(), encoding)
}

/// Inverse participation ratio 1 / sum_m p_m^2, computed on the renormalized
/// vector; ranges from 1 (localized) to N (uniform).
pub fn ipr(populations: &[f64]) -> Result<f64> {
    let total: f64 = populations.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("IPR of an all-zero population vector"));
    }
    let sum_sq: f64 = populations.iter().map(|p| (p / total) * (p / total)).sum();
    Ok(1.0 / sum_sq)
}

/// Time-stamped site populations plus IPR, the primary output artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSeries {
    pub times: Vec<f64>,
    /// One population vector (length N) per time.
    pub populations: Vec<Vec<f64>>,
    pub ipr: Vec<f64>,
    /// Present on ensemble output: the mean of the member IPRs, alongside the
    /// IPR of the mean populations stored in `ipr`.
    pub ipr_member_mean: Option<Vec<f64>>,
}

impl PopulationSeries {
    pub fn new(times: Vec<f64>, populations: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != populations.len() || times.is_empty() {
            return Err(Error::invalid("times and populations must align"));
        }
        let n = populations[0].len();
        if populations.iter().any(|p| p.len() != n) {
            return Err(Error::invalid("ragged population rows"));
        }
        let ipr: Result<Vec<f64>> = populations.iter().map(|p| ipr(p)).collect();
        Ok(PopulationSeries {
            times,
            populations,
            ipr: ipr?,
            ipr_member_mean: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.populations[0].len()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Population of one site (0-based) over time.
    pub fn site(&self, m: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[m]).collect()
    }

    /// Linear interpolation of site `m` at time `t`; errors outside the
    /// domain.
    pub fn interp_site(&self, m: usize, t: f64) -> Result<f64> {
        if t < self.times[0] - 1e-12 || t > self.t_max() + 1e-12 {
            return Err(Error::TimeOutOfRange {
                t,
                first: self.times[0],
                last: self.t_max(),
            });
        }
        let t = t.clamp(self.times[0], self.t_max());
        let idx = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            k => k - 1,
        };
        if idx + 1 >= self.times.len() || self.times[idx] == t {
            return Ok(self.populations[idx][m]);
        }
        let (t0, t1) = (self.times[idx], self.times[idx + 1]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.populations[idx][m], self.populations[idx + 1][m]);
        Ok(a + w * (b - a))
    }

    /// CSV: `t_fs,p_1..p_N,ipr[,ipr_member_mean]`; values print in Rust's
    /// shortest round-trip form, so write-then-read is lossless.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let n = self.n_sites();
        let mut header = String::from("t_fs");
        for i in 1..=n {
            header.push_str(&format!(",p_{i}"));
        }
        header.push_str(",ipr");
        if self.ipr_member_mean.is_some() {
            header.push_str(",ipr_member_mean");
        }
        writeln!(f, "{header}")?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = format!("{t}");
            for p in &self.populations[k] {
                row.push_str(&format!(",{p}"));
            }
            row.push_str(&format!(",{}", self.ipr[k]));
            if let Some(mm) = &self.ipr_member_mean {
                row.push_str(&format!(",{}", mm[k]));
            }
            writeln!(f, "{row}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::invalid("empty population series file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t_fs") {
            return Err(Error::Parse {
                line: 1,
                msg: "header must start with t_fs".into(),
            });
        }
        let n = cols.iter().filter(|c| c.starts_with("p_")).count();
        let has_member_mean = cols.last() == Some(&"ipr_member_mean");
        let expected = 1 + n + 1 + usize::from(has_member_mean);
        if n == 0 || cols.len() != expected {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected columns: {header}"),
            });
        }
        let mut times = vec![];
        let mut populations = vec![];
        let mut ipr_col = vec![];
        let mut member_mean = vec![];
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
            let row: Result<Vec<f64>> = fields[1..=n].iter().map(|s| parse(s)).collect();
            populations.push(row?);
            ipr_col.push(parse(fields[n + 1])?);
            if has_member_mean {
                member_mean.push(parse(fields[n + 2])?);
            }
        }
        if times.is_empty() {
            return Err(Error::invalid("population series has no rows"));
        }
        Ok(PopulationSeries {
            times,
            populations,
            ipr: ipr_col,
            ipr_member_mean: if has_member_mean {
                Some(member_mean)
            } else {
                None
            },
        })
    }
}

/// Build a series from statevector snapshots.
pub fn series_from_states(
    times: Vec<f64>,
    states: &[StateVector],
    encoding: &Encoding,
) -> Result<PopulationSeries> {
    let populations: Result<Vec<Vec<f64>>> = states
        .iter()
        .map(|s| state_populations(s, encoding).map(|(p, _)| p))
        .collect();
    PopulationSeries::new(times, populations?)
}

/// Build a series from shot histograms (one per time).
pub fn series_from_histograms(
    times: Vec<f64>,
    histograms: &[Vec<u64>],
    qubit_count: usize,
    encoding: &Encoding,
) -> Result<PopulationSeries> {
    let populations: Result<Vec<Vec<f64>>> = histograms
        .iter()
        .map(|h| {
            let total: u64 = h.iter().sum();
            if total == 0 {
                return Err(Error::invalid("empty histogram"));
            }
            let probs: Vec<f64> = h.iter().map(|&c| c as f64 / total as f64).collect();
            site_populations(&probs, qubit_count, encoding).map(|(p, _)| p)
        })
        .collect();
    PopulationSeries::new(times, populations?)
}

/// Seeded fan-out description for an ensemble of trajectories.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub trajectory_count: usize,
    pub base_seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            trajectory_count: 100,
            base_seed: 0,
        }
    }
}

impl EnsembleSpec {
    /// Distinct per-member seeds derived deterministically from the base.
    pub fn member_seeds(&self) -> Vec<u64> {
        (0..self.trajectory_count)
            .map(|i| derive_seed(self.base_seed, &[0x656e73, i as u64]))
            .collect()
    }
}

/// Pointwise mean of member series. The reported `ipr` column is recomputed
/// from the mean populations; the mean of the member IPRs is kept alongside
/// in `ipr_member_mean` since either reading of an ensemble IPR is defensible.
pub fn ensemble_average(members: &[PopulationSeries]) -> Result<PopulationSeries> {
    if members.is_empty() {
        return Err(Error::invalid("ensemble with no members"));
    }
    let t0 = &members[0].times;
    let n = members[0].n_sites();
    for m in members.iter().skip(1) {
        if &m.times != t0 {
            return Err(Error::invalid("ensemble members must share the time grid"));
        }
        if m.n_sites() != n {
            return Err(Error::invalid("ensemble members must share the site count"));
        }
    }
    let count = members.len() as f64;
    let mut populations = vec![vec![0.0; n]; t0.len()];
    let mut member_ipr = vec![0.0; t0.len()];
    for m in members {
        for (k, row) in m.populations.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                populations[k][j] += p / count;
            }
            member_ipr[k] += m.ipr[k] / count;
        }
    }
    let mut out = PopulationSeries::new(t0.clone(), populations)?;
    out.ipr_member_mean = Some(member_ipr);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn binary_populations_follow_basis_index() {
        // amplitude on index 1 -> all population on site 2 (1-based)
        let psi = StateVector::basis(2, 1);
        let (p, renorm) = state_populations(&psi, &Encoding::Binary { n_sites: 4 }).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0, 0.0]);
        assert!((renorm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binary_padding_drops_and_renormalizes() {
        // 3 physical sites on 2 qubits; leak 10% onto the padding index 3
        let amps = vec![
            C64::new(0.6f64.sqrt(), 0.0),
            C64::new(0.2f64.sqrt(), 0.0),
            C64::new(0.1f64.sqrt(), 0.0),
            C64::new(0.1f64.sqrt(), 0.0),
        ];
        let psi = StateVector::from_amplitudes(2, amps).unwrap();
        let (p, renorm) = state_populations(&psi, &Encoding::Binary { n_sites: 3 }).unwrap();
        assert!((renorm - 0.9).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.6 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn fullspace_populations_are_per_qubit_excitations() {
        // qubit 1 excited: |10> = index 2
        let psi = StateVector::basis(2, 2);
        let (p, _) = state_populations(&psi, &Encoding::FullSpace).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        // Bell-like (|01> + |10>)/sqrt(2)
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_amplitudes(
            2,
            vec![
                C64::new(0.0, 0.0),
                C64::new(inv, 0.0),
                C64::new(inv, 0.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let (p, _) = state_populations(&psi, &Encoding::FullSpace).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ipr_point_values() {
        assert!((ipr(&[0.25, 0.25, 0.25, 0.25]).unwrap() - 4.0).abs() < 1e-12);
        assert!((ipr(&[1.0, 0.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((ipr(&[0.5, 0.5, 0.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(ipr(&[0.0, 0.0]).is_err());
        // renormalizes first
        assert!((ipr(&[0.2, 0.2]).unwrap() - 2.0).abs() < 1e-12);
    }

    fn series(times: Vec<f64>, p1: Vec<f64>) -> PopulationSeries {
        let populations = p1.iter().map(|&p| vec![p, 1.0 - p]).collect();
        PopulationSeries::new(times, populations).unwrap()
    }

    #[test]
    fn ensemble_average_basics() {
        let a = series(vec![0.0, 1.0], vec![0.0, 0.2]);
        let b = series(vec![0.0, 1.0], vec![1.0, 0.4]);
        let mean = ensemble_average(&[a.clone(), b]).unwrap();
        assert!((mean.populations[0][0] - 0.5).abs() < 1e-15);
        assert!((mean.populations[1][0] - 0.3).abs() < 1e-15);
        assert!(mean.ipr_member_mean.is_some());
        // single-member ensemble reproduces the member
        let solo = ensemble_average(std::slice::from_ref(&a)).unwrap();
        assert_eq!(solo.populations, a.populations);
        // mismatched grids are rejected
        let c = series(vec![0.0, 2.0], vec![0.0, 0.2]);
        assert!(ensemble_average(&[a, c]).is_err());
    }

    #[test]
    fn ensemble_ipr_of_mean_vs_mean_of_ipr() {
        // two fully localized members on different sites: each member IPR = 1,
        // while the mean populations are uniform (IPR = 2)
        let a = series(vec![0.0], vec![1.0]);
        let b = series(vec![0.0], vec![0.0]);
        let mean = ensemble_average(&[a, b]).unwrap();
        assert!((mean.ipr[0] - 2.0).abs() < 1e-12);
        assert!((mean.ipr_member_mean.as_ref().unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn member_seeds_distinct_and_stable() {
        let spec = EnsembleSpec {
            trajectory_count: 100,
            base_seed: 5,
        };
        let seeds = spec.member_seeds();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(seeds, spec.member_seeds());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let s = series(
            vec![0.0, 0.723498172349817, 1.9746],
            vec![1.0, 0.12345678901234568, 1.0 / 3.0],
        );
        let dir = std::env::temp_dir().join("excidyn_series_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("series.csv");
        s.write_csv(&path).unwrap();
        let back = PopulationSeries::read_csv(&path).unwrap();
        assert_eq!(s, back);

        // with the ensemble column
        let mut e = s.clone();
        e.ipr_member_mean = Some(vec![1.0, 1.5, 1.25]);
        let path2 = dir.join("ensemble.csv");
        e.write_csv(&path2).unwrap();
        let back2 = PopulationSeries::read_csv(&path2).unwrap();
        assert_eq!(e, back2);
    }

    #[test]
    fn sampled_populations_converge_to_statevector_populations() {
        use crate::sim::sample_bitstrings;
        // binary-encoded 2-qubit state with spread amplitudes
        let amps = vec![
            C64::new(0.55f64.sqrt(), 0.0),
            C64::new(0.25f64.sqrt(), 0.0),
            C64::new(0.15f64.sqrt(), 0.0),
            C64::new(0.05f64.sqrt(), 0.0),
        ];
        let psi = StateVector::from_amplitudes(2, amps).unwrap();
        let enc = Encoding::Binary { n_sites: 4 };
        let (p_exact, _) = state_populations(&psi, &enc).unwrap();
        let shots = 8192u64;
        let counts = sample_bitstrings(&psi.probabilities(), shots, 31);
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
        let (p_sampled, _) = site_populations(&probs, 2, &enc).unwrap();
        for (s, e) in p_sampled.iter().zip(&p_exact) {
            let sigma = (e * (1.0 - e) / shots as f64).sqrt().max(1e-9);
            assert!((s - e).abs() <= 5.0 * sigma, "{s} vs {e}");
        }
    }

    #[test]
    fn interp_site_linear() {
        let s = series(vec![0.0, 2.0], vec![0.0, 1.0]);
        assert!((s.interp_site(0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.interp_site(0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.interp_site(0, 2.5).is_err());
    }
}
