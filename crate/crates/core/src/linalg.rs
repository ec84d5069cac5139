//! Small dense linear algebra over complex matrices.
//!
//! Everything here is sized for desk-scale quantum simulation (dimensions up
//! to a few thousand), so the implementations favor clarity and numerical
//! robustness over asymptotics: cyclic Jacobi for Hermitian eigenproblems,
//! LU with partial pivoting for linear systems.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        let mut m = CMatrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "from_rows: ragged input");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim, other.dim);
        let mut out = CMatrix::zeros(da * db);
        for ia in 0..da {
            for ja in 0..da {
                let a = self[(ia, ja)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        out[(ia * db + ib, ja * db + jb)] = a * other[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len());
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Largest elementwise |a - b|.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigendecomposition A = V diag(values) V^dagger of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose j-th column is the eigenvector for `values[j]`.
    pub vectors: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Phases are carried as exact complex ratios (never through arg/exp), so a
/// real symmetric input keeps every intermediate exactly real.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.dim;
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0),
        });
    }
    let mut m = a.clone();
    // Symmetrize: callers pass Hermitian data, this removes roundoff skew.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let scale: f64 = m
        .data
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                // phase = a_pq / |a_pq|, exact for real input
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation R: R[p][p]=c, R[p][q]=s*phase, R[q][p]=-s*conj(phase), R[q][q]=c
                let rpq = phase * s;
                let rqp = -phase.conj() * s;
                // Columns: A <- A R
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c + aiq * rqp;
                    m[(i, q)] = aip * rpq + aiq * c;
                }
                // Rows: A <- R^dagger A
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c + aqj * rqp.conj();
                    m[(q, j)] = apj * rpq.conj() + aqj * c;
                }
                // Eigenvectors: V <- V R
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * rqp;
                    v[(i, q)] = vip * rpq + viq * c;
                }
            }
        }
    }
    if !converged {
        // Final check after the last sweep.
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off > tol * 10.0 {
            return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigendecomposition of a real symmetric matrix (thin wrapper over
/// [`hermitian_eigen`]; the complex routine stays exactly real on real input).
pub fn symmetric_eigen(a: &[f64], dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), dim * dim);
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = C64::new(a[i * dim + j], 0.0);
        }
    }
    let eig = hermitian_eigen(&m)?;
    let mut vectors = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            vectors[i * dim + j] = eig.vectors[(i, j)].re;
        }
    }
    Ok((eig.values, vectors))
}

/// Solve the real linear system `a x = b` by LU with partial pivoting.
/// `a` is row-major `dim x dim` and is left untouched.
pub fn lu_solve(a: &[f64], b: &[f64], dim: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), dim * dim);
    assert_eq!(b.len(), dim);
    let mut lu = a.to_vec();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..dim).collect();
    for col in 0..dim {
        let mut pivot = col;
        let mut best = lu[perm[col] * dim + col].abs();
        for row in (col + 1)..dim {
            let v = lu[perm[row] * dim + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return Err(Error::SingularMatrix);
        }
        perm.swap(col, pivot);
        let prow = perm[col];
        let pval = lu[prow * dim + col];
        for row in (col + 1)..dim {
            let r = perm[row];
            let factor = lu[r * dim + col] / pval;
            lu[r * dim + col] = factor;
            for j in (col + 1)..dim {
                lu[r * dim + j] -= factor * lu[prow * dim + j];
            }
        }
    }
    // Forward substitution on permuted rows.
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let r = perm[i];
        let mut acc = x[r];
        for j in 0..i {
            acc -= lu[r * dim + j] * y[j];
        }
        y[i] = acc;
    }
    // Back substitution.
    for i in (0..dim).rev() {
        let r = perm[i];
        let mut acc = y[i];
        for j in (i + 1)..dim {
            acc -= lu[r * dim + j] * x[j];
        }
        x[i] = acc / lu[r * dim + i];
    }
    Ok(x)
}

/// 1-norm condition number estimate via explicit inverse (fine at these dims).
pub fn condition_number_1(a: &[f64], dim: usize) -> Result<f64> {
    let norm1 = |m: &[f64]| -> f64 {
        (0..dim)
            .map(|j| (0..dim).map(|i| m[i * dim + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut inv = vec![0.0; dim * dim];
    let mut e = vec![0.0; dim];
    for col in 0..dim {
        e[col] = 1.0;
        let x = lu_solve(a, &e, dim)?;
        for row in 0..dim {
            inv[row * dim + col] = x[row];
        }
        e[col] = 0.0;
    }
    Ok(norm1(a) * norm1(&inv))
}

/// Splitmix64-style deterministic seed derivation. Used wherever a family of
/// independent RNG streams must be reproducible from one base seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut z = base.wrapping_add(0x9e3779b97f4a7c15);
    for &t in tags {
        z ^= t.wrapping_mul(0xff51afd7ed558ccd).rotate_left(31);
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}
