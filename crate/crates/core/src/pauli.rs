//! Pauli-string and Pauli-sum algebra.
//!
//! Qubit ordering: qubit `q` (0-based, displayed 1-based) is the q-th letter
//! of a string and carries bit `L-1-q` of a basis index, so the string reads
//! left-to-right in the same order as a ket |x1 x2 ... xL> and the basis index
//! is the big-endian value of the bitstring. This one convention is shared by
//! every matrix, statevector and histogram in the crate.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::units::DENSE_QUBIT_CAP;
use std::fmt;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(PauliLetter::I),
            'X' => Ok(PauliLetter::X),
            'Y' => Ok(PauliLetter::Y),
            'Z' => Ok(PauliLetter::Z),
            _ => Err(Error::invalid(format!("unknown Pauli letter '{c}'"))),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn matrix(self) -> CMatrix {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let rows = match self {
            PauliLetter::I => [[l, o], [o, l]],
            PauliLetter::X => [[o, l], [l, o]],
            PauliLetter::Y => [[o, -i], [i, o]],
            PauliLetter::Z => [[l, o], [o, -l]],
        };
        CMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()])
    }
}

/// Product table for single-qubit Paulis: a*b = i^phase * letter.
fn letter_product(a: PauliLetter, b: PauliLetter) -> (u8, PauliLetter) {
    use PauliLetter::*;
    match (a, b) {
        (I, p) => (0, p),
        (p, I) => (0, p),
        (X, X) | (Y, Y) | (Z, Z) => (0, I),
        (X, Y) => (1, Z),
        (Y, X) => (3, Z),
        (Y, Z) => (1, X),
        (Z, Y) => (3, X),
        (Z, X) => (1, Y),
        (X, Z) => (3, Y),
    }
}

/// A tensor product of single-qubit Paulis, one letter per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>) -> Self {
        PauliString { letters }
    }

    pub fn identity(qubit_count: usize) -> Self {
        PauliString {
            letters: vec![PauliLetter::I; qubit_count],
        }
    }

    /// Single non-identity letter on `qubit`, identity elsewhere.
    pub fn single(qubit_count: usize, qubit: usize, letter: PauliLetter) -> Self {
        let mut letters = vec![PauliLetter::I; qubit_count];
        letters[qubit] = letter;
        PauliString { letters }
    }

    /// Two non-identity letters; `qa != qb`.
    pub fn two(qubit_count: usize, qa: usize, la: PauliLetter, qb: usize, lb: PauliLetter) -> Self {
        assert_ne!(qa, qb);
        let mut letters = vec![PauliLetter::I; qubit_count];
        letters[qa] = la;
        letters[qb] = lb;
        PauliString { letters }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let letters: Result<Vec<_>> = s.chars().map(PauliLetter::from_char).collect();
        Ok(PauliString { letters: letters? })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        self.letters[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == PauliLetter::I)
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters
            .iter()
            .filter(|&&l| l != PauliLetter::I)
            .count()
    }

    /// Qubits with a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != PauliLetter::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Action on a computational basis state: P|b> = phase * |b'>.
    /// The phase is exactly one of {1, -1, i, -i}.
    pub fn apply_to_basis(&self, b: usize) -> (usize, C64) {
        let l = self.letters.len();
        let mut out = b;
        let mut phase_pow: u8 = 0; // power of i, mod 4
        for (q, &letter) in self.letters.iter().enumerate() {
            let pos = l - 1 - q;
            let bit = (b >> pos) & 1;
            match letter {
                PauliLetter::I => {}
                PauliLetter::X => out ^= 1 << pos,
                PauliLetter::Y => {
                    out ^= 1 << pos;
                    // Y|0> = i|1>, Y|1> = -i|0>
                    phase_pow = (phase_pow + if bit == 0 { 1 } else { 3 }) % 4;
                }
                PauliLetter::Z => {
                    if bit == 1 {
                        phase_pow = (phase_pow + 2) % 4;
                    }
                }
            }
        }
        (out, i_power(phase_pow))
    }

    /// Sort key for the canonical term order: (weight, first support qubit,
    /// letters). Groups one-body terms before two-body terms, qubit-major.
    fn sort_key(&self) -> (usize, usize, Vec<PauliLetter>) {
        (
            self.weight(),
            self.support().first().copied().unwrap_or(0),
            self.letters.clone(),
        )
    }

    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::from_rows(&[vec![C64::new(1.0, 0.0)]]);
        for &l in &self.letters {
            m = m.kron(&l.matrix());
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

fn i_power(p: u8) -> C64 {
    match p % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Multiply two equal-length Pauli strings: a*b = phase * product.
pub fn pauli_multiply(a: &PauliString, b: &PauliString) -> Result<(C64, PauliString)> {
    if a.len() != b.len() {
        return Err(Error::QubitCountMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut phase_pow: u8 = 0;
    let mut letters = Vec::with_capacity(a.len());
    for (&la, &lb) in a.letters.iter().zip(&b.letters) {
        let (p, l) = letter_product(la, lb);
        phase_pow = (phase_pow + p) % 4;
        letters.push(l);
    }
    Ok((i_power(phase_pow), PauliString { letters }))
}

/// Weighted sum of Pauli strings in canonical (merged, ordered) form.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    qubit_count: usize,
    terms: Vec<(C64, PauliString)>,
}

/// Coefficients below this magnitude are dropped during canonicalization.
pub const COEFF_EPS: f64 = 1e-14;

impl PauliSum {
    pub fn zero(qubit_count: usize) -> Self {
        PauliSum {
            qubit_count,
            terms: vec![],
        }
    }

    pub fn from_terms(qubit_count: usize, terms: Vec<(C64, PauliString)>) -> Result<Self> {
        for (_, s) in &terms {
            if s.len() != qubit_count {
                return Err(Error::QubitCountMismatch {
                    left: s.len(),
                    right: qubit_count,
                });
            }
        }
        let mut sum = PauliSum { qubit_count, terms };
        sum.canonicalize();
        Ok(sum)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn terms(&self) -> &[(C64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, coeff: C64, string: PauliString) -> Result<()> {
        if string.len() != self.qubit_count {
            return Err(Error::QubitCountMismatch {
                left: string.len(),
                right: self.qubit_count,
            });
        }
        self.terms.push((coeff, string));
        self.canonicalize();
        Ok(())
    }

    /// Merge duplicate strings, drop |c| < 1e-14, sort canonically.
    fn canonicalize(&mut self) {
        self.terms
            .sort_by(|(_, a), (_, b)| a.sort_key().cmp(&b.sort_key()));
        let mut merged: Vec<(C64, PauliString)> = Vec::with_capacity(self.terms.len());
        for (c, s) in self.terms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.1 == s {
                    last.0 += c;
                    continue;
                }
            }
            merged.push((c, s));
        }
        merged.retain(|(c, _)| c.norm() >= COEFF_EPS);
        self.terms = merged;
    }

    pub fn scale(&self, factor: C64) -> PauliSum {
        let mut out = self.clone();
        for (c, _) in &mut out.terms {
            *c *= factor;
        }
        out.canonicalize();
        out
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.qubit_count != other.qubit_count {
            return Err(Error::QubitCountMismatch {
                left: self.qubit_count,
                right: other.qubit_count,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PauliSum::from_terms(self.qubit_count, terms)
    }

    /// All coefficients real within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    pub fn max_imag_coeff(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, _)| c.im.abs())
            .fold(0.0, f64::max)
    }

    /// Split off the identity component: returns (sum without identity,
    /// identity coefficient).
    pub fn strip_identity(&self) -> (PauliSum, C64) {
        let mut offset = C64::new(0.0, 0.0);
        let mut terms = vec![];
        for (c, s) in &self.terms {
            if s.is_identity() {
                offset += c;
            } else {
                terms.push((*c, s.clone()));
            }
        }
        (
            PauliSum {
                qubit_count: self.qubit_count,
                terms,
            },
            offset,
        )
    }

    /// Dense matrix realization with the default qubit cap.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.to_matrix_capped(DENSE_QUBIT_CAP)
    }

    pub fn to_matrix_capped(&self, cap: usize) -> Result<CMatrix> {
        if self.qubit_count > cap {
            return Err(Error::DimensionCap {
                qubits: self.qubit_count,
                cap,
            });
        }
        let dim = 1usize << self.qubit_count;
        let mut m = CMatrix::zeros(dim);
        for (c, s) in &self.terms {
            for b in 0..dim {
                let (b_out, phase) = s.apply_to_basis(b);
                m[(b_out, b)] += c * phase;
            }
        }
        Ok(m)
    }

    /// Textual format: one term per line, `<coeff_re> <coeff_im> <letters>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, s) in &self.terms {
            out.push_str(&format!("{} {} {}\n", c.re, c.im, s));
        }
        out
    }

    pub fn parse_text(text: &str, qubit_count: Option<usize>) -> Result<PauliSum> {
        let mut terms = vec![];
        let mut inferred = qubit_count;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `re im letters`, got {} fields", fields.len()),
                });
            }
            let re: f64 = fields[0].parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad real part: {e}"),
            })?;
            let im: f64 = fields[1].parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad imaginary part: {e}"),
            })?;
            let string = PauliString::parse(fields[2]).map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            match inferred {
                None => inferred = Some(string.len()),
                Some(n) if n != string.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("string length {} != {}", string.len(), n),
                    });
                }
                _ => {}
            }
            terms.push((C64::new(re, im), string));
        }
        let qc = inferred.ok_or_else(|| Error::invalid("empty PauliSum text"))?;
        PauliSum::from_terms(qc, terms)
    }

    /// Coefficient of a given string (zero when absent).
    pub fn coefficient(&self, s: &PauliString) -> C64 {
        self.terms
            .iter()
            .find(|(_, t)| t == s)
            .map(|(c, _)| *c)
            .unwrap_or(C64::new(0.0, 0.0))
    }
}

/// Decompose a dense 2^L x 2^L matrix into Pauli strings: c_P = Tr[P A]/2^L.
///
/// This is the authoritative oracle every encoding route is checked against.
pub fn matrix_to_pauli_sum(a: &CMatrix, qubit_count: usize) -> Result<PauliSum> {
    let dim = 1usize << qubit_count;
    if a.dim != dim {
        return Err(Error::BadMatrixShape {
            rows: a.dim,
            cols: a.dim,
            qubits: qubit_count,
        });
    }
    let mut terms = vec![];
    let count = 4usize.pow(qubit_count as u32);
    for code in 0..count {
        let mut letters = Vec::with_capacity(qubit_count);
        let mut rem = code;
        for _ in 0..qubit_count {
            letters.push(match rem % 4 {
                0 => PauliLetter::I,
                1 => PauliLetter::X,
                2 => PauliLetter::Y,
                _ => PauliLetter::Z,
            });
            rem /= 4;
        }
        let s = PauliString::new(letters);
        // Tr[P A] = sum_b phase_b * A[b, b'] where P|b> = phase_b |b'>
        let mut tr = C64::new(0.0, 0.0);
        for b in 0..dim {
            let (b_out, phase) = s.apply_to_basis(b);
            tr += phase * a[(b, b_out)];
        }
        let coeff = tr / dim as f64;
        if coeff.norm() >= COEFF_EPS {
            terms.push((coeff, s));
        }
    }
    PauliSum::from_terms(qubit_count, terms)
}
