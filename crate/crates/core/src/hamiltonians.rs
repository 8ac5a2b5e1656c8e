//! Spin Hamiltonians as weighted Pauli strings, their dense realizations and spectra.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, IM, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis. Qubit 0 is the leftmost factor and
/// the most significant bit of a basis index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Self {
        PauliString { factors }
    }

    /// Identity everywhere except the listed (qubit, Pauli) pairs.
    pub fn sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut factors = vec![Pauli::I; n];
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} out of range for {n} qubits"
                )));
            }
            factors[q] = p;
        }
        Ok(PauliString { factors })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn weight(&self) -> usize {
        self.factors.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
    }

    /// Bit masks (flip, phase) plus the number of Y factors.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let n = self.factors.len();
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut ny = 0u32;
        for (q, p) in self.factors.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    phase |= bit;
                    ny += 1;
                }
                Pauli::Z => phase |= bit,
            }
        }
        (flip, phase, ny)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli label '{c}' in \"{s}\"")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString { factors })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.factors {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Locality data of a split Hamiltonian H = H0 + V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityMetadata {
    /// max number of qubits any term acts on
    pub k: usize,
    /// max number of terms touching a qubit, counted separately in H0 and V
    pub g: usize,
    /// max |coefficient| in H0
    pub h: f64,
    /// max |coefficient| in V
    pub v: f64,
    /// number of terms in V
    #[serde(rename = "M")]
    pub m: usize,
}

impl LocalityMetadata {
    pub fn from_split(h0: &PauliSum, v: &PauliSum) -> Result<Self> {
        if h0.n != v.n {
            return Err(Error::DimensionMismatch {
                expected: h0.n,
                found: v.n,
            });
        }
        let live = |s: &PauliSum| -> Vec<(f64, PauliString)> {
            s.terms
                .iter()
                .filter(|(c, p)| *c != 0.0 && p.weight() > 0)
                .cloned()
                .collect()
        };
        let t0 = live(h0);
        let tv = live(v);
        let k = t0.iter().chain(tv.iter()).map(|(_, p)| p.weight()).max().unwrap_or(0);
        let touching = |terms: &[(f64, PauliString)], q: usize| {
            terms.iter().filter(|(_, p)| p.factors[q] != Pauli::I).count()
        };
        let g = (0..h0.n)
            .map(|q| touching(&t0, q).max(touching(&tv, q)))
            .max()
            .unwrap_or(0);
        let maxc = |terms: &[(f64, PauliString)]| terms.iter().fold(0.0f64, |a, (c, _)| a.max(c.abs()));
        Ok(LocalityMetadata {
            k,
            g,
            h: maxc(&t0),
            v: maxc(&tv),
            m: tv.len(),
        })
    }
}

/// Real-weighted sum of Pauli strings on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
    locality: Option<LocalityMetadata>,
}

impl PauliSum {
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("qubit count must be positive".into()));
        }
        for (c, p) in &terms {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient on {p}")));
            }
        }
        Ok(PauliSum {
            n,
            terms,
            locality: None,
        })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn locality(&self) -> Option<&LocalityMetadata> {
        self.locality.as_ref()
    }

    pub fn with_locality(mut self, meta: LocalityMetadata) -> Self {
        self.locality = Some(meta);
        self
    }

    /// Sum of two operators on the same register; locality metadata is that of the split.
    pub fn plus(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let meta = LocalityMetadata::from_split(self, other)?;
        Ok(PauliSum::new(self.n, terms)?.with_locality(meta))
    }

    pub fn scaled(&self, s: f64) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self.terms.iter().map(|(c, p)| (c * s, p.clone())).collect(),
            locality: None,
        }
    }

    pub fn to_dense(&self) -> DenseHermitian {
        let dim = self.dim();
        let mut m = CMat::zeros(dim, dim);
        for (c, p) in &self.terms {
            let (flip, phase, ny) = p.masks();
            let base = C64::new(*c, 0.0) * IM.powu(ny);
            for col in 0..dim {
                let row = col ^ flip;
                // Y|b> = i(-1)^b |1-b>, Z|b> = (-1)^b |b>
                let sign = if (col & phase).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                m[(row, col)] += base * sign;
            }
        }
        DenseHermitian { matrix: m }
    }

    /// Compiled form for repeated matrix-free application.
    pub fn compile(&self) -> CompiledPauliSum {
        let dim = self.dim();
        let mut diagonal = vec![0.0; dim];
        let mut offdiag: Vec<(usize, usize, C64)> = Vec::new();
        for (c, p) in &self.terms {
            let (flip, phase, ny) = p.masks();
            if flip == 0 {
                for (b, d) in diagonal.iter_mut().enumerate() {
                    let sign = if (b & phase).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    *d += c * sign;
                }
            } else {
                offdiag.push((flip, phase, C64::new(*c, 0.0) * IM.powu(ny)));
            }
        }
        CompiledPauliSum {
            dim,
            diagonal,
            offdiag,
        }
    }

    pub fn from_json(text: &str) -> Result<PauliSum> {
        let doc: PauliSumDoc = serde_json::from_str(text)?;
        doc.build()
    }

    pub fn to_doc(&self) -> PauliSumDoc {
        PauliSumDoc {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(c, p)| TermDoc {
                    coeff: *c,
                    pauli: p.to_string(),
                })
                .collect(),
        }
    }
}

/// Matrix-free Pauli sum: diagonal part plus bit-flip terms.
#[derive(Clone, Debug)]
pub struct CompiledPauliSum {
    dim: usize,
    diagonal: Vec<f64>,
    offdiag: Vec<(usize, usize, C64)>,
}

impl CompiledPauliSum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// out += scale * H * input, for one vector of length dim.
    pub fn apply_add(&self, input: &[C64], out: &mut [C64], scale: C64) {
        for ((o, x), d) in out.iter_mut().zip(input).zip(&self.diagonal) {
            *o += scale * *d * *x;
        }
        for &(flip, phase, c) in &self.offdiag {
            let cs = c * scale;
            for (col, x) in input.iter().enumerate() {
                let v = if (col & phase).count_ones() % 2 == 1 { -cs } else { cs };
                out[col ^ flip] += v * *x;
            }
        }
    }

    /// Upper bound on the spectral norm (sum of |coefficients| after compilation).
    pub fn norm_bound(&self) -> f64 {
        let d = self.diagonal.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        d + self.offdiag.iter().map(|(_, _, c)| c.norm()).sum::<f64>()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: f64,
    pub pauli: String,
}

/// JSON form `{"n": 3, "terms": [{"coeff": 1.0, "pauli": "ZII"}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PauliSumDoc {
    pub n: usize,
    pub terms: Vec<TermDoc>,
}

impl PauliSumDoc {
    pub fn build(&self) -> Result<PauliSum> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.coeff, t.pauli.parse::<PauliString>()?)))
            .collect::<Result<Vec<_>>>()?;
        PauliSum::new(self.n, terms)
    }
}

/// A Hermitian matrix checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHermitian {
    matrix: CMat,
}

impl DenseHermitian {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let scale = linalg::max_abs(&matrix).max(1.0);
        let deviation = linalg::hermitian_deviation(&matrix);
        if deviation > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(DenseHermitian { matrix })
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMat::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        DenseHermitian { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn add(&self, other: &DenseHermitian) -> Result<DenseHermitian> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(DenseHermitian {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, s: f64) -> DenseHermitian {
        DenseHermitian {
            matrix: &self.matrix * C64::new(s, 0.0),
        }
    }
}

/// Eigenvalues (ascending) with the matching unitary of eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn reconstruct(&self) -> CMat {
        linalg::spectral_function(&self.eigenvalues, &self.eigenvectors, |l| C64::new(l, 0.0))
    }

    /// Spectrum of a diagonal operator given by its diagonal, in index order of
    /// the sorted values.
    pub fn from_diagonal(d: &[f64]) -> Spectrum {
        let n = d.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let mut q = CMat::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            q[(i, col)] = ONE;
        }
        Spectrum {
            eigenvalues: order.iter().map(|&i| d[i]).collect(),
            eigenvectors: q,
        }
    }
}

pub fn build_tfim(n: usize, field: f64, coupling: f64) -> Result<PauliSum> {
    let (h0, v) = build_tfim_split(n, field, coupling)?;
    h0.plus(&v)
}

/// TFIM split into the field part `field * sum Z_j` and the coupling part
/// `-coupling * sum X_j X_{j+1}` on an open chain.
pub fn build_tfim_split(n: usize, field: f64, coupling: f64) -> Result<(PauliSum, PauliSum)> {
    if n == 0 {
        return Err(Error::InvalidArgument("TFIM needs at least one qubit".into()));
    }
    let h0_terms = (0..n)
        .map(|j| Ok((field, PauliString::sparse(n, &[(j, Pauli::Z)])?)))
        .collect::<Result<Vec<_>>>()?;
    let v_terms = (0..n.saturating_sub(1))
        .map(|j| Ok((-coupling, PauliString::sparse(n, &[(j, Pauli::X), (j + 1, Pauli::X)])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((PauliSum::new(n, h0_terms)?, PauliSum::new(n, v_terms)?))
}

pub fn diagonalize(h: &DenseHermitian) -> Spectrum {
    let (eigenvalues, eigenvectors) = linalg::eigh(h.matrix());
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

pub fn diagonalize_sum(h: &PauliSum) -> Spectrum {
    diagonalize(&h.to_dense())
}

pub fn conjugate(h: &DenseHermitian) -> DenseHermitian {
    DenseHermitian {
        matrix: linalg::conj_matrix(&h.matrix),
    }
}

pub fn spectral_norm(h: &DenseHermitian) -> f64 {
    let s = diagonalize(h);
    if s.dim() == 0 {
        return 0.0;
    }
    s.min().abs().max(s.max().abs())
}
