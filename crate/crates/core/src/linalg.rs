//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use faer::complex_native::c64;
use faer::Side;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const IM: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn unitary_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let prod = m.adjoint() * m;
    max_abs(&(prod - identity(m.nrows())))
}

/// Hermitian eigendecomposition, eigenvalues ascending.
///
/// Each eigenvector is rotated so that its largest-magnitude entry is real and
/// positive (ties go to the lowest index).
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    // symmetrize to kill roundoff asymmetry before handing it to the solver
    let herm = (m + m.adjoint()) * re(0.5);
    // nalgebra's symmetric_eigen can stall on large degenerate spectra, faer does not
    let fm = faer::Mat::<c64>::from_fn(n, n, |i, j| c64::new(herm[(i, j)].re, herm[(i, j)].im));
    let eig = fm.selfadjoint_eigendecomposition(Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    let evals: Vec<f64> = (0..n).map(|k| s.read(k).re).collect();
    let evecs = CMat::from_fn(n, n, |i, j| {
        let z = u.read(i, j);
        C64::new(z.re, z.im)
    });
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| evals[a].total_cmp(&evals[b]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        values.push(evals[k]);
        let v = evecs.column(k);
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, z) in v.iter().enumerate() {
            // small slack so that equal-magnitude entries resolve to the first
            if z.norm() > best_abs * (1.0 + 1e-12) {
                best_abs = z.norm();
                best = i;
            }
        }
        let phase = if best_abs > 0.0 {
            v[best].conj() / best_abs
        } else {
            ONE
        };
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    (values, vectors)
}

/// f(H) for Hermitian H given its eigendecomposition.
pub fn spectral_function(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let fl = f(lam);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    scaled * vectors.adjoint()
}

/// e^{i t H} for Hermitian H.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    spectral_function(&vals, &vecs, |l| C64::from_polar(1.0, t * l))
}

/// Largest singular value of an arbitrary matrix.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let (vals, _) = eigh(&gram);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// U^k for a square matrix by repeated squaring.
pub fn matrix_power(m: &CMat, mut k: u64) -> CMat {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

pub fn conj_matrix(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

pub fn basis_state(dim: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[k] = ONE;
    v
}
