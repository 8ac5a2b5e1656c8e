//! Gibbs states, their two-copy purifications and free energies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::Spectrum;
use crate::linalg::{self, CMat, CVec, C64, ZERO};

/// Normalized density matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub matrix: CMat,
}

impl DensityMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let deviation = linalg::hermitian_deviation(&matrix);
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace {tr} != 1")));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = linalg::eigh(&self.matrix);
        vals[0]
    }
}

/// State vector on a register made of `factor_dims` (first factor most significant).
#[derive(Clone, Debug)]
pub struct PureState {
    pub amplitudes: CVec,
    pub factor_dims: Vec<usize>,
    pub normalized: bool,
}

impl PureState {
    pub fn new(amplitudes: CVec, factor_dims: Vec<usize>) -> Result<Self> {
        let total: usize = factor_dims.iter().product();
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: amplitudes.len(),
            });
        }
        let normalized = (amplitudes.norm() - 1.0).abs() <= 1e-12;
        Ok(PureState {
            amplitudes,
            factor_dims,
            normalized,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n = self.amplitudes.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        self.amplitudes /= C64::new(n, 0.0);
        self.normalized = true;
        Ok(self)
    }

    /// Reduced state on the first factor of a two-factor register.
    pub fn reduce_to_first(&self) -> Result<DensityMatrix> {
        if self.factor_dims.len() != 2 {
            return Err(Error::InvalidArgument("partial trace needs a bipartite state".into()));
        }
        let m = reshape(&self.amplitudes, self.factor_dims[0], self.factor_dims[1]);
        let rho = &m * m.adjoint();
        let tr = rho.trace().re;
        DensityMatrix::new(rho / C64::new(tr, 0.0))
    }
}

/// psi[i * d2 + j] as a d1 x d2 matrix.
pub(crate) fn reshape(v: &CVec, d1: usize, d2: usize) -> CMat {
    CMat::from_fn(d1, d2, |i, j| v[i * d2 + j])
}

pub(crate) fn flatten(m: &CMat) -> CVec {
    let (d1, d2) = m.shape();
    CVec::from_fn(d1 * d2, |k, _| m[(k / d2, k % d2)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoData {
    pub beta: f64,
    pub ln_z0: f64,
    pub ln_z1: f64,
    pub z0: f64,
    pub z1: f64,
    pub delta_a: f64,
}

/// ln of sum e^{-beta e} evaluated with the minimum shifted out.
pub fn log_partition(eigenvalues: &[f64], beta: f64) -> f64 {
    let emin = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let s: f64 = eigenvalues.iter().map(|e| (-beta * (e - emin)).exp()).sum();
    s.ln() - beta * emin
}

/// Boltzmann probabilities e^{-beta e}/Z.
pub fn boltzmann_weights(eigenvalues: &[f64], beta: f64) -> Vec<f64> {
    let emin = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = eigenvalues.iter().map(|e| (-beta * (e - emin)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

pub fn thermal_state(spec: &Spectrum, beta: f64) -> Result<DensityMatrix> {
    check_beta(beta)?;
    let p = boltzmann_weights(&spec.eigenvalues, beta);
    let q = &spec.eigenvectors;
    let mut scaled = q.clone();
    for (j, pj) in p.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*pj);
    }
    Ok(DensityMatrix {
        matrix: scaled * q.adjoint(),
    })
}

/// sum_k sqrt(p_k) |phi_k>|phi_k*>.
pub fn purification(spec: &Spectrum, beta: f64) -> Result<PureState> {
    check_beta(beta)?;
    let n = spec.dim();
    let p = boltzmann_weights(&spec.eigenvalues, beta);
    let q = &spec.eigenvectors;
    // as an n x n matrix this is Q diag(sqrt p) Q^dagger
    let mut scaled = q.clone();
    for (j, pj) in p.iter().enumerate() {
        scaled.column_mut(j).scale_mut(pj.sqrt());
    }
    let m = scaled * q.adjoint();
    PureState::new(flatten(&m), vec![n, n])
}

pub fn free_energy_difference(spec0: &Spectrum, spec1: &Spectrum, beta: f64) -> Result<ThermoData> {
    check_beta(beta)?;
    let ln_z0 = log_partition(&spec0.eigenvalues, beta);
    let ln_z1 = log_partition(&spec1.eigenvalues, beta);
    let delta_a = if beta > 0.0 { -(ln_z1 - ln_z0) / beta } else { 0.0 };
    Ok(ThermoData {
        beta,
        ln_z0,
        ln_z1,
        z0: ln_z0.exp(),
        z1: ln_z1.exp(),
        delta_a,
    })
}

/// Rotation angle that puts cos(theta)|0> + sin(theta)|1> in Boltzmann proportion for H = Z.
pub fn product_angle(beta: f64) -> f64 {
    ((-beta / 2.0).exp() / (2.0 * beta.cosh()).sqrt()).acos()
}

/// Two-copy Gibbs state of sum_j Z_j built gate by gate: exp(-i theta Y) on every
/// system qubit, then a CNOT from system qubit j onto copy qubit j.
pub fn u0_product_circuit(n: usize, beta: f64) -> Result<PureState> {
    check_beta(beta)?;
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let total = 2 * n;
    let dim = 1usize << total;
    let theta = product_angle(beta);
    let (c, s) = (theta.cos(), theta.sin());
    let mut psi = vec![ZERO; dim];
    psi[0] = C64::new(1.0, 0.0);
    let bit = |q: usize| 1usize << (total - 1 - q);

    for q in 0..n {
        let b = bit(q);
        for i in 0..dim {
            if i & b == 0 {
                let (a0, a1) = (psi[i], psi[i | b]);
                psi[i] = a0 * c - a1 * s;
                psi[i | b] = a0 * s + a1 * c;
            }
        }
    }
    for q in 0..n {
        let (ctrl, tgt) = (bit(q), bit(n + q));
        for i in 0..dim {
            if i & ctrl != 0 && i & tgt == 0 {
                psi.swap(i, i | tgt);
            }
        }
    }
    PureState::new(CVec::from_vec(psi), vec![1 << n, 1 << n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_partition_is_shift_stable() {
        let e = [1000.0, 1001.0];
        let lz = log_partition(&e, 1.0);
        let expect = -1000.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((lz - expect).abs() < 1e-12);
    }

    #[test]
    fn product_angle_at_zero_temperature_limit() {
        assert!((product_angle(0.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }
}
