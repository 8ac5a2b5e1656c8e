use serde::{Deserialize, Serialize};

use crate::approx::FourierSeries;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, IM};

use super::phases::QspPhaseSet;
use super::BlockEncodingResult;

/// f(theta) = (1/alpha) sum_j alpha_j e^{ij theta} written as p1(y) + sin(theta/2) q2(y)
/// with y = cos(theta/2).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebyshevSplit {
    /// coefficients of T_0, T_2, ..., T_2J
    pub p1: Vec<f64>,
    /// coefficients of U_1, U_3, ..., U_{2J-1}
    pub q2: Vec<f64>,
    pub alpha: f64,
}

/// sum_j c_j T_{2j}(y) by the three-term recurrence.
pub(crate) fn even_t(coeffs: &[f64], y: f64) -> f64 {
    // (lo, hi) = (T_2k, T_2k+1)
    let (mut lo, mut hi) = (1.0, y);
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            let t2 = 2.0 * y * hi - lo;
            hi = 2.0 * y * t2 - hi;
            lo = t2;
        }
        acc += c * lo;
    }
    acc
}

/// sum_j c_j U_{2j-1}(y), j = 1..=len.
pub(crate) fn odd_u(coeffs: &[f64], y: f64) -> f64 {
    // (lo, hi) = (U_2k-2, U_2k-1)
    let (mut lo, mut hi) = (1.0, 2.0 * y);
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        if k > 0 {
            let u2 = 2.0 * y * hi - lo;
            hi = 2.0 * y * u2 - hi;
            lo = u2;
        }
        acc += c * hi;
    }
    acc
}

impl ChebyshevSplit {
    pub fn j(&self) -> usize {
        self.p1.len() - 1
    }

    pub fn p1_at(&self, y: f64) -> f64 {
        even_t(&self.p1, y)
    }

    pub fn q2_at(&self, y: f64) -> f64 {
        odd_u(&self.q2, y)
    }

    /// p1(cos(theta/2)) + sin(theta/2) q2(cos(theta/2)).
    pub fn reconstruct(&self, theta: f64) -> f64 {
        let x = theta / 2.0;
        self.p1_at(x.cos()) + x.sin() * self.q2_at(x.cos())
    }
}

pub fn chebyshev_split(series: &FourierSeries) -> Result<ChebyshevSplit> {
    split_coeffs(&series.coeffs)
}

/// Splits raw coefficients alpha_{-J..=J}; they must be conjugate symmetric.
pub fn split_coeffs(coeffs: &[C64]) -> Result<ChebyshevSplit> {
    if coeffs.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument("need 2J+1 coefficients".into()));
    }
    let jj = coeffs.len() / 2;
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let alpha: f64 = coeffs.iter().map(|c| c.norm()).sum();
    if alpha == 0.0 {
        return Err(Error::InvalidArgument("all coefficients are zero".into()));
    }
    for j in 0..=jj {
        let dev = (coeffs[jj - j] - coeffs[jj + j].conj()).norm();
        if dev > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "coefficients are not conjugate symmetric at j = {j} (deviation {dev:e})"
            )));
        }
    }
    let mut p1 = vec![coeffs[jj].re / alpha];
    let mut q2 = Vec::with_capacity(jj);
    for j in 1..=jj {
        p1.push(2.0 * coeffs[jj + j].re / alpha);
        q2.push(-2.0 * coeffs[jj + j].im / alpha);
    }
    Ok(ChebyshevSplit { p1, q2, alpha })
}

pub type Su2 = [[C64; 2]; 2];

/// e^{i phi_0 Z} W e^{i phi_1 Z} ... W e^{i phi_d Z} with W = e^{i x X}.
pub fn qsp_matrix(phases: &[f64], x: f64) -> Su2 {
    let (c, s) = (x.cos(), x.sin());
    let w = [[C64::new(c, 0.0), C64::new(0.0, s)], [C64::new(0.0, s), C64::new(c, 0.0)]];
    let mul = |a: &Su2, b: &Su2| -> Su2 {
        let mut r = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        r
    };
    let rz = |p: f64| -> Su2 { [[C64::from_polar(1.0, p), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::from_polar(1.0, -p)]] };
    let mut v = rz(phases[0]);
    for &p in &phases[1..] {
        v = mul(&mul(&v, &w), &rz(p));
    }
    v
}

// ---- circuit on (qsp ancilla) x (system), ancilla most significant

fn rz(v: &mut [C64], d: usize, phi: f64) {
    let (e0, e1) = (C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi));
    v[..d].iter_mut().for_each(|z| *z *= e0);
    v[d..].iter_mut().for_each(|z| *z *= e1);
}

fn hadamard(v: &mut [C64], d: usize) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (lo, hi) = v.split_at_mut(d);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = (x + y) * r;
        *b = (x - y) * r;
    }
}

fn controlled(v: &mut [C64], d: usize, on: usize, m: &CMat) {
    let blk = CVec::from_column_slice(&v[on * d..(on + 1) * d]);
    let out = m * blk;
    v[on * d..(on + 1) * d].copy_from_slice(out.as_slice());
}

// signal step k (1-based): odd steps are H C0(U) H, even steps H C1(U^dag) H
fn signal(v: &mut [C64], d: usize, k: usize, u: &CMat, udag: &CMat, adjoint: bool) {
    hadamard(v, d);
    match (k % 2 == 1, adjoint) {
        (true, false) => controlled(v, d, 0, u),
        (true, true) => controlled(v, d, 0, udag),
        (false, false) => controlled(v, d, 1, udag),
        (false, true) => controlled(v, d, 1, u),
    }
    hadamard(v, d);
}

fn apply_v(v: &mut [C64], d: usize, phases: &[f64], u: &CMat, udag: &CMat) {
    let n = phases.len() - 1;
    rz(v, d, phases[n]);
    for k in 1..=n {
        signal(v, d, k, u, udag, false);
        rz(v, d, phases[n - k]);
    }
}

fn apply_v_adjoint(v: &mut [C64], d: usize, phases: &[f64], u: &CMat, udag: &CMat) {
    let n = phases.len() - 1;
    rz(v, d, -phases[0]);
    for k in (1..=n).rev() {
        signal(v, d, k, u, udag, true);
        rz(v, d, -phases[n - k + 1]);
    }
}

// factor * X on the ancilla
fn scaled_x(v: &mut [C64], d: usize, factor: C64) {
    let (lo, hi) = v.split_at_mut(d);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = y * factor;
        *b = x * factor;
    }
}

/// Four-term combination (V1 + V1^dag + V2(-iX) + (iX)V2^dag)/4 on two selection
/// qubits and one signal qubit; the top block is X/(2 alpha)|psi>.
pub fn simulate_qsp(series: &FourierSeries, phases: &QspPhaseSet, u: &CMat, psi: &CVec) -> Result<BlockEncodingResult> {
    let d = psi.len();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
    }
    let deviation = linalg::unitary_deviation(u);
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    if !phases.certified() {
        return Err(Error::Certification(format!(
            "phase set residuals {:e}, {:e} exceed the acceptance gate",
            phases.residual1, phases.residual2
        )));
    }
    if phases.phases1.len() != 2 * series.j() + 1 || phases.phases2.len() != 2 * series.j() + 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * series.j() + 1,
            found: phases.phases1.len(),
        });
    }
    let udag = u.adjoint();
    let mut out = CVec::zeros(8 * d);
    // selection register after H (x) H: each branch carries amplitude 1/2
    for sel in 0usize..4 {
        let mut branch = vec![C64::new(0.0, 0.0); 2 * d];
        for s in 0..d {
            branch[s] = psi[s] * 0.5;
        }
        match sel {
            0 => apply_v(&mut branch, d, &phases.phases1, u, &udag),
            1 => apply_v_adjoint(&mut branch, d, &phases.phases1, u, &udag),
            2 => {
                scaled_x(&mut branch, d, -IM);
                apply_v(&mut branch, d, &phases.phases2, u, &udag);
            }
            _ => {
                apply_v_adjoint(&mut branch, d, &phases.phases2, u, &udag);
                scaled_x(&mut branch, d, IM);
            }
        }
        // H (x) H back: <sel'|H2|sel> = (-1)^{popcount(sel & sel')}/2
        for selp in 0usize..4 {
            let sign = if (sel & selp).count_ones() % 2 == 1 { -0.5 } else { 0.5 };
            for (k, z) in branch.iter().enumerate() {
                out[selp * 2 * d + k] += z * sign;
            }
        }
    }
    Ok(BlockEncodingResult::from_output(out, d, 3, 2.0 * phases.alpha))
}
