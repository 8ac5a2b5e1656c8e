use crate::approx::FourierSeries;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE, ZERO};

use super::BlockEncodingResult;

/// Ancilla qubits m for 2J+1 coefficients: smallest with 2^m >= 2J + 2.
pub fn ancilla_qubits(n_coeffs: usize) -> usize {
    let mut m = 0;
    while (1usize << m) < n_coeffs + 1 {
        m += 1;
    }
    m
}

/// Unitary whose first column is the unit vector `b` (a Householder reflector up to phase).
pub fn prepare_unitary(b: &[C64]) -> Result<CMat> {
    let n = b.len();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0 || (nb - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("prepare vector must be a unit vector (norm {nb})")));
    }
    let c = if b[0].norm() > 0.0 { b[0].conj() / b[0].norm() } else { ONE };
    // H = I - 2uu^dag/|u|^2 maps c*b to e0, so B = conj(c) H sends e0 to b
    let mut u = CVec::from_fn(n, |i, _| -c * b[i]);
    u[0] += ONE;
    let uu = u.norm_squared();
    let mut h = linalg::identity(n);
    if uu > 1e-30 {
        h -= (&u * u.adjoint()) * C64::new(2.0 / uu, 0.0);
    }
    Ok(h * c.conj())
}

/// LCU circuit for X = sum_j coeffs[j + J] U^j applied to psi.
///
/// Prepare on m ancillas, controlled U^(2^t) on ancilla bit t, unprepare with the
/// transpose, then U^(-J) on the system.
pub fn simulate_lcu_coeffs(coeffs: &[C64], u: &CMat, psi: &CVec) -> Result<BlockEncodingResult> {
    if coeffs.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument("need an odd number (2J+1) of coefficients".into()));
    }
    let d = psi.len();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
    }
    let deviation = linalg::unitary_deviation(u);
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    let jj = coeffs.len() / 2;
    let alpha: f64 = coeffs.iter().map(|c| c.norm()).sum();
    if alpha == 0.0 {
        return Err(Error::InvalidArgument("all coefficients are zero".into()));
    }
    let m = ancilla_qubits(coeffs.len());
    let na = 1usize << m;
    let mut b = vec![ZERO; na];
    for (k, c) in coeffs.iter().enumerate() {
        // principal branch
        b[k] = (c / alpha).sqrt();
    }
    let bmat = prepare_unitary(&b)?;

    // after B: sum_a b_a |a>|psi>
    let mut state = CVec::zeros(na * d);
    for a in 0..na {
        for s in 0..d {
            state[a * d + s] = b[a] * psi[s];
        }
    }
    let mut power = u.clone();
    for t in 0..m {
        for a in 0..na {
            if a >> t & 1 == 1 {
                let blk = state.rows(a * d, d).into_owned();
                state.rows_mut(a * d, d).copy_from(&(&power * blk));
            }
        }
        if t + 1 < m {
            power = &power * &power;
        }
    }
    // B^T on the ancillas: new[a'] = sum_a B[a, a'] old[a]
    let mut out = CVec::zeros(na * d);
    for ap in 0..na {
        for a in 0..na {
            let w = bmat[(a, ap)];
            if w != ZERO {
                for s in 0..d {
                    out[ap * d + s] += w * state[a * d + s];
                }
            }
        }
    }
    let back = linalg::matrix_power(&u.adjoint(), jj as u64);
    for a in 0..na {
        let blk = out.rows(a * d, d).into_owned();
        out.rows_mut(a * d, d).copy_from(&(&back * blk));
    }
    Ok(BlockEncodingResult::from_output(out, d, m, alpha))
}

pub fn simulate_lcu(series: &FourierSeries, u: &CMat, psi: &CVec) -> Result<BlockEncodingResult> {
    simulate_lcu_coeffs(&series.coeffs, u, psi)
}
