//! Fourier-series approximation of e^{-beta W/2} and its certification.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParameters {
    pub beta: f64,
    pub w_max: f64,
    pub w_l: f64,
    pub eps: f64,
    /// smoothing width of the erf-regularized target
    pub big_delta: f64,
    /// period of the underlying Fourier expansion in units of the scaled work
    pub z: f64,
    /// angular step between frequencies
    pub delta: f64,
    /// truncation order; frequencies run over -j..=j
    pub j: usize,
}

/// Smallest admissible parameters for accuracy `eps` on [w_l, w_max].
pub fn select_parameters(beta: f64, w_max: f64, w_l: f64, eps: f64) -> Result<SeriesParameters> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    if !(w_max >= w_l) {
        return Err(Error::InvalidArgument(format!("need w_max >= w_l, got {w_max} < {w_l}")));
    }
    let big_delta = 4f64.max((6.0 / eps).ln().max(0.0).sqrt());
    let z = beta * (w_max - w_l) + 2.0 * big_delta * big_delta;
    let delta = 2.0 * PI / z;
    let j = ((z.powf(1.5) / 3.0).ceil() as usize).saturating_sub(1);
    Ok(SeriesParameters {
        beta,
        w_max,
        w_l,
        eps,
        big_delta,
        z,
        delta,
        j,
    })
}

/// Fourier transform of the regularized target x -> e^{-x}(1 + erf(Delta + x))/2.
pub fn transform(omega: f64, big_delta: f64) -> C64 {
    let d = big_delta + 0.5;
    let mag = (d - (omega * omega + 1.0) / 4.0).exp() / ((2.0 * PI).sqrt() * (1.0 + omega * omega));
    C64::new(1.0, -omega) * C64::from_polar(mag, omega * d)
}

/// Regularized target e^{-x}(1 + erf(Delta + x))/2.
pub fn smoothed_target(x: f64, big_delta: f64) -> f64 {
    (-x).exp() * (1.0 + libm::erf(big_delta + x)) / 2.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierSeries {
    pub params: SeriesParameters,
    /// alpha_{-J..=J}; coefficient of U^j sits at index j + J
    pub coeffs: Vec<C64>,
    pub l1: f64,
}

impl FourierSeries {
    pub fn j(&self) -> usize {
        self.params.j
    }

    pub fn coeff(&self, j: i64) -> C64 {
        self.coeffs[(j + self.params.j as i64) as usize]
    }

    /// Phase per unit of work carried by U = e^{i delta beta W / 2}.
    pub fn phase_rate(&self) -> f64 {
        self.params.delta * self.params.beta / 2.0
    }

    /// Sum of alpha_j e^{i j delta beta w / 2}.
    pub fn evaluate(&self, w: f64) -> C64 {
        evaluate_coeffs(&self.coeffs, self.phase_rate() * w)
    }

    pub fn max_conjugate_asymmetry(&self) -> f64 {
        let jj = self.params.j as i64;
        (0..=jj)
            .map(|j| (self.coeff(-j) - self.coeff(j).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// sum_j c_j e^{i j theta} for coefficients indexed -J..=J.
pub fn evaluate_coeffs(coeffs: &[C64], theta: f64) -> C64 {
    let jj = (coeffs.len() / 2) as i64;
    let step = C64::from_polar(1.0, theta);
    let mut e = C64::from_polar(1.0, -(jj as f64) * theta);
    let mut acc = C64::new(0.0, 0.0);
    for c in coeffs {
        acc += c * e;
        e *= step;
    }
    acc
}

pub fn build_series(params: &SeriesParameters) -> FourierSeries {
    let p = params;
    let jj = p.j as i64;
    let pref = (-p.beta * p.w_l / 2.0).exp() * p.delta / (2.0 * PI).sqrt();
    let shift = p.delta * p.beta * p.w_l / 2.0;
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * p.j + 1];
    for j in 0..=jj {
        let om = j as f64 * p.delta;
        let a = transform(om, p.big_delta) * C64::from_polar(pref, -(j as f64) * shift);
        coeffs[(jj + j) as usize] = a;
        coeffs[(jj - j) as usize] = a.conj();
    }
    let l1 = coeffs.iter().map(|c| c.norm()).sum();
    FourierSeries {
        params: *p,
        coeffs,
        l1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPoint {
    pub w: f64,
    pub error: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CertificationReport {
    pub points: Vec<CertifiedPoint>,
    pub violations: usize,
    /// largest error / bound ratio seen
    pub worst_ratio: f64,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks |e^{-beta w/2} - X(w)| against (eps/3) e^{-beta w/2} for w >= w_l and
/// 2 e^{-beta w/2} below w_l, for every listed eigenvalue of W.
pub fn certify_constraints(series: &FourierSeries, eigenvalues: &[f64]) -> CertificationReport {
    let p = &series.params;
    let mut report = CertificationReport::default();
    for &w in eigenvalues {
        let exact = (-p.beta * w / 2.0).exp();
        let error = (exact - series.evaluate(w)).norm();
        let bound = if w >= p.w_l { p.eps / 3.0 * exact } else { 2.0 * exact };
        let passed = error <= bound;
        if !passed {
            report.violations += 1;
        }
        report.worst_ratio = report.worst_ratio.max(error / bound);
        report.points.push(CertifiedPoint { w, error, bound, passed });
    }
    report
}

/// Gaussian-quadrature series for W >= 0: e^{-beta w/2} ~ sum_j c_j e^{i omega_j sqrt(beta w)}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HsSeries {
    pub beta: f64,
    pub w_max: f64,
    pub eps: f64,
    pub delta: f64,
    pub j: usize,
    /// c_{-J..=J}
    pub coeffs: Vec<f64>,
}

impl HsSeries {
    pub fn coeff_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn evaluate(&self, w: f64) -> C64 {
        let y = (self.beta * w.max(0.0)).sqrt();
        let jj = self.j as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| C64::from_polar(*c, (k as i64 - jj) as f64 * self.delta * y))
            .sum()
    }
}

pub fn hs_parameters(beta: f64, w_max: f64, eps: f64) -> Result<HsSeries> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    if !(beta >= 0.0) || !(w_max >= 0.0) {
        return Err(Error::InvalidArgument("need beta >= 0 and w_max >= 0".into()));
    }
    let tail = (6.0 * (2.0 / eps).ln().max(0.0)).sqrt();
    let span = (beta * w_max).sqrt() + tail;
    let delta = 1.0 / (2.0 * PI * span);
    let j = (2.0 * PI * span * tail).ceil() as usize;
    let jj = j as i64;
    let coeffs = (-jj..=jj)
        .map(|k| {
            let om = k as f64 * delta;
            delta / (2.0 * PI).sqrt() * (-om * om / 2.0).exp()
        })
        .collect();
    Ok(HsSeries {
        beta,
        w_max,
        eps,
        delta,
        j,
        coeffs,
    })
}
