use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::approx::FourierSeries;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::optimize::{self, LbfgsOptions};

use super::qsp::{even_t, odd_u, qsp_matrix, split_coeffs};

/// Largest accepted reconstruction error on the verification grid.
pub const RESIDUAL_GATE: f64 = 1e-6;
const VERIFY_POINTS: usize = 2001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// Re <0|V|0> = sum_j c_j T_2j(y)
    First,
    /// Im <0|V|1> = sqrt(1 - y^2) sum_j c_j U_{2j-1}(y)
    Second,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseSolution {
    pub phases: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// the first and last phase kept their initial values
    pub endpoints_pinned: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QspPhaseSet {
    pub phases1: Vec<f64>,
    pub phases2: Vec<f64>,
    pub residual1: f64,
    pub residual2: f64,
    pub target_p1: Vec<f64>,
    pub target_q2: Vec<f64>,
    pub alpha: f64,
}

impl QspPhaseSet {
    pub fn certified(&self) -> bool {
        self.residual1 <= RESIDUAL_GATE && self.residual2 <= RESIDUAL_GATE
    }
}

fn target_value(coeffs: &[f64], kind: TargetKind, y: f64) -> f64 {
    match kind {
        TargetKind::First => even_t(coeffs, y),
        TargetKind::Second => (1.0 - y * y).max(0.0).sqrt() * odd_u(coeffs, y),
    }
}

fn model_value(phases: &[f64], kind: TargetKind, y: f64) -> f64 {
    let v = qsp_matrix(phases, y.clamp(-1.0, 1.0).acos());
    match kind {
        TargetKind::First => v[0][0].re,
        TargetKind::Second => v[0][1].im,
    }
}

/// Max reconstruction error on Chebyshev nodes over [-1, 1].
pub fn reconstruction_residual(phases: &[f64], coeffs: &[f64], kind: TargetKind) -> f64 {
    (0..VERIFY_POINTS)
        .map(|k| {
            let y = ((2 * k + 1) as f64 * PI / (2 * VERIFY_POINTS) as f64).cos();
            (model_value(phases, kind, y) - target_value(coeffs, kind, y)).abs()
        })
        .fold(0.0, f64::max)
}

// Loss 1/2 sum (model - target)^2 over the fitting grid and its gradient in all phases.
struct Objective {
    kind: TargetKind,
    xs: Vec<(f64, f64)>,
    targets: Vec<f64>,
    // scratch: suffix vectors s_l = B_l ... B_d e_c
    suffix: Vec<[C64; 2]>,
}

impl Objective {
    fn eval(&mut self, phases: &[f64], grad: &mut [f64]) -> f64 {
        let d = phases.len() - 1;
        grad.iter_mut().for_each(|g| *g = 0.0);
        self.suffix.resize(d + 2, [C64::new(0.0, 0.0); 2]);
        let col = match self.kind {
            TargetKind::First => 0,
            TargetKind::Second => 1,
        };
        let rot: Vec<(C64, C64)> = phases.iter().map(|&p| (C64::from_polar(1.0, p), C64::from_polar(1.0, -p))).collect();
        let mut loss = 0.0;
        for (&(c, s), &t) in self.xs.iter().zip(&self.targets) {
            let is = C64::new(0.0, s);
            // B_l = R(phi_l) W for l < d, B_d = R(phi_d)
            let mut v = [C64::new(0.0, 0.0); 2];
            v[col] = C64::new(1.0, 0.0);
            self.suffix[d + 1] = v;
            v = [rot[d].0 * v[0], rot[d].1 * v[1]];
            self.suffix[d] = v;
            for l in (0..d).rev() {
                let w0 = v[0] * c + v[1] * is;
                let w1 = v[0] * is + v[1] * c;
                v = [rot[l].0 * w0, rot[l].1 * w1];
                self.suffix[l] = v;
            }
            let entry = v[0];
            let value = match self.kind {
                TargetKind::First => entry.re,
                TargetKind::Second => entry.im,
            };
            let r = value - t;
            loss += 0.5 * r * r;
            // row vector r_l = e_0^T B_0 ... B_{l-1}
            let mut row = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            for l in 0..=d {
                let sl = self.suffix[l];
                let dv = C64::new(0.0, 1.0) * (row[0] * sl[0] - row[1] * sl[1]);
                grad[l] += r * match self.kind {
                    TargetKind::First => dv.re,
                    TargetKind::Second => dv.im,
                };
                if l < d {
                    let a0 = row[0] * rot[l].0;
                    let a1 = row[1] * rot[l].1;
                    row = [a0 * c + a1 * is, a0 * is + a1 * c];
                }
            }
        }
        loss
    }
}

fn initial_phases(kind: TargetKind, d: usize) -> Vec<f64> {
    let mut p = vec![0.0; d + 1];
    match kind {
        TargetKind::First => {
            p[0] = FRAC_PI_4;
            p[d] = FRAC_PI_4;
        }
        TargetKind::Second => p[d] = -FRAC_PI_2,
    }
    p
}

/// Finds 2J+1 phases whose QSP sequence reproduces the target polynomial.
///
/// `coeffs` are over T_0..T_2J for `First` and over U_1..U_{2J-1} for `Second`.
/// The first attempt keeps the endpoint phases at their initial values and
/// optimizes the interior; if that fails the endpoints are freed as well.
pub fn solve_qsp_phases(coeffs: &[f64], kind: TargetKind) -> Result<PhaseSolution> {
    let jj = match kind {
        TargetKind::First => coeffs.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("empty target".into()))?,
        TargetKind::Second => coeffs.len(),
    };
    let d = 2 * jj;
    let k = 2 * (jj + 1);
    let xs: Vec<(f64, f64)> = (1..=k)
        .map(|i| {
            // positive-half Chebyshev nodes; parity covers y < 0
            let y = ((2 * i - 1) as f64 * PI / (4 * k) as f64).cos();
            (y, (1.0 - y * y).sqrt())
        })
        .collect();
    let targets = xs.iter().map(|&(y, _)| target_value(coeffs, kind, y)).collect();
    let mut obj = Objective {
        kind,
        xs,
        targets,
        suffix: Vec::new(),
    };
    let opts = LbfgsOptions::default();
    let init = initial_phases(kind, d);

    let mut best: Option<PhaseSolution> = None;
    let mut total_iter = 0;
    for pinned in [true, false] {
        if pinned && d < 2 {
            continue;
        }
        let (phases, iterations) = if pinned {
            let interior = &init[1..d];
            let mut full = init.clone();
            let mut g_full = vec![0.0; d + 1];
            let out = optimize::minimize(
                |x: &[f64], g: &mut [f64]| {
                    full[1..d].copy_from_slice(x);
                    let f = obj.eval(&full, &mut g_full);
                    g.copy_from_slice(&g_full[1..d]);
                    f
                },
                interior,
                &opts,
            );
            let mut p = init.clone();
            p[1..d].copy_from_slice(&out.x);
            (p, out.iterations)
        } else {
            let out = optimize::minimize(|x: &[f64], g: &mut [f64]| obj.eval(x, g), &init, &opts);
            (out.x, out.iterations)
        };
        total_iter += iterations;
        let residual = reconstruction_residual(&phases, coeffs, kind);
        let sol = PhaseSolution {
            phases,
            residual,
            iterations: total_iter,
            endpoints_pinned: pinned,
        };
        if residual <= RESIDUAL_GATE {
            return Ok(sol);
        }
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(sol);
        }
    }
    let best = best.expect("at least one attempt runs");
    Err(Error::SolverNonConvergence {
        iterations: total_iter,
        best_residual: best.residual,
    })
}

pub fn solve_phase_set(series: &FourierSeries) -> Result<QspPhaseSet> {
    let split = split_coeffs(&series.coeffs)?;
    let s1 = solve_qsp_phases(&split.p1, TargetKind::First)?;
    let s2 = solve_qsp_phases(&split.q2, TargetKind::Second)?;
    Ok(QspPhaseSet {
        phases1: s1.phases,
        phases2: s2.phases,
        residual1: s1.residual,
        residual2: s2.residual,
        target_p1: split.p1,
        target_q2: split.q2,
        alpha: split.alpha,
    })
}
