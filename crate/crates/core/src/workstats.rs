//! Work statistics of a two-time energy measurement and the work cutoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{self, DenseHermitian, LocalityMetadata, Spectrum};
use crate::linalg::{self, CMat};
use crate::thermal::{self, ThermoData};

/// Transition probabilities below this are treated as exactly zero.
pub const TRANSITION_FLOOR: f64 = 1e-24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkPair {
    pub m: usize,
    pub n: usize,
    pub w: f64,
    pub p: f64,
    pub phase: f64,
}

/// Every (m, n) transition of the forward process.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorkTable {
    pub pairs: Vec<WorkPair>,
    pub beta: f64,
    pub delta_a: f64,
}

impl WorkTable {
    pub fn total_probability(&self) -> f64 {
        self.pairs.iter().map(|p| p.p).sum()
    }
}

/// Binned P(w), ascending in w, zero-mass bins removed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkDistribution {
    pub bins: Vec<(f64, f64)>,
}

impl WorkDistribution {
    pub fn total(&self) -> f64 {
        self.bins.iter().map(|b| b.1).sum()
    }

    pub fn w_min(&self) -> f64 {
        self.bins.first().map(|b| b.0).unwrap_or(0.0)
    }

    pub fn w_max(&self) -> f64 {
        self.bins.last().map(|b| b.0).unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.bins.iter().map(|(w, p)| w * p).sum()
    }

    /// Resolution used when comparing work values of this distribution.
    pub fn tolerance(&self) -> f64 {
        bin_tolerance(self.w_min(), self.w_max())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub w_l: f64,
    pub lhs: f64,
    pub budget: f64,
    pub satisfied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationResiduals {
    pub jarzynski: f64,
    pub crooks_max_bin: f64,
    pub crooks_second_moment: f64,
}

impl FluctuationResiduals {
    pub fn max(&self) -> f64 {
        self.jarzynski.max(self.crooks_max_bin).max(self.crooks_second_moment)
    }
}

pub fn bin_tolerance(w_min: f64, w_max: f64) -> f64 {
    1e-9 * (w_min.abs() + w_max.abs()).max(1.0)
}

/// H1 (x) I - I (x) H0* on the doubled space.
pub fn work_operator(h1: &DenseHermitian, h0: &DenseHermitian) -> Result<DenseHermitian> {
    if h1.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h1.dim(),
            found: h0.dim(),
        });
    }
    let id = linalg::identity(h0.dim());
    let h0c = hamiltonians::conjugate(h0);
    DenseHermitian::new(linalg::kron(h1.matrix(), &id) - linalg::kron(&id, h0c.matrix()))
}

fn check_unitary(u: &CMat, dim: usize) -> Result<()> {
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.nrows(),
        });
    }
    let deviation = linalg::unitary_deviation(u);
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// A[n, m] = <phi_1n | U | phi_0m>.
pub fn transition_amplitudes(spec0: &Spectrum, spec1: &Spectrum, u: &CMat) -> Result<CMat> {
    if spec0.dim() != spec1.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec0.dim(),
            found: spec1.dim(),
        });
    }
    check_unitary(u, spec0.dim())?;
    Ok(spec1.eigenvectors.adjoint() * u * &spec0.eigenvectors)
}

struct PairGrid {
    n_dim: usize,
    w: Vec<f64>,
    t: Vec<f64>,
    phase: Vec<f64>,
    groups: Vec<Vec<usize>>,
}

// index k = m * N + n
fn pair_grid(spec0: &Spectrum, spec1: &Spectrum, u: &CMat) -> Result<PairGrid> {
    let a = transition_amplitudes(spec0, spec1, u)?;
    let nd = spec0.dim();
    let mut w = Vec::with_capacity(nd * nd);
    let mut t = Vec::with_capacity(nd * nd);
    let mut phase = Vec::with_capacity(nd * nd);
    for m in 0..nd {
        for n in 0..nd {
            let amp = a[(n, m)];
            let prob = amp.norm_sqr();
            w.push(spec1.eigenvalues[n] - spec0.eigenvalues[m]);
            t.push(if prob < TRANSITION_FLOOR { 0.0 } else { prob });
            phase.push(amp.arg());
        }
    }
    let groups = group_values(&w);
    Ok(PairGrid {
        n_dim: nd,
        w,
        t,
        phase,
        groups,
    })
}

/// Groups indices of `w` whose values agree within the bin tolerance, ascending.
fn group_values(w: &[f64]) -> Vec<Vec<usize>> {
    if w.is_empty() {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
    let tol = bin_tolerance(w[idx[0]], w[*idx.last().unwrap()]);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut first = f64::NEG_INFINITY;
    for i in idx {
        if w[i] - first > tol {
            groups.push(Vec::new());
            first = w[i];
        }
        groups.last_mut().unwrap().push(i);
    }
    groups
}

fn group_value(w: &[f64], g: &[usize]) -> f64 {
    g.iter().map(|&i| w[i]).sum::<f64>() / g.len() as f64
}

pub fn forward_distribution(
    spec0: &Spectrum,
    spec1: &Spectrum,
    beta: f64,
    u: &CMat,
) -> Result<(WorkTable, WorkDistribution)> {
    let grid = pair_grid(spec0, spec1, u)?;
    let thermo = thermal::free_energy_difference(spec0, spec1, beta)?;
    let p0 = thermal::boltzmann_weights(&spec0.eigenvalues, beta);
    let nd = grid.n_dim;
    let p: Vec<f64> = (0..nd * nd).map(|k| p0[k / nd] * grid.t[k]).collect();
    let pairs = (0..nd * nd)
        .map(|k| WorkPair {
            m: k / nd,
            n: k % nd,
            w: grid.w[k],
            p: p[k],
            phase: grid.phase[k],
        })
        .collect();
    let mut bins = Vec::new();
    for g in &grid.groups {
        let mass: f64 = g.iter().map(|&k| p[k]).sum();
        if mass > 0.0 {
            bins.push((group_value(&grid.w, g), mass));
        }
    }
    Ok((
        WorkTable {
            pairs,
            beta,
            delta_a: thermo.delta_a,
        },
        WorkDistribution { bins },
    ))
}

/// Start in the Gibbs state of H1, apply U^dagger, measure H0; w = e_0m - e_1n.
pub fn reverse_distribution(spec0: &Spectrum, spec1: &Spectrum, beta: f64, u: &CMat) -> Result<WorkDistribution> {
    let grid = pair_grid(spec0, spec1, u)?;
    let p1 = thermal::boltzmann_weights(&spec1.eigenvalues, beta);
    let nd = grid.n_dim;
    let mut bins = Vec::new();
    // same grouping as the forward process, mirrored
    for g in grid.groups.iter().rev() {
        let mass: f64 = g.iter().map(|&k| p1[k % nd] * grid.t[k]).sum();
        if mass > 0.0 {
            bins.push((-group_value(&grid.w, g), mass));
        }
    }
    Ok(WorkDistribution { bins })
}

pub fn verify_fluctuation_identities(
    forward: &WorkDistribution,
    reverse: &WorkDistribution,
    thermo: &ThermoData,
) -> FluctuationResiduals {
    let beta = thermo.beta;
    let target = (-beta * thermo.delta_a).exp();
    let jar: f64 = forward.bins.iter().map(|(w, p)| p * (-beta * w).exp()).sum();

    let tol = bin_tolerance(
        forward.w_min().min(-reverse.w_max()),
        forward.w_max().max(-reverse.w_min()),
    );
    let mut crooks = 0.0f64;
    let mut used = vec![false; reverse.bins.len()];
    for (w, p) in &forward.bins {
        let lhs = p * (-beta * w).exp();
        let hit = reverse
            .bins
            .iter()
            .position(|(wr, _)| (wr + w).abs() <= tol);
        let rhs = match hit {
            Some(i) => {
                used[i] = true;
                target * reverse.bins[i].1
            }
            None => 0.0,
        };
        crooks = crooks.max((lhs - rhs).abs());
    }
    for (i, (_, pr)) in reverse.bins.iter().enumerate() {
        if !used[i] {
            crooks = crooks.max(target * pr);
        }
    }

    let m_fwd: f64 = forward.bins.iter().map(|(w, p)| p * w * w * (-beta * w).exp()).sum();
    let m_rev: f64 = reverse.bins.iter().map(|(w, p)| p * w * w).sum();
    FluctuationResiduals {
        jarzynski: (jar - target).abs(),
        crooks_max_bin: crooks,
        crooks_second_moment: (m_fwd - target * m_rev).abs(),
    }
}

fn budget(eps: f64) -> f64 {
    (eps / 6.0) * (eps / 6.0)
}

/// Evaluates the cutoff condition sum_{w < w_l} P(w) e^{-beta (w - dA)} <= (eps/6)^2
/// at a given w_l. Work values within the bin tolerance of w_l count as equal to it.
pub fn cutoff_condition(dist: &WorkDistribution, beta: f64, delta_a: f64, w_l: f64, eps: f64) -> CutoffReport {
    let tol = dist.tolerance();
    let lhs = dist
        .bins
        .iter()
        .filter(|(w, _)| *w < w_l - tol)
        .fold(0.0, |acc, (w, p)| acc + p * (-beta * (w - delta_a)).exp());
    let b = budget(eps);
    CutoffReport {
        w_l,
        lhs,
        budget: b,
        satisfied: lhs <= b,
    }
}

/// Largest w_l among the bin values and w_max + 1 that satisfies the cutoff condition.
pub fn largest_cutoff(dist: &WorkDistribution, beta: f64, delta_a: f64, eps: f64) -> Result<CutoffReport> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")));
    }
    if dist.bins.is_empty() {
        return Err(Error::InvalidArgument("empty work distribution".into()));
    }
    let b = budget(eps);
    let mut best = CutoffReport {
        w_l: dist.bins[0].0,
        lhs: 0.0,
        budget: b,
        satisfied: true,
    };
    let mut prefix = 0.0;
    for k in 0..=dist.bins.len() {
        let w_l = if k < dist.bins.len() {
            dist.bins[k].0
        } else {
            dist.w_max() + 1.0
        };
        if prefix > b {
            break;
        }
        best = CutoffReport {
            w_l,
            lhs: prefix,
            budget: b,
            satisfied: true,
        };
        if k < dist.bins.len() {
            let (w, p) = dist.bins[k];
            prefix += p * (-beta * (w - delta_a)).exp();
        }
    }
    Ok(best)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    Ok(())
}

/// Cutoff valid for any unitary: -6 ||V_U|| / eps.
pub fn cutoff_bound_general(norm_vu: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(-6.0 * norm_vu / eps)
}

/// Cutoff for commuting H0, H1 with U = I: -||V||.
pub fn cutoff_bound_commuting(norm_v: f64) -> f64 {
    -norm_v
}

/// Cutoff for a local perturbation with U = I: -2 M v - 2 h g k ln(6/eps).
pub fn cutoff_bound_local(meta: &LocalityMetadata, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let (m, g, k) = (meta.m as f64, meta.g as f64, meta.k as f64);
    Ok(-2.0 * m * meta.v - 2.0 * meta.h * g * k * (6.0 / eps).ln())
}

/// ||H1 - U H0 U^dagger||.
pub fn norm_vu(h0: &DenseHermitian, h1: &DenseHermitian, u: &CMat) -> Result<f64> {
    check_unitary(u, h0.dim())?;
    let d = h1.matrix() - u * h0.matrix() * u.adjoint();
    Ok(hamiltonians::spectral_norm(&DenseHermitian::new(d)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub lhs: f64,
    pub bound: f64,
}

impl OverlapCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.bound * (1.0 + 1e-12) + 1e-12
    }
}

/// || P1(<= eps1) P0(> eps0) || against exp(-(eps0 - eps1 - 2 M v) / (2 h g k)).
pub fn eigenspace_overlap_check(
    spec0: &Spectrum,
    spec1: &Spectrum,
    meta: &LocalityMetadata,
    eps0: f64,
    eps1: f64,
) -> Result<OverlapCheck> {
    if eps1 > eps0 {
        return Err(Error::InvalidArgument(format!("need eps1 <= eps0, got {eps1} > {eps0}")));
    }
    let cols = |s: &Spectrum, keep: &dyn Fn(f64) -> bool| -> Vec<usize> {
        (0..s.dim()).filter(|&i| keep(s.eigenvalues[i])).collect()
    };
    let low1 = cols(spec1, &|e| e <= eps1);
    let high0 = cols(spec0, &|e| e > eps0);
    let lhs = if low1.is_empty() || high0.is_empty() {
        0.0
    } else {
        let a = spec1.eigenvectors.select_columns(&low1);
        let b = spec0.eigenvectors.select_columns(&high0);
        linalg::operator_norm(&(a.adjoint() * b))
    };
    let denom = 2.0 * meta.h * meta.g as f64 * meta.k as f64;
    let expo = eps0 - eps1 - 2.0 * meta.m as f64 * meta.v;
    let bound = if denom > 0.0 {
        (-expo / denom).exp()
    } else if expo > 0.0 {
        0.0
    } else {
        1.0
    };
    Ok(OverlapCheck { lhs, bound })
}

/// Cutoff sum computed from the two-copy state and a dense work operator:
/// || e^{-beta W/2} Pi_{<w_l} (U (x) I)|Psi_0> ||^2 e^{beta dA}.
pub fn cutoff_lhs_from_state(
    h0: &DenseHermitian,
    h1: &DenseHermitian,
    beta: f64,
    u: &CMat,
    w_l: f64,
) -> Result<f64> {
    let spec0 = hamiltonians::diagonalize(h0);
    let spec1 = hamiltonians::diagonalize(h1);
    let thermo = thermal::free_energy_difference(&spec0, &spec1, beta)?;
    let psi0 = thermal::purification(&spec0, beta)?;
    check_unitary(u, h0.dim())?;
    let big_u = linalg::kron(u, &linalg::identity(h0.dim()));
    let phi = big_u * &psi0.amplitudes;
    let w = work_operator(h1, h0)?;
    let ws = hamiltonians::diagonalize(&w);
    let tol = bin_tolerance(ws.min(), ws.max());
    let coeffs = ws.eigenvectors.adjoint() * phi;
    let mut total = 0.0;
    for (k, &lam) in ws.eigenvalues.iter().enumerate() {
        if lam < w_l - tol {
            total += coeffs[k].norm_sqr() * (-beta * lam).exp();
        }
    }
    Ok(total * (beta * thermo.delta_a).exp())
}
