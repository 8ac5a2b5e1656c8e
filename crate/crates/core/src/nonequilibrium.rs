//! Drive unitaries between the two energy measurements.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{PauliSum, Spectrum};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::thermal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UnitaryLabel {
    Identity,
    Interpolation { t: f64, steps: usize },
    Optimal { w_l: f64 },
    Custom,
}

#[derive(Clone, Debug)]
pub struct NonEqUnitary {
    pub matrix: CMat,
    pub label: UnitaryLabel,
}

impl NonEqUnitary {
    pub fn identity(dim: usize) -> Self {
        NonEqUnitary {
            matrix: linalg::identity(dim),
            label: UnitaryLabel::Identity,
        }
    }

    pub fn custom(matrix: CMat) -> Result<Self> {
        let deviation = linalg::unitary_deviation(&matrix);
        if deviation > 1e-10 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(NonEqUnitary {
            matrix,
            label: UnitaryLabel::Custom,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of R divided out.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> NonEqUnitary {
    let g = CMat::from_fn(dim, dim, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            q.column_mut(j).iter_mut().for_each(|z| *z *= ph);
        }
    }
    NonEqUnitary {
        matrix: q,
        label: UnitaryLabel::Custom,
    }
}

pub fn conjugate_unitary(u: &NonEqUnitary) -> NonEqUnitary {
    NonEqUnitary {
        matrix: linalg::conj_matrix(&u.matrix),
        label: u.label.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepCount {
    Fixed(usize),
    Auto,
}

/// Cap on the number of steps tried by automatic step selection.
pub const MAX_AUTO_STEPS: usize = 1 << 16;
/// Change between successive step doublings accepted by automatic selection.
pub const AUTO_TOLERANCE: f64 = 1e-8;

// Block of basis states closed under the off-diagonal terms of H0 and V.
struct Sector {
    members: Vec<usize>,
    diag0: Vec<f64>,
    diag_v: Vec<f64>,
    // (target local index, coefficient) per member, one table per off-diagonal term
    flips0: Vec<(Vec<usize>, Vec<C64>)>,
    flips_v: Vec<(Vec<usize>, Vec<C64>)>,
}

// U <- exp(-i tau (a H0 + b V)) U sector by sector, by Taylor series
struct Propagator {
    dim: usize,
    sectors: Vec<Sector>,
    bound0: f64,
    bound_v: f64,
}

fn offdiag_terms(s: &PauliSum) -> Vec<(usize, usize, C64)> {
    s.terms()
        .iter()
        .filter_map(|(c, p)| {
            let (flip, phase, ny) = p.masks();
            (flip != 0 && *c != 0.0).then(|| (flip, phase, C64::new(*c, 0.0) * linalg::IM.powu(ny)))
        })
        .collect()
}

fn diagonal(s: &PauliSum) -> Vec<f64> {
    let mut d = vec![0.0; s.dim()];
    for (c, p) in s.terms() {
        let (flip, phase, _) = p.masks();
        if flip == 0 {
            for (b, x) in d.iter_mut().enumerate() {
                *x += if (b & phase).count_ones() % 2 == 1 { -c } else { *c };
            }
        }
    }
    d
}

impl Propagator {
    fn new(h0: &PauliSum, v: &PauliSum) -> Self {
        let dim = h0.dim();
        let off0 = offdiag_terms(h0);
        let off_v = offdiag_terms(v);
        let d0 = diagonal(h0);
        let dv = diagonal(v);

        let mut sector_of = vec![usize::MAX; dim];
        let mut local = vec![0usize; dim];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for start in 0..dim {
            if sector_of[start] != usize::MAX {
                continue;
            }
            let id = groups.len();
            let mut members = vec![start];
            sector_of[start] = id;
            let mut k = 0;
            while k < members.len() {
                let b = members[k];
                for &(f, _, _) in off0.iter().chain(off_v.iter()) {
                    let t = b ^ f;
                    if sector_of[t] == usize::MAX {
                        sector_of[t] = id;
                        members.push(t);
                    }
                }
                k += 1;
            }
            members.sort_unstable();
            for (i, &b) in members.iter().enumerate() {
                local[b] = i;
            }
            groups.push(members);
        }

        let table = |terms: &[(usize, usize, C64)], members: &[usize]| {
            terms
                .iter()
                .map(|&(flip, phase, c)| {
                    let targets = members.iter().map(|&b| local[b ^ flip]).collect();
                    let coeffs = members
                        .iter()
                        .map(|&b| if (b & phase).count_ones() % 2 == 1 { -c } else { c })
                        .collect();
                    (targets, coeffs)
                })
                .collect()
        };
        let sectors = groups
            .into_iter()
            .map(|members| Sector {
                diag0: members.iter().map(|&b| d0[b]).collect(),
                diag_v: members.iter().map(|&b| dv[b]).collect(),
                flips0: table(&off0, &members),
                flips_v: table(&off_v, &members),
                members,
            })
            .collect();
        Propagator {
            dim,
            sectors,
            bound0: h0.compile().norm_bound(),
            bound_v: v.compile().norm_bound(),
        }
    }

    fn identity_blocks(&self) -> Vec<CMat> {
        self.sectors.iter().map(|s| linalg::identity(s.members.len())).collect()
    }

    fn assemble(&self, blocks: &[CMat]) -> CMat {
        let mut u = CMat::zeros(self.dim, self.dim);
        for (sec, blk) in self.sectors.iter().zip(blocks) {
            for (j, &gj) in sec.members.iter().enumerate() {
                for (i, &gi) in sec.members.iter().enumerate() {
                    u[(gi, gj)] = blk[(i, j)];
                }
            }
        }
        u
    }

    fn exp_step(&self, blocks: &mut [CMat], tau: f64, a: f64, b: f64, work: &mut Workspace) {
        let norm = tau.abs() * (a.abs() * self.bound0 + b.abs() * self.bound_v);
        if norm == 0.0 {
            return;
        }
        let pieces = norm.ceil().max(1.0) as usize;
        let dt = tau / pieces as f64;
        for (sec, blk) in self.sectors.iter().zip(blocks.iter_mut()) {
            let diag: Vec<f64> = sec.diag0.iter().zip(&sec.diag_v).map(|(x, y)| a * x + b * y).collect();
            for _ in 0..pieces {
                taylor(sec, &diag, blk, dt, a, b, work);
            }
        }
    }
}

struct Workspace {
    term: Vec<C64>,
    next: Vec<C64>,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            term: Vec::new(),
            next: Vec::new(),
        }
    }
}

fn taylor(sec: &Sector, diag: &[f64], u: &mut CMat, dt: f64, a: f64, b: f64, work: &mut Workspace) {
    let d = sec.members.len();
    work.term.clear();
    work.term.extend_from_slice(u.as_slice());
    work.next.resize(d * d, ZERO);
    let tables: Vec<(&(Vec<usize>, Vec<C64>), f64)> = sec
        .flips0
        .iter()
        .map(|t| (t, a))
        .chain(sec.flips_v.iter().map(|t| (t, b)))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    for k in 1..=40 {
        let s = C64::new(0.0, -dt / k as f64);
        let sd: Vec<C64> = diag.iter().map(|x| s * *x).collect();
        for (cin, cout) in work.term.chunks(d).zip(work.next.chunks_mut(d)) {
            for ((o, x), y) in cout.iter_mut().zip(cin).zip(&sd) {
                *o = *y * *x;
            }
            for ((tg, cf), w) in &tables {
                let sw = s * *w;
                for ((x, &t), c) in cin.iter().zip(tg).zip(cf) {
                    cout[t] += sw * *c * *x;
                }
            }
        }
        std::mem::swap(&mut work.term, &mut work.next);
        let mut size = 0.0f64;
        for (acc, t) in u.as_mut_slice().iter_mut().zip(&work.term) {
            *acc += *t;
            size = size.max(t.re.abs() + t.im.abs());
        }
        if size < 1e-18 {
            break;
        }
    }
}

fn check_pair(h0: &PauliSum, v: &PauliSum, t: f64) -> Result<()> {
    if h0.n() != v.n() {
        return Err(Error::DimensionMismatch {
            expected: h0.n(),
            found: v.n(),
        });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Midpoint-rule product of exp(-i dt H(t_mid)) for H(t) = H0 + (t/T) V.
pub fn midpoint_evolution(h0: &PauliSum, v: &PauliSum, t: f64, steps: usize) -> Result<CMat> {
    check_pair(h0, v, t)?;
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    if t == 0.0 {
        return Ok(linalg::identity(h0.dim()));
    }
    let prop = Propagator::new(h0, v);
    let mut blocks = prop.identity_blocks();
    let mut work = Workspace::new();
    let dt = t / steps as f64;
    for s in 0..steps {
        let frac = (s as f64 + 0.5) / steps as f64;
        prop.exp_step(&mut blocks, dt, 1.0, frac, &mut work);
    }
    Ok(prop.assemble(&blocks))
}

/// Fourth-order commutator-free Magnus product with two exponentials per step.
pub fn magnus4_evolution(h0: &PauliSum, v: &PauliSum, t: f64, steps: usize) -> Result<CMat> {
    check_pair(h0, v, t)?;
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    if t == 0.0 {
        return Ok(linalg::identity(h0.dim()));
    }
    let prop = Propagator::new(h0, v);
    let mut blocks = prop.identity_blocks();
    let mut work = Workspace::new();
    let r3 = 3f64.sqrt();
    let (a1, a2) = ((3.0 - 2.0 * r3) / 12.0, (3.0 + 2.0 * r3) / 12.0);
    let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let dt = t / steps as f64;
    for s in 0..steps {
        let s1 = (s as f64 + c1) / steps as f64;
        let s2 = (s as f64 + c2) / steps as f64;
        // H0 weight is a1 + a2 = 1/2 in both factors
        prop.exp_step(&mut blocks, dt, 0.5, a2 * s1 + a1 * s2, &mut work);
        prop.exp_step(&mut blocks, dt, 0.5, a1 * s1 + a2 * s2, &mut work);
    }
    Ok(prop.assemble(&blocks))
}

/// Time-ordered evolution under H(t) = H0 + (t/T) V over [0, T].
///
/// Fixed step counts use the midpoint rule. `Auto` uses the fourth-order Magnus
/// scheme and doubles the step count until successive results differ by less
/// than `AUTO_TOLERANCE` in operator norm.
pub fn interpolated_evolution(h0: &PauliSum, v: &PauliSum, t: f64, steps: StepCount) -> Result<NonEqUnitary> {
    check_pair(h0, v, t)?;
    let (matrix, used) = match steps {
        StepCount::Fixed(s) => (midpoint_evolution(h0, v, t, s)?, s),
        StepCount::Auto => {
            if t == 0.0 {
                (linalg::identity(h0.dim()), 1)
            } else {
                let bound = h0.compile().norm_bound() + v.compile().norm_bound();
                let mut s = ((t * bound / 2.0).ceil() as usize).clamp(1, MAX_AUTO_STEPS);
                let mut prev = magnus4_evolution(h0, v, t, s)?;
                loop {
                    if 2 * s > MAX_AUTO_STEPS {
                        break (prev, s);
                    }
                    s *= 2;
                    let next = magnus4_evolution(h0, v, t, s)?;
                    let change = linalg::operator_norm(&(&next - &prev));
                    prev = next;
                    if change < AUTO_TOLERANCE {
                        break (prev, s);
                    }
                }
            }
        }
    };
    Ok(NonEqUnitary {
        matrix,
        label: UnitaryLabel::Interpolation { t, steps: used },
    })
}

/// pi[n] is the H0 eigenindex sent to H1 eigenindex n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationAssignment {
    pub pi: Vec<usize>,
}

impl PermutationAssignment {
    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.pi.len()];
        for &m in &self.pi {
            if m >= seen.len() || seen[m] {
                return false;
            }
            seen[m] = true;
        }
        true
    }
}

/// Greedy matching over ascending H1 levels: take the lowest unused H0 level if
/// the resulting work is at least `w_l`, otherwise the highest unused one.
pub fn greedy_assignment(e0: &[f64], e1: &[f64], w_l: f64) -> PermutationAssignment {
    let n = e0.len();
    let mut pi = vec![0; n];
    // the unused H0 levels always form a contiguous index range
    let (mut lo, mut hi) = (0usize, n);
    for (k, slot) in pi.iter_mut().enumerate() {
        if e1[k] >= e0[lo] + w_l {
            *slot = lo;
            lo += 1;
        } else {
            hi -= 1;
            *slot = hi;
        }
    }
    PermutationAssignment { pi }
}

pub fn permutation_unitary(spec0: &Spectrum, spec1: &Spectrum, assign: &PermutationAssignment) -> CMat {
    let n = spec0.dim();
    let mut p = CMat::zeros(n, n);
    for (k, &m) in assign.pi.iter().enumerate() {
        p[(k, m)] = ONE;
    }
    &spec1.eigenvectors * p * spec0.eigenvectors.adjoint()
}

pub fn optimal_unitary(spec0: &Spectrum, spec1: &Spectrum, w_l_star: f64) -> Result<(NonEqUnitary, PermutationAssignment)> {
    if spec0.dim() != spec1.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec0.dim(),
            found: spec1.dim(),
        });
    }
    let assign = greedy_assignment(&spec0.eigenvalues, &spec1.eigenvalues, w_l_star);
    let matrix = permutation_unitary(spec0, spec1, &assign);
    Ok((
        NonEqUnitary {
            matrix,
            label: UnitaryLabel::Optimal { w_l: w_l_star },
        },
        assign,
    ))
}

/// Reverse-process mass above -w_l: sum of P1(e_1n) over n with e_0pi(n) - e_1n > -w_l.
pub fn cost_function(assign: &PermutationAssignment, spec0: &Spectrum, spec1: &Spectrum, beta: f64, w_l_star: f64) -> f64 {
    cost_from_levels(assign, &spec0.eigenvalues, &spec1.eigenvalues, beta, w_l_star)
}

pub fn cost_from_levels(assign: &PermutationAssignment, e0: &[f64], e1: &[f64], beta: f64, w_l_star: f64) -> f64 {
    let p1 = thermal::boltzmann_weights(e1, beta);
    assign
        .pi
        .iter()
        .enumerate()
        .filter(|&(n, &m)| e0[m] - e1[n] > -w_l_star)
        .map(|(n, _)| p1[n])
        .sum()
}

/// Largest pair difference d for which the greedy assignment at d keeps the
/// cost within (eps/6)^2, together with that assignment.
pub fn optimal_cutoff(e0: &[f64], e1: &[f64], beta: f64, eps: f64) -> (f64, PermutationAssignment) {
    let budget = (eps / 6.0) * (eps / 6.0);
    let mut cands: Vec<f64> = e1.iter().flat_map(|a| e0.iter().map(move |b| a - b)).collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    cands.push(cands.last().copied().unwrap_or(0.0) + 1.0);
    let ok = |d: f64| cost_from_levels(&greedy_assignment(e0, e1, d), e0, e1, beta, d) <= budget;
    // cost is non-decreasing in d and zero at the smallest candidate
    let (mut lo, mut hi) = (0usize, cands.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(cands[mid]) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (cands[lo], greedy_assignment(e0, e1, cands[lo]))
}
