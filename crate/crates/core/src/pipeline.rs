//! End-to-end thermal-state preparation on exact statevectors.
//!
//! A run builds H0 and H1 = H0 + V, picks a drive unitary, fixes the work
//! cutoff, certifies the Fourier series on every work value, applies the block
//! encoding to (U (x) I)|Psi_0>, amplifies, undoes U on the copy register and
//! compares the reduced state with the exact Gibbs state of H1.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{self, FourierSeries};
use crate::circuitsim::{self, AmplificationReport};
use crate::error::{Error, Result};
use crate::hamiltonians::{self, DenseHermitian, LocalityMetadata, PauliSum, PauliSumDoc, Spectrum};
use crate::linalg::{self, CMat, CVec};
use crate::nonequilibrium::{self, NonEqUnitary, StepCount, UnitaryLabel};
use crate::thermal::{self, DensityMatrix, PureState, ThermoData};
use crate::workstats::{self, WorkDistribution};

fn one() -> f64 {
    1.0
}

/// Where H0 and V come from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SystemSpec {
    /// H0 = field sum Z_j, V = -coupling sum X_j X_{j+1} (open chain)
    Tfim {
        n: usize,
        #[serde(default = "one")]
        field: f64,
        #[serde(default = "one")]
        coupling: f64,
    },
    Pauli { h0: PauliSumDoc, v: PauliSumDoc },
}

impl SystemSpec {
    pub fn tfim(n: usize) -> Self {
        SystemSpec::Tfim {
            n,
            field: 1.0,
            coupling: 1.0,
        }
    }

    pub fn build(&self) -> Result<(PauliSum, PauliSum)> {
        match self {
            SystemSpec::Tfim { n, field, coupling } => hamiltonians::build_tfim_split(*n, *field, *coupling),
            SystemSpec::Pauli { h0, v } => {
                let (h0, v) = (h0.build()?, v.build()?);
                if h0.n() != v.n() {
                    return Err(Error::Config(format!("h0 acts on {} qubits but v on {}", h0.n(), v.n())));
                }
                Ok((h0, v))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    #[default]
    Auto,
}

/// Step count of the interpolating evolution: a number, or "auto".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Fixed(usize),
    Auto(AutoKeyword),
}

impl Default for StepSpec {
    fn default() -> Self {
        StepSpec::Auto(AutoKeyword::Auto)
    }
}

impl From<StepSpec> for StepCount {
    fn from(s: StepSpec) -> Self {
        match s {
            StepSpec::Fixed(k) => StepCount::Fixed(k),
            StepSpec::Auto(_) => StepCount::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UnitarySpec {
    #[default]
    Identity,
    /// evolution under H0 + (t'/T) V for t' in [0, T]
    Interpolation {
        t: f64,
        #[serde(default)]
        steps: StepSpec,
    },
    /// greedy level permutation at the largest cutoff its own cost allows;
    /// `eps` defaults to the run accuracy
    Optimal {
        #[serde(default)]
        eps: Option<f64>,
    },
    /// Haar-random unitary; `seed` defaults to the run seed
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CutoffSource {
    /// largest cutoff found by scanning the exact work distribution
    #[default]
    Exact,
    /// -6 ||H1 - U H0 U^dagger|| / eps, any unitary
    General,
    /// -||V||, for commuting H0 and V with U = I
    Commuting,
    /// -2 M v - 2 h g k ln(6/eps), for local V with U = I
    Local,
    Explicit { w_l: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Lcu,
    Qsp,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lcu" => Ok(Backend::Lcu),
            "qsp" => Ok(Backend::Qsp),
            _ => Err(Error::Config(format!("unknown backend '{s}' (expected lcu or qsp)"))),
        }
    }
}

fn default_max_rounds() -> usize {
    10_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub beta: f64,
    pub eps: f64,
    #[serde(default)]
    pub unitary: UnitarySpec,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub cutoff: CutoffSource,
    /// skip the exact check of the cutoff condition
    #[serde(default)]
    pub trust_bounds: bool,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(system: SystemSpec, beta: f64, eps: f64) -> Self {
        RunConfig {
            system,
            beta,
            eps,
            unitary: UnitarySpec::Identity,
            backend: Backend::Lcu,
            cutoff: CutoffSource::Exact,
            trust_bounds: false,
            max_rounds: default_max_rounds(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        match self.unitary {
            UnitarySpec::Interpolation { t, .. } if !(t >= 0.0) || !t.is_finite() => {
                Err(Error::Config(format!("interpolation time must be >= 0, got {t}")))
            }
            UnitarySpec::Optimal { eps: Some(e) } if !(e >= 0.0) => {
                Err(Error::Config(format!("optimal-unitary eps must be >= 0, got {e}")))
            }
            _ => Ok(()),
        }
    }
}

/// H0, V, H1 with dense forms and spectra.
#[derive(Clone, Debug)]
pub struct Instance {
    pub h0: PauliSum,
    pub v: PauliSum,
    pub h0_dense: DenseHermitian,
    pub h1_dense: DenseHermitian,
    pub spec0: Spectrum,
    pub spec1: Spectrum,
}

impl Instance {
    pub fn new(system: &SystemSpec) -> Result<Self> {
        let (h0, v) = system.build()?;
        Self::from_split(h0, v)
    }

    pub fn from_split(h0: PauliSum, v: PauliSum) -> Result<Self> {
        let h1 = h0.plus(&v)?;
        let h0_dense = h0.to_dense();
        let h1_dense = h1.to_dense();
        let spec0 = hamiltonians::diagonalize(&h0_dense);
        let spec1 = hamiltonians::diagonalize(&h1_dense);
        Ok(Instance {
            h0,
            v,
            h0_dense,
            h1_dense,
            spec0,
            spec1,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec0.dim()
    }

    /// Largest eigenvalue of the work operator.
    pub fn w_max(&self) -> f64 {
        self.spec1.max() - self.spec0.min()
    }

    /// Every e1_m - e0_n, i.e. the spectrum of the work operator.
    pub fn work_values(&self) -> Vec<f64> {
        let e0 = &self.spec0.eigenvalues;
        self.spec1
            .eigenvalues
            .iter()
            .flat_map(|a| e0.iter().map(move |b| a - b))
            .collect()
    }

    pub fn thermo(&self, beta: f64) -> Result<ThermoData> {
        thermal::free_energy_difference(&self.spec0, &self.spec1, beta)
    }

    pub fn unitary(&self, spec: &UnitarySpec, beta: f64, eps: f64, seed: u64) -> Result<NonEqUnitary> {
        match *spec {
            UnitarySpec::Identity => Ok(NonEqUnitary::identity(self.dim())),
            UnitarySpec::Interpolation { t, steps } => nonequilibrium::interpolated_evolution(&self.h0, &self.v, t, steps.into()),
            UnitarySpec::Optimal { eps: e } => {
                let e = e.unwrap_or(eps);
                let (d, _) = nonequilibrium::optimal_cutoff(&self.spec0.eigenvalues, &self.spec1.eigenvalues, beta, e);
                Ok(nonequilibrium::optimal_unitary(&self.spec0, &self.spec1, d)?.0)
            }
            UnitarySpec::Random { seed: s } => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.unwrap_or(seed));
                Ok(nonequilibrium::haar_unitary(self.dim(), &mut rng))
            }
        }
    }

    pub fn distribution(&self, u: &CMat, beta: f64) -> Result<WorkDistribution> {
        Ok(workstats::forward_distribution(&self.spec0, &self.spec1, beta, u)?.1)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffDiagnostics {
    pub source: CutoffSource,
    /// value before clamping to w_max
    pub w_l_raw: f64,
    pub w_l: f64,
    /// tail sum at w_l, when checked
    pub lhs: Option<f64>,
    pub budget: f64,
}

/// Fixes w_l from `source` and, unless `trust` is set, checks the cutoff condition exactly.
pub fn resolve_cutoff(
    inst: &Instance,
    u: &CMat,
    dist: &WorkDistribution,
    thermo: &ThermoData,
    source: CutoffSource,
    eps: f64,
    trust: bool,
) -> Result<CutoffDiagnostics> {
    let beta = thermo.beta;
    let raw = match source {
        CutoffSource::Exact => workstats::largest_cutoff(dist, beta, thermo.delta_a, eps)?.w_l,
        CutoffSource::General => {
            let n = workstats::norm_vu(&inst.h0_dense, &inst.h1_dense, u)?;
            workstats::cutoff_bound_general(n, eps)?
        }
        CutoffSource::Commuting => workstats::cutoff_bound_commuting(hamiltonians::spectral_norm(&inst.v.to_dense())),
        CutoffSource::Local => workstats::cutoff_bound_local(&LocalityMetadata::from_split(&inst.h0, &inst.v)?, eps)?,
        CutoffSource::Explicit { w_l } => w_l,
    };
    let w_l = raw.min(inst.w_max());
    let budget = (eps / 6.0) * (eps / 6.0);
    let lhs = if trust {
        None
    } else {
        let rep = workstats::cutoff_condition(dist, beta, thermo.delta_a, w_l, eps);
        if !rep.satisfied {
            return Err(Error::Certification(format!(
                "cutoff w_l = {w_l} fails the tail condition: {:e} > {:e}",
                rep.lhs, rep.budget
            )));
        }
        Some(rep.lhs)
    };
    Ok(CutoffDiagnostics {
        source,
        w_l_raw: raw,
        w_l,
        lhs,
        budget,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesDiagnostics {
    pub j: usize,
    pub delta: f64,
    pub z: f64,
    pub big_delta: f64,
    pub l1: f64,
    pub ancilla_count: usize,
    /// subnormalization of the block encoding
    pub normalization: f64,
    pub certified_points: usize,
    pub worst_ratio: f64,
    /// QSP phase reconstruction residuals
    pub phase_residuals: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    #[serde(skip)]
    pub tau1: DensityMatrix,
    pub trace_distance: f64,
    pub beta: f64,
    pub eps: f64,
    pub w_max: f64,
    pub cutoff: CutoffDiagnostics,
    pub delta_a: f64,
    pub unitary: UnitaryLabel,
    pub backend: Backend,
    pub rounds: AmplificationReport,
    /// 2 alpha e^{beta dA / 2}
    pub expected_rounds_formula: f64,
    /// alpha / ||X (U (x) I)|Psi_0>||
    pub measured_ratio: f64,
    pub series: SeriesDiagnostics,
    pub wall_time_s: f64,
}

/// (1/2) sum |eigenvalues of a - b|.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (vals, _) = linalg::eigh(&(&a.matrix - &b.matrix));
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Constant-free round estimate from the lower bound ||X (U (x) I)|Psi_0>|| >= e^{-beta dA/2} / 2.
pub fn expected_rounds(series_l1: f64, beta: f64, delta_a: f64) -> f64 {
    2.0 * series_l1 * (beta * delta_a / 2.0).exp()
}

/// L 2^m ((alpha0 + alpha1) delta beta + ln(Q'/eps)). For commuting terms pass
/// alpha_V as `alpha0` and zero as `alpha1`.
#[allow(clippy::too_many_arguments)]
pub fn gate_cost_estimate(l: f64, m: u32, alpha0: f64, alpha1: f64, delta: f64, beta: f64, q_prime: f64, eps: f64) -> f64 {
    l * 2f64.powi(m as i32) * ((alpha0 + alpha1) * delta * beta + (q_prime / eps).ln())
}

fn block_encode(
    backend: Backend,
    series: &FourierSeries,
    uw: &CMat,
    phi: &CVec,
) -> Result<(circuitsim::BlockEncodingResult, Option<(f64, f64)>)> {
    match backend {
        Backend::Lcu => Ok((circuitsim::simulate_lcu(series, uw, phi)?, None)),
        Backend::Qsp => {
            let phases = circuitsim::solve_phase_set(series)?;
            let res = circuitsim::simulate_qsp(series, &phases, uw, phi)?;
            Ok((res, Some((phases.residual1, phases.residual2))))
        }
    }
}

/// Runs one preparation. `initial` replaces the exact two-copy Gibbs state of H0.
/// Returns the result and the prepared two-copy state.
pub fn run_from(config: &RunConfig, initial: Option<&CVec>) -> Result<(RunResult, CVec)> {
    let start = Instant::now();
    config.validate()?;
    let (beta, eps) = (config.beta, config.eps);
    let inst = Instance::new(&config.system)?;
    let d = inst.dim();
    let u = inst.unitary(&config.unitary, beta, eps, config.seed)?;
    let thermo = inst.thermo(beta)?;
    let dist = inst.distribution(&u.matrix, beta)?;
    let cutoff = resolve_cutoff(&inst, &u.matrix, &dist, &thermo, config.cutoff, eps, config.trust_bounds)?;

    let w_max = inst.w_max();
    let params = approx::select_parameters(beta, w_max, cutoff.w_l, eps)?;
    let series = approx::build_series(&params);
    let cert = approx::certify_constraints(&series, &inst.work_values());
    if !cert.passed() {
        return Err(Error::Certification(format!(
            "series misses its error bounds at {} of {} work values (worst error/bound {:.3})",
            cert.violations,
            cert.points.len(),
            cert.worst_ratio
        )));
    }

    let psi0 = match initial {
        Some(v) => {
            if v.len() != d * d {
                return Err(Error::DimensionMismatch {
                    expected: d * d,
                    found: v.len(),
                });
            }
            v.clone()
        }
        None => thermal::purification(&inst.spec0, beta)?.amplitudes,
    };
    let id = linalg::identity(d);
    let phi = linalg::kron(&u.matrix, &id) * psi0;
    let r = series.phase_rate();
    let uw = linalg::kron(
        &linalg::expi_hermitian(inst.h1_dense.matrix(), r),
        &linalg::expi_hermitian(&linalg::conj_matrix(inst.h0_dense.matrix()), -r),
    );
    let (block, phase_residuals) = block_encode(config.backend, &series, &uw, &phi)?;
    let (good, rounds) = circuitsim::amplitude_amplification(&block.output, d * d, config.max_rounds)?;

    let out = linalg::kron(&id, &linalg::conj_matrix(&u.matrix)) * good;
    let tau1 = PureState::new(out.clone(), vec![d, d])?.reduce_to_first()?;
    let rho1 = thermal::thermal_state(&inst.spec1, beta)?;
    let td = trace_distance(&tau1, &rho1)?;

    let x_norm = rounds.initial_amplitude * block.normalization;
    let result = RunResult {
        tau1,
        trace_distance: td,
        beta,
        eps,
        w_max,
        cutoff,
        delta_a: thermo.delta_a,
        unitary: u.label.clone(),
        backend: config.backend,
        rounds,
        expected_rounds_formula: expected_rounds(series.l1, beta, thermo.delta_a),
        measured_ratio: series.l1 / x_norm,
        series: SeriesDiagnostics {
            j: params.j,
            delta: params.delta,
            z: params.z,
            big_delta: params.big_delta,
            l1: series.l1,
            ancilla_count: block.ancilla_count,
            normalization: block.normalization,
            certified_points: cert.points.len(),
            worst_ratio: cert.worst_ratio,
            phase_residuals,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((result, out))
}

pub fn run_tspp(config: &RunConfig) -> Result<RunResult> {
    run_from(config, None).map(|(r, _)| r)
}

/// Stages run back to back; each stage starts from the previous prepared state,
/// so its H0 and beta must match the previous stage's H1 and beta.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub stages: Vec<RunConfig>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainResult {
    pub stages: Vec<RunResult>,
    pub final_trace_distance: f64,
    /// sum of the stage accuracies
    pub budget: f64,
}

pub fn run_chain(config: &ChainConfig) -> Result<ChainResult> {
    if config.stages.is_empty() {
        return Err(Error::Config("a chain needs at least one stage".into()));
    }
    let mut prev: Option<(Instance, f64, CVec)> = None;
    let mut stages = Vec::new();
    for (k, stage) in config.stages.iter().enumerate() {
        let inst = Instance::new(&stage.system)?;
        if let Some((p, beta, _)) = &prev {
            let same_h = p.dim() == inst.dim() && linalg::max_abs(&(p.h1_dense.matrix() - inst.h0_dense.matrix())) < 1e-12;
            if !same_h || *beta != stage.beta {
                return Err(Error::Config(format!(
                    "stage {k} must start from the previous stage's H1 at the same beta"
                )));
            }
        }
        let (res, state) = run_from(stage, prev.as_ref().map(|p| &p.2))?;
        prev = Some((inst, stage.beta, state));
        stages.push(res);
    }
    let final_trace_distance = stages.last().map(|r| r.trace_distance).unwrap_or(0.0);
    Ok(ChainResult {
        budget: config.stages.iter().map(|s| s.eps).sum(),
        final_trace_distance,
        stages,
    })
}
