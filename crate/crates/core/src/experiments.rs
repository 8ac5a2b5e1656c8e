//! Sweeps of the largest work cutoff over accuracy, drive time and system size,
//! binned work distributions, QSP phase sets and fluctuation-identity checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{self, SeriesParameters};
use crate::circuitsim::{self, QspPhaseSet};
use crate::error::{Error, Result};
use crate::io::{format_float, CsvTable};
use crate::nonequilibrium::UnitaryLabel;
use crate::pipeline::{Instance, StepSpec, SystemSpec, UnitarySpec};
use crate::workstats::{self, FluctuationResiduals, WorkDistribution};

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Runs `f` on a pool of `workers` threads (0 picks the rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn unitary_tag(spec: &UnitarySpec) -> String {
    match spec {
        UnitarySpec::Identity => "identity".into(),
        UnitarySpec::Interpolation { t, .. } => format!("T={}", format_float(*t)),
        UnitarySpec::Optimal { .. } => "optimal".into(),
        UnitarySpec::Random { .. } => "random".into(),
    }
}

fn interpolation(t: f64, steps: StepSpec) -> UnitarySpec {
    UnitarySpec::Interpolation { t, steps }
}

fn check_grid(grid: &[f64], name: &str, positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    for (k, x) in grid.iter().enumerate() {
        if !x.is_finite() || *x < 0.0 || (positive && *x == 0.0) {
            return Err(Error::Config(format!("{name} grid holds invalid value {x}")));
        }
        if grid[..k].contains(x) {
            return Err(Error::Config(format!("{name} grid repeats {x}")));
        }
    }
    Ok(())
}

// distribution and free-energy difference for one drive
fn drive_distribution(inst: &Instance, spec: &UnitarySpec, beta: f64, eps: f64, seed: u64) -> Result<WorkDistribution> {
    let u = inst.unitary(spec, beta, eps, seed)?;
    inst.distribution(&u.matrix, beta)
}

fn w_l_star(inst: &Instance, dist: &WorkDistribution, beta: f64, eps: f64) -> Result<f64> {
    let da = inst.thermo(beta)?.delta_a;
    Ok(workstats::largest_cutoff(dist, beta, da, eps)?.w_l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Eps,
    T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    #[serde(default = "SweepSpec::default_n")]
    pub n: usize,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub field: f64,
    #[serde(default = "one")]
    pub coupling: f64,
    /// drive times used when sweeping eps
    #[serde(default = "SweepSpec::default_times")]
    pub times: Vec<f64>,
    /// accuracies held fixed when sweeping T
    #[serde(default = "SweepSpec::default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "yes")]
    pub include_optimal: bool,
    #[serde(default)]
    pub steps: StepSpec,
}

impl SweepSpec {
    fn default_n() -> usize {
        6
    }

    fn default_times() -> Vec<f64> {
        vec![0.0, 1.0, 2.0, 3.0, 5.0]
    }

    fn default_eps() -> Vec<f64> {
        vec![0.005]
    }

    pub fn eps_sweep(grid: Vec<f64>) -> Self {
        SweepSpec {
            variable: SweepVariable::Eps,
            grid,
            n: Self::default_n(),
            beta: 1.0,
            field: 1.0,
            coupling: 1.0,
            times: Self::default_times(),
            eps: Self::default_eps(),
            include_optimal: true,
            steps: StepSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.variable {
            SweepVariable::Eps => {
                check_grid(&self.grid, "eps", true)?;
                check_grid(&self.times, "times", false)
            }
            SweepVariable::T => {
                check_grid(&self.grid, "T", false)?;
                check_grid(&self.eps, "eps", true)
            }
        }?;
        if !(self.beta >= 0.0) {
            return Err(Error::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffRow {
    pub eps: f64,
    pub unitary: String,
    /// drive time of interpolating unitaries
    pub t: Option<f64>,
    pub w_l_star: f64,
}

pub fn cutoff_table(rows: &[CutoffRow]) -> CsvTable {
    let mut t = CsvTable::new(&["eps", "unitary", "t", "w_l_star"]);
    for r in rows {
        t.push(vec![
            format_float(r.eps),
            r.unitary.clone(),
            r.t.map(format_float).unwrap_or_default(),
            format_float(r.w_l_star),
        ]);
    }
    t
}

/// Largest work cutoff per (eps, unitary), in grid order.
pub fn sweep_cutoff(spec: &SweepSpec) -> Result<Vec<CutoffRow>> {
    spec.validate()?;
    let inst = Instance::new(&SystemSpec::Tfim {
        n: spec.n,
        field: spec.field,
        coupling: spec.coupling,
    })?;
    let beta = spec.beta;
    let (times, eps_list) = match spec.variable {
        SweepVariable::Eps => (&spec.times, &spec.grid),
        SweepVariable::T => (&spec.grid, &spec.eps),
    };
    let dists: Vec<WorkDistribution> = times
        .par_iter()
        .map(|&t| drive_distribution(&inst, &interpolation(t, spec.steps), beta, 0.0, 0))
        .collect::<Result<_>>()?;
    let optimal: Vec<Option<f64>> = eps_list
        .par_iter()
        .map(|&eps| {
            if !spec.include_optimal {
                return Ok(None);
            }
            let d = drive_distribution(&inst, &UnitarySpec::Optimal { eps: Some(eps) }, beta, eps, 0)?;
            w_l_star(&inst, &d, beta, eps).map(Some)
        })
        .collect::<Result<_>>()?;

    let interp_row = |eps: f64, k: usize| -> Result<CutoffRow> {
        Ok(CutoffRow {
            eps,
            unitary: unitary_tag(&interpolation(times[k], spec.steps)),
            t: Some(times[k]),
            w_l_star: w_l_star(&inst, &dists[k], beta, eps)?,
        })
    };
    let optimal_rows: Vec<Option<CutoffRow>> = eps_list
        .iter()
        .zip(&optimal)
        .map(|(&eps, w)| {
            w.map(|w_l_star| CutoffRow {
                eps,
                unitary: "optimal".into(),
                t: None,
                w_l_star,
            })
        })
        .collect();
    let mut rows = Vec::new();
    match spec.variable {
        SweepVariable::Eps => {
            for (&eps, opt) in eps_list.iter().zip(optimal_rows) {
                for k in 0..times.len() {
                    rows.push(interp_row(eps, k)?);
                }
                rows.extend(opt);
            }
        }
        SweepVariable::T => {
            for k in 0..times.len() {
                for &eps in eps_list.iter() {
                    rows.push(interp_row(eps, k)?);
                }
            }
            rows.extend(optimal_rows.into_iter().flatten());
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkdistSpec {
    #[serde(default = "SweepSpec::default_n")]
    pub n: usize,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub field: f64,
    #[serde(default = "one")]
    pub coupling: f64,
    /// accuracy that fixes the cutoff markers
    #[serde(default = "WorkdistSpec::default_eps")]
    pub eps: f64,
    #[serde(default = "WorkdistSpec::default_unitaries")]
    pub unitaries: Vec<UnitarySpec>,
    #[serde(default)]
    pub seed: u64,
}

impl WorkdistSpec {
    fn default_eps() -> f64 {
        0.005
    }

    fn default_unitaries() -> Vec<UnitarySpec> {
        vec![
            UnitarySpec::Identity,
            interpolation(1.0, StepSpec::default()),
            interpolation(5.0, StepSpec::default()),
            UnitarySpec::Optimal { eps: None },
        ]
    }

    pub fn new(n: usize) -> Self {
        WorkdistSpec {
            n,
            beta: 1.0,
            field: 1.0,
            coupling: 1.0,
            eps: Self::default_eps(),
            unitaries: Self::default_unitaries(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkdistSeries {
    pub unitary: String,
    pub label: UnitaryLabel,
    /// (w, P(w)) in increasing w
    pub bins: Vec<(f64, f64)>,
    pub mean: f64,
    pub w_l_star: f64,
}

pub fn workdist(spec: &WorkdistSpec) -> Result<Vec<WorkdistSeries>> {
    if spec.unitaries.is_empty() {
        return Err(Error::Config("no unitaries listed".into()));
    }
    if !(spec.eps > 0.0) {
        return Err(Error::Config(format!("eps must be > 0, got {}", spec.eps)));
    }
    let inst = Instance::new(&SystemSpec::Tfim {
        n: spec.n,
        field: spec.field,
        coupling: spec.coupling,
    })?;
    spec.unitaries
        .par_iter()
        .map(|us| {
            let u = inst.unitary(us, spec.beta, spec.eps, spec.seed)?;
            let dist = inst.distribution(&u.matrix, spec.beta)?;
            Ok(WorkdistSeries {
                unitary: unitary_tag(us),
                label: u.label,
                mean: dist.mean(),
                w_l_star: w_l_star(&inst, &dist, spec.beta, spec.eps)?,
                bins: dist.bins,
            })
        })
        .collect()
}

pub fn workdist_table(series: &[WorkdistSeries]) -> CsvTable {
    let mut t = CsvTable::new(&["unitary", "w", "p", "w_l_star"]);
    for s in series {
        for (w, p) in &s.bins {
            t.push(vec![s.unitary.clone(), format_float(*w), format_float(*p), format_float(s.w_l_star)]);
        }
    }
    t
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(default = "ScalingSpec::default_n_min")]
    pub n_min: usize,
    #[serde(default = "ScalingSpec::default_n_max")]
    pub n_max: usize,
    #[serde(default = "WorkdistSpec::default_eps")]
    pub eps: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub field: f64,
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default)]
    pub steps: StepSpec,
}

impl ScalingSpec {
    fn default_n_min() -> usize {
        1
    }

    fn default_n_max() -> usize {
        8
    }

    pub fn up_to(n_max: usize) -> Self {
        ScalingSpec {
            n_min: 1,
            n_max,
            eps: Self::default_eps(),
            beta: 1.0,
            field: 1.0,
            coupling: 1.0,
            steps: StepSpec::default(),
        }
    }

    fn default_eps() -> f64 {
        WorkdistSpec::default_eps()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    /// one of T=0, T=2, T=n, T=5n
    pub unitary: String,
    pub t: f64,
    pub w_l_star: f64,
}

pub fn scaling(spec: &ScalingSpec) -> Result<Vec<ScalingRow>> {
    if spec.n_min == 0 || spec.n_min > spec.n_max {
        return Err(Error::Config(format!("invalid n range {}..={}", spec.n_min, spec.n_max)));
    }
    if !(spec.eps > 0.0) {
        return Err(Error::Config(format!("eps must be > 0, got {}", spec.eps)));
    }
    let jobs: Vec<(usize, &str, f64)> = (spec.n_min..=spec.n_max)
        .flat_map(|n| {
            let nf = n as f64;
            [("T=0", 0.0), ("T=2", 2.0), ("T=n", nf), ("T=5n", 5.0 * nf)].map(|(l, t)| (n, l, t))
        })
        .collect();
    // biggest systems first so the pool stays busy
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| jobs[b].0.cmp(&jobs[a].0));
    let instances: Vec<Instance> = (spec.n_min..=spec.n_max)
        .map(|n| {
            Instance::new(&SystemSpec::Tfim {
                n,
                field: spec.field,
                coupling: spec.coupling,
            })
        })
        .collect::<Result<_>>()?;
    let mut done: Vec<(usize, f64)> = order
        .par_iter()
        .map(|&k| {
            let (n, _, t) = jobs[k];
            let inst = &instances[n - spec.n_min];
            let d = drive_distribution(inst, &interpolation(t, spec.steps), spec.beta, spec.eps, 0)?;
            Ok((k, w_l_star(inst, &d, spec.beta, spec.eps)?))
        })
        .collect::<Result<_>>()?;
    done.sort_by_key(|x| x.0);
    Ok(done
        .into_iter()
        .map(|(k, w)| ScalingRow {
            n: jobs[k].0,
            unitary: jobs[k].1.to_string(),
            t: jobs[k].2,
            w_l_star: w,
        })
        .collect())
}

pub fn scaling_table(rows: &[ScalingRow]) -> CsvTable {
    let mut t = CsvTable::new(&["n", "unitary", "t", "w_l_star"]);
    for r in rows {
        t.push(vec![r.n.to_string(), r.unitary.clone(), format_float(r.t), format_float(r.w_l_star)]);
    }
    t
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub system: SystemSpec,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "VerifySpec::default_unitaries")]
    pub unitaries: Vec<UnitarySpec>,
    #[serde(default)]
    pub seed: u64,
}

impl VerifySpec {
    fn default_unitaries() -> Vec<UnitarySpec> {
        vec![
            UnitarySpec::Identity,
            interpolation(2.0, StepSpec::default()),
            UnitarySpec::Optimal { eps: Some(0.0) },
        ]
    }

    pub fn new(system: SystemSpec, beta: f64) -> Self {
        VerifySpec {
            system,
            beta,
            unitaries: Self::default_unitaries(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub unitary: String,
    pub delta_a: f64,
    pub residuals: FluctuationResiduals,
}

/// Jarzynski and Crooks residuals for each listed unitary.
pub fn verify(spec: &VerifySpec) -> Result<Vec<VerifyRow>> {
    if !(spec.beta >= 0.0) {
        return Err(Error::Config(format!("beta must be >= 0, got {}", spec.beta)));
    }
    let inst = Instance::new(&spec.system)?;
    let thermo = inst.thermo(spec.beta)?;
    spec.unitaries
        .par_iter()
        .map(|us| {
            let u = inst.unitary(us, spec.beta, 0.0, spec.seed)?;
            let (_, fwd) = workstats::forward_distribution(&inst.spec0, &inst.spec1, spec.beta, &u.matrix)?;
            let rev = workstats::reverse_distribution(&inst.spec0, &inst.spec1, spec.beta, &u.matrix)?;
            Ok(VerifyRow {
                unitary: unitary_tag(us),
                delta_a: thermo.delta_a,
                residuals: workstats::verify_fluctuation_identities(&fwd, &rev, &thermo),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    #[serde(default = "one")]
    pub beta: f64,
    pub w_max: f64,
    pub w_l: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub params: SeriesParameters,
    pub phases_per_set: usize,
    pub residual1: f64,
    pub residual2: f64,
    pub endpoints1: (f64, f64),
    pub endpoints2: (f64, f64),
}

pub fn qsp_phases(spec: &PhaseSpec) -> Result<(QspPhaseSet, PhaseReport)> {
    let params = approx::select_parameters(spec.beta, spec.w_max, spec.w_l, spec.eps)
        .map_err(|e| Error::Config(e.to_string()))?;
    let series = approx::build_series(&params);
    let set = circuitsim::solve_phase_set(&series)?;
    let ends = |p: &[f64]| (p[0], p[p.len() - 1]);
    let report = PhaseReport {
        params,
        phases_per_set: set.phases1.len(),
        residual1: set.residual1,
        residual2: set.residual2,
        endpoints1: ends(&set.phases1),
        endpoints2: ends(&set.phases2),
    };
    Ok((set, report))
}
