//! Acceptance checks, one PASS/FAIL line each. Run with
//! `cargo test -p thermoprep --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoprep::approx::{build_series, certify_constraints, hs_parameters, select_parameters};
use thermoprep::circuitsim::{simulate_lcu, simulate_lcu_coeffs, simulate_qsp, solve_phase_set};
use thermoprep::experiments::{scaling, sweep_cutoff, verify, ScalingSpec, SweepSpec, VerifySpec};
use thermoprep::hamiltonians::{build_tfim_split, spectral_norm, LocalityMetadata, PauliSum, PauliSumDoc, TermDoc};
use thermoprep::linalg::{self, CMat, CVec, C64};
use thermoprep::nonequilibrium::{cost_from_levels, greedy_assignment, haar_unitary, PermutationAssignment};
use thermoprep::pipeline::{run_tspp, CutoffSource, Instance, RunConfig, SystemSpec, UnitarySpec};
use thermoprep::workstats::{
    cutoff_bound_commuting, cutoff_bound_general, cutoff_bound_local, cutoff_condition, eigenspace_overlap_check,
    largest_cutoff, norm_vu,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// criteria whose failure is expected and recorded
const KNOWN_FAILURES: &[u32] = &[5];

fn random_sum(rng: &mut ChaCha8Rng, n: usize, labels: &[char], terms: usize) -> PauliSum {
    let t = (0..terms)
        .map(|_| {
            let s: String = (0..n).map(|_| labels[rng.gen_range(0..labels.len())]).collect();
            (rng.gen_range(-1.0..1.0), s.parse().unwrap())
        })
        .collect();
    PauliSum::new(n, t).unwrap()
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize, labels: &[char]) -> Instance {
    let h0 = random_sum(rng, n, labels, 2 * n + 1);
    let v = random_sum(rng, n, labels, n + 1);
    Instance::from_split(h0, v).unwrap()
}

fn tfim(n: usize) -> Instance {
    Instance::new(&SystemSpec::tfim(n)).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn within(t: Duration, secs: f64) -> bool {
    t.as_secs_f64() < secs
}

fn c1() -> Outcome {
    let t = Instant::now();
    let p = select_parameters(1.0, 50.0, -1.0, 0.05).unwrap();
    let el = t.elapsed();
    let ok = p.big_delta == 4.0 && p.z == 83.0 && (p.delta - 0.0757).abs() <= 1e-4 && p.j == 252 && within(el, 1.0);
    outcome(ok, format!("Delta={} z={} delta={:.5} J={} in {:?}", p.big_delta, p.z, p.delta, p.j, el))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for n in [2, 4, 6] {
        let rows = verify(&VerifySpec::new(SystemSpec::tfim(n), 1.0)).unwrap();
        assert_eq!(rows.len(), 3);
        worst = rows.iter().map(|r| r.residuals.max()).fold(worst, f64::max);
    }
    let el = t.elapsed();
    outcome(worst < 1e-10 && within(el, 30.0), format!("max residual {worst:.2e} in {el:.1?}"))
}

fn c3() -> Outcome {
    let t = Instant::now();
    let a = run_tspp(&RunConfig::new(SystemSpec::tfim(3), 1.0, 0.05)).unwrap();
    let ta = t.elapsed();
    let z = |c: f64| PauliSumDoc {
        n: 3,
        terms: (0..3)
            .map(|j| TermDoc {
                coeff: c,
                pauli: (0..3).map(|k| if k == j { 'Z' } else { 'I' }).collect(),
            })
            .collect(),
    };
    let mut cfg = RunConfig::new(SystemSpec::Pauli { h0: z(1.0), v: z(1.0) }, 1.0, 0.05);
    cfg.cutoff = CutoffSource::Commuting;
    let t = Instant::now();
    let b = run_tspp(&cfg).unwrap();
    let tb = t.elapsed();
    let ok = a.trace_distance <= 0.05 && b.trace_distance <= 0.05 && (b.cutoff.w_l + 3.0).abs() < 1e-12 && within(ta, 120.0) && within(tb, 120.0);
    outcome(ok, format!("TFIM n=3: {:.2e} in {ta:.1?}; commuting pair: {:.2e} in {tb:.1?}", a.trace_distance, b.trace_distance))
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut instances: Vec<(Instance, CMat)> = Vec::new();
    for n in 2..=6 {
        let inst = tfim(n);
        for spec in [
            UnitarySpec::Identity,
            UnitarySpec::Interpolation { t: 2.0, steps: Default::default() },
            UnitarySpec::Optimal { eps: Some(0.05) },
        ] {
            let u = inst.unitary(&spec, 1.0, 0.05, 0).unwrap().matrix;
            instances.push((tfim(n), u));
        }
    }
    for _ in 0..40 {
        let inst = random_pair(&mut rng, 2, &['I', 'X', 'Y', 'Z']);
        let u = haar_unitary(4, &mut rng).matrix;
        instances.push((inst, u));
    }
    let (mut count, mut worst) = (0, f64::INFINITY);
    for (inst, u) in &instances {
        for beta in [0.5, 1.0, 2.0] {
            let da = inst.thermo(beta).unwrap().delta_a;
            let dist = inst.distribution(u, beta).unwrap();
            for eps in [0.005, 0.05, 0.2, 0.5, 1.0] {
                let w = largest_cutoff(&dist, beta, da, eps).unwrap().w_l;
                worst = worst.min((beta * (da - w) / 2.0).exp());
                count += 1;
            }
        }
    }
    outcome(worst >= 0.986, format!("min over {count} reports {worst:.5}"))
}

fn c5() -> Outcome {
    let inst = tfim(4);
    let ws = inst.work_values();
    let da = inst.thermo(1.0).unwrap().delta_a;
    let id = linalg::identity(inst.dim());
    let w_l = largest_cutoff(&inst.distribution(&id, 1.0).unwrap(), 1.0, da, 0.05).unwrap().w_l;
    let params = select_parameters(1.0, inst.w_max(), w_l, 0.05).unwrap();
    let full = certify_constraints(&build_series(&params), &ws);
    let mut half = params;
    half.j /= 2;
    let halved = certify_constraints(&build_series(&half), &ws);
    let mut third = params;
    third.j /= 3;
    let thirds = certify_constraints(&build_series(&third), &ws);
    let ok = full.passed() && !halved.passed();
    outcome(
        ok,
        format!(
            "J={}: {} violations over {} eigenvalues; J/2: {} violations (worst ratio {:.3}); J/3: {} violations",
            params.j,
            full.violations,
            full.points.len(),
            halved.violations,
            halved.worst_ratio,
            thirds.violations
        ),
    )
}

fn c6() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut violations = 0;
    for k in 0..100 {
        let n = 3 + k % 4;
        let mut e0: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut e1: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        e0.sort_by(f64::total_cmp);
        e1.sort_by(f64::total_cmp);
        let beta = rng.gen_range(0.1..3.0);
        let w_l = rng.gen_range(-4.0..2.0);
        let g = cost_from_levels(&greedy_assignment(&e0, &e1, w_l), &e0, &e1, beta, w_l);
        let beaten = (0..n)
            .permutations(n)
            .any(|pi| cost_from_levels(&PermutationAssignment { pi }, &e0, &e1, beta, w_l) < g - 1e-14);
        violations += beaten as usize;
    }
    let el = t.elapsed();
    outcome(violations == 0 && within(el, 60.0), format!("{violations} violations in {el:.1?}"))
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_lcu = 0.0f64;
    for k in 0..50 {
        let d = 1 + k % 8;
        let jj = 1 + (k * 5) % 12;
        let coeffs: Vec<C64> = (0..2 * jj + 1).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let u = linalg::expi_hermitian(&random_hermitian(&mut rng, d), 0.9);
        let psi = random_state(&mut rng, d);
        let res = simulate_lcu_coeffs(&coeffs, &u, &psi).unwrap();
        assert!(res.output.len() <= 1 << 10);
        // sum_j c_j U^j psi
        let mut v = linalg::matrix_power(&u.adjoint(), jj as u64) * &psi;
        let mut direct = CVec::zeros(d);
        for c in &coeffs {
            direct += &v * *c;
            v = &u * v;
        }
        let oracle = direct / C64::new(res.normalization, 0.0);
        worst_lcu = worst_lcu.max((&res.top_block - oracle).norm());
    }
    let series = build_series(&select_parameters(1.0, 3.0, -1.0, 0.1).unwrap());
    let phases = solve_phase_set(&series).unwrap();
    let mut worst_qsp = 0.0f64;
    for k in 0..10 {
        let d = 1 + k % 6;
        let u = linalg::expi_hermitian(&random_hermitian(&mut rng, d), series.phase_rate());
        let psi = random_state(&mut rng, d);
        let a = simulate_lcu(&series, &u, &psi).unwrap();
        let b = simulate_qsp(&series, &phases, &u, &psi).unwrap();
        let xa = &a.top_block * C64::new(a.normalization, 0.0);
        let xb = &b.top_block * C64::new(b.normalization, 0.0);
        worst_qsp = worst_qsp.max((xa - xb).norm());
    }
    outcome(worst_lcu < 1e-10 && worst_qsp < 1e-6, format!("LCU vs oracle {worst_lcu:.2e}; QSP vs LCU {worst_qsp:.2e}"))
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut fails = Vec::new();
    for _ in 0..20 {
        let inst = random_pair(&mut rng, 2, &['I', 'X', 'Y', 'Z']);
        let u = haar_unitary(4, &mut rng).matrix;
        let beta = rng.gen_range(0.1..2.0);
        let w_l = cutoff_bound_general(norm_vu(&inst.h0_dense, &inst.h1_dense, &u).unwrap(), 0.5).unwrap();
        let da = inst.thermo(beta).unwrap().delta_a;
        if !cutoff_condition(&inst.distribution(&u, beta).unwrap(), beta, da, w_l, 0.5).satisfied {
            fails.push("general");
        }
    }
    for _ in 0..20 {
        let inst = random_pair(&mut rng, 2, &['I', 'Z']);
        let beta = rng.gen_range(0.1..2.0);
        let w_l = cutoff_bound_commuting(spectral_norm(&inst.v.to_dense()));
        let da = inst.thermo(beta).unwrap().delta_a;
        let dist = inst.distribution(&linalg::identity(4), beta).unwrap();
        if !cutoff_condition(&dist, beta, da, w_l, 0.5).satisfied {
            fails.push("commuting");
        }
    }
    for n in [4, 6] {
        let (h0, v) = build_tfim_split(n, 1.0, 1.0).unwrap();
        let meta = LocalityMetadata::from_split(&h0, &v).unwrap();
        let inst = Instance::from_split(h0, v).unwrap();
        let da = inst.thermo(1.0).unwrap().delta_a;
        let dist = inst.distribution(&linalg::identity(inst.dim()), 1.0).unwrap();
        for eps in [0.05, 0.005] {
            let w_l = cutoff_bound_local(&meta, eps).unwrap();
            if !cutoff_condition(&dist, 1.0, da, w_l, eps).satisfied {
                fails.push("local");
            }
        }
    }
    outcome(fails.is_empty(), format!("44 cutoffs checked, failures: {fails:?}"))
}

fn c9() -> Outcome {
    let (h0, v) = build_tfim_split(6, 1.0, 1.0).unwrap();
    let meta = LocalityMetadata::from_split(&h0, &v).unwrap();
    let inst = Instance::from_split(h0, v).unwrap();
    let (lo, hi) = (inst.spec0.min() - 1.0, inst.spec0.max() + 1.0);
    let grid: Vec<f64> = (0..10).map(|k| lo + (hi - lo) * k as f64 / 9.0).collect();
    let (mut pairs, mut bad, mut tightest) = (0, 0, 0.0f64);
    for &e0 in &grid {
        for &e1 in grid.iter().filter(|&&x| x <= e0) {
            let c = eigenspace_overlap_check(&inst.spec0, &inst.spec1, &meta, e0, e1).unwrap();
            pairs += 1;
            bad += !c.holds() as usize;
            if c.bound > 0.0 {
                tightest = tightest.max(c.lhs / c.bound);
            }
        }
    }
    outcome(bad == 0, format!("{pairs} grid pairs, {bad} violations, max lhs/bound {tightest:.3}"))
}

fn c10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut bad = 0;
    for _ in 0..100 {
        let inst = random_pair(&mut rng, 3, &['I', 'X', 'Y', 'Z']);
        let beta = rng.gen_range(0.05..3.0);
        let da = inst.thermo(beta).unwrap().delta_a;
        bad += (da.abs() > spectral_norm(&inst.v.to_dense()) + 1e-12) as usize;
    }
    outcome(bad == 0, format!("{bad} violations in 100 pairs"))
}

fn c11() -> Outcome {
    let hs = hs_parameters(1.0, 4.0, 0.1).unwrap();
    // one qubit: H0 = -Z, H1 = 2 + Z, work values {0, 2, 2, 4}
    let h0 = PauliSum::new(1, vec![(-1.0, "Z".parse().unwrap())]).unwrap();
    let v = PauliSum::new(1, vec![(2.0, "I".parse().unwrap()), (2.0, "Z".parse().unwrap())]).unwrap();
    let inst = Instance::from_split(h0, v).unwrap();
    let ws = inst.work_values();
    assert!(ws.iter().all(|&w| w >= -1e-12) && (inst.w_max() - 4.0).abs() < 1e-12);
    let err = |w: f64| ((-w / 2.0).exp() - hs.evaluate(w)).norm();
    let grid_err = (0..=4000).map(|k| err(4.0 * k as f64 / 4000.0)).fold(0.0, f64::max);
    let inst_err = ws.iter().map(|&w| err(w)).fold(0.0, f64::max);
    let sum = hs.coeff_sum();
    outcome(
        grid_err <= 0.1 && inst_err <= 0.1 && sum <= 2.0,
        format!("grid error {grid_err:.3e}, instance error {inst_err:.3e}, coefficient sum {sum:.4}"),
    )
}

fn c12() -> Outcome {
    let t = Instant::now();
    let sweep = SweepSpec::eps_sweep(vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0]);
    let rows = sweep_cutoff(&sweep).unwrap();
    let tags: Vec<String> = rows.iter().map(|r| r.unitary.clone()).unique().collect();
    let monotone = tags.iter().all(|tag| {
        let w: Vec<f64> = rows.iter().filter(|r| &r.unitary == tag).map(|r| r.w_l_star).collect();
        w.windows(2).all(|p| p[0] <= p[1] + 1e-12)
    });
    let dominated = sweep.grid.iter().all(|&eps| {
        let at: Vec<_> = rows.iter().filter(|r| r.eps == eps).collect();
        let opt = at.iter().find(|r| r.unitary == "optimal").unwrap().w_l_star;
        at.iter().all(|r| r.w_l_star <= opt + 1e-12)
    });
    let find = |tag: &str| rows.iter().find(|r| r.eps == 0.005 && r.unitary == tag).unwrap().w_l_star;
    let (w5, w0) = (find("T=5"), find("T=0"));
    let scale = scaling(&ScalingSpec::up_to(8)).unwrap();
    let growth = (1..=8).all(|n| {
        let at = |tag: &str| scale.iter().find(|r| r.n == n && r.unitary == tag).unwrap().w_l_star;
        at("T=5n") >= at("T=0")
    });
    let el = t.elapsed();
    outcome(
        monotone && dominated && w5 > w0 && growth && within(el, 600.0),
        format!(
            "monotone {monotone}, optimal dominates {dominated}, T=5 {w5:.4} vs T=0 {w0:.4}, T=5n >= T=0 for n<=8 {growth}, {el:.1?}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "series parameters", c1),
        (2, "fluctuation identities", c2),
        (3, "end-to-end preparation", c3),
        (4, "cutoff stays near free energy", c4),
        (5, "series certification", c5),
        (6, "greedy optimality", c6),
        (7, "block encodings", c7),
        (8, "guaranteed cutoffs", c8),
        (9, "eigenspace overlap bound", c9),
        (10, "free energy bound", c10),
        (11, "Gaussian series", c11),
        (12, "sweep properties", c12),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let t = Instant::now();
        let o = check();
        let known = KNOWN_FAILURES.contains(&id);
        let verdict = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {id:>2} {name}: {verdict} [{:.1}s] {}", t.elapsed().as_secs_f64(), o.detail);
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
