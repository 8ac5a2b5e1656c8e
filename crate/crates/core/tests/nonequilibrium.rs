use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoprep::hamiltonians::{build_tfim_split, diagonalize, PauliSum};
use thermoprep::linalg::{self, CMat};
use thermoprep::nonequilibrium::*;

fn sorted_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    e.sort_by(f64::total_cmp);
    e
}

// fine midpoint product built from dense exponentials
fn evolution_oracle(h0: &PauliSum, v: &PauliSum, t: f64, steps: usize) -> CMat {
    let (a, b) = (h0.to_dense().matrix().clone(), v.to_dense().matrix().clone());
    let dt = t / steps as f64;
    let mut u = linalg::identity(a.nrows());
    for k in 0..steps {
        let s = (k as f64 + 0.5) / steps as f64;
        let h = &a + &b * linalg::re(s);
        u = linalg::expi_hermitian(&h, -dt) * u;
    }
    u
}

#[test]
fn zero_time_and_zero_drive() {
    let (h0, v) = build_tfim_split(3, 0.7, 1.3).unwrap();
    let u = interpolated_evolution(&h0, &v, 0.0, StepCount::Auto).unwrap();
    assert!(linalg::max_abs(&(u.matrix - linalg::identity(8))) < 1e-15);
    let zero = PauliSum::new(3, vec![]).unwrap();
    for steps in [StepCount::Fixed(7), StepCount::Auto] {
        let u = interpolated_evolution(&h0, &zero, 1.5, steps).unwrap();
        let exact = linalg::expi_hermitian(h0.to_dense().matrix(), -1.5);
        assert!(linalg::max_abs(&(u.matrix - exact)) < 1e-9);
    }
    assert!(interpolated_evolution(&h0, &v, -1.0, StepCount::Auto).is_err());
}

#[test]
fn auto_steps_match_fine_product() {
    for (n, t) in [(2, 1.0), (3, 2.5), (4, 1.0)] {
        let (h0, v) = build_tfim_split(n, 1.0, 1.0).unwrap();
        let u = interpolated_evolution(&h0, &v, t, StepCount::Auto).unwrap();
        assert!(linalg::unitary_deviation(&u.matrix) < 1e-12);
        let oracle = evolution_oracle(&h0, &v, t, 4000);
        // midpoint error at 4000 steps is below 1e-6
        assert!(linalg::operator_norm(&(&u.matrix - &oracle)) < 1e-6, "n={n}");
        match u.label {
            UnitaryLabel::Interpolation { steps, .. } => assert!(steps >= 1),
            _ => panic!("wrong label"),
        }
    }
}

#[test]
fn fixed_steps_converge_quadratically() {
    let (h0, v) = build_tfim_split(2, 1.0, 1.0).unwrap();
    let reference = interpolated_evolution(&h0, &v, 2.0, StepCount::Auto).unwrap().matrix;
    let err = |s| linalg::operator_norm(&(interpolated_evolution(&h0, &v, 2.0, StepCount::Fixed(s)).unwrap().matrix - &reference));
    let ratio = err(20) / err(40);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn greedy_is_optimal_by_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..100 {
        let n = 3 + trial % 4;
        let e0 = sorted_levels(&mut rng, n);
        let e1 = sorted_levels(&mut rng, n);
        let beta = rng.gen_range(0.1..3.0);
        let w_l = rng.gen_range(-4.0..2.0);
        let greedy = greedy_assignment(&e0, &e1, w_l);
        assert!(greedy.is_bijective());
        let g = cost_from_levels(&greedy, &e0, &e1, beta, w_l);
        let best = (0..n)
            .permutations(n)
            .map(|pi| cost_from_levels(&PermutationAssignment { pi }, &e0, &e1, beta, w_l))
            .fold(f64::INFINITY, f64::min);
        assert!(g <= best + 1e-14, "trial {trial}: {g} > {best}");
    }
}

#[test]
fn optimal_cutoff_is_largest_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..30 {
        let n = rng.gen_range(3..=5);
        let e0 = sorted_levels(&mut rng, n);
        let e1 = sorted_levels(&mut rng, n);
        let beta = rng.gen_range(0.1..3.0);
        let eps = rng.gen_range(0.01..1.0);
        let budget = (eps / 6.0f64).powi(2);
        let (d, assign) = optimal_cutoff(&e0, &e1, beta, eps);
        assert!(cost_from_levels(&assign, &e0, &e1, beta, d) <= budget);
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        let feasible = |x: f64| perms.iter().any(|pi| cost_from_levels(&PermutationAssignment { pi: pi.clone() }, &e0, &e1, beta, x) <= budget);
        // no candidate above d admits any permutation
        for x in e1.iter().flat_map(|a| e0.iter().map(move |b| a - b)).filter(|&x| x > d + 1e-12) {
            assert!(!feasible(x));
        }
    }
}

#[test]
fn optimal_unitary_maps_eigenvectors() {
    let (h0, v) = build_tfim_split(3, 1.0, 1.0).unwrap();
    let h1 = h0.to_dense().add(&v.to_dense()).unwrap();
    let (s0, s1) = (diagonalize(&h0.to_dense()), diagonalize(&h1));
    let (d, _) = optimal_cutoff(&s0.eigenvalues, &s1.eigenvalues, 1.0, 0.05);
    let (u, assign) = optimal_unitary(&s0, &s1, d).unwrap();
    assert!(linalg::unitary_deviation(&u.matrix) < 1e-12);
    for (k, &m) in assign.pi.iter().enumerate() {
        let image = &u.matrix * s0.eigenvectors.column(m);
        assert!((s1.eigenvectors.column(k).dotc(&image).norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(u.label, UnitaryLabel::Optimal { w_l: d });
}

#[test]
fn haar_unitaries_are_unitary_and_seeded() {
    for dim in [1, 2, 5, 16] {
        let a = haar_unitary(dim, &mut ChaCha8Rng::seed_from_u64(4)).matrix;
        let b = haar_unitary(dim, &mut ChaCha8Rng::seed_from_u64(4)).matrix;
        assert!(linalg::unitary_deviation(&a) < 1e-12);
        assert_eq!(a, b);
    }
    assert!(NonEqUnitary::custom(linalg::identity(2) * linalg::re(2.0)).is_err());
}
