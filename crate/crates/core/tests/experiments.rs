use thermoprep::experiments::*;
use thermoprep::io::CsvTable;
use thermoprep::pipeline::{StepSpec, SystemSpec, UnitarySpec};

fn small_sweep(grid: Vec<f64>) -> SweepSpec {
    SweepSpec {
        n: 3,
        times: vec![0.0, 1.0, 3.0],
        ..SweepSpec::eps_sweep(grid)
    }
}

fn text(t: &CsvTable) -> String {
    String::from_utf8(t.to_bytes().unwrap()).unwrap()
}

#[test]
fn cutoff_grows_with_eps_and_optimal_dominates() {
    let grid = vec![0.005, 0.02, 0.1, 0.5, 1.0];
    let rows = sweep_cutoff(&small_sweep(grid.clone())).unwrap();
    assert_eq!(rows.len(), grid.len() * 4);
    for tag in ["T=0", "T=1", "T=3", "optimal"] {
        let w: Vec<f64> = rows.iter().filter(|r| r.unitary == tag).map(|r| r.w_l_star).collect();
        assert_eq!(w.len(), grid.len());
        assert!(w.windows(2).all(|p| p[0] <= p[1] + 1e-12), "{tag}: {w:?}");
    }
    for &eps in &grid {
        let at: Vec<_> = rows.iter().filter(|r| r.eps == eps).collect();
        let opt = at.iter().find(|r| r.unitary == "optimal").unwrap().w_l_star;
        assert!(at.iter().all(|r| r.w_l_star <= opt + 1e-12), "eps {eps}");
    }
    let csv = text(&cutoff_table(&rows));
    assert!(csv.starts_with("eps,unitary,t,w_l_star\n"));
    assert!(csv.contains("\n0.005,optimal,,"));
}

#[test]
fn drive_time_sweep_shape() {
    let spec = SweepSpec {
        variable: SweepVariable::T,
        grid: vec![0.0, 0.5, 2.0],
        eps: vec![0.01, 0.1],
        ..small_sweep(vec![])
    };
    let rows = sweep_cutoff(&spec).unwrap();
    assert_eq!(rows.len(), 3 * 2 + 2);
    assert_eq!(rows.iter().filter(|r| r.unitary == "optimal").count(), 2);
    assert!(rows.iter().filter(|r| r.unitary != "optimal").all(|r| r.t.is_some()));
}

#[test]
fn sweep_validation() {
    for grid in [vec![], vec![0.0], vec![0.1, 0.1], vec![f64::NAN]] {
        assert!(matches!(sweep_cutoff(&small_sweep(grid)), Err(thermoprep::Error::Config(_))));
    }
    let text = r#"{"variable": "eps", "grid": [0.1], "n": 2, "wat": 1}"#;
    assert!(serde_json::from_str::<SweepSpec>(text).is_err());
    let ok: SweepSpec = serde_json::from_str(r#"{"variable": "eps", "grid": [0.1], "n": 2}"#).unwrap();
    assert_eq!(ok.times, vec![0.0, 1.0, 2.0, 3.0, 5.0]);
}

#[test]
fn workdist_series_are_normalized() {
    let spec = WorkdistSpec {
        unitaries: vec![
            UnitarySpec::Identity,
            UnitarySpec::Interpolation { t: 1.0, steps: StepSpec::default() },
            UnitarySpec::Optimal { eps: None },
            UnitarySpec::Random { seed: Some(3) },
        ],
        ..WorkdistSpec::new(3)
    };
    let series = workdist(&spec).unwrap();
    let tags: Vec<&str> = series.iter().map(|s| s.unitary.as_str()).collect();
    assert_eq!(tags, ["identity", "T=1", "optimal", "random"]);
    for s in &series {
        let total: f64 = s.bins.iter().map(|b| b.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(s.bins.windows(2).all(|p| p[0].0 < p[1].0));
        let mean: f64 = s.bins.iter().map(|(w, p)| w * p).sum();
        assert!((mean - s.mean).abs() < 1e-12);
    }
    let csv = text(&workdist_table(&series));
    assert!(csv.starts_with("unitary,w,p,w_l_star\n"));
    assert_eq!(csv.lines().count(), 1 + series.iter().map(|s| s.bins.len()).sum::<usize>());
}

#[test]
fn scaling_rows() {
    let spec = ScalingSpec { n_min: 1, n_max: 4, ..ScalingSpec::up_to(4) };
    let rows = scaling(&spec).unwrap();
    assert_eq!(rows.len(), 16);
    // a single spin has no bond, so every drive time agrees
    let one: Vec<f64> = rows.iter().filter(|r| r.n == 1).map(|r| r.w_l_star).collect();
    assert!(one.iter().all(|&w| (w - one[0]).abs() < 1e-9), "{one:?}");
    let r3: Vec<_> = rows.iter().filter(|r| r.n == 3).map(|r| (r.unitary.as_str(), r.t)).collect();
    assert_eq!(r3, [("T=0", 0.0), ("T=2", 2.0), ("T=n", 3.0), ("T=5n", 15.0)]);
    assert!(text(&scaling_table(&rows)).starts_with("n,unitary,t,w_l_star\n"));
    assert!(scaling(&ScalingSpec { n_min: 3, n_max: 2, ..spec.clone() }).is_err());
}

#[test]
fn output_is_deterministic_across_worker_counts() {
    let spec = small_sweep(vec![0.01, 0.1]);
    let a = with_workers(1, || sweep_cutoff(&spec)).unwrap().unwrap();
    let b = with_workers(3, || sweep_cutoff(&spec)).unwrap().unwrap();
    assert_eq!(text(&cutoff_table(&a)), text(&cutoff_table(&b)));
}

#[test]
fn files_are_replaced_whole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let mut t = CsvTable::new(&["a", "b"]);
    for k in 0..50 {
        t.push(vec![k.to_string(), "x".into()]);
    }
    t.write(&path).unwrap();
    let short = CsvTable::new(&["a", "b"]);
    short.write(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn verification_rows() {
    let rows = verify(&VerifySpec::new(SystemSpec::tfim(3), 1.0)).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r.residuals.max() < 1e-10, "{}: {:?}", r.unitary, r.residuals);
    }
}

#[test]
fn phase_report() {
    let spec = PhaseSpec { beta: 1.0, w_max: 3.0, w_l: -1.0, eps: 0.1 };
    let (set, report) = qsp_phases(&spec).unwrap();
    assert_eq!(report.phases_per_set, set.phases1.len());
    assert_eq!(report.phases_per_set, 2 * report.params.j + 1);
    assert!(report.residual1 <= 1e-6 && report.residual2 <= 1e-6);
}
