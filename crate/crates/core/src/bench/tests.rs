use super::*;
use crate::kinematics::JointConfig;
use crate::sampling::{sample_all, SamplingParams};
use crate::error::Error;
use crate::solvers::SolverBudget;
use crate::surface::{compute_targets, generate_benchmark_surface, SurfaceKind, SurfaceSpec};
use approx::assert_relative_eq;
use nalgebra::Vector3;
use proptest::prelude::*;

fn planar2() -> KinematicChain {
    KinematicChain::bundled("planar-2r").unwrap()
}

/// Targets sitting exactly where `configs` put the tool.
fn on_arm(chain: &KinematicChain, configs: &[Vec<f64>]) -> (Vec<EndEffectorTarget>, Vec<JointConfig>) {
    configs
        .iter()
        .map(|q| {
            let p = chain.fk(q).unwrap().position;
            (
                EndEffectorTarget::new(p, -Vector3::z()).unwrap(),
                JointConfig::new(q.clone()),
            )
        })
        .unzip()
}

fn trajectory(configs: Vec<JointConfig>, breakpoints: Vec<usize>) -> Trajectory {
    Trajectory {
        order: (0..configs.len()).collect(),
        configs,
        breakpoints,
    }
}

#[test]
fn breakpoint_steps_carry_no_movement() {
    let chain = planar2();
    let (targets, configs) = on_arm(&chain, &[vec![0.0, 0.5], vec![0.5, 0.5], vec![1.0, 0.5]]);
    let m = compute_metrics(&trajectory(configs, vec![0]), &targets, &chain, &ToleranceSpec::position_only())
        .unwrap();
    assert_eq!(m.reconfigs, 1);
    assert_relative_eq!(m.movement, 0.5, epsilon = 1e-12);
    assert!(m.max_position_error < 1e-12);
    assert_eq!(m.max_rotation_error, None);
}

#[test]
fn repeated_config_adds_nothing() {
    let chain = planar2();
    let (targets, configs) = on_arm(&chain, &[vec![0.2, 0.9], vec![0.2, 0.9]]);
    let m = compute_metrics(&trajectory(configs, vec![]), &targets, &chain, &ToleranceSpec::position_only())
        .unwrap();
    assert_eq!(m.movement, 0.0);
}

#[test]
fn movement_is_the_sum_of_step_norms() {
    let chain = planar2();
    let qs = [vec![0.0, 0.3], vec![0.3, 0.7], vec![0.3, 1.0], vec![-0.2, 1.1]];
    let (targets, configs) = on_arm(&chain, &qs);
    // (0.3, 0.4) -> 0.5, (0, 0.3) -> 0.3, (-0.5, 0.1) -> sqrt(0.26)
    let expected = 0.5 + 0.3 + 0.26f64.sqrt();
    let m = compute_metrics(&trajectory(configs, vec![]), &targets, &chain, &ToleranceSpec::position_only())
        .unwrap();
    assert_relative_eq!(m.movement, expected, epsilon = 1e-12);
}

#[test]
fn rotation_error_reported_when_constrained() {
    let chain = KinematicChain::bundled("panda-like").unwrap();
    let q = vec![0.1, -0.3, 0.2, -2.0, 0.1, 1.9, 0.6];
    let pose = chain.fk(&q).unwrap();
    // normal opposite the tool axis: an exact 5-DoF target
    let target = EndEffectorTarget::new(pose.position, -pose.tool_axis()).unwrap();
    let traj = trajectory(vec![JointConfig::new(q)], vec![]);
    let m = compute_metrics(&traj, &[target], &chain, &ToleranceSpec::free_spin()).unwrap();
    assert!(m.max_rotation_error.unwrap() < 1e-9);
    assert!(m.max_position_error < 1e-12);
}

fn record(seed: u64, reconfigs: usize, movement: f64, time: f64) -> RunRecord {
    RunRecord {
        seed,
        time_secs: time,
        metrics: Some(TrajectoryMetrics {
            reconfigs,
            movement,
            max_position_error: 1e-4,
            max_rotation_error: None,
        }),
        error: None,
    }
}

#[test]
fn single_repeat_has_zero_spread() {
    let r = RunReport::from_runs(Method::JointGtsp, 5, vec![record(0, 2, 3.0, 1.5)]);
    assert_eq!((r.reconfigs.std, r.movement.std, r.time_secs.std), (0.0, 0.0, 0.0));
    assert_eq!(r.movement.mean, 3.0);
    assert_eq!(r.n, 5);
}

#[test]
fn failed_repeats_are_counted_not_averaged() {
    let failed = RunRecord {
        seed: 1,
        time_secs: f64::NAN,
        metrics: None,
        error: Some("unreachable targets: [3]".into()),
    };
    let r = RunReport::from_runs(Method::CartTspIklink, 4, vec![record(0, 0, 2.0, 1.0), failed]);
    assert_eq!((r.repeats, r.failures), (2, 1));
    assert_eq!(r.movement.mean, 2.0);
    assert_eq!(r.time_secs.mean, 1.0);
    assert!(report_table(std::slice::from_ref(&r)).contains("(1 failed)"));
}

proptest! {
    #[test]
    fn streamed_statistics_match_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let s = xs.iter().copied().collect::<Accumulator>().summary();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let scale = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        prop_assert!((s.mean - mean).abs() <= 1e-12 * scale);
        prop_assert!((s.std - var.sqrt()).abs() <= 1e-12 * scale);
    }
}

#[test]
fn report_rows_follow_the_given_order() {
    let order = [Method::HJointGtsp, Method::CartTspIklink, Method::JointGtsp];
    let reports: Vec<RunReport> =
        order.iter().map(|&m| RunReport::from_runs(m, 9, vec![record(0, 0, 1.0, 1.0)])).collect();
    let table = export_report(&reports, ReportFormat::Table).unwrap();
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    for (row, m) in rows.iter().zip(order) {
        assert!(row.starts_with(&m.to_string()), "{row}");
    }
    let json: Vec<RunReport> = serde_json::from_str(&export_report(&reports, ReportFormat::Json).unwrap()).unwrap();
    assert_eq!(json.iter().map(|r| r.method).collect::<Vec<_>>(), order);
}

#[test]
fn one_step_csv() {
    let traj = trajectory(vec![JointConfig::new(vec![0.25, -1.5])], vec![]);
    let csv = export_trajectory(&traj, TrajectoryFormat::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["step,target_index,theta_1,theta_2,breakpoint_after", "0,0,0.25,-1.5,0"]);
}

fn sample_trajectory() -> Trajectory {
    Trajectory {
        order: vec![2, 0, 1],
        configs: vec![
            JointConfig::new(vec![0.1, 1.0 / 3.0, -2.0]),
            JointConfig::new(vec![1e-17, 0.7, std::f64::consts::PI]),
            JointConfig::new(vec![-0.0, 0.2, 5.5]),
        ],
        breakpoints: vec![1],
    }
}

#[test]
fn trajectory_round_trips() {
    let traj = sample_trajectory();
    for format in [TrajectoryFormat::Json, TrajectoryFormat::Csv] {
        let text = export_trajectory(&traj, format).unwrap();
        assert_eq!(import_trajectory(&text, format).unwrap(), traj, "{format:?}");
    }
}

#[test]
fn trajectory_files_use_the_extension() {
    let dir = tempfile::tempdir().unwrap();
    let traj = sample_trajectory();
    for name in ["t.csv", "t.json"] {
        let path = dir.path().join(name);
        write_trajectory(&traj, &path).unwrap();
        assert_eq!(read_trajectory(&path).unwrap(), traj);
    }
    assert!(write_trajectory(&traj, &dir.path().join("t.txt")).is_err());
    let missing = dir.path().join("missing.csv");
    let err = read_trajectory(&missing).unwrap_err().to_string();
    assert!(err.contains("missing.csv"), "{err}");
}

#[test]
fn malformed_csv_is_rejected() {
    let bad = "step,target_index,theta_1,breakpoint_after\n0,0,0.1,2\n";
    assert!(import_trajectory(bad, TrajectoryFormat::Csv).is_err());
    let skipped = "step,target_index,theta_1,breakpoint_after\n1,0,0.1,0\n";
    assert!(import_trajectory(skipped, TrajectoryFormat::Csv).is_err());
}

#[test]
fn config_round_trips_through_toml() {
    let mut cfg = BenchConfig::wok(60);
    cfg.repeats = 3;
    cfg.methods = vec![Method::JointGtsp];
    cfg.planner.budget = SolverBudget::rounds(40, 0);
    let back = BenchConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn config_errors_name_the_key() {
    let base = "[surface]\nkind = \"floor-grid\"\nresolution = [3, 3]\n";
    let cases = [
        (format!("{base}[planner]\nsampels = 3\n"), "planner.sampels"),
        (format!("{base}[planner.budget]\nstagnation_rounds = -1\n"), "planner.budget.stagnation_rounds"),
        (format!("repeat = 2\n{base}"), "repeat"),
        (format!("methods = [\"dijkstra\"]\n{base}"), "methods"),
        (format!("repeats = 0\n{base}"), "repeats"),
        ("robot = \"panda-like\"\n".to_string(), "surface"),
    ];
    for (src, key) in cases {
        match BenchConfig::from_toml_str(&src) {
            Err(Error::Config { key: k, .. }) => assert!(k.starts_with(key), "{k} for {src}"),
            other => panic!("{src}: {other:?}"),
        }
    }
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = BenchConfig::from_toml_str("mesh = \"part.obj\"\n").unwrap();
    assert_eq!(cfg.repeats, 10);
    assert_eq!(cfg.methods, Method::ALL);
    assert_eq!(cfg.planner.samples, 100);
    assert_eq!(cfg.source().unwrap(), SurfaceSource::Mesh("part.obj".into()));
    assert!(cfg.with_target_count(30).is_err());
}

#[test]
fn surface_argument_accepts_kinds_and_files() {
    assert!(matches!(SurfaceSource::parse("hemisphere").unwrap(), SurfaceSource::Generated(_)));
    assert!(SurfaceSource::parse("no-such-thing.obj").is_err());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    let src = SurfaceSource::parse(path.to_str().unwrap()).unwrap();
    assert_eq!(src.load().unwrap().vertex_count(), 3);
}

#[test]
fn presets_are_reachable_by_the_seven_dof_arm() {
    let chain = KinematicChain::bundled("panda-like").unwrap();
    let tol = ToleranceSpec::free_spin();
    let params = PlannerParams::default();
    for kind in [
        SurfaceKind::HemisphereExterior,
        SurfaceKind::BowlInterior,
        SurfaceKind::FloorGrid,
        SurfaceKind::Stairs,
    ] {
        let mesh = generate_benchmark_surface(&preset_surface(kind)).unwrap();
        let targets = compute_targets(&mesh).unwrap();
        let sp = SamplingParams {
            samples: 20,
            seed: 1,
            merge_eps: params.merge_eps,
            merge_min_pts: params.merge_min_pts,
            ik: params.ik,
        };
        let sets = sample_all(&chain, &targets, &tol, &sp);
        let missing: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].configs.is_empty()).collect();
        assert!(missing.is_empty(), "{kind:?}: {missing:?}");
    }
}

fn small_floor(methods: Vec<Method>, repeats: usize) -> BenchConfig {
    let mut cfg = BenchConfig::new(SurfaceSource::Generated(SurfaceSpec::floor_grid([0.5, 0.0, 0.1], 0.1, 0.1, 4, 4)));
    cfg.methods = methods;
    cfg.repeats = repeats;
    cfg.planner.samples = 15;
    cfg.planner.budget = SolverBudget::rounds(20, 0);
    cfg
}

#[test]
fn floor_grid_reports_carry_the_target_count() {
    let reports = run_benchmark(&small_floor(Method::ALL.to_vec(), 1)).unwrap();
    assert_eq!(reports.len(), 3);
    for r in &reports {
        assert_eq!(r.n, 16);
        assert_eq!(r.failures, 0, "{:?}", r.runs);
    }
}

#[test]
fn repeats_use_consecutive_seeds_and_are_reproducible() {
    let mut cfg = small_floor(vec![Method::HJointGtsp], 2);
    cfg.seed = 40;
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    let seeds: Vec<u64> = a[0].runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, [40, 41]);
    let metrics = |r: &[RunReport]| r[0].runs.iter().map(|x| x.metrics).collect::<Vec<_>>();
    assert_eq!(metrics(&a), metrics(&b));
}

#[test]
fn sweep_orders_densities_and_matches_single_runs() {
    let cfg = small_floor(vec![Method::CartTspIklink], 1);
    let sweep = scaling_sweep(&cfg, &[16, 9]).unwrap();
    let ns: Vec<usize> = sweep.iter().map(|p| p.n).collect();
    assert_eq!(ns, [9, 16]);
    let single = run_benchmark(&cfg).unwrap();
    assert_eq!(sweep[1].reports[0].runs[0].metrics, single[0].runs[0].metrics);
}
