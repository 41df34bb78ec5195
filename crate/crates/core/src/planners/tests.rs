use super::*;
use crate::kinematics::KinematicChain;
use crate::solvers::brute_force_gtsp;
use nalgebra::Vector3;

fn planar3() -> KinematicChain {
    KinematicChain::bundled("planar-3r").unwrap()
}

fn point(x: f64, y: f64) -> EndEffectorTarget {
    EndEffectorTarget::new(Vector3::new(x, y, 0.0), -Vector3::z()).unwrap()
}

/// `cols x rows` grid of planar points with 4-neighbour edges.
fn grid(cols: usize, rows: usize, step: f64) -> CoverageProblem {
    let mut targets = Vec::new();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            targets.push(point(0.7 + c as f64 * step, 0.3 + r as f64 * step));
            if c + 1 < cols {
                edges.push((i, i + 1));
            }
            if r + 1 < rows {
                edges.push((i, i + cols));
            }
        }
    }
    CoverageProblem::new(targets, edges).unwrap()
}

fn params(seed: u64) -> PlannerParams {
    PlannerParams {
        samples: 20,
        seed,
        budget: SolverBudget::rounds(30, 0),
        ..PlannerParams::default()
    }
}

fn check(plan: &Plan, problem: &CoverageProblem, chain: &KinematicChain, p: &PlannerParams) {
    let tol = ToleranceSpec::position_only();
    validate_trajectory(&plan.trajectory, &problem.targets, chain, &tol, &plan.reconfig, p.alpha, &p.ik)
        .unwrap();
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.key().parse::<Method>().unwrap(), m);
        assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
    }
    assert!("dijkstra".parse::<Method>().is_err());
}

#[test]
fn single_target_gives_one_step() {
    let problem = CoverageProblem::new(vec![point(0.9, 0.4)], vec![]).unwrap();
    let chain = planar3();
    for m in Method::ALL {
        let p = params(3);
        let plan = plan(m, &problem, &chain, &ToleranceSpec::position_only(), &p).unwrap();
        assert_eq!(plan.trajectory.order, vec![0], "{m}");
        assert!(plan.trajectory.breakpoints.is_empty());
        check(&plan, &problem, &chain, &p);
    }
}

#[test]
fn every_method_covers_a_small_grid() {
    let problem = grid(3, 3, 0.05);
    let chain = planar3();
    let tol = ToleranceSpec::position_only();
    for m in Method::ALL {
        let p = params(7);
        let plan = plan(m, &problem, &chain, &tol, &p).unwrap();
        check(&plan, &problem, &chain, &p);
        assert_eq!(plan.trajectory.reconfig_count(), 0, "{m}");
    }
}

#[test]
fn short_segments_still_cover_everything() {
    let problem = grid(4, 3, 0.05);
    let chain = planar3();
    let tol = ToleranceSpec::position_only();
    for global_refine in [false, true] {
        let mut p = params(11);
        p.hierarchy = HierarchyParams {
            window: 1,
            segment_len: 4,
            overlap: 2,
            global_refine,
        };
        let plan = plan_h_joint_gtsp(&problem, &chain, &tol, &p).unwrap();
        check(&plan, &problem, &chain, &p);
    }
}

#[test]
fn runs_are_deterministic() {
    let problem = grid(3, 2, 0.05);
    let chain = planar3();
    let tol = ToleranceSpec::position_only();
    for m in Method::ALL {
        let a = plan(m, &problem, &chain, &tol, &params(5)).unwrap();
        let b = plan(m, &problem, &chain, &tol, &params(5)).unwrap();
        assert_eq!(a.trajectory, b.trajectory, "{m}");
    }
}

#[test]
fn unreachable_targets_are_listed() {
    let problem = CoverageProblem::new(
        vec![point(0.9, 0.4), point(3.0, 0.0), point(0.0, -4.0)],
        vec![(0, 1), (1, 2)],
    )
    .unwrap();
    let err = plan_joint_gtsp(&problem, &planar3(), &ToleranceSpec::position_only(), &params(1))
        .unwrap_err();
    match err {
        Error::Unreachable { targets } => assert_eq!(targets, vec![1, 2]),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn joint_gtsp_matches_exhaustive_search() {
    let chain = KinematicChain::bundled("planar-2r").unwrap();
    let problem = CoverageProblem::new(
        vec![point(1.2, 0.6), point(1.22, 0.6), point(1.24, 0.62)],
        vec![(0, 1), (1, 2), (0, 2)],
    )
    .unwrap();
    let tol = ToleranceSpec::position_only();
    let p = params(2);
    let samples = sample_targets(&problem, &chain, &tol, &p).unwrap();
    assert!(samples.iter().all(|s| s.configs.len() == 2), "both elbow branches");
    let reconfig = problem.reconfig_params(&p, &tol);
    let graph = build_joint_graph(
        &chain,
        &problem.targets,
        &samples,
        &problem.edges,
        &reconfig,
        default_big_m(&chain),
        p.alpha,
    )
    .unwrap()
    .add_dummy()
    .unwrap();
    let best = brute_force_gtsp(&graph).unwrap().weight;
    let plan = plan_joint_gtsp(&problem, &chain, &tol, &p).unwrap();
    let t = &plan.trajectory;
    let got: f64 = (0..t.len() - 1)
        .map(|i| {
            if t.breakpoints.contains(&i) {
                default_big_m(&chain)
            } else {
                t.configs[i].distance(&t.configs[i + 1])
            }
        })
        .sum();
    assert!((got - best).abs() < 1e-9, "{got} vs {best}");
}

#[test]
fn invalid_hierarchy_params_are_rejected() {
    let mut p = params(0);
    p.hierarchy.overlap = p.hierarchy.segment_len;
    assert!(p.validate().is_err());
    p.hierarchy = HierarchyParams {
        window: 0,
        ..HierarchyParams::default()
    };
    assert!(p.validate().is_err());
}
