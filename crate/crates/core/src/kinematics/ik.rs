use nalgebra::{Matrix3, Matrix6, Matrix6xX, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pose::violation, pose::Violation, JointConfig, KinematicChain, Pose, ToleranceSpec};
use crate::surface::EndEffectorTarget;

/// Accuracy thresholds and the iteration budget of [`solve_ik`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkSettings {
    #[serde(default = "default_position_accuracy")]
    pub position_accuracy: f64,
    #[serde(default = "default_rotation_accuracy")]
    pub rotation_accuracy: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u32,
}

fn default_position_accuracy() -> f64 {
    1e-3
}
fn default_rotation_accuracy() -> f64 {
    1e-2
}
fn default_max_iterations() -> u32 {
    150
}

impl Default for IkSettings {
    fn default() -> Self {
        Self {
            position_accuracy: default_position_accuracy(),
            rotation_accuracy: default_rotation_accuracy(),
            max_iterations: default_max_iterations(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkFailure {
    pub iterations: u32,
    pub position_error: f64,
    pub rotation_error: f64,
}

/// Meters per radian when position and rotation errors share one norm.
const ROTATION_WEIGHT: f64 = 0.2;
const MAX_STEP: f64 = 0.5;
const ESCAPE_STEP: f64 = 0.3;
/// Iterations over which the cost must drop by `PROGRESS` or the run
/// counts as stalled.
const PROGRESS_WINDOW: u32 = 10;
const PROGRESS: f64 = 0.5;

fn converged(v: &Violation, s: &IkSettings) -> bool {
    v.position <= s.position_accuracy && v.rotation <= s.rotation_accuracy
}

fn cost(v: &Violation) -> f64 {
    v.position * v.position + (ROTATION_WEIGHT * v.rotation).powi(2)
}

/// Levenberg-Marquardt on the tolerance-clamped task error.
///
/// Error components inside their tolerance are zero and their task
/// directions are projected out of the Jacobian, so the solver is free to
/// drift within the allowed set. Iterates are projected onto the joint
/// limits. The search starts at `seed`; when it stalls it restarts from
/// configurations drawn deterministically from `seed`, all within
/// `max_iterations`. A seed that already solves the target is returned as is.
///
/// When the run under `tol` fails, the same seed is retried with tilt and
/// tangent slack removed, then with spin constrained as well; any such
/// answer also satisfies `tol`. Loosening a tolerance away from zero (or
/// freeing spin) therefore never loses a success for the same seed.
pub fn solve_ik(
    chain: &KinematicChain,
    target: &EndEffectorTarget,
    tol: &ToleranceSpec,
    seed: &[f64],
    settings: &IkSettings,
) -> Result<JointConfig, IkFailure> {
    if seed.len() != chain.dof() {
        return Err(IkFailure {
            iterations: 0,
            position_error: f64::INFINITY,
            rotation_error: f64::INFINITY,
        });
    }
    let first = match solve_local(chain, target, tol, seed, settings) {
        Ok(q) => return Ok(q),
        Err(e) => e,
    };
    let exact_axis = ToleranceSpec {
        tilt_tolerance: 0.0,
        tangent_translation_radius: 0.0,
        ..*tol
    };
    let exact_pose = ToleranceSpec {
        free_spin_about_normal: false,
        ..exact_axis
    };
    let mut tried = vec![*tol];
    for fallback in [exact_axis, exact_pose] {
        if tried.contains(&fallback) {
            continue;
        }
        tried.push(fallback);
        if let Ok(q) = solve_local(chain, target, &fallback, seed, settings) {
            return Ok(q);
        }
    }
    Err(first)
}

fn solve_local(
    chain: &KinematicChain,
    target: &EndEffectorTarget,
    tol: &ToleranceSpec,
    seed: &[f64],
    settings: &IkSettings,
) -> Result<JointConfig, IkFailure> {
    let mut q = seed.to_vec();
    chain.clamp(&mut q);
    let (mut iso, mut jac) = chain.fk_jacobian(&q);
    let mut current = violation(&Pose::from_isometry(&iso), target, tol);
    if converged(&current, settings) {
        return Ok(JointConfig(q));
    }

    let mut damping = 1e-3;
    let mut escapes = 0;
    let mut restarts = None;
    let mut stalled = false;
    let mut window_start = 0;
    let mut window_cost = cost(&current);
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        let (mut rows, err) = task_system(&Pose::from_isometry(&iso), &jac, target, tol, &current);
        // Joints sitting on a limit and pushed outward are locked and the
        // step is recomputed without them.
        let mut dq = None;
        for _ in 0..=chain.dof() {
            let a: Matrix6<f64> = &rows * rows.transpose() + Matrix6::identity() * damping;
            let Some(chol) = a.cholesky() else { break };
            let step = rows.transpose() * chol.solve(&err);
            let mut locked = false;
            for (i, joint) in chain.joints().iter().enumerate() {
                let [lo, hi] = joint.limits;
                let pushing_out = (q[i] <= lo && step[i] < 0.0) || (q[i] >= hi && step[i] > 0.0);
                if pushing_out && rows.column(i).amax() > 0.0 {
                    rows.column_mut(i).fill(0.0);
                    locked = true;
                }
            }
            dq = Some(step);
            if !locked {
                break;
            }
        }
        let Some(mut dq) = dq else {
            damping *= 10.0;
            continue;
        };
        let largest = dq.amax();
        if largest > MAX_STEP {
            dq *= MAX_STEP / largest;
        }
        let mut next: Vec<f64> = q.iter().zip(dq.iter()).map(|(a, b)| a + b).collect();
        chain.clamp(&mut next);
        let (next_iso, next_jac) = chain.fk_jacobian(&next);
        let next_violation = violation(&Pose::from_isometry(&next_iso), target, tol);
        if cost(&next_violation) < cost(&current) {
            q = next;
            iso = next_iso;
            jac = next_jac;
            current = next_violation;
            if converged(&current, settings) {
                return Ok(JointConfig(q));
            }
            damping = (damping * 0.3).max(1e-9);
        } else {
            damping *= 8.0;
            if damping > 1e3 {
                stalled = true;
            }
        }
        if !stalled && iterations - window_start >= PROGRESS_WINDOW {
            stalled = cost(&current) > PROGRESS * window_cost;
            window_start = iterations;
            window_cost = cost(&current);
        }
        if stalled {
            // The first escape backs pinned joints off their limits; later
            // ones restart from configurations drawn from the seed, so the
            // result stays a function of the inputs.
            stalled = false;
            escapes += 1;
            let pinned = |q: &[f64], i: usize| {
                let [lo, hi] = chain.joints()[i].limits;
                q[i] <= lo || q[i] >= hi
            };
            if escapes == 1 && (0..q.len()).any(|i| pinned(&q, i)) {
                for (i, joint) in chain.joints().iter().enumerate() {
                    let [lo, hi] = joint.limits;
                    if q[i] <= lo {
                        q[i] = lo + ESCAPE_STEP;
                    } else if q[i] >= hi {
                        q[i] = hi - ESCAPE_STEP;
                    }
                }
                chain.clamp(&mut q);
            } else {
                let rng = restarts.get_or_insert_with(|| seeded_rng(seed));
                q = chain.random_config(rng).0;
            }
            (iso, jac) = chain.fk_jacobian(&q);
            current = violation(&Pose::from_isometry(&iso), target, tol);
            damping = 1e-3;
            window_start = iterations;
            window_cost = cost(&current);
        }
    }
    Err(IkFailure {
        iterations,
        position_error: current.position,
        rotation_error: current.rotation,
    })
}

fn seeded_rng(seed: &[f64]) -> ChaCha8Rng {
    let bits = seed.iter().fold(0u64, |h, v| (h ^ v.to_bits()).wrapping_mul(0x0100_0000_01b3));
    ChaCha8Rng::seed_from_u64(bits)
}

/// Projected task Jacobian and desired task-space step.
fn task_system(
    pose: &Pose,
    jac: &Matrix6xX<f64>,
    target: &EndEffectorTarget,
    tol: &ToleranceSpec,
    v: &Violation,
) -> (Matrix6xX<f64>, Vector6<f64>) {
    let n = target.normal;
    let p_pos = if tol.tangent_translation_radius > 0.0 && v.inside_disk {
        n * n.transpose()
    } else {
        Matrix3::identity()
    };
    let z = pose.tool_axis();
    let p_rot = match (tol.spin_constrained(), v.inside_cone) {
        (false, true) => Matrix3::zeros(),
        (false, false) => Matrix3::identity() - z * z.transpose(),
        (true, true) => z * z.transpose(),
        (true, false) => Matrix3::identity(),
    };
    let mut rows = Matrix6xX::zeros(jac.ncols());
    rows.rows_mut(0, 3)
        .copy_from(&(p_pos * jac.fixed_rows::<3>(0)));
    rows.rows_mut(3, 3)
        .copy_from(&(p_rot * jac.fixed_rows::<3>(3) * ROTATION_WEIGHT));
    let mut err = Vector6::zeros();
    err.fixed_rows_mut::<3>(0).copy_from(&(-v.position_vec));
    err.fixed_rows_mut::<3>(3)
        .copy_from(&(v.rotation_vec * ROTATION_WEIGHT));
    (rows, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{pose_error, tool_normal};
    use nalgebra::Vector3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn planar() -> KinematicChain {
        KinematicChain::bundled("planar-2r").unwrap()
    }

    fn point(x: f64, y: f64, z: f64) -> EndEffectorTarget {
        EndEffectorTarget::new(Vector3::new(x, y, z), Vector3::z()).unwrap()
    }

    #[test]
    fn seed_at_solution_returns_seed() {
        let chain = KinematicChain::bundled("panda-like").unwrap();
        let q0 = vec![0.1, -0.4, 0.2, -2.0, 0.3, 1.8, 0.5];
        let pose = chain.fk(&q0).unwrap();
        let target = EndEffectorTarget::new(pose.position, tool_normal(&pose)).unwrap();
        let q = solve_ik(&chain, &target, &ToleranceSpec::free_spin(), &q0, &IkSettings::default())
            .unwrap();
        assert_eq!(q.0, q0);
    }

    #[test]
    fn planar_two_link_finds_an_elbow_branch() {
        let chain = planar();
        let target = point(1.0, 1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut found = 0;
        for _ in 0..20 {
            let seed = chain.random_config(&mut rng);
            if let Ok(q) = solve_ik(&chain, &target, &ToleranceSpec::position_only(), &seed, &IkSettings::default()) {
                found += 1;
                // closed-form: elbow = +-pi/2 for |p| = sqrt(2) with unit links
                assert!((q[1].abs() - FRAC_PI_2).abs() < 2e-3, "elbow {}", q[1]);
                let e = pose_error(&chain.fk(&q).unwrap(), &target, &ToleranceSpec::position_only());
                assert!(e.position <= 1e-3);
                assert_eq!(e.rotation, None);
            }
        }
        assert!(found >= 15, "only {found} successes");
    }

    #[test]
    fn unreachable_target_fails() {
        let chain = planar();
        let target = point(2.5, 0.0, 0.0);
        let r = solve_ik(&chain, &target, &ToleranceSpec::position_only(), &[0.3, 0.3], &IkSettings::default());
        assert!(r.is_err());
    }

    #[test]
    fn solutions_respect_limits_and_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["ur5-like", "panda-like"] {
            let chain = KinematicChain::bundled(name).unwrap();
            for tol in [ToleranceSpec::free_spin(), ToleranceSpec::full_6dof()] {
                for _ in 0..20 {
                    let q_true = chain.random_config(&mut rng);
                    let pose = chain.fk(&q_true).unwrap();
                    let target = EndEffectorTarget::new(pose.position, tool_normal(&pose)).unwrap();
                    let seed = chain.random_config(&mut rng);
                    if let Ok(q) = solve_ik(&chain, &target, &tol, &seed, &IkSettings::default()) {
                        assert!(chain.within_limits(&q));
                        let e = pose_error(&chain.fk(&q).unwrap(), &target, &tol);
                        assert!(e.position <= 1e-3);
                        assert!(e.rotation.unwrap() <= 1e-2);
                    }
                }
            }
        }
    }

    #[test]
    fn enlarging_tolerance_keeps_success() {
        let chain = KinematicChain::bundled("ur5-like").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let strict = ToleranceSpec::full_6dof();
        let spin = ToleranceSpec::free_spin();
        let looser = [
            spin,
            ToleranceSpec { tilt_tolerance: 0.2, ..spin },
            ToleranceSpec { tangent_translation_radius: 0.01, ..spin },
            ToleranceSpec { tilt_tolerance: 0.2, tangent_translation_radius: 0.01, ..spin },
        ];
        let mut strict_ok = 0;
        for _ in 0..30 {
            let q_true = chain.random_config(&mut rng);
            let pose = chain.fk(&q_true).unwrap();
            let target = EndEffectorTarget::new(pose.position, tool_normal(&pose)).unwrap();
            let seed = chain.random_config(&mut rng);
            if solve_ik(&chain, &target, &strict, &seed, &IkSettings::default()).is_ok() {
                strict_ok += 1;
                for loose in &looser {
                    assert!(solve_ik(&chain, &target, loose, &seed, &IkSettings::default()).is_ok());
                }
            }
        }
        assert!(strict_ok > 10);
    }
}
