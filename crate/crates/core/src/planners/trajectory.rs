use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{reconfig_required, ReconfigParams};
use crate::kinematics::{pose_error, IkSettings, JointConfig, KinematicChain, ToleranceSpec};
use crate::surface::EndEffectorTarget;

/// A joint-space path over every target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Target index visited at each step.
    pub order: Vec<usize>,
    /// Configuration at each step.
    pub configs: Vec<JointConfig>,
    /// Steps `i` after which the arm reconfigures before step `i + 1`,
    /// ascending.
    pub breakpoints: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn reconfig_count(&self) -> usize {
        self.breakpoints.len()
    }

    /// Joint movement summed over the steps that are not breakpoints.
    pub fn movement(&self) -> f64 {
        self.configs
            .windows(2)
            .enumerate()
            .filter(|(i, _)| self.breakpoints.binary_search(i).is_err())
            .map(|(_, w)| w[0].distance(&w[1]))
            .sum()
    }
}

/// Re-checks a trajectory from scratch: the order is a permutation, each
/// configuration reaches its target within the IK accuracy and joint
/// limits, and the breakpoints are exactly the steps that need a
/// reconfiguration.
pub fn validate_trajectory(
    traj: &Trajectory,
    targets: &[EndEffectorTarget],
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    reconfig: &ReconfigParams,
    alpha: f64,
    accuracy: &IkSettings,
) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidTrajectory(msg));
    let n = targets.len();
    if traj.order.len() != n || traj.configs.len() != n {
        return bad(format!(
            "{} steps and {} configs for {n} targets",
            traj.order.len(),
            traj.configs.len()
        ));
    }
    let mut seen = vec![false; n];
    for &t in &traj.order {
        if t >= n || seen[t] {
            return bad(format!("target {t} out of range or visited twice"));
        }
        seen[t] = true;
    }
    for (step, (&t, q)) in traj.order.iter().zip(&traj.configs).enumerate() {
        if q.len() != chain.dof() {
            return bad(format!("step {step}: {} joints, chain has {}", q.len(), chain.dof()));
        }
        if !chain.within_limits(q) {
            return bad(format!("step {step}: joint limits violated"));
        }
        let e = pose_error(&chain.fk(q)?, &targets[t], tol);
        if e.position > accuracy.position_accuracy
            || e.rotation.is_some_and(|r| r > accuracy.rotation_accuracy)
        {
            return bad(format!(
                "step {step} misses target {t}: position {:.2e} m, rotation {:?} rad",
                e.position, e.rotation
            ));
        }
    }
    if !traj.breakpoints.windows(2).all(|w| w[0] < w[1]) {
        return bad("breakpoints not strictly ascending".into());
    }
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (traj.order[i], traj.order[i + 1]);
        let needed = reconfig_required(
            chain,
            (&targets[a], &traj.configs[i]),
            (&targets[b], &traj.configs[i + 1]),
            reconfig,
            alpha,
        );
        let marked = traj.breakpoints.binary_search(&i).is_ok();
        if needed != marked {
            return bad(format!(
                "step {i}: reconfiguration {} but breakpoint {}",
                if needed { "needed" } else { "not needed" },
                if marked { "marked" } else { "missing" }
            ));
        }
    }
    if traj.breakpoints.last().is_some_and(|&b| b + 1 >= n) {
        return bad("breakpoint past the last step".into());
    }
    Ok(())
}
