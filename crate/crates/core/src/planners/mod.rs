//! The three coverage pipelines.
//!
//! All of them sample IK solutions once per target, then differ in how the
//! visiting order and the per-target configuration are chosen:
//!
//! * [`plan_cart_tsp_iklink`]: order from a Cartesian TSP path, configs by
//!   [`iklink_dp`] along it;
//! * [`plan_joint_gtsp`]: both at once, as a GTSP over all IK solutions;
//! * [`plan_h_joint_gtsp`]: a GTSP sparsified and split up along a
//!   Cartesian guide path.

mod dp;
mod hierarchy;
mod trajectory;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{build_joint_graph, default_big_m, CartesianGraph, JointGraph, ReconfigParams};
use crate::kinematics::{IkSettings, KinematicChain, ToleranceSpec};
use crate::sampling::{sample_all, IKSampleSet, SamplingParams};
use crate::solvers::{
    cycle_to_path, solve_gtsp_with, solve_tsp_with, NodeId, SolverBudget, TspOptions,
};
use crate::surface::{cartesian_distance, compute_targets, EndEffectorTarget, SurfaceMesh};

pub use dp::{iklink_dp, iklink_dp_core, DpResult, TransitionCache};
pub use hierarchy::HierarchyParams;
pub use trajectory::{validate_trajectory, Trajectory};

/// Which pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CartTspIklink,
    JointGtsp,
    HJointGtsp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CartTspIklink, Method::JointGtsp, Method::HJointGtsp];

    /// Command-line spelling.
    pub fn key(&self) -> &'static str {
        match self {
            Method::CartTspIklink => "cart-tsp-iklink",
            Method::JointGtsp => "joint-gtsp",
            Method::HJointGtsp => "h-joint-gtsp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::CartTspIklink => "Cart-TSP-IKLink",
            Method::JointGtsp => "Joint-GTSP",
            Method::HJointGtsp => "H-Joint-GTSP",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.key() == key || m.to_string().to_ascii_lowercase() == key)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method `{s}` (expected cart-tsp-iklink, joint-gtsp or h-joint-gtsp)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerParams {
    /// IK restarts per target.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Weight of normal angle against distance in the Cartesian metric.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Master seed; sampling and solver seeds derive from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_merge_eps")]
    pub merge_eps: f64,
    #[serde(default = "default_merge_min_pts")]
    pub merge_min_pts: usize,
    #[serde(default)]
    pub ik: IkSettings,
    /// Mesh-scaled defaults when absent.
    #[serde(default)]
    pub reconfig: Option<ReconfigParams>,
    /// Reconfiguration weight; derived from the joint limits when absent.
    #[serde(default)]
    pub big_m: Option<f64>,
    /// Stopping rule of every solver call. Its seed is replaced by one
    /// derived from `seed`.
    #[serde(default)]
    pub budget: SolverBudget,
    #[serde(default)]
    pub hierarchy: HierarchyParams,
    /// Let the Cartesian TSP route over missing mesh edges.
    #[serde(default)]
    pub tsp_fallback: bool,
}

fn default_samples() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.1
}
fn default_merge_eps() -> f64 {
    0.05
}
fn default_merge_min_pts() -> usize {
    1
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            alpha: default_alpha(),
            seed: 0,
            merge_eps: default_merge_eps(),
            merge_min_pts: default_merge_min_pts(),
            ik: IkSettings::default(),
            reconfig: None,
            big_m: None,
            budget: SolverBudget::default(),
            hierarchy: HierarchyParams::default(),
            tsp_fallback: false,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter("alpha must be non-negative".into()));
        }
        if !(self.merge_eps.is_finite() && self.merge_eps > 0.0) {
            return Err(Error::InvalidParameter("merge_eps must be positive".into()));
        }
        if let Some(r) = &self.reconfig {
            r.validate()?;
        }
        if self.big_m.is_some_and(|m| !(m.is_finite() && m > 0.0)) {
            return Err(Error::InvalidParameter("big_m must be positive".into()));
        }
        self.budget.validate()?;
        self.hierarchy.validate()
    }

    /// Solver budget for the `k`-th solver call of a run.
    fn solver_budget(&self, k: u64) -> SolverBudget {
        self.budget
            .with_seed(crate::sampling::target_seed(self.seed ^ 0x5EED_0F_501E, k as usize))
    }
}

/// Targets plus the pairs of targets that may be visited consecutively.
#[derive(Debug, Clone)]
pub struct CoverageProblem {
    pub targets: Vec<EndEffectorTarget>,
    /// Undirected adjacency, usually the mesh edges.
    pub edges: Vec<(usize, usize)>,
}

impl CoverageProblem {
    pub fn from_mesh(mesh: &SurfaceMesh) -> Result<Self> {
        Ok(Self {
            targets: compute_targets(mesh)?,
            edges: mesh.edges().to_vec(),
        })
    }

    pub fn new(targets: Vec<EndEffectorTarget>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for &(a, b) in &edges {
            if a >= targets.len() || b >= targets.len() || a == b {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b})")));
            }
        }
        Ok(Self { targets, edges })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn cartesian_graph(&self, alpha: f64) -> Result<CartesianGraph> {
        let weighted: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|&(a, b)| (a, b, cartesian_distance(&self.targets[a], &self.targets[b], alpha)))
            .collect();
        CartesianGraph::from_edges(self.targets.len(), &weighted)
    }

    pub fn reconfig_params(&self, params: &PlannerParams, tol: &ToleranceSpec) -> ReconfigParams {
        params
            .reconfig
            .unwrap_or_else(|| ReconfigParams::for_edges(&self.edges, &self.targets, params.alpha, tol))
    }
}

/// Wall-clock breakdown and sizes from one planning run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    /// Sampling to convergence, in seconds.
    pub total_secs: f64,
    pub sampling_secs: f64,
    pub graph_secs: f64,
    pub solve_secs: f64,
    /// IK solutions kept after merging, over all targets.
    pub samples_kept: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub solver_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub trajectory: Trajectory,
    pub reconfig: ReconfigParams,
    pub stats: PlanStats,
}

pub fn plan(
    method: Method,
    problem: &CoverageProblem,
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    params: &PlannerParams,
) -> Result<Plan> {
    match method {
        Method::CartTspIklink => plan_cart_tsp_iklink(problem, chain, tol, params),
        Method::JointGtsp => plan_joint_gtsp(problem, chain, tol, params),
        Method::HJointGtsp => plan_h_joint_gtsp(problem, chain, tol, params),
    }
}

/// Samples every target and aborts with the full list of targets that no
/// restart reached.
fn sample_targets(
    problem: &CoverageProblem,
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    params: &PlannerParams,
) -> Result<Vec<IKSampleSet>> {
    params.validate()?;
    tol.validate()?;
    let samples = sample_all(
        chain,
        &problem.targets,
        tol,
        &SamplingParams {
            samples: params.samples,
            seed: params.seed,
            merge_eps: params.merge_eps,
            merge_min_pts: params.merge_min_pts,
            ik: params.ik,
        },
    );
    let unreachable: Vec<usize> = samples
        .iter()
        .filter(|s| s.configs.is_empty())
        .map(|s| s.target_index)
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::Unreachable {
            targets: unreachable,
        });
    }
    Ok(samples)
}

struct Setup {
    started: Instant,
    samples: Vec<IKSampleSet>,
    reconfig: ReconfigParams,
    big_m: f64,
    stats: PlanStats,
}

fn setup(
    problem: &CoverageProblem,
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    params: &PlannerParams,
) -> Result<Setup> {
    let started = Instant::now();
    let samples = sample_targets(problem, chain, tol, params)?;
    let stats = PlanStats {
        sampling_secs: started.elapsed().as_secs_f64(),
        samples_kept: samples.iter().map(|s| s.configs.len()).sum(),
        ..PlanStats::default()
    };
    log::debug!(
        "sampled {} targets, {} solutions kept in {:.2}s",
        problem.len(),
        stats.samples_kept,
        stats.sampling_secs
    );
    Ok(Setup {
        started,
        samples,
        reconfig: problem.reconfig_params(params, tol),
        big_m: params.big_m.unwrap_or_else(|| default_big_m(chain)),
        stats,
    })
}

/// Cartesian TSP over the mesh, then IKLink along each incumbent path; the
/// best tracked path wins.
pub fn plan_cart_tsp_iklink(
    problem: &CoverageProblem,
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    params: &PlannerParams,
) -> Result<Plan> {
    let Setup {
        started,
        samples,
        reconfig,
        mut stats,
        ..
    } = setup(problem, chain, tol, params)?;
    let t_graph = Instant::now();
    let graph = problem.cartesian_graph(params.alpha)?.add_dummy()?;
    let dummy = graph.dummy_index().expect("just added");
    stats.graph_secs = t_graph.elapsed().as_secs_f64();
    stats.graph_nodes = graph.node_count();
    stats.graph_edges = graph.edge_count();

    let t_solve = Instant::now();
    let mut cache = TransitionCache::new(chain, &problem.targets, &samples, reconfig, params.alpha);
    let mut best: Option<(Vec<usize>, DpResult)> = None;
    let mut dp_error = None;
    let options = TspOptions {
        shortest_path_fallback: params.tsp_fallback,
    };
    let (_, solve) = solve_tsp_with(&graph, &params.solver_budget(0), options, &mut |tour| {
        let path = match cycle_to_path(tour, dummy) {
            Ok(p) => p.nodes,
            Err(e) => {
                dp_error = Some(e);
                return;
            }
        };
        let result = iklink_dp(&path, &mut cache);
        let better = best
            .as_ref()
            .map_or(true, |(_, b)| result.key() < b.key());
        if better {
            best = Some((path, result));
        }
    })?;
    if let Some(e) = dp_error {
        return Err(e);
    }
    let (order, result) = best.ok_or_else(|| Error::Infeasible("no TSP path found".into()))?;
    stats.solve_secs = t_solve.elapsed().as_secs_f64();
    stats.solver_rounds = solve.rounds;
    let trajectory = Trajectory {
        configs: order
            .iter()
            .zip(&result.choice)
            .map(|(&t, &c)| samples[t].configs[c].clone())
            .collect(),
        order,
        breakpoints: result.breakpoints,
    };
    stats.total_secs = started.elapsed().as_secs_f64();
    Ok(Plan {
        trajectory,
        reconfig,
        stats,
    })
}

/// GTSP over every sampled IK solution.
pub fn plan_joint_gtsp(
    problem: &CoverageProblem,
    chain: &KinematicChain,
    tol: &ToleranceSpec,
    params: &PlannerParams,
) -> Result<Plan> {
    let Setup {
        started,
        samples,
        reconfig,
        big_m,
        mut stats,
    } = setup(problem, chain, tol, params)?;
    let t_graph = Instant::now();
    let graph = build_joint_graph(
        chain,
        &problem.targets,
        &samples,
        &problem.edges,
        &reconfig,
        big_m,
        params.alpha,
    )?
    .add_dummy()?;
    stats.graph_secs = t_graph.elapsed().as_secs_f64();
    stats.graph_nodes = graph.node_count();
    stats.graph_edges = graph.edge_count();
    log::debug!(
        "joint graph: {} nodes, {} edges in {:.2}s",
        stats.graph_nodes,
        stats.graph_edges,
        stats.graph_secs
    );

    let t_solve = Instant::now();
    let (tour, solve) = solve_gtsp_with(&graph, &params.solver_budget(0), None, &mut |_| {})?;
    stats.solve_secs = t_solve.elapsed().as_secs_f64();
    stats.solver_rounds = solve.rounds;
    let dummy = graph.dummy_index().expect("just added");
    let path = cycle_to_path(&tour, dummy)?.nodes;
    let trajectory = read_off(&graph, &path);
    stats.total_secs = started.elapsed().as_secs_f64();
    Ok(Plan {
        trajectory,
        reconfig,
        stats,
    })
}

pub use hierarchy::plan_h_joint_gtsp;

/// Trajectory along a path of joint-graph nodes.
fn read_off(graph: &JointGraph, path: &[NodeId]) -> Trajectory {
    let breakpoints = path
        .windows(2)
        .enumerate()
        .filter(|(_, w)| graph.link(w[0], w[1]).is_some_and(|l| l.reconfig))
        .map(|(i, _)| i)
        .collect();
    Trajectory {
        order: path.iter().map(|n| n.0).collect(),
        configs: path.iter().map(|&n| graph.config(n).clone()).collect(),
        breakpoints,
    }
}

#[cfg(test)]
mod tests;
