//! The Cartesian TSP graph and the joint-space GTSP graph.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{tool_normal, JointConfig, KinematicChain, Pose, ToleranceSpec};
use crate::sampling::IKSampleSet;
use crate::surface::{cartesian_distance, normal_angle, EndEffectorTarget, SurfaceMesh};

/// Mesh graph weighted by Cartesian target distance.
#[derive(Debug, Clone)]
pub struct CartesianGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    dummy: Option<usize>,
}

pub fn build_cartesian_graph(
    mesh: &SurfaceMesh,
    targets: &[EndEffectorTarget],
    alpha: f64,
) -> CartesianGraph {
    let mut adjacency = vec![Vec::new(); targets.len()];
    for &(a, b) in mesh.edges() {
        let w = cartesian_distance(&targets[a], &targets[b], alpha);
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }
    for list in &mut adjacency {
        list.sort_by_key(|&(v, _)| v);
    }
    CartesianGraph {
        adjacency,
        dummy: None,
    }
}

impl CartesianGraph {
    /// Graph from explicit undirected weighted edges.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b, w) in edges {
            if a >= node_count || b >= node_count || a == b {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b})")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) weight {w}")));
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
            list.dedup_by_key(|&mut (v, _)| v);
        }
        Ok(Self {
            adjacency,
            dummy: None,
        })
    }

    /// Complete graph from a symmetric weight matrix.
    pub fn complete(weights: &[Vec<f64>]) -> Result<Self> {
        let n = weights.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, weights[i][j]));
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn dummy_index(&self) -> Option<usize> {
        self.dummy
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a]
            .binary_search_by_key(&b, |&(v, _)| v)
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |&&(b, _)| a < b)
                .map(move |&(b, w)| (a, b, w))
        })
    }

    /// Appends a node joined to every other node by a zero-weight edge.
    pub fn add_dummy(mut self) -> Result<Self> {
        if self.dummy.is_some() {
            return Err(Error::DummyAlreadyPresent);
        }
        let d = self.adjacency.len();
        for list in &mut self.adjacency {
            list.push((d, 0.0));
        }
        self.adjacency.push((0..d).map(|v| (v, 0.0)).collect());
        self.dummy = Some(d);
        Ok(self)
    }
}

/// Thresholds of the reconfiguration predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconfigParams {
    /// Target separation above which two targets are "far apart".
    pub tau1: f64,
    /// Largest single-joint move allowed without reconfiguring, radians.
    pub tau2: f64,
    /// Largest deviation of an interpolated pose from both endpoint targets.
    pub tau3: f64,
    /// Interior interpolation points checked.
    pub interp_steps: usize,
}

impl ReconfigParams {
    /// Thresholds scaled to the mesh.
    ///
    /// `tau3` is one longest mesh edge plus the slack the tolerance allows
    /// each endpoint: an interpolant midway along an ordinary edge already
    /// sits half an edge from either target.
    pub fn for_mesh(
        mesh: &SurfaceMesh,
        targets: &[EndEffectorTarget],
        alpha: f64,
        tol: &ToleranceSpec,
    ) -> Self {
        Self::for_edges(mesh.edges(), targets, alpha, tol)
    }

    /// [`ReconfigParams::for_mesh`] over an explicit edge list.
    pub fn for_edges(
        edges: &[(usize, usize)],
        targets: &[EndEffectorTarget],
        alpha: f64,
        tol: &ToleranceSpec,
    ) -> Self {
        let positive = |x: f64| if x.is_finite() && x > 0.0 { x } else { 1.0 };
        let slack = tol.tangent_translation_radius + alpha * tol.tilt_tolerance;
        let lengths: Vec<f64> = edges
            .iter()
            .map(|&(a, b)| cartesian_distance(&targets[a], &targets[b], alpha))
            .collect();
        let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
        let max = lengths.iter().copied().fold(f64::NAN, f64::max);
        Self {
            tau1: positive(3.0 * mean),
            tau2: FRAC_PI_2,
            tau3: positive(max + slack),
            interp_steps: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2), ("tau3", self.tau3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.interp_steps == 0 {
            return Err(Error::InvalidParameter("interp_steps must be at least 1".into()));
        }
        Ok(())
    }
}

fn pose_deviation(pose: &Pose, target: &EndEffectorTarget, alpha: f64) -> f64 {
    (pose.position - target.position).norm() + alpha * normal_angle(&tool_normal(pose), &target.normal)
}

/// Whether moving from `a` to `b` needs an arm reconfiguration.
///
/// True when the targets are far apart, when some joint moves more than
/// `tau2`, or when an interior joint-space interpolant strays more than
/// `tau3` from both targets.
pub fn reconfig_required(
    chain: &KinematicChain,
    a: (&EndEffectorTarget, &[f64]),
    b: (&EndEffectorTarget, &[f64]),
    params: &ReconfigParams,
    alpha: f64,
) -> bool {
    if cartesian_distance(a.0, b.0, alpha) > params.tau1 {
        return true;
    }
    let max_move = a
        .1
        .iter()
        .zip(b.1)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if max_move > params.tau2 {
        return true;
    }
    // Interpolate from a canonical endpoint so the answer is exactly
    // symmetric in floating point.
    let (from, to) = if a.1 <= b.1 { (a.1, b.1) } else { (b.1, a.1) };
    let steps = params.interp_steps;
    let mut q = vec![0.0; from.len()];
    (1..=steps).any(|s| {
        let t = s as f64 / (steps + 1) as f64;
        for ((qi, x), y) in q.iter_mut().zip(from).zip(to) {
            *qi = x + t * (y - x);
        }
        let pose = Pose::from_isometry(&chain.fk_iso(&q));
        pose_deviation(&pose, a.0, alpha) > params.tau3 && pose_deviation(&pose, b.0, alpha) > params.tau3
    })
}

/// A node of the joint graph: `(set, index within set)`.
pub type NodeId = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub weight: f64,
    pub reconfig: bool,
}

/// All links between two adjacent sets, row-major over the lower set.
#[derive(Debug, Clone)]
struct EdgeBlock {
    cols: usize,
    weights: Vec<f64>,
    reconfig: Vec<bool>,
}

/// Joint-space GTSP graph: one set of IK solutions per target.
///
/// Links exist only between sets whose targets were given as adjacent, plus
/// zero-weight links to the optional dummy set. A link weighs the joint
/// distance, or exactly `big_m` when the move needs a reconfiguration.
#[derive(Debug, Clone)]
pub struct JointGraph {
    sets: Vec<Vec<JointConfig>>,
    blocks: HashMap<(usize, usize), EdgeBlock>,
    set_neighbors: Vec<Vec<usize>>,
    dummy: Option<usize>,
    big_m: f64,
    params: ReconfigParams,
    alpha: f64,
}

/// Reconfiguration weight: ten times the joint-limit box diameter, above
/// any joint distance the chain can produce.
pub fn default_big_m(chain: &KinematicChain) -> f64 {
    10.0 * chain.limit_diameter()
}

/// Builds the joint graph over the given adjacent target pairs.
///
/// `samples[i]` must hold the configurations of target `i`.
pub fn build_joint_graph(
    chain: &KinematicChain,
    targets: &[EndEffectorTarget],
    samples: &[IKSampleSet],
    pairs: &[(usize, usize)],
    params: &ReconfigParams,
    big_m: f64,
    alpha: f64,
) -> Result<JointGraph> {
    params.validate()?;
    if samples.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: samples.len(),
        });
    }
    for (i, s) in samples.iter().enumerate() {
        if s.target_index != i {
            return Err(Error::InvalidParameter(format!(
                "sample set {i} belongs to target {}",
                s.target_index
            )));
        }
        if s.configs.is_empty() {
            return Err(Error::EmptySampleSet { target: i });
        }
    }
    let mut graph = JointGraph {
        sets: samples.iter().map(|s| s.configs.clone()).collect(),
        blocks: HashMap::new(),
        set_neighbors: vec![Vec::new(); samples.len()],
        dummy: None,
        big_m,
        params: *params,
        alpha,
    };
    graph.extend(chain, targets, pairs)?;
    Ok(graph)
}

impl JointGraph {
    /// Adds links for target pairs not yet present.
    pub fn extend(
        &mut self,
        chain: &KinematicChain,
        targets: &[EndEffectorTarget],
        pairs: &[(usize, usize)],
    ) -> Result<()> {
        let n = self.sets.len() - usize::from(self.dummy.is_some());
        let mut todo: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidParameter(format!("bad target pair ({a}, {b})")));
            }
            let key = (a.min(b), a.max(b));
            if !self.blocks.contains_key(&key) {
                todo.push(key);
            }
        }
        todo.sort_unstable();
        todo.dedup();
        let (params, alpha, big_m, sets) = (self.params, self.alpha, self.big_m, &self.sets);
        let built: Vec<((usize, usize), EdgeBlock)> = todo
            .par_iter()
            .map(|&(lo, hi)| {
                let (rows, cols) = (&sets[lo], &sets[hi]);
                let mut weights = Vec::with_capacity(rows.len() * cols.len());
                let mut reconfig = Vec::with_capacity(rows.len() * cols.len());
                for qa in rows {
                    for qb in cols {
                        let r = reconfig_required(
                            chain,
                            (&targets[lo], qa),
                            (&targets[hi], qb),
                            &params,
                            alpha,
                        );
                        weights.push(if r { big_m } else { qa.distance(qb) });
                        reconfig.push(r);
                    }
                }
                (
                    (lo, hi),
                    EdgeBlock {
                        cols: cols.len(),
                        weights,
                        reconfig,
                    },
                )
            })
            .collect();
        for ((lo, hi), block) in built {
            self.set_neighbors[lo].push(hi);
            self.set_neighbors[hi].push(lo);
            self.blocks.insert((lo, hi), block);
        }
        let dummy = self.dummy;
        for (s, list) in self.set_neighbors.iter_mut().enumerate() {
            if Some(s) != dummy {
                list.sort_unstable();
                list.dedup();
            }
        }
        Ok(())
    }

    /// Appends a singleton set linked to every node at zero weight.
    pub fn add_dummy(mut self) -> Result<Self> {
        if self.dummy.is_some() {
            return Err(Error::DummyAlreadyPresent);
        }
        let d = self.sets.len();
        for list in &mut self.set_neighbors {
            list.push(d);
        }
        self.set_neighbors.push((0..d).collect());
        self.sets.push(Vec::new());
        self.dummy = Some(d);
        Ok(self)
    }

    pub fn set_count(&self) -> usize {
        self.sets.len()
    }

    pub fn set_len(&self, set: usize) -> usize {
        if Some(set) == self.dummy {
            1
        } else {
            self.sets[set].len()
        }
    }

    pub fn node_count(&self) -> usize {
        (0..self.sets.len()).map(|s| self.set_len(s)).sum()
    }

    /// Number of undirected links, dummy links included.
    pub fn edge_count(&self) -> usize {
        let real: usize = self.blocks.values().map(|b| b.weights.len()).sum();
        match self.dummy {
            Some(_) => real + self.node_count() - 1,
            None => real,
        }
    }

    pub fn dummy_index(&self) -> Option<usize> {
        self.dummy
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn params(&self) -> &ReconfigParams {
        &self.params
    }

    pub fn set_neighbors(&self, set: usize) -> &[usize] {
        &self.set_neighbors[set]
    }

    /// Configuration of a non-dummy node.
    pub fn config(&self, node: NodeId) -> &JointConfig {
        &self.sets[node.0][node.1]
    }

    pub fn configs(&self, set: usize) -> &[JointConfig] {
        &self.sets[set]
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<Link> {
        if a.0 == b.0 {
            return None;
        }
        if self.dummy == Some(a.0) || self.dummy == Some(b.0) {
            return Some(Link {
                weight: 0.0,
                reconfig: false,
            });
        }
        let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
        let block = self.blocks.get(&(lo.0, hi.0))?;
        let k = lo.1 * block.cols + hi.1;
        Some(Link {
            weight: block.weights[k],
            reconfig: block.reconfig[k],
        })
    }

    /// Link weights between two sets, row-major over `a`'s nodes, or `None`
    /// when the sets are not adjacent.
    pub fn weight_matrix(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        if a == b {
            return None;
        }
        if self.dummy == Some(a) || self.dummy == Some(b) {
            return Some(vec![0.0; self.set_len(a) * self.set_len(b)]);
        }
        if a < b {
            self.blocks.get(&(a, b)).map(|blk| blk.weights.clone())
        } else {
            let blk = self.blocks.get(&(b, a))?;
            let rows = self.sets[b].len();
            let mut out = Vec::with_capacity(blk.weights.len());
            for j in 0..blk.cols {
                for i in 0..rows {
                    out.push(blk.weights[i * blk.cols + j]);
                }
            }
            Some(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::ToleranceSpec;
    use crate::surface::{
        compute_targets, generate_benchmark_surface, max_edge_distance, mean_edge_distance,
        SurfaceSpec,
    };
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn triangle() -> (SurfaceMesh, Vec<EndEffectorTarget>) {
        let mesh = SurfaceMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let targets = compute_targets(&mesh).unwrap();
        (mesh, targets)
    }

    #[test]
    fn triangle_graph_has_three_edges() {
        let (mesh, targets) = triangle();
        let g = build_cartesian_graph(&mesh, &targets, 0.1);
        assert_eq!(g.edge_count(), 3);
        assert_abs_diff_eq!(g.weight(1, 2).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(g.weight(1, 2), g.weight(2, 1));
    }

    #[test]
    fn flat_grid_weights_are_euclidean() {
        let mesh = generate_benchmark_surface(&SurfaceSpec::floor_grid([0.0; 3], 0.1, 0.1, 2, 2)).unwrap();
        let targets = compute_targets(&mesh).unwrap();
        let g = build_cartesian_graph(&mesh, &targets, 0.1);
        for (a, b, w) in g.edges() {
            let d = (mesh.vertices()[a] - mesh.vertices()[b]).norm();
            assert_abs_diff_eq!(w, d, epsilon = 1e-12);
            assert_eq!(g.weight(b, a), Some(w));
        }
        assert_eq!(g.edge_count(), mesh.edges().len());
    }

    #[test]
    fn cartesian_dummy() {
        let (mesh, targets) = triangle();
        let g = build_cartesian_graph(&mesh, &targets, 0.1).add_dummy().unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.dummy_index(), Some(3));
        for v in 0..3 {
            assert_eq!(g.weight(3, v), Some(0.0));
        }
        assert!(matches!(g.add_dummy(), Err(Error::DummyAlreadyPresent)));
    }

    fn planar_setup() -> (KinematicChain, Vec<EndEffectorTarget>, ReconfigParams) {
        let chain = KinematicChain::bundled("planar-2r").unwrap();
        let targets = vec![
            EndEffectorTarget::new(Vector3::new(1.2, 0.6, 0.0), -Vector3::z()).unwrap(),
            EndEffectorTarget::new(Vector3::new(1.22, 0.6, 0.0), -Vector3::z()).unwrap(),
            EndEffectorTarget::new(Vector3::new(1.24, 0.6, 0.0), -Vector3::z()).unwrap(),
        ];
        let params = ReconfigParams {
            tau1: 0.1,
            tau2: FRAC_PI_2,
            tau3: 0.05,
            interp_steps: 10,
        };
        (chain, targets, params)
    }

    /// Closed-form elbow-up / elbow-down solutions of the unit 2R arm.
    fn branches(t: &EndEffectorTarget) -> [JointConfig; 2] {
        let (x, y) = (t.position.x, t.position.y);
        let c2 = (x * x + y * y - 2.0) / 2.0;
        [1.0, -1.0].map(|s: f64| {
            let q2 = s * c2.acos();
            JointConfig(vec![y.atan2(x) - q2.sin().atan2(1.0 + q2.cos()), q2])
        })
    }

    #[test]
    fn same_node_needs_no_reconfiguration() {
        let (chain, targets, params) = planar_setup();
        let q = &branches(&targets[0])[0];
        assert!(!reconfig_required(&chain, (&targets[0], q), (&targets[0], q), &params, 0.1));
    }

    #[test]
    fn large_joint_move_is_a_reconfiguration() {
        let (chain, targets, params) = planar_setup();
        let a = JointConfig(vec![0.0, 0.5]);
        let b = JointConfig(vec![params.tau2 + 0.1, 0.5]);
        assert!(reconfig_required(&chain, (&targets[0], &a), (&targets[1], &b), &params, 0.1));
    }

    #[test]
    fn elbow_flip_is_a_reconfiguration() {
        let (chain, targets, params) = planar_setup();
        let up = &branches(&targets[0])[0];
        let down = &branches(&targets[1])[1];
        // independent check: the midpoint swings the tool far off both targets
        let mid = chain.fk(&up.lerp(down, 0.5)).unwrap();
        assert!((mid.position - targets[0].position).norm() > 0.3);
        assert!(reconfig_required(&chain, (&targets[0], up), (&targets[1], down), &params, 0.1));
        // same branch on both sides is smooth
        let up2 = &branches(&targets[1])[0];
        assert!(!reconfig_required(&chain, (&targets[0], up), (&targets[1], up2), &params, 0.1));
    }

    fn planar_samples(targets: &[EndEffectorTarget]) -> Vec<IKSampleSet> {
        targets
            .iter()
            .enumerate()
            .map(|(i, t)| IKSampleSet {
                target_index: i,
                configs: branches(t).to_vec(),
            })
            .collect()
    }

    #[test]
    fn joint_graph_weights_follow_the_predicate() {
        let (chain, targets, params) = planar_setup();
        let samples = planar_samples(&targets);
        let m = default_big_m(&chain);
        let g = build_joint_graph(&chain, &targets, &samples, &[(0, 1), (1, 2)], &params, m, 0.1).unwrap();
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.edge_count(), 8);
        let same = g.link((0, 0), (1, 0)).unwrap();
        assert!(!same.reconfig);
        assert_abs_diff_eq!(same.weight, samples[0].configs[0].distance(&samples[1].configs[0]));
        let flip = g.link((1, 1), (0, 0)).unwrap();
        assert!(flip.reconfig);
        assert_eq!(flip.weight, m);
        assert!(g.link((0, 0), (2, 0)).is_none());
        let wm = g.weight_matrix(1, 0).unwrap();
        assert_eq!(wm[0], g.link((1, 0), (0, 0)).unwrap().weight);
        assert_eq!(wm[1], g.link((1, 0), (0, 1)).unwrap().weight);
        assert_eq!(wm[2], g.link((1, 1), (0, 0)).unwrap().weight);
    }

    #[test]
    fn single_pair_with_large_move_gets_m() {
        let (chain, targets, params) = planar_setup();
        let samples = vec![
            IKSampleSet { target_index: 0, configs: vec![JointConfig(vec![0.0, 0.5])] },
            IKSampleSet { target_index: 1, configs: vec![JointConfig(vec![2.0, 0.5])] },
        ];
        let g = build_joint_graph(&chain, &targets[..2], &samples, &[(0, 1)], &params, 100.0, 0.1).unwrap();
        assert_eq!(g.link((0, 0), (1, 0)), Some(Link { weight: 100.0, reconfig: true }));
    }

    #[test]
    fn empty_sample_set_is_named() {
        let (chain, targets, params) = planar_setup();
        let mut samples = planar_samples(&targets);
        samples[2].configs.clear();
        let err = build_joint_graph(&chain, &targets, &samples, &[(0, 1)], &params, 10.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::EmptySampleSet { target: 2 }));
    }

    #[test]
    fn joint_dummy() {
        let (chain, targets, params) = planar_setup();
        let g = build_joint_graph(&chain, &targets, &planar_samples(&targets), &[(0, 1)], &params, 10.0, 0.1)
            .unwrap()
            .add_dummy()
            .unwrap();
        assert_eq!(g.set_count(), 4);
        assert_eq!(g.set_len(3), 1);
        assert_eq!(g.link((3, 0), (2, 1)).unwrap().weight, 0.0);
        assert!(g.add_dummy().is_err());
    }

    #[test]
    fn default_params_scale_with_mesh() {
        let mesh = generate_benchmark_surface(&SurfaceSpec::floor_grid([0.0; 3], 0.2, 0.1, 3, 3)).unwrap();
        let targets = compute_targets(&mesh).unwrap();
        let p = ReconfigParams::for_mesh(&mesh, &targets, 0.1, &ToleranceSpec::free_spin());
        p.validate().unwrap();
        assert_abs_diff_eq!(p.tau1, 3.0 * mean_edge_distance(&mesh, &targets, 0.1));
        assert_abs_diff_eq!(p.tau3, max_edge_distance(&mesh, &targets, 0.1));
    }

    proptest! {
        #[test]
        fn reconfig_is_symmetric(
            a in prop::collection::vec(-3.0..3.0f64, 2),
            b in prop::collection::vec(-3.0..3.0f64, 2),
            j in 0usize..3,
        ) {
            let (chain, targets, params) = planar_setup();
            let (ta, tb) = (&targets[0], &targets[j]);
            prop_assert_eq!(
                reconfig_required(&chain, (ta, &a), (tb, &b), &params, 0.1),
                reconfig_required(&chain, (tb, &b), (ta, &a), &params, 0.1)
            );
        }
    }
}
