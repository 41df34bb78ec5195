//! TSP and GTSP solvers, plus exhaustive oracles for small instances.
//!
//! Both solvers are iterated local search over one engine: a greedy
//! construction, then 2-opt, Or-opt, node re-choice and exact per-order
//! node assignment (layered shortest path), restarted from double-bridge
//! kicks until the incumbent stagnates.

mod engine;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{CartesianGraph, JointGraph};
pub use crate::graphs::NodeId;
use engine::{Engine, Sol};

/// When a solver stops.
///
/// The search ends after `stagnation_rounds` kick rounds or
/// `stagnation_secs` seconds without improvement, whichever comes first, or
/// at the wall-clock cap. Only the round rule is reproducible; runs that
/// must be bit-identical should leave the seconds rule off or generous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBudget {
    #[serde(default = "default_time_cap")]
    pub time_cap_secs: f64,
    /// `"off"` in config files disables the rule.
    #[serde(default = "default_stagnation_secs", with = "off_or")]
    pub stagnation_secs: Option<f64>,
    #[serde(default = "default_stagnation_rounds", with = "off_or")]
    pub stagnation_rounds: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

/// `None` as the string `"off"`, so that a disabled limit survives formats
/// without a null.
mod off_or {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Limit<T> {
        Value(T),
        Word(String),
    }

    pub fn serialize<T: Serialize, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => v.serialize(s),
            None => s.serialize_str("off"),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Option<T>, D::Error> {
        match Limit::<T>::deserialize(d)? {
            Limit::Value(v) => Ok(Some(v)),
            Limit::Word(w) if w == "off" => Ok(None),
            Limit::Word(w) => Err(de::Error::custom(format!("expected a number or \"off\", got \"{w}\""))),
        }
    }
}

fn default_time_cap() -> f64 {
    120.0
}
fn default_stagnation_secs() -> Option<f64> {
    Some(2.0)
}
fn default_stagnation_rounds() -> Option<u64> {
    Some(100)
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self {
            time_cap_secs: default_time_cap(),
            stagnation_secs: default_stagnation_secs(),
            stagnation_rounds: default_stagnation_rounds(),
            seed: 0,
        }
    }
}

impl SolverBudget {
    /// A budget that converges on rounds alone.
    pub fn rounds(stagnation_rounds: u64, seed: u64) -> Self {
        Self {
            time_cap_secs: default_time_cap(),
            stagnation_secs: None,
            stagnation_rounds: Some(stagnation_rounds),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.time_cap_secs) {
            return Err(Error::InvalidParameter("time cap must be positive".into()));
        }
        if self.stagnation_secs.is_some_and(|s| !positive(s)) {
            return Err(Error::InvalidParameter("stagnation window must be positive".into()));
        }
        if self.stagnation_rounds == Some(0) {
            return Err(Error::InvalidParameter("stagnation rounds must be positive".into()));
        }
        Ok(())
    }
}

/// Counters from one solver run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub rounds: u64,
    pub improvements: u64,
    /// Seconds until the returned incumbent was found.
    pub time_to_best: f64,
    /// Seconds until convergence was declared.
    pub elapsed: f64,
    pub hit_time_cap: bool,
}

/// A cycle; the edge from the last node back to the first is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour<N> {
    pub nodes: Vec<N>,
    pub weight: f64,
}

/// An open path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution<N> {
    pub nodes: Vec<N>,
    pub weight: f64,
}

/// Nodes that belong to a group: the node itself for TSP, its set for GTSP.
pub trait TourNode: Copy {
    fn group(&self) -> usize;
}

impl TourNode for usize {
    fn group(&self) -> usize {
        *self
    }
}

impl TourNode for NodeId {
    fn group(&self) -> usize {
        self.0
    }
}

/// Opens a cycle at the dummy: the path starts right after it and ends
/// right before it. Dummy links weigh zero, so the weight carries over.
pub fn cycle_to_path<N: TourNode>(tour: &Tour<N>, dummy: usize) -> Result<PathSolution<N>> {
    let hits: Vec<usize> = (0..tour.nodes.len())
        .filter(|&i| tour.nodes[i].group() == dummy)
        .collect();
    let &[at] = hits.as_slice() else {
        return match hits.len() {
            0 => Err(Error::DummyMissing),
            _ => Err(Error::InvalidParameter("dummy appears more than once".into())),
        };
    };
    let n = tour.nodes.len();
    Ok(PathSolution {
        nodes: (1..n).map(|k| tour.nodes[(at + k) % n]).collect(),
        weight: tour.weight,
    })
}

/// A generalized TSP instance with possibly sparse links.
pub trait GtspInstance {
    fn set_count(&self) -> usize;
    fn set_len(&self, set: usize) -> usize;
    /// Sets with at least one link to `set`.
    fn set_neighbors(&self, set: usize) -> Vec<usize>;
    /// Link weights between the nodes of two sets, row-major over `a`, with
    /// `INFINITY` for missing links; `None` when no link exists at all.
    fn weight_matrix(&self, a: usize, b: usize) -> Option<Vec<f64>>;
}

impl GtspInstance for JointGraph {
    fn set_count(&self) -> usize {
        JointGraph::set_count(self)
    }
    fn set_len(&self, set: usize) -> usize {
        JointGraph::set_len(self, set)
    }
    fn set_neighbors(&self, set: usize) -> Vec<usize> {
        JointGraph::set_neighbors(self, set).to_vec()
    }
    fn weight_matrix(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        JointGraph::weight_matrix(self, a, b)
    }
}

/// A TSP graph seen as a GTSP with one node per set.
impl GtspInstance for CartesianGraph {
    fn set_count(&self) -> usize {
        self.node_count()
    }
    fn set_len(&self, _set: usize) -> usize {
        1
    }
    fn set_neighbors(&self, set: usize) -> Vec<usize> {
        self.neighbors(set).iter().map(|&(v, _)| v).collect()
    }
    fn weight_matrix(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        self.weight(a, b).map(|w| vec![w])
    }
}

/// An explicit instance: sets of consecutive node ids and a full node
/// weight matrix (`INFINITY` where there is no link).
#[derive(Debug, Clone)]
pub struct MatrixGtsp {
    offsets: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl MatrixGtsp {
    pub fn new(set_sizes: &[usize], weights: Vec<Vec<f64>>) -> Result<Self> {
        let total: usize = set_sizes.iter().sum();
        if set_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidParameter("empty set".into()));
        }
        if weights.len() != total || weights.iter().any(|r| r.len() != total) {
            return Err(Error::DimensionMismatch {
                expected: total,
                actual: weights.len(),
            });
        }
        let mut offsets = vec![0];
        for s in set_sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(Self { offsets, weights })
    }

    fn node(&self, n: NodeId) -> usize {
        self.offsets[n.0] + n.1
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        self.weights[self.node(a)][self.node(b)]
    }
}

impl GtspInstance for MatrixGtsp {
    fn set_count(&self) -> usize {
        self.offsets.len() - 1
    }
    fn set_len(&self, set: usize) -> usize {
        self.offsets[set + 1] - self.offsets[set]
    }
    fn set_neighbors(&self, set: usize) -> Vec<usize> {
        (0..self.set_count())
            .filter(|&b| b != set && self.weight_matrix(set, b).is_some())
            .collect()
    }
    fn weight_matrix(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        if a == b {
            return None;
        }
        let mut out = Vec::with_capacity(self.set_len(a) * self.set_len(b));
        for i in 0..self.set_len(a) {
            for j in 0..self.set_len(b) {
                out.push(self.weight((a, i), (b, j)));
            }
        }
        out.iter().any(|w| w.is_finite()).then_some(out)
    }
}

fn check_sets<I: GtspInstance + ?Sized>(inst: &I) -> Result<()> {
    if inst.set_count() == 0 {
        return Err(Error::InvalidParameter("instance has no sets".into()));
    }
    for s in 0..inst.set_count() {
        if inst.set_len(s) == 0 {
            return Err(Error::EmptySampleSet { target: s });
        }
    }
    Ok(())
}

fn finish<N>(
    engine: &Engine,
    sol: &Sol,
    nodes: Vec<N>,
) -> Result<Tour<N>> {
    let missing = engine.missing_links(sol);
    if missing > 0 {
        return Err(Error::Infeasible(format!(
            "best tour found still crosses {missing} missing link(s)"
        )));
    }
    Ok(Tour {
        nodes,
        weight: sol.weight,
    })
}

fn gtsp_nodes(sol: &Sol) -> Vec<NodeId> {
    sol.order.iter().map(|&s| (s, sol.choice[s])).collect()
}

/// Solves a GTSP, optionally warm-started from `hint` (one node per set).
pub fn solve_gtsp<I: GtspInstance + ?Sized>(
    inst: &I,
    budget: &SolverBudget,
    hint: Option<&[NodeId]>,
) -> Result<Tour<NodeId>> {
    solve_gtsp_with(inst, budget, hint, &mut |_| {}).map(|(t, _)| t)
}

/// [`solve_gtsp`] that reports every new feasible incumbent and returns run
/// statistics.
pub fn solve_gtsp_with<I: GtspInstance + ?Sized>(
    inst: &I,
    budget: &SolverBudget,
    hint: Option<&[NodeId]>,
    on_improve: &mut dyn FnMut(&Tour<NodeId>),
) -> Result<(Tour<NodeId>, SolveStats)> {
    budget.validate()?;
    check_sets(inst)?;
    if let Some(h) = hint {
        check_hint(inst, h)?;
    }
    let engine = Engine::new(inst);
    let (sol, stats) = engine.solve(budget, hint, &mut |s| {
        on_improve(&Tour {
            nodes: gtsp_nodes(s),
            weight: s.weight,
        })
    });
    let nodes = gtsp_nodes(&sol);
    Ok((finish(&engine, &sol, nodes)?, stats))
}

fn check_hint<I: GtspInstance + ?Sized>(inst: &I, hint: &[NodeId]) -> Result<()> {
    let mut seen = vec![false; inst.set_count()];
    for &(s, c) in hint {
        if s >= seen.len() || c >= inst.set_len(s) || seen[s] {
            return Err(Error::InvalidParameter(format!("hint node ({s}, {c}) is invalid")));
        }
        seen[s] = true;
    }
    if seen.iter().any(|v| !v) {
        return Err(Error::InvalidParameter("hint does not cover every set".into()));
    }
    Ok(())
}

/// Options of [`solve_tsp_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TspOptions {
    /// Price missing edges by graph shortest-path distance instead of
    /// failing; consecutive tour nodes may then be non-adjacent (see
    /// [`expand_route`]).
    pub shortest_path_fallback: bool,
}

pub fn solve_tsp(graph: &CartesianGraph, budget: &SolverBudget) -> Result<Tour<usize>> {
    solve_tsp_with(graph, budget, TspOptions::default(), &mut |_| {}).map(|(t, _)| t)
}

pub fn solve_tsp_with(
    graph: &CartesianGraph,
    budget: &SolverBudget,
    options: TspOptions,
    on_improve: &mut dyn FnMut(&Tour<usize>),
) -> Result<(Tour<usize>, SolveStats)> {
    budget.validate()?;
    check_sets(graph)?;
    let closure;
    let inst: &dyn GtspInstance = if options.shortest_path_fallback {
        closure = metric_closure(graph);
        &closure
    } else {
        graph
    };
    let engine = Engine::new(inst);
    let (sol, stats) = engine.solve(budget, None, &mut |s| {
        on_improve(&Tour {
            nodes: s.order.clone(),
            weight: s.weight,
        })
    });
    let result = finish(&engine, &sol, sol.order.clone()).map_err(|e| match e {
        Error::Infeasible(msg) if !options.shortest_path_fallback => Error::Infeasible(format!(
            "{msg}; the graph may have no Hamiltonian cycle (the shortest-path fallback can help)"
        )),
        other => other,
    })?;
    Ok((result, stats))
}

/// All-pairs shortest-path distances as a complete instance.
fn metric_closure(graph: &CartesianGraph) -> MatrixGtsp {
    let n = graph.node_count();
    let dist: Vec<Vec<f64>> = (0..n).map(|s| dijkstra(graph, s).0).collect();
    MatrixGtsp::new(&vec![1; n], dist).expect("square matrix")
}

fn dijkstra(graph: &CartesianGraph, source: usize) -> (Vec<f64>, Vec<usize>) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((ordered(0.0), source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d.0 > dist[v] {
            continue;
        }
        for &(u, w) in graph.neighbors(v) {
            let nd = d.0 + w;
            if nd < dist[u] {
                dist[u] = nd;
                prev[u] = v;
                heap.push(Reverse((ordered(nd), u)));
            }
        }
    }
    (dist, prev)
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Ordered(f64);
impl Eq for Ordered {}
#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
fn ordered(x: f64) -> Ordered {
    Ordered(x)
}

/// Expands consecutive non-adjacent tour nodes into the shortest graph
/// path between them. Intermediate nodes are revisits.
pub fn expand_route(graph: &CartesianGraph, nodes: &[usize]) -> Result<Vec<usize>> {
    let Some(&first) = nodes.first() else {
        return Ok(Vec::new());
    };
    let mut route = vec![first];
    for pair in nodes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if graph.weight(a, b).is_some() {
            route.push(b);
            continue;
        }
        let (dist, prev) = dijkstra(graph, a);
        if !dist[b].is_finite() {
            return Err(Error::Infeasible(format!("no path from {a} to {b}")));
        }
        let mut hop = vec![b];
        let mut v = b;
        while prev[v] != a {
            v = prev[v];
            hop.push(v);
        }
        hop.reverse();
        route.extend(hop);
    }
    Ok(route)
}

const TSP_ORACLE_LIMIT: usize = 10;
const GTSP_ORACLE_LIMIT: f64 = 1e7;

/// Calls `visit` with every permutation of `items[k..]` appended to
/// `items[..k]`.
fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Exact TSP by enumerating every cycle through node 0 (n ≤ 10).
pub fn brute_force_tsp(graph: &CartesianGraph) -> Result<Tour<usize>> {
    let n = graph.node_count();
    if n > TSP_ORACLE_LIMIT {
        return Err(Error::TooLarge(format!("{n} nodes exceeds the oracle limit")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    if n == 1 {
        return Ok(Tour { nodes: vec![0], weight: 0.0 });
    }
    let mut best: Option<Tour<usize>> = None;
    let mut items: Vec<usize> = (0..n).collect();
    permutations(&mut items, 1, &mut |perm| {
        let mut total = 0.0;
        for i in 0..n {
            match graph.weight(perm[i], perm[(i + 1) % n]) {
                Some(w) => total += w,
                None => return,
            }
        }
        if best.as_ref().map_or(true, |b| total < b.weight) {
            best = Some(Tour { nodes: perm.to_vec(), weight: total });
        }
    });
    best.ok_or_else(|| Error::Infeasible("no Hamiltonian cycle".into()))
}

/// Exact GTSP by enumerating every set order through set 0 and every node
/// choice.
pub fn brute_force_gtsp<I: GtspInstance + ?Sized>(inst: &I) -> Result<Tour<NodeId>> {
    check_sets(inst)?;
    let n = inst.set_count();
    let lens: Vec<usize> = (0..n).map(|s| inst.set_len(s)).collect();
    let work = lens.iter().map(|&l| l as f64).product::<f64>()
        * (1..n).map(|k| k as f64).product::<f64>();
    if work > GTSP_ORACLE_LIMIT {
        return Err(Error::TooLarge(format!("{work:.0} candidate tours exceeds the oracle limit")));
    }
    let mut matrices = std::collections::HashMap::new();
    for a in 0..n {
        for b in 0..n {
            if let Some(m) = inst.weight_matrix(a, b) {
                matrices.insert((a, b), m);
            }
        }
    }
    let link = |a: NodeId, b: NodeId| -> Option<f64> {
        let m = matrices.get(&(a.0, b.0))?;
        let w = m[a.1 * lens[b.0] + b.1];
        w.is_finite().then_some(w)
    };
    if n == 1 {
        return Ok(Tour { nodes: vec![(0, 0)], weight: 0.0 });
    }
    let mut best: Option<Tour<NodeId>> = None;
    let mut items: Vec<usize> = (0..n).collect();
    permutations(&mut items, 1, &mut |perm| {
        let mut picks = vec![0usize; n];
        loop {
            let nodes: Vec<NodeId> = perm.iter().zip(&picks).map(|(&s, &c)| (s, c)).collect();
            let total: Option<f64> = (0..n).map(|i| link(nodes[i], nodes[(i + 1) % n])).sum();
            if let Some(total) = total {
                if best.as_ref().map_or(true, |b| total < b.weight) {
                    best = Some(Tour { nodes, weight: total });
                }
            }
            // odometer over node choices
            let mut k = 0;
            while k < n {
                picks[k] += 1;
                if picks[k] < lens[perm[k]] {
                    break;
                }
                picks[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    });
    best.ok_or_else(|| Error::Infeasible("no feasible generalized tour".into()))
}
