//! H-Joint-GTSP: a Cartesian guide path sparsifies the joint graph and
//! splits the GTSP into overlapping segments.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{read_off, setup, CoverageProblem, Plan, PlannerParams, Setup};
use crate::error::{Error, Result};
use crate::graphs::{build_joint_graph, JointGraph};
use crate::kinematics::{KinematicChain, ToleranceSpec};
use crate::solvers::{
    cycle_to_path, solve_gtsp_with, solve_tsp_with, GtspInstance, NodeId, Tour, TspOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyParams {
    /// The global pass links targets at most this many steps apart on the
    /// stitched segment path.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Targets per segment.
    #[serde(default = "default_segment_len")]
    pub segment_len: usize,
    /// Trailing targets of a segment left uncommitted and re-solved with
    /// the next one.
    #[serde(default = "default_overlap")]
    pub overlap: usize,
    /// Finish with one GTSP pass over the whole sparse graph.
    #[serde(default = "default_global_refine")]
    pub global_refine: bool,
}

fn default_window() -> usize {
    20
}
fn default_segment_len() -> usize {
    150
}
fn default_overlap() -> usize {
    30
}
fn default_global_refine() -> bool {
    true
}

impl Default for HierarchyParams {
    fn default() -> Self {
        Self {
            window: default_window(),
            segment_len: default_segment_len(),
            overlap: default_overlap(),
            global_refine: default_global_refine(),
        }
    }
}

impl HierarchyParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        if self.segment_len < 2 {
            return Err(Error::InvalidParameter("segment_len must be at least 2".into()));
        }
        if self.overlap >= self.segment_len {
            return Err(Error::InvalidParameter("overlap must be below segment_len".into()));
        }
        Ok(())
    }
}

/// Sub-GTSP over some sets of a joint graph, optionally starting from a
/// fixed node of an earlier segment and ending at an anchor set.
///
/// A start dummy `Ds` links the pinned set (or every free set) and an end
/// dummy `De` links the anchor (or every free set); the two are linked to
/// each other, so a tour through both is an open path between those ends.
/// With neither a pin nor an anchor one dummy links everything.
struct Segment<'g> {
    graph: &'g JointGraph,
    /// Local real set -> global set. Local set 0 is the pinned one and the
    /// last real set the anchor, when present.
    global: Vec<usize>,
    local: Vec<usize>,
    pinned: Option<NodeId>,
    anchored: bool,
}

const ABSENT: usize = usize::MAX;

impl<'g> Segment<'g> {
    fn new(graph: &'g JointGraph, sets: &[usize], pinned: Option<NodeId>, anchor: Option<usize>) -> Self {
        let mut global = Vec::with_capacity(sets.len() + 2);
        global.extend(pinned.map(|p| p.0));
        global.extend_from_slice(sets);
        global.extend(anchor);
        let mut local = vec![ABSENT; graph.set_count()];
        for (l, &g) in global.iter().enumerate() {
            local[g] = l;
        }
        Self {
            graph,
            global,
            local,
            pinned,
            anchored: anchor.is_some(),
        }
    }

    fn real(&self) -> usize {
        self.global.len()
    }

    /// `(start dummy, end dummy)`; equal with neither a pin nor an anchor.
    fn dummies(&self) -> (usize, usize) {
        let r = self.real();
        if self.pinned.is_some() || self.anchored {
            (r, r + 1)
        } else {
            (r, r)
        }
    }

    fn is_pinned(&self, s: usize) -> bool {
        self.pinned.is_some() && s == 0
    }

    fn is_anchor(&self, s: usize) -> bool {
        self.anchored && s + 1 == self.real()
    }

    fn linked_to_dummy(&self, s: usize, dummy: usize) -> bool {
        let (ds, de) = self.dummies();
        let free = s < self.real() && !self.is_pinned(s) && !self.is_anchor(s);
        if ds == de {
            return s < self.real();
        }
        if dummy == ds {
            s == de || if self.pinned.is_some() { self.is_pinned(s) } else { free }
        } else {
            s == ds || if self.anchored { self.is_anchor(s) } else { free }
        }
    }

    fn hint(&self) -> Vec<NodeId> {
        let (ds, de) = self.dummies();
        let mut h = vec![(ds, 0)];
        h.extend((0..self.real()).map(|s| (s, 0)));
        if de != ds {
            h.push((de, 0));
        }
        h
    }

    fn to_global(&self, n: NodeId) -> NodeId {
        match self.pinned {
            Some(p) if n.0 == 0 => p,
            _ => (self.global[n.0], n.1),
        }
    }

    /// Nodes of the segment path in visiting order, pinned start and anchor
    /// excluded.
    fn extract(&self, tour: &Tour<NodeId>) -> Result<Vec<NodeId>> {
        let (ds, de) = self.dummies();
        let mut path = cycle_to_path(tour, ds)?.nodes;
        if de != ds {
            if path.first().map(|n| n.0) == Some(de) {
                path.reverse();
            }
            if path.pop().map(|n| n.0) != Some(de) {
                return Err(Error::Infeasible("segment dummies are not adjacent".into()));
            }
            if self.pinned.is_some() {
                if path.first().map(|n| n.0) != Some(0) {
                    return Err(Error::Infeasible("segment path does not start at its pinned node".into()));
                }
                path.remove(0);
            }
            if self.anchored {
                if path.pop().map(|n| n.0) != Some(self.real() - 1) {
                    return Err(Error::Infeasible("segment path does not end at its anchor".into()));
                }
            }
        }
        Ok(path.into_iter().map(|n| self.to_global(n)).collect())
    }
}

impl GtspInstance for Segment<'_> {
    fn set_count(&self) -> usize {
        let (_, de) = self.dummies();
        de + 1
    }

    fn set_len(&self, s: usize) -> usize {
        if s >= self.real() || self.is_pinned(s) {
            1
        } else {
            self.graph.set_len(self.global[s])
        }
    }

    fn set_neighbors(&self, s: usize) -> Vec<usize> {
        let (ds, de) = self.dummies();
        let mut out: Vec<usize> = if s < self.real() {
            self.graph
                .set_neighbors(self.global[s])
                .iter()
                .map(|&g| self.local[g])
                .filter(|&l| l != ABSENT)
                .collect()
        } else {
            (0..self.real()).chain([ds, de]).filter(|&o| o != s && self.linked_to_dummy(o, s)).collect()
        };
        if s < self.real() {
            out.extend([ds, de].into_iter().filter(|&d| self.linked_to_dummy(s, d)));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn weight_matrix(&self, a: usize, b: usize) -> Option<Vec<f64>> {
        if a == b {
            return None;
        }
        let r = self.real();
        if a >= r || b >= r {
            let (d, other) = if a >= r { (a, b) } else { (b, a) };
            return self
                .linked_to_dummy(other, d)
                .then(|| vec![0.0; self.set_len(a) * self.set_len(b)]);
        }
        let (ga, gb) = (self.global[a], self.global[b]);
        let m = self.graph.weight_matrix(ga, gb)?;
        let cols = self.graph.set_len(gb);
        let rows = self.graph.set_len(ga);
        let row_pick: Vec<usize> = match self.pinned {
            Some(p) if a == 0 => vec![p.1],
            _ => (0..rows).collect(),
        };
        let col_pick: Vec<usize> = match self.pinned {
            Some(p) if b == 0 => vec![p.1],
            _ => (0..cols).collect(),
        };
        let mut out = Vec::with_capacity(row_pick.len() * col_pick.len());
        for &i in &row_pick {
            for &j in &col_pick {
                out.push(m[i * cols + j]);
            }
        }
        Some(out)
    }
}

/// Guide path, segment-by-segment GTSP along it, then a global pass over
/// the links near the stitched result.
///
/// Joint-graph links are built lazily: mesh edges inside each segment, then
/// mesh edges whose endpoints sit at most `window` steps apart on the
/// stitched path.
pub fn plan_h_joint_gtsp(
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
    let hp = params.hierarchy;
    let n = problem.len();

    let t_guide = Instant::now();
    let cart = problem.cartesian_graph(params.alpha)?.add_dummy()?;
    let options = TspOptions {
        shortest_path_fallback: params.tsp_fallback,
    };
    let (tour, guide_stats) = solve_tsp_with(&cart, &params.solver_budget(0), options, &mut |_| {})?;
    let guide = cycle_to_path(&tour, cart.dummy_index().expect("just added"))?.nodes;
    let solve_secs = t_guide.elapsed().as_secs_f64();

    let mut adjacent = vec![Vec::new(); n];
    for &(a, b) in &problem.edges {
        adjacent[a].push(b);
        adjacent[b].push(a);
    }
    let t_graph = Instant::now();
    let mut graph = build_joint_graph(chain, &problem.targets, &samples, &[], &reconfig, big_m, params.alpha)?;
    let mut timers = Timers {
        graph_secs: t_graph.elapsed().as_secs_f64(),
        solve_secs,
        rounds: guide_stats.rounds,
        segments: 0,
    };
    let mut ctx = PassContext {
        problem,
        chain,
        params,
        adjacent: &adjacent,
        graph: &mut graph,
        timers: &mut timers,
    };
    let committed = ctx.run(&guide)?;
    let Timers { mut graph_secs, mut solve_secs, mut rounds, segments } = timers;

    let path = if hp.global_refine && segments > 1 {
        let mut stitched = vec![0; n];
        for (i, &(t, _)) in committed.iter().enumerate() {
            stitched[t] = i;
        }
        // mesh edges between targets at most `window` apart on the stitched path
        let pairs: Vec<(usize, usize)> = problem
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| stitched[a].abs_diff(stitched[b]) <= hp.window)
            .collect();
        let t_ext = Instant::now();
        graph.extend(chain, &problem.targets, &pairs)?;
        graph_secs += t_ext.elapsed().as_secs_f64();

        let t_solve = Instant::now();
        let with_dummy = graph.add_dummy()?;
        let dummy = with_dummy.dummy_index().expect("just added");
        let mut hint = vec![(dummy, 0)];
        hint.extend_from_slice(&committed);
        let (tour, s) =
            solve_gtsp_with(&with_dummy, &params.solver_budget(segments + 1), Some(&hint), &mut |_| {})?;
        solve_secs += t_solve.elapsed().as_secs_f64();
        rounds += s.rounds;
        graph = with_dummy;
        cycle_to_path(&tour, dummy)?.nodes
    } else {
        committed
    };

    stats.graph_secs = graph_secs;
    stats.solve_secs = solve_secs;
    stats.solver_rounds = rounds;
    stats.graph_nodes = graph.node_count();
    stats.graph_edges = graph.edge_count();
    let trajectory = read_off(&graph, &path);
    stats.total_secs = started.elapsed().as_secs_f64();
    Ok(Plan {
        trajectory,
        reconfig,
        stats,
    })
}

struct Timers {
    graph_secs: f64,
    solve_secs: f64,
    rounds: u64,
    segments: u64,
}

struct PassContext<'a> {
    problem: &'a CoverageProblem,
    chain: &'a KinematicChain,
    params: &'a PlannerParams,
    adjacent: &'a [Vec<usize>],
    graph: &'a mut JointGraph,
    timers: &'a mut Timers,
}

impl PassContext<'_> {
    /// One sweep of overlapping segments along `order`.
    ///
    /// Invariant: the uncommitted targets are the suffix of `order` from
    /// `next`, and the last committed target is adjacent to `order[next]`,
    /// so `order` is always a feasible hint for the next segment.
    fn run(&mut self, order: &[usize]) -> Result<Vec<NodeId>> {
        let hp = self.params.hierarchy;
        let n = order.len();
        let mut position = vec![0; n];
        for (i, &t) in order.iter().enumerate() {
            position[t] = i;
        }
        let mut committed: Vec<NodeId> = Vec::with_capacity(n);
        let mut next = 0;
        while next < n {
            self.timers.segments += 1;
            let k = self.timers.segments;
            let end = (next + hp.segment_len).min(n);
            let seg = &order[next..end];
            let anchor = order.get(end).copied();
            let pinned = committed.last().copied();

            let t_ext = Instant::now();
            let mut member = vec![false; n];
            for &t in seg.iter().chain(&anchor).chain(pinned.iter().map(|p| &p.0)) {
                member[t] = true;
            }
            // the link into the pinned node keeps `order` a feasible hint
            let into_pin = pinned.map(|p| (p.0, order[next]));
            let pairs: Vec<(usize, usize)> = self
                .problem
                .edges
                .iter()
                .copied()
                .filter(|&(a, b)| member[a] && member[b])
                .chain(into_pin)
                .collect();
            self.graph.extend(self.chain, &self.problem.targets, &pairs)?;
            self.timers.graph_secs += t_ext.elapsed().as_secs_f64();

            let t_solve = Instant::now();
            let inst = Segment::new(self.graph, seg, pinned, anchor);
            let (tour, s) =
                solve_gtsp_with(&inst, &self.params.solver_budget(k), Some(&inst.hint()), &mut |_| {})?;
            self.timers.solve_secs += t_solve.elapsed().as_secs_f64();
            self.timers.rounds += s.rounds;
            let path = inst.extract(&tour)?;
            let keep = committable(self.adjacent, &path, &position, next, order, hp.overlap);
            log::debug!("segment {k}: {} targets, committing {keep}", path.len());
            committed.extend_from_slice(&path[..keep]);
            next += keep;
        }
        Ok(committed)
    }
}

/// How much of a segment path to commit: the longest prefix of at most
/// `len - overlap` nodes that covers exactly the next guide targets and
/// links to the first guide target after it. The whole path qualifies when
/// it ends next to the anchor, which is also the fallback.
fn committable(
    adjacent: &[Vec<usize>],
    path: &[NodeId],
    position: &[usize],
    next: usize,
    guide: &[usize],
    overlap: usize,
) -> usize {
    let len = path.len();
    if next + len == guide.len() {
        return len;
    }
    let cap = len.saturating_sub(overlap).max(1);
    let mut best = len;
    let mut furthest = 0;
    for (i, &(t, _)) in path.iter().enumerate().take(cap) {
        furthest = furthest.max(position[t] - next);
        let keep = i + 1;
        if furthest + 1 == keep && adjacent[t].contains(&guide[next + keep]) {
            best = keep;
        }
    }
    best
}
