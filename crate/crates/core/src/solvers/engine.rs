//! Iterated local search shared by the TSP and GTSP front ends.
//!
//! A solution is a cyclic order of sets plus one chosen node per set.
//! Missing links cost a penalty larger than any feasible tour, so the
//! search can start from and pass through infeasible tours.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GtspInstance, NodeId, SolveStats, SolverBudget};

#[derive(Debug, Clone)]
pub(crate) struct Sol {
    pub order: Vec<usize>,
    /// Chosen node, indexed by set.
    pub choice: Vec<usize>,
    pub weight: f64,
}

pub(crate) struct Engine {
    n: usize,
    len: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    /// Weight blocks, row-major over the nodes of the lower set.
    blocks: Vec<Vec<f64>>,
    /// Per set `lo`: `(hi, block index)` for every linked `hi > lo`, sorted.
    index: Vec<Vec<(usize, usize)>>,
    penalty: f64,
    eps: f64,
}

#[derive(Clone, Copy)]
struct View<'a> {
    data: Option<&'a [f64]>,
    stride: usize,
    transposed: bool,
    penalty: f64,
}

impl View<'_> {
    #[inline]
    fn get(&self, ia: usize, ib: usize) -> f64 {
        match self.data {
            None => self.penalty,
            Some(d) => {
                let w = if self.transposed {
                    d[ib * self.stride + ia]
                } else {
                    d[ia * self.stride + ib]
                };
                if w.is_finite() {
                    w
                } else {
                    self.penalty
                }
            }
        }
    }
}

impl Engine {
    pub fn new<I: GtspInstance + ?Sized>(inst: &I) -> Self {
        let n = inst.set_count();
        let len: Vec<usize> = (0..n).map(|s| inst.set_len(s)).collect();
        let mut neighbors = Vec::with_capacity(n);
        let mut blocks = Vec::new();
        let mut index = vec![Vec::new(); n];
        let mut max_w: f64 = 0.0;
        for a in 0..n {
            let mut nb = inst.set_neighbors(a);
            nb.sort_unstable();
            nb.dedup();
            nb.retain(|&b| b != a && b < n);
            for &b in &nb {
                if a < b {
                    if let Some(m) = inst.weight_matrix(a, b) {
                        debug_assert_eq!(m.len(), len[a] * len[b]);
                        for &w in &m {
                            if w.is_finite() {
                                max_w = max_w.max(w);
                            }
                        }
                        index[a].push((b, blocks.len()));
                        blocks.push(m);
                    }
                }
            }
            neighbors.push(nb);
        }
        // Neighbor lists may be one-sided; keep only linked pairs.
        let linked = |a: usize, b: usize| index[a.min(b)].binary_search_by_key(&a.max(b), |e| e.0).is_ok();
        for (a, nb) in neighbors.iter_mut().enumerate() {
            nb.retain(|&b| linked(a, b));
        }
        let scale = max_w.max(1.0);
        Self {
            n,
            len,
            neighbors,
            blocks,
            index,
            penalty: 2.0 * scale * (n as f64 + 1.0) + 1.0,
            eps: 1e-9 * scale,
        }
    }

    pub fn is_penalty(&self, w: f64) -> bool {
        w >= self.penalty
    }

    fn block(&self, lo: usize, hi: usize) -> Option<&[f64]> {
        let row = &self.index[lo];
        row.binary_search_by_key(&hi, |e| e.0)
            .ok()
            .map(|k| self.blocks[row[k].1].as_slice())
    }

    #[inline]
    fn view(&self, a: usize, b: usize) -> View<'_> {
        let (lo, hi, transposed, stride) = if a < b {
            (a, b, false, self.len[b])
        } else {
            (b, a, true, self.len[a])
        };
        View {
            data: self.block(lo, hi),
            stride,
            transposed,
            penalty: self.penalty,
        }
    }

    #[inline]
    pub fn w(&self, a: usize, ia: usize, b: usize, ib: usize) -> f64 {
        if a == b {
            return self.penalty;
        }
        self.view(a, b).get(ia, ib)
    }

    /// Weight between consecutive sets using their chosen nodes.
    #[inline]
    fn wc(&self, sol: &Sol, a: usize, b: usize) -> f64 {
        self.w(a, sol.choice[a], b, sol.choice[b])
    }

    pub fn tour_weight(&self, order: &[usize], choice: &[usize]) -> f64 {
        let n = order.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let (a, b) = (order[i], order[(i + 1) % n]);
                self.w(a, choice[a], b, choice[b])
            })
            .sum()
    }

    /// Number of missing links used by a tour.
    pub fn missing_links(&self, sol: &Sol) -> usize {
        let n = sol.order.len();
        if n < 2 {
            return 0;
        }
        (0..n)
            .filter(|&i| self.is_penalty(self.wc(sol, sol.order[i], sol.order[(i + 1) % n])))
            .count()
    }

    fn set_level_weight(&self, a: usize, b: usize) -> f64 {
        match self.block(a.min(b), a.max(b)) {
            None => self.penalty,
            Some(m) => m.iter().copied().filter(|w| w.is_finite()).fold(self.penalty, f64::min),
        }
    }

    /// Greedy construction: from a random start, move to the unvisited
    /// neighbor with the fewest unvisited neighbors of its own, breaking
    /// ties by the cheapest link. Jumps over a missing link only when stuck.
    fn construct(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let n = self.n;
        let mut visited = vec![false; n];
        let mut free_degree: Vec<usize> = self.neighbors.iter().map(Vec::len).collect();
        let mut order = Vec::with_capacity(n);
        let mut cur = rng.gen_range(0..n);
        loop {
            visited[cur] = true;
            order.push(cur);
            for &b in &self.neighbors[cur] {
                free_degree[b] -= 1;
            }
            if order.len() == n {
                break;
            }
            let next = self.neighbors[cur]
                .iter()
                .copied()
                .filter(|&b| !visited[b])
                .min_by(|&x, &y| {
                    free_degree[x]
                        .cmp(&free_degree[y])
                        .then(self.set_level_weight(cur, x).total_cmp(&self.set_level_weight(cur, y)))
                        .then(x.cmp(&y))
                });
            cur = match next {
                Some(b) => b,
                None => (0..n)
                    .filter(|&b| !visited[b])
                    .min_by_key(|&b| (free_degree[b] == 0, free_degree[b]))
                    .expect("an unvisited set remains"),
            };
        }
        order
    }

    pub fn make_sol(&self, order: Vec<usize>, choice: Vec<usize>) -> Sol {
        let weight = self.tour_weight(&order, &choice);
        Sol {
            order,
            choice,
            weight,
        }
    }

    fn positions(order: &[usize], pos: &mut [usize]) {
        for (i, &s) in order.iter().enumerate() {
            pos[s] = i;
        }
    }

    /// Positions of the sets linked to `s`. An improving move has to create
    /// at least one link next to the moved sets, so only these are tried.
    fn candidates<'s>(&'s self, pos: &'s [usize], s: usize) -> impl Iterator<Item = usize> + 's {
        self.neighbors[s].iter().map(move |&b| pos[b])
    }

    fn two_opt(&self, sol: &mut Sol) -> bool {
        let n = sol.order.len();
        if n < 4 {
            return false;
        }
        let mut pos = vec![0; self.n];
        let mut improved = false;
        let mut again = true;
        while again {
            again = false;
            Self::positions(&sol.order, &mut pos);
            'scan: for i in 0..n - 2 {
                let (a, b) = (sol.order[i], sol.order[i + 1]);
                let ab = self.wc(sol, a, b);
                let j_end = if i == 0 { n - 1 } else { n };
                let mut js: Vec<usize> = self.candidates(&pos, a).filter(|&j| j >= i + 2 && j < j_end).collect();
                js.sort_unstable();
                for j in js {
                    let (c, d) = (sol.order[j], sol.order[(j + 1) % n]);
                    let delta = self.wc(sol, a, c) + self.wc(sol, b, d) - ab - self.wc(sol, c, d);
                    if delta < -self.eps {
                        sol.order[i + 1..=j].reverse();
                        sol.weight += delta;
                        improved = true;
                        again = true;
                        break 'scan;
                    }
                }
            }
        }
        improved
    }

    /// Moves segments of one to three sets elsewhere, in either
    /// orientation; a single moved set also picks its best node.
    fn or_opt(&self, sol: &mut Sol) -> bool {
        let n = sol.order.len();
        if n < 4 {
            return false;
        }
        let mut pos = vec![0; self.n];
        let mut improved = false;
        let mut again = true;
        while again {
            again = false;
            Self::positions(&sol.order, &mut pos);
            'outer: for l in 1..=3.min(n - 3) {
                for i in 0..n {
                    let o = &sol.order;
                    let p = o[(i + n - 1) % n];
                    let q = o[(i + l) % n];
                    let s0 = o[i];
                    let sl = o[(i + l - 1) % n];
                    let gain = self.wc(sol, p, s0) + self.wc(sol, sl, q) - self.wc(sol, p, q);
                    // insertion between rest positions t and t + 1, where
                    // rest starts right after the segment
                    let mut ts: Vec<usize> = Vec::new();
                    let rest_index = |k: usize| (k + 2 * n - i - l) % n;
                    let ends: &[usize] = if l > 1 { &[s0, sl] } else { &[s0] };
                    for k in ends.iter().flat_map(|&e| self.candidates(&pos, e)) {
                        // the linked set may sit on either side of the gap
                        for kk in [k, (k + n - 1) % n] {
                            let t = rest_index(kk);
                            if t < n - l - 1 {
                                ts.push(t);
                            }
                        }
                    }
                    ts.sort_unstable();
                    ts.dedup();
                    for t in ts {
                        let k = (i + l + t) % n;
                        let (x, y) = (o[k], o[(k + 1) % n]);
                        let xy = self.wc(sol, x, y);
                        let (add, reversed, node) = if l == 1 {
                            let (vx, vy) = (self.view(x, s0), self.view(s0, y));
                            let (cx, cy) = (sol.choice[x], sol.choice[y]);
                            let mut best = (f64::INFINITY, sol.choice[s0]);
                            for c in 0..self.len[s0] {
                                let v = vx.get(cx, c) + vy.get(c, cy);
                                if v < best.0 {
                                    best = (v, c);
                                }
                            }
                            (best.0 - xy, false, best.1)
                        } else {
                            let fwd = self.wc(sol, x, s0) + self.wc(sol, sl, y) - xy;
                            let rev = self.wc(sol, x, sl) + self.wc(sol, s0, y) - xy;
                            if rev < fwd {
                                (rev, true, sol.choice[s0])
                            } else {
                                (fwd, false, sol.choice[s0])
                            }
                        };
                        if add - gain < -self.eps {
                            let mut seg: Vec<usize> = (0..l).map(|u| o[(i + u) % n]).collect();
                            if reversed {
                                seg.reverse();
                            }
                            let rest: Vec<usize> = (0..n - l).map(|u| o[(i + l + u) % n]).collect();
                            let mut order = Vec::with_capacity(n);
                            order.extend_from_slice(&rest[..=t]);
                            order.extend_from_slice(&seg);
                            order.extend_from_slice(&rest[t + 1..]);
                            sol.order = order;
                            sol.choice[s0] = node;
                            sol.weight = self.tour_weight(&sol.order, &sol.choice);
                            improved = true;
                            again = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        improved
    }

    fn rechoose(&self, sol: &mut Sol) -> bool {
        let n = sol.order.len();
        if n < 2 {
            return false;
        }
        let mut improved = false;
        for i in 0..n {
            let s = sol.order[i];
            if self.len[s] < 2 {
                continue;
            }
            let p = sol.order[(i + n - 1) % n];
            let q = sol.order[(i + 1) % n];
            let (vp, vq) = (self.view(p, s), self.view(s, q));
            let (cp, cq) = (sol.choice[p], sol.choice[q]);
            let current = vp.get(cp, sol.choice[s]) + vq.get(sol.choice[s], cq);
            let mut best = (current, sol.choice[s]);
            for c in 0..self.len[s] {
                let v = vp.get(cp, c) + vq.get(c, cq);
                if v < best.0 - self.eps {
                    best = (v, c);
                }
            }
            if best.1 != sol.choice[s] {
                sol.choice[s] = best.1;
                sol.weight += best.0 - current;
                improved = true;
            }
        }
        improved
    }

    /// Exact node choice for the current order: shortest cycle through the
    /// layered graph, started from the smallest set.
    pub fn cluster_dp(&self, sol: &mut Sol) -> bool {
        let n = sol.order.len();
        if n < 2 {
            return false;
        }
        let start = (0..n).min_by_key(|&i| (self.len[sol.order[i]], i)).unwrap();
        let seq: Vec<usize> = (0..n).map(|i| sol.order[(start + i) % n]).collect();
        let views: Vec<View<'_>> = (0..n).map(|t| self.view(seq[t], seq[(t + 1) % n])).collect();
        let first = seq[0];
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut back: Vec<Vec<u32>> = (1..n).map(|t| vec![0; self.len[seq[t]]]).collect();
        for s0 in 0..self.len[first] {
            let mut cost: Vec<f64> = (0..self.len[seq[1]]).map(|c| views[0].get(s0, c)).collect();
            for t in 2..n {
                let view = views[t - 1];
                let mut next = vec![f64::INFINITY; self.len[seq[t]]];
                let bp = &mut back[t - 1];
                for (c, slot) in next.iter_mut().enumerate() {
                    let mut arg = 0;
                    for (p, &cp) in cost.iter().enumerate() {
                        let v = cp + view.get(p, c);
                        if v < *slot {
                            *slot = v;
                            arg = p;
                        }
                    }
                    bp[c] = arg as u32;
                }
                cost = next;
            }
            let close = views[n - 1];
            let mut end = (f64::INFINITY, 0);
            for (c, &v) in cost.iter().enumerate() {
                let total = v + close.get(c, s0);
                if total < end.0 {
                    end = (total, c);
                }
            }
            if best.as_ref().map_or(true, |b| end.0 < b.0) {
                let mut picks = vec![0; n];
                picks[0] = s0;
                let mut c = end.1;
                for t in (1..n).rev() {
                    picks[t] = c;
                    c = back[t - 1][c] as usize;
                }
                best = Some((end.0, picks));
            }
        }
        let (total, picks) = best.expect("first set is non-empty");
        if total < sol.weight - self.eps {
            for (t, &s) in seq.iter().enumerate() {
                sol.choice[s] = picks[t];
            }
            sol.weight = self.tour_weight(&sol.order, &sol.choice);
            true
        } else {
            false
        }
    }

    pub fn local_search(&self, sol: &mut Sol) {
        let multi = self.len.iter().any(|&l| l > 1);
        loop {
            let mut changed = self.two_opt(sol);
            changed |= self.or_opt(sol);
            if multi {
                changed |= self.rechoose(sol);
                if !changed {
                    changed = self.cluster_dp(sol);
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn kick(&self, sol: &Sol, rng: &mut ChaCha8Rng) -> Sol {
        let n = sol.order.len();
        let mut order = sol.order.clone();
        if n >= 8 {
            // Double bridge on a random window of the tour.
            let span = n.min(60);
            let off = rng.gen_range(0..n);
            order.rotate_left(off);
            let mut cuts = [
                rng.gen_range(1..span),
                rng.gen_range(1..span),
                rng.gen_range(1..span),
            ];
            cuts.sort_unstable();
            let [a, b, c] = cuts;
            let mut next = Vec::with_capacity(n);
            next.extend_from_slice(&order[..a]);
            next.extend_from_slice(&order[b..c]);
            next.extend_from_slice(&order[a..b]);
            next.extend_from_slice(&order[c..]);
            order = next;
        } else if n >= 3 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            order.swap(i, j);
            let k = rng.gen_range(0..n);
            order.rotate_left(k);
            let (lo, hi) = (rng.gen_range(0..n), rng.gen_range(0..n));
            order[lo.min(hi)..=lo.max(hi)].reverse();
        }
        let mut choice = sol.choice.clone();
        let s = order[rng.gen_range(0..n)];
        choice[s] = rng.gen_range(0..self.len[s]);
        let mut next = self.make_sol(order, choice);
        if n < 8 && self.len.iter().any(|&l| l > 1) {
            // Otherwise 2-opt on the stale node choice tends to undo the
            // kick before the new order is priced.
            self.cluster_dp(&mut next);
        }
        next
    }

    /// Runs the search. `on_improve` sees every new feasible incumbent.
    pub fn solve(
        &self,
        budget: &SolverBudget,
        hint: Option<&[NodeId]>,
        on_improve: &mut dyn FnMut(&Sol),
    ) -> (Sol, SolveStats) {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mut stats = SolveStats::default();
        let initial = match hint {
            Some(h) => {
                let mut choice = vec![0; self.n];
                for &(s, c) in h {
                    choice[s] = c;
                }
                self.make_sol(h.iter().map(|&(s, _)| s).collect(), choice)
            }
            None => {
                let order = self.construct(&mut rng);
                self.make_sol(order, vec![0; self.n])
            }
        };
        let mut cur = initial;
        if self.len.iter().any(|&l| l > 1) {
            self.cluster_dp(&mut cur);
        }
        self.local_search(&mut cur);
        let mut best = cur.clone();
        let mut last_improvement = Instant::now();
        stats.time_to_best = started.elapsed().as_secs_f64();
        if self.missing_links(&best) == 0 {
            on_improve(&best);
        }

        // With three sets or fewer every order is the same cycle, and the
        // node choice above is already exact.
        let trivial = self.n <= 3;
        let mut stale_rounds: u64 = 0;
        while !trivial {
            if let Some(r) = budget.stagnation_rounds {
                if stale_rounds >= r {
                    break;
                }
            }
            if let Some(s) = budget.stagnation_secs {
                if last_improvement.elapsed().as_secs_f64() >= s {
                    break;
                }
            }
            if started.elapsed().as_secs_f64() >= budget.time_cap_secs {
                stats.hit_time_cap = true;
                break;
            }
            stats.rounds += 1;
            let mut cand = self.kick(&cur, &mut rng);
            self.local_search(&mut cand);
            if cand.weight < best.weight - self.eps {
                best = cand.clone();
                cur = cand;
                stale_rounds = 0;
                last_improvement = Instant::now();
                stats.improvements += 1;
                stats.time_to_best = started.elapsed().as_secs_f64();
                if self.missing_links(&best) == 0 {
                    on_improve(&best);
                }
            } else {
                stale_rounds += 1;
                if cand.weight <= cur.weight + self.eps {
                    cur = cand;
                }
                if stale_rounds % 25 == 0 {
                    cur = best.clone();
                }
            }
        }
        stats.elapsed = started.elapsed().as_secs_f64();
        (best, stats)
    }
}
