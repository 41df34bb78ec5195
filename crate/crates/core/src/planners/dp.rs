//! IKLink: the best configuration per waypoint along a fixed order.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphs::{reconfig_required, ReconfigParams};
use crate::kinematics::KinematicChain;
use crate::sampling::IKSampleSet;
use crate::surface::EndEffectorTarget;

/// Chosen config index per waypoint and the resulting cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpResult {
    pub choice: Vec<usize>,
    /// Step `i` is a breakpoint when moving from waypoint `i` to `i + 1`
    /// needs a reconfiguration.
    pub breakpoints: Vec<usize>,
    pub reconfigs: usize,
    /// Joint movement over the smooth steps only.
    pub movement: f64,
}

impl DpResult {
    /// Lexicographic cost: reconfigurations, then movement.
    pub fn key(&self) -> (usize, f64) {
        (self.reconfigs, self.movement)
    }
}

#[derive(Clone, Copy)]
struct Cost {
    reconfigs: usize,
    movement: f64,
}

impl Cost {
    fn better_than(&self, other: &Cost) -> bool {
        self.reconfigs < other.reconfigs
            || (self.reconfigs == other.reconfigs && self.movement < other.movement)
    }
}

/// Dynamic program over waypoints with `lens[i]` candidate configs each.
///
/// `step(i, a, b)` is the joint distance from config `a` of waypoint `i` to
/// config `b` of waypoint `i + 1`, or `None` when that move needs a
/// reconfiguration. A reconfiguration costs one and adds no movement. Ties
/// go to the smaller movement, then to the lower config index.
pub fn iklink_dp_core(
    lens: &[usize],
    mut step: impl FnMut(usize, usize, usize) -> Option<f64>,
) -> DpResult {
    assert!(lens.iter().all(|&l| l > 0), "every waypoint needs a config");
    let n = lens.len();
    if n == 0 {
        return DpResult {
            choice: Vec::new(),
            breakpoints: Vec::new(),
            reconfigs: 0,
            movement: 0.0,
        };
    }
    let mut cost = vec![
        Cost {
            reconfigs: 0,
            movement: 0.0
        };
        lens[0]
    ];
    // back[i][b] = (config at waypoint i, reconfigured) leading to b at i + 1
    let mut back: Vec<Vec<(usize, bool)>> = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n - 1 {
        let mut next = Vec::with_capacity(lens[i + 1]);
        let mut bp = Vec::with_capacity(lens[i + 1]);
        for b in 0..lens[i + 1] {
            let mut best: Option<(Cost, usize, bool)> = None;
            for (a, c) in cost.iter().enumerate() {
                let (cand, reconf) = match step(i, a, b) {
                    Some(d) => (
                        Cost {
                            reconfigs: c.reconfigs,
                            movement: c.movement + d,
                        },
                        false,
                    ),
                    None => (
                        Cost {
                            reconfigs: c.reconfigs + 1,
                            movement: c.movement,
                        },
                        true,
                    ),
                };
                if best.as_ref().map_or(true, |(bc, _, _)| cand.better_than(bc)) {
                    best = Some((cand, a, reconf));
                }
            }
            let (c, a, r) = best.expect("non-empty waypoint");
            next.push(c);
            bp.push((a, r));
        }
        cost = next;
        back.push(bp);
    }
    let mut end = 0;
    for (b, c) in cost.iter().enumerate() {
        if c.better_than(&cost[end]) {
            end = b;
        }
    }
    let total = cost[end];
    let mut choice = vec![0; n];
    let mut breakpoints = Vec::new();
    choice[n - 1] = end;
    for i in (0..n - 1).rev() {
        let (a, r) = back[i][choice[i + 1]];
        choice[i] = a;
        if r {
            breakpoints.push(i);
        }
    }
    breakpoints.reverse();
    DpResult {
        choice,
        breakpoints,
        reconfigs: total.reconfigs,
        movement: total.movement,
    }
}

/// Memoized transitions between the sample sets of target pairs, shared by
/// every path evaluated over one set of samples.
pub struct TransitionCache<'a> {
    chain: &'a KinematicChain,
    targets: &'a [EndEffectorTarget],
    samples: &'a [IKSampleSet],
    params: ReconfigParams,
    alpha: f64,
    /// Keyed `(lo, hi)`, row-major over the configs of `lo`.
    blocks: HashMap<(usize, usize), Vec<Option<f64>>>,
}

impl<'a> TransitionCache<'a> {
    pub fn new(
        chain: &'a KinematicChain,
        targets: &'a [EndEffectorTarget],
        samples: &'a [IKSampleSet],
        params: ReconfigParams,
        alpha: f64,
    ) -> Self {
        Self {
            chain,
            targets,
            samples,
            params,
            alpha,
            blocks: HashMap::new(),
        }
    }

    pub fn samples(&self) -> &'a [IKSampleSet] {
        self.samples
    }

    fn ensure(&mut self, pairs: impl Iterator<Item = (usize, usize)>) {
        let mut todo: Vec<(usize, usize)> = pairs
            .map(|(a, b)| (a.min(b), a.max(b)))
            .filter(|k| k.0 != k.1 && !self.blocks.contains_key(k))
            .collect();
        todo.sort_unstable();
        todo.dedup();
        let (chain, targets, samples, params, alpha) =
            (self.chain, self.targets, self.samples, self.params, self.alpha);
        let built: Vec<_> = todo
            .par_iter()
            .map(|&(lo, hi)| {
                let mut block = Vec::with_capacity(samples[lo].configs.len() * samples[hi].configs.len());
                for qa in &samples[lo].configs {
                    for qb in &samples[hi].configs {
                        let r = reconfig_required(chain, (&targets[lo], qa), (&targets[hi], qb), &params, alpha);
                        block.push((!r).then(|| qa.distance(qb)));
                    }
                }
                ((lo, hi), block)
            })
            .collect();
        self.blocks.extend(built);
    }

    /// Transition from config `a` of target `i` to config `b` of target
    /// `j`; `None` means a reconfiguration. The pair must be cached.
    fn get(&self, i: usize, a: usize, j: usize, b: usize) -> Option<f64> {
        if i == j {
            return if a == b { Some(0.0) } else { None };
        }
        if i < j {
            self.blocks[&(i, j)][a * self.samples[j].configs.len() + b]
        } else {
            self.blocks[&(j, i)][b * self.samples[i].configs.len() + a]
        }
    }
}

/// Runs [`iklink_dp_core`] along `order` over the cached samples.
pub fn iklink_dp(order: &[usize], cache: &mut TransitionCache<'_>) -> DpResult {
    cache.ensure(order.windows(2).map(|w| (w[0], w[1])));
    let lens: Vec<usize> = order.iter().map(|&t| cache.samples[t].configs.len()).collect();
    let cache = &*cache;
    iklink_dp_core(&lens, |i, a, b| cache.get(order[i], a, order[i + 1], b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_smooth_sums_moves() {
        let d = [[0.5], [0.25]];
        let r = iklink_dp_core(&[1, 1, 1], |i, _, _| Some(d[i][0]));
        assert_eq!(r.reconfigs, 0);
        assert_eq!(r.movement, 0.75);
        assert!(r.breakpoints.is_empty());
    }

    #[test]
    fn prefers_the_smooth_pairing() {
        // (0,0) and (1,1) reconfigure; (0,1) is smooth but long
        let r = iklink_dp_core(&[2, 2], |_, a, b| if a == b { None } else { Some(3.0) });
        assert_eq!(r.reconfigs, 0);
        assert_ne!(r.choice[0], r.choice[1]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let r = iklink_dp_core(&[3, 3], |_, _, _| Some(1.0));
        assert_eq!(r.choice, vec![0, 0]);
    }

    #[test]
    fn single_waypoint() {
        let r = iklink_dp_core(&[4], |_, _, _| unreachable!());
        assert_eq!(r.choice, vec![0]);
        assert_eq!(r.key(), (0, 0.0));
    }

    /// Exhaustive lexicographic optimum.
    fn brute(lens: &[usize], t: &[Vec<Vec<Option<f64>>>]) -> (usize, f64) {
        let n = lens.len();
        let mut best = (usize::MAX, f64::INFINITY);
        let mut pick = vec![0; n];
        loop {
            let mut r = 0;
            let mut m = 0.0;
            for i in 0..n - 1 {
                match t[i][pick[i]][pick[i + 1]] {
                    Some(d) => m += d,
                    None => r += 1,
                }
            }
            if r < best.0 || (r == best.0 && m < best.1) {
                best = (r, m);
            }
            let mut k = 0;
            while k < n {
                pick[k] += 1;
                if pick[k] < lens[k] {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
        }
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            lens in prop::collection::vec(1usize..=4, 2..=6),
            seed in any::<u64>(),
            p_reconf in 0.0..0.9f64,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t: Vec<Vec<Vec<Option<f64>>>> = (0..lens.len() - 1)
                .map(|i| {
                    (0..lens[i])
                        .map(|_| {
                            (0..lens[i + 1])
                                .map(|_| (rng.gen::<f64>() >= p_reconf).then(|| rng.gen_range(0.0..2.0)))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let r = iklink_dp_core(&lens, |i, a, b| t[i][a][b]);
            let (br, bm) = brute(&lens, &t);
            prop_assert_eq!(r.reconfigs, br);
            prop_assert!((r.movement - bm).abs() < 1e-12);
            // the reported choice realizes the reported cost
            let mut m = 0.0;
            let mut bps = Vec::new();
            for i in 0..lens.len() - 1 {
                match t[i][r.choice[i]][r.choice[i + 1]] {
                    Some(d) => m += d,
                    None => bps.push(i),
                }
            }
            prop_assert_eq!(bps, r.breakpoints);
            prop_assert!((m - r.movement).abs() < 1e-12);
        }
    }
}
