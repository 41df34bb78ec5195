//! Per-target IK solution sets: random-restart sampling and DBSCAN merging.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kinematics::{solve_ik, IkSettings, JointConfig, KinematicChain, ToleranceSpec};
use crate::surface::EndEffectorTarget;

/// The IK solutions kept for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IKSampleSet {
    pub target_index: usize,
    pub configs: Vec<JointConfig>,
}

/// Runs `m` IK solves from seeds drawn uniformly in the joint-limit box.
///
/// Failed restarts are dropped, so an empty result means no restart reached
/// the target.
pub fn sample_ik(
    chain: &KinematicChain,
    target: &EndEffectorTarget,
    tol: &ToleranceSpec,
    m: usize,
    rng_seed: u64,
    settings: &IkSettings,
) -> Vec<JointConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let seed = chain.random_config(&mut rng);
        if let Ok(q) = solve_ik(chain, target, tol, &seed, settings) {
            out.push(q);
        }
    }
    out
}

/// Seed for target `index` derived from a master seed (splitmix64 finalizer).
pub fn target_seed(master: u64, index: usize) -> u64 {
    let mut z = master ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// DBSCAN over joint-space L2 distance; every cluster is replaced by its
/// medoid.
///
/// Points are neighbors when their distance is at most `eps`. A point with
/// at least `min_pts` neighbors (itself included) is a core point. With
/// `min_pts <= 1` every point is core, so nothing is discarded. Output is
/// sorted by the original index of each medoid.
pub fn merge_clusters(configs: &[JointConfig], eps: f64, min_pts: usize) -> Vec<JointConfig> {
    assert!(eps > 0.0, "merge eps must be positive");
    let n = configs.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| configs[i].distance(&configs[j]) <= eps)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts.max(1)).collect();

    const UNSET: usize = usize::MAX;
    let mut label = vec![UNSET; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if label[start] != UNSET || !core[start] {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![start];
        label[start] = id;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if label[q] != UNSET {
                    continue;
                }
                label[q] = id;
                members.push(q);
                if core[q] {
                    stack.push(q);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    let mut medoids: Vec<usize> = clusters.iter().map(|c| medoid(configs, c)).collect();
    medoids.sort_unstable();
    medoids.into_iter().map(|i| configs[i].clone()).collect()
}

/// Member with the smallest summed distance to the others; ties go to the
/// lowest index (`members` is sorted).
fn medoid(configs: &[JointConfig], members: &[usize]) -> usize {
    let mut best = (f64::INFINITY, members[0]);
    for &i in members {
        let total: f64 = members.iter().map(|&j| configs[i].distance(&configs[j])).sum();
        if total < best.0 {
            best = (total, i);
        }
    }
    best.1
}

/// Parameters of [`sample_all`].
#[derive(Debug, Clone, Copy)]
pub struct SamplingParams {
    pub samples: usize,
    pub seed: u64,
    pub merge_eps: f64,
    pub merge_min_pts: usize,
    pub ik: IkSettings,
}

/// Samples and merges every target in parallel. The result is identical to
/// a sequential run because each target draws from its own seed.
pub fn sample_all(
    chain: &KinematicChain,
    targets: &[EndEffectorTarget],
    tol: &ToleranceSpec,
    params: &SamplingParams,
) -> Vec<IKSampleSet> {
    targets
        .par_iter()
        .enumerate()
        .map(|(i, target)| {
            let raw = sample_ik(
                chain,
                target,
                tol,
                params.samples,
                target_seed(params.seed, i),
                &params.ik,
            );
            IKSampleSet {
                target_index: i,
                configs: merge_clusters(&raw, params.merge_eps, params.merge_min_pts),
            }
        })
        .collect()
}
