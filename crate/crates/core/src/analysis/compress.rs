use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{cluster_universes, epsilon_from_quantile};
use crate::error::{Error, Result};
use crate::presto::MultiverseMetricSpace;

/// Largest multiverse for which the optimal cover size is searched.
pub const EXHAUSTIVE_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressionMethod {
    GreedySetCover,
    CompleteLinkage,
}

/// Coverage radius, given directly or as a quantile of the off-diagonal
/// distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Epsilon(f64),
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub representatives: Vec<String>,
    pub assignment: IndexMap<String, String>,
    pub epsilon: f64,
    pub quantile: Option<f64>,
    pub method: CompressionMethod,
    /// Size of an optimal cover (only for small multiverses).
    pub c_star: Option<usize>,
    /// `H(m) * c_star`, the greedy guarantee.
    pub greedy_bound: Option<f64>,
}

/// `H(m) = 1 + 1/2 + ... + 1/m`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|i| 1.0 / i as f64).sum()
}

fn coverage_masks(mms: &MultiverseMetricSpace, eps: f64) -> Vec<u32> {
    let m = mms.len();
    (0..m)
        .map(|i| (0..m).filter(|&j| mms.dist[(i, j)] <= eps).fold(0u32, |acc, j| acc | (1 << j)))
        .collect()
}

/// Smallest number of universes whose `eps`-balls cover everything, by
/// exhaustive search over subsets. `None` above `EXHAUSTIVE_MAX`.
pub fn optimal_cover_size(mms: &MultiverseMetricSpace, eps: f64) -> Option<usize> {
    let m = mms.len();
    if m == 0 || m > EXHAUSTIVE_MAX {
        return None;
    }
    let cover = coverage_masks(mms, eps);
    let full: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut union = vec![0u32; 1 << m];
    let mut best = m;
    for mask in 1usize..(1 << m) {
        let low = mask.trailing_zeros() as usize;
        union[mask] = union[mask & (mask - 1)] | cover[low];
        let size = mask.count_ones() as usize;
        if size < best && union[mask] == full {
            best = size;
        }
    }
    Some(best)
}

/// Selects representatives so that every universe lies within epsilon of
/// one. Greedy set cover picks, at each step, the universe covering the
/// most uncovered ones (lowest index on ties); complete linkage takes one
/// member per cluster.
pub fn compress_search_space(
    mms: &MultiverseMetricSpace,
    threshold: Threshold,
    method: CompressionMethod,
) -> Result<CompressionResult> {
    let m = mms.len();
    if m == 0 {
        return Err(Error::Domain("cannot compress an empty multiverse".into()));
    }
    let (eps, q) = match threshold {
        Threshold::Epsilon(e) => {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Domain(format!("epsilon must be positive, got {e}")));
            }
            (e, None)
        }
        Threshold::Quantile(q) => (epsilon_from_quantile(mms, q)?, Some(q)),
    };
    let d = &mms.dist;

    let reps: Vec<usize> = match method {
        CompressionMethod::GreedySetCover => {
            let mut covered = vec![false; m];
            let mut reps = Vec::new();
            while covered.iter().any(|c| !c) {
                let gain = |i: usize| (0..m).filter(|&j| !covered[j] && d[(i, j)] <= eps).count();
                let best = (0..m).max_by(|&a, &b| gain(a).cmp(&gain(b)).then(b.cmp(&a))).expect("m > 0");
                for j in 0..m {
                    if d[(best, j)] <= eps {
                        covered[j] = true;
                    }
                }
                covered[best] = true;
                reps.push(best);
            }
            reps
        }
        CompressionMethod::CompleteLinkage => {
            let clusters = cluster_universes(mms, eps)?;
            let labels: Vec<usize> = clusters.labels.values().copied().collect();
            let k = labels.iter().max().map_or(0, |l| l + 1);
            (0..k)
                .map(|c| {
                    let members: Vec<usize> = (0..m).filter(|&i| labels[i] == c).collect();
                    // Member with the smallest worst-case distance to the rest.
                    let radius = |i: usize| members.iter().map(|&j| d[(i, j)]).fold(0.0, f64::max);
                    *members
                        .iter()
                        .min_by(|&&a, &&b| radius(a).total_cmp(&radius(b)).then(a.cmp(&b)))
                        .expect("non-empty cluster")
                })
                .collect()
        }
    };

    let mut assignment = IndexMap::new();
    for i in 0..m {
        let rep = if reps.contains(&i) {
            i
        } else {
            *reps
                .iter()
                .min_by(|&&a, &&b| d[(i, a)].total_cmp(&d[(i, b)]).then(a.cmp(&b)))
                .expect("at least one representative")
        };
        if d[(i, rep)] > eps {
            return Err(Error::State(format!(
                "universe `{}` is {} from its representative, above epsilon {eps}",
                mms.ids[i],
                d[(i, rep)]
            )));
        }
        assignment.insert(mms.ids[i].clone(), mms.ids[rep].clone());
    }
    let c_star = optimal_cover_size(mms, eps);
    Ok(CompressionResult {
        representatives: reps.iter().map(|&i| mms.ids[i].clone()).collect(),
        assignment,
        epsilon: eps,
        quantile: q,
        method,
        greedy_bound: c_star.map(|c| harmonic(m) * c as f64),
        c_star,
    })
}
