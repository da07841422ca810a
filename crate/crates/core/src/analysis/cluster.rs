use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presto::MultiverseMetricSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Cluster label per universe; labels are numbered by the first
    /// universe of each cluster.
    pub labels: IndexMap<String, usize>,
    pub epsilon: f64,
    /// Height at which each label's cluster was last merged (0 for
    /// singletons).
    pub heights: Vec<f64>,
}

/// Complete-linkage agglomerative clustering cut at height `epsilon`.
/// Among equally close cluster pairs the one with the lexicographically
/// smallest (first member, first member) pair merges first.
pub fn cluster_universes(mms: &MultiverseMetricSpace, epsilon: f64) -> Result<ClusterResult> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Domain(format!("cut height must be nonnegative, got {epsilon}")));
    }
    let m = mms.len();
    let d = &mms.dist;
    // Clusters as sorted member lists, kept ordered by first member.
    let mut clusters: Vec<(Vec<usize>, f64)> = (0..m).map(|i| (vec![i], 0.0)).collect();
    // link[a][b]: complete linkage between clusters a and b.
    let mut link: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| d[(i, j)]).collect()).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let v = link[a][b];
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, a, b));
                }
            }
        }
        let Some((h, a, b)) = best else { break };
        if h > epsilon {
            break;
        }
        let k = clusters.len();
        let merged_link: Vec<f64> = (0..k).map(|x| link[a][x].max(link[b][x])).collect();
        for (x, &v) in merged_link.iter().enumerate() {
            link[a][x] = v;
            link[x][a] = v;
        }
        link[a][a] = 0.0;
        link.remove(b);
        for row in link.iter_mut() {
            row.remove(b);
        }
        let (mb, _) = clusters.remove(b);
        let merged = &mut clusters[a];
        merged.0.extend(mb);
        merged.0.sort_unstable();
        merged.1 = h;
    }
    let mut labels = vec![0; m];
    for (label, (members, _)) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = label;
        }
        for &i in members {
            for &j in members {
                assert!(d[(i, j)] <= epsilon, "complete linkage cut violated");
            }
        }
    }
    Ok(ClusterResult {
        labels: mms.ids.iter().cloned().zip(labels).collect(),
        epsilon,
        heights: clusters.iter().map(|c| c.1).collect(),
    })
}
