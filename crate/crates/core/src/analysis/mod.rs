//! Applications over multiverse metric spaces and landscape sets.

mod cluster;
mod compare;
mod compress;
mod mantel;
mod outliers;

pub use cluster::{cluster_universes, ClusterResult};
pub use compare::{compare_mms, mms_diagram, DiagramMetric};
pub use compress::{
    compress_search_space, harmonic, optimal_cover_size, CompressionMethod, CompressionResult, Threshold,
};
pub use mantel::{mantel_test, pearson_upper, MantelResult};
pub use outliers::{detect_outliers, outliers_from_scores, OutlierMethod, OutlierReport};

use crate::error::{Error, Result};
use crate::presto::MultiverseMetricSpace;

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Cut height at quantile `q` in (0, 1) of the off-diagonal distances.
pub fn epsilon_from_quantile(mms: &MultiverseMetricSpace, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile must lie in (0, 1), got {q}")));
    }
    let m = mms.len();
    let off: Vec<f64> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .map(|(i, j)| mms.dist[(i, j)])
        .collect();
    quantile(&off, q).ok_or_else(|| Error::Domain("quantile needs at least two universes".into()))
}
