use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presto::MultiverseMetricSpace;
use crate::topology::{bottleneck, persistence, rips_complex, wasserstein, PersistenceDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagramMetric {
    Bottleneck,
    Wasserstein,
}

/// H0 and H1 Rips persistence of a metric space's distance matrix.
pub fn mms_diagram(mms: &MultiverseMetricSpace) -> Result<PersistenceDiagram> {
    if mms.len() < 2 {
        return Err(Error::Domain(format!(
            "comparing metric spaces needs at least 2 universes, got {}",
            mms.len()
        )));
    }
    let c = rips_complex(&mms.dist, 1, None)?;
    Ok(persistence(&c, 1))
}

/// Compares two multiverse metric spaces through the persistent homology
/// of their distance matrices; the universes need not correspond. The
/// diagram distance is summed over dimensions 0 and 1.
pub fn compare_mms(
    a: &MultiverseMetricSpace,
    b: &MultiverseMetricSpace,
    metric: DiagramMetric,
    p: f64,
) -> Result<f64> {
    let (da, db) = (mms_diagram(a)?, mms_diagram(b)?);
    let mut total = 0.0;
    for h in 0..=1 {
        total += match metric {
            DiagramMetric::Bottleneck => bottleneck(&da, &db, h),
            DiagramMetric::Wasserstein => wasserstein(&da, &db, h, p)?,
        };
    }
    Ok(total)
}
