use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::quantile;
use crate::error::{Error, Result};
use crate::landscape::{LandscapeSet, Norm};
use crate::presto::dimension_norms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierMethod {
    Zscore,
    Iqr,
}

impl OutlierMethod {
    pub fn default_threshold(self) -> f64 {
        match self {
            OutlierMethod::Zscore => 3.0,
            OutlierMethod::Iqr => 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// Landscape norm per universe, summed over dimensions.
    pub scores: IndexMap<String, f64>,
    pub flagged: Vec<String>,
    pub method: OutlierMethod,
    pub threshold: f64,
    /// `norms[id][x]`, when computed from landscapes.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub per_dimension_norms: IndexMap<String, Vec<f64>>,
}

/// Flags anomalous scores. The z-score uses the population standard
/// deviation; a constant sample flags nothing.
pub fn outliers_from_scores(
    ids: &[String],
    scores: &[f64],
    method: OutlierMethod,
    threshold: f64,
) -> Result<OutlierReport> {
    if ids.len() != scores.len() {
        return Err(Error::Domain("ids and scores differ in length".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("outlier scores must be finite".into()));
    }
    let n = scores.len();
    let flag: Vec<bool> = match method {
        OutlierMethod::Zscore => {
            if n < 3 {
                return Err(Error::Domain(format!("z-score outliers need at least 3 landscapes, got {n}")));
            }
            let mean = scores.iter().sum::<f64>() / n as f64;
            let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            if sd == 0.0 {
                vec![false; n]
            } else {
                scores.iter().map(|s| ((s - mean) / sd).abs() > threshold).collect()
            }
        }
        OutlierMethod::Iqr => {
            if n < 4 {
                return Err(Error::Domain(format!("IQR outliers need at least 4 landscapes, got {n}")));
            }
            let q1 = quantile(scores, 0.25).expect("non-empty");
            let q3 = quantile(scores, 0.75).expect("non-empty");
            let iqr = q3 - q1;
            let (lo, hi) = (q1 - threshold * iqr, q3 + threshold * iqr);
            scores.iter().map(|&s| s < lo || s > hi).collect()
        }
    };
    Ok(OutlierReport {
        scores: ids.iter().cloned().zip(scores.iter().copied()).collect(),
        flagged: ids.iter().zip(&flag).filter(|(_, &f)| f).map(|(id, _)| id.clone()).collect(),
        method,
        threshold,
        per_dimension_norms: IndexMap::new(),
    })
}

/// Outliers among landscapes by their norm summed over `0..=h_max`.
/// Landscapes without a source id are labelled by position.
pub fn detect_outliers(
    ls: &LandscapeSet,
    h_max: usize,
    p: Norm,
    method: OutlierMethod,
    threshold: f64,
) -> Result<OutlierReport> {
    let ids: Vec<String> = ls
        .landscapes()
        .iter()
        .enumerate()
        .map(|(i, l)| l.source.clone().unwrap_or_else(|| i.to_string()))
        .collect();
    let norms: Vec<Vec<f64>> = ls.landscapes().iter().map(|l| dimension_norms(l, h_max, p)).collect();
    let scores: Vec<f64> = norms.iter().map(|v| v.iter().sum()).collect();
    let mut report = outliers_from_scores(&ids, &scores, method, threshold)?;
    report.per_dimension_norms = ids.into_iter().zip(norms).collect();
    Ok(report)
}
