use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite `(birth, death)` intervals per homology dimension, plus the
/// births of infinite (essential) classes, which are kept out of the
/// interval lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "DiagramJson", try_from = "DiagramJson")]
pub struct PersistenceDiagram {
    intervals: BTreeMap<usize, Vec<(f64, f64)>>,
    essential: BTreeMap<usize, Vec<f64>>,
}

impl PersistenceDiagram {
    /// Empty diagram with (empty) entries for dimensions `0..=max_h`.
    pub fn empty(max_h: usize) -> Self {
        PersistenceDiagram {
            intervals: (0..=max_h).map(|h| (h, Vec::new())).collect(),
            essential: (0..=max_h).map(|h| (h, Vec::new())).collect(),
        }
    }

    /// Diagram with the given intervals in dimension `h`; zero-persistence
    /// intervals are dropped.
    pub fn from_intervals(h: usize, intervals: &[(f64, f64)]) -> Result<Self> {
        let mut d = Self::empty(h);
        d.set_intervals(h, intervals)?;
        Ok(d)
    }

    /// Replaces the dimension-`h` intervals.
    pub fn set_intervals(&mut self, h: usize, intervals: &[(f64, f64)]) -> Result<()> {
        for &(b, d) in intervals {
            if !(b.is_finite() && d.is_finite()) || d < b {
                return Err(Error::Domain(format!(
                    "interval ({b}, {d}) must be finite with birth <= death"
                )));
            }
        }
        let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(b, d)| d > b).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        for k in 0..h {
            self.intervals.entry(k).or_default();
            self.essential.entry(k).or_default();
        }
        self.intervals.insert(h, v);
        self.essential.entry(h).or_default();
        Ok(())
    }

    pub(crate) fn push_essential(&mut self, h: usize, birth: f64) {
        self.essential.entry(h).or_default().push(birth);
    }

    /// Finite intervals in dimension `h` (empty when absent).
    pub fn intervals(&self, h: usize) -> &[(f64, f64)] {
        self.intervals.get(&h).map_or(&[], Vec::as_slice)
    }

    pub fn essential_count(&self, h: usize) -> usize {
        self.essential.get(&h).map_or(0, Vec::len)
    }

    pub fn essential_births(&self, h: usize) -> &[f64] {
        self.essential.get(&h).map_or(&[], Vec::as_slice)
    }

    /// Highest dimension with an entry.
    pub fn max_h(&self) -> usize {
        self.intervals
            .keys()
            .chain(self.essential.keys())
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Turns every essential class into a finite interval ending at `cap`
    /// (classes born at or after `cap` vanish).
    pub fn with_capped_essentials(&self, cap: f64) -> Self {
        let mut out = self.clone();
        for (h, births) in std::mem::take(&mut out.essential) {
            let list = out.intervals.entry(h).or_default();
            list.extend(births.iter().filter(|&&b| b < cap).map(|&b| (b, cap)));
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
            out.essential.insert(h, Vec::new());
        }
        out
    }

    /// Largest finite filtration value appearing in the diagram.
    pub fn max_value(&self) -> f64 {
        self.intervals
            .values()
            .flatten()
            .map(|&(_, d)| d)
            .chain(self.essential.values().flatten().copied())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    #[serde(flatten)]
    dims: BTreeMap<String, Vec<[f64; 2]>>,
    essential: BTreeMap<String, usize>,
    #[serde(default)]
    essential_births: BTreeMap<String, Vec<f64>>,
}

impl From<PersistenceDiagram> for DiagramJson {
    fn from(d: PersistenceDiagram) -> Self {
        DiagramJson {
            dims: d
                .intervals
                .iter()
                .map(|(h, v)| (format!("h{h}"), v.iter().map(|&(b, e)| [b, e]).collect()))
                .collect(),
            essential: d
                .essential
                .iter()
                .map(|(h, v)| (h.to_string(), v.len()))
                .collect(),
            essential_births: d
                .essential
                .iter()
                .map(|(h, v)| (h.to_string(), v.clone()))
                .collect(),
        }
    }
}

impl TryFrom<DiagramJson> for PersistenceDiagram {
    type Error = String;

    fn try_from(j: DiagramJson) -> Result<Self, String> {
        let mut d = PersistenceDiagram::default();
        for (key, list) in j.dims {
            let h: usize = key
                .strip_prefix('h')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("unexpected diagram key `{key}`"))?;
            let pairs: Vec<(f64, f64)> = list.iter().map(|p| (p[0], p[1])).collect();
            d.set_intervals(h, &pairs).map_err(|e| e.to_string())?;
        }
        for (key, count) in j.essential {
            let h: usize = key.parse().map_err(|_| format!("bad essential key `{key}`"))?;
            let births = j.essential_births.get(&key).cloned().unwrap_or_default();
            let births = if births.len() == count {
                births
            } else {
                vec![0.0; count]
            };
            d.intervals.entry(h).or_default();
            d.essential.insert(h, births);
        }
        Ok(d)
    }
}
