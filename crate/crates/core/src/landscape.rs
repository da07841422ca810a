//! Exact persistence landscapes as piecewise-linear functions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::PersistenceDiagram;

/// Critical points `(t, value)` of one layer, strictly increasing in `t`,
/// starting and ending at value 0.
pub type Layer = Vec<(f64, f64)>;

/// Which L^p norm to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    L1,
    #[default]
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Inf,
}

impl Norm {
    /// The exponent, `inf` for the sup norm.
    pub fn exponent(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Inf => f64::INFINITY,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Inf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" | "infinity" => Ok(Norm::Inf),
            other => Err(Error::Domain(format!("p must be one of 1, 2, inf; got `{other}`"))),
        }
    }
}

/// Grid used by [`landscape_grid_round`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: f64,
    pub step: f64,
}

/// How a landscape was produced. Landscapes are only comparable when this
/// matches.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LandscapeProvenance {
    pub h_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceLandscape {
    #[serde(rename = "h", with = "string_keys")]
    layers: BTreeMap<usize, Vec<Layer>>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default)]
    pub provenance: LandscapeProvenance,
    /// Intervals the landscape was built from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_string_keys")]
    intervals: Option<BTreeMap<usize, Vec<(f64, f64)>>>,
}

impl PersistenceLandscape {
    /// The zero landscape in dimensions `0..=h_max`.
    pub fn zero(h_max: usize) -> Self {
        PersistenceLandscape {
            layers: (0..=h_max).map(|h| (h, Vec::new())).collect(),
            grid: None,
            source: None,
            provenance: LandscapeProvenance {
                h_max,
                ..Default::default()
            },
            intervals: Some((0..=h_max).map(|h| (h, Vec::new())).collect()),
        }
    }

    /// Builds a landscape from explicit layers, checking the layer invariants.
    pub fn from_layers(layers: BTreeMap<usize, Vec<Layer>>) -> Result<Self> {
        let h_max = layers.keys().copied().max().unwrap_or(0);
        let mut l = Self::zero(h_max);
        l.intervals = None;
        for (h, ls) in layers {
            l.layers.insert(h, ls);
        }
        l.validate()?;
        Ok(l)
    }

    pub fn h_max(&self) -> usize {
        self.provenance.h_max
    }

    /// Layers in dimension `h` (empty for the zero function).
    pub fn layers(&self, h: usize) -> &[Layer] {
        self.layers.get(&h).map_or(&[], Vec::as_slice)
    }

    pub fn source_intervals(&self, h: usize) -> Option<&[(f64, f64)]> {
        self.intervals.as_ref().map(|m| m.get(&h).map_or(&[][..], Vec::as_slice))
    }

    /// `lambda_j(t)` for dimension `h`, `j` counted from 0.
    pub fn eval(&self, h: usize, j: usize, t: f64) -> f64 {
        self.layers(h).get(j).map_or(0.0, |l| eval_layer(l, t))
    }

    /// Checks nonnegativity, zero endpoints, increasing abscissae and layer
    /// dominance at every critical abscissa.
    pub fn validate(&self) -> Result<()> {
        for (&h, layers) in &self.layers {
            for (j, layer) in layers.iter().enumerate() {
                let bad = |msg: &str| Err(Error::Domain(format!("landscape h{h} layer {j}: {msg}")));
                if layer.len() < 2 {
                    return bad("needs at least two points");
                }
                if layer[0].1 != 0.0 || layer[layer.len() - 1].1 != 0.0 {
                    return bad("must start and end at 0");
                }
                if layer.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite() || v < 0.0) {
                    return bad("values must be finite and nonnegative");
                }
                if layer.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return bad("abscissae must be strictly increasing");
                }
                if j > 0 {
                    let upper = &layers[j - 1];
                    for &(t, _) in layer.iter().chain(upper.iter()) {
                        let slack = 1e-12 * (1.0 + t.abs());
                        if eval_layer(layer, t) > eval_layer(upper, t) + slack {
                            return bad("exceeds the layer above it");
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Value of a layer at `t` by linear interpolation (0 outside the support).
pub fn eval_layer(layer: &[(f64, f64)], t: f64) -> f64 {
    if layer.is_empty() || t <= layer[0].0 || t >= layer[layer.len() - 1].0 {
        return 0.0;
    }
    let k = layer.partition_point(|&(x, _)| x <= t);
    let (t0, v0) = layer[k - 1];
    if t == t0 {
        return v0;
    }
    let (t1, v1) = layer[k];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

// Max segment tree over interval deaths; removed slots hold -inf.
struct DeathTree {
    size: usize,
    t: Vec<f64>,
}

impl DeathTree {
    fn new(values: impl ExactSizeIterator<Item = f64>) -> Self {
        let size = values.len().next_power_of_two().max(1);
        let mut t = vec![f64::NEG_INFINITY; 2 * size];
        for (i, v) in values.enumerate() {
            t[size + i] = v;
        }
        for i in (1..size).rev() {
            t[i] = t[2 * i].max(t[2 * i + 1]);
        }
        DeathTree { size, t }
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut i = i + self.size;
        self.t[i] = v;
        while i > 1 {
            i /= 2;
            self.t[i] = self.t[2 * i].max(self.t[2 * i + 1]);
        }
    }

    fn alive(&self, i: usize) -> bool {
        self.t[self.size + i] > f64::NEG_INFINITY
    }

    /// First slot at or after `from` whose death exceeds `x`.
    fn first_above(&self, from: usize, x: f64) -> Option<usize> {
        self.descend(1, 0, self.size, from, x)
    }

    fn descend(&self, node: usize, lo: usize, hi: usize, from: usize, x: f64) -> Option<usize> {
        if hi <= from || self.t[node] <= x {
            return None;
        }
        if hi - lo == 1 {
            return Some(lo);
        }
        let mid = (lo + hi) / 2;
        self.descend(2 * node, lo, mid, from, x)
            .or_else(|| self.descend(2 * node + 1, mid, hi, from, x))
    }
}

// Breakpoints computed from nearly equal endpoints can round onto or just
// below the previous one; the later point wins.
fn push_point(layer: &mut Layer, p: (f64, f64)) {
    while layer.len() > 1 && layer[layer.len() - 1].0 >= p.0 {
        layer.pop();
    }
    if layer[layer.len() - 1].0 < p.0 {
        layer.push(p);
    }
}

/// Layers of the landscape of one list of finite intervals.
///
/// Sweep over tents sorted by (birth ascending, death descending); each
/// pass peels off the upper envelope of the remaining tents. The part of a
/// tent hidden below the envelope takes the tent's own slot, which keeps
/// the order, so the next tent rising above the current one is a single
/// segment-tree query.
pub fn layers_from_intervals(intervals: &[(f64, f64)]) -> Vec<Layer> {
    let mut items: Vec<(f64, f64)> = intervals.iter().copied().filter(|(b, d)| d > b).collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let n = items.len();
    let mut tree = DeathTree::new(items.iter().map(|&(_, d)| d));
    let mut layers = Vec::new();
    let mut head = 0;
    loop {
        while head < n && !tree.alive(head) {
            head += 1;
        }
        if head == n {
            break;
        }
        let (b, mut d) = items[head];
        tree.set(head, f64::NEG_INFINITY);
        let mut layer = vec![(b, 0.0)];
        push_point(&mut layer, ((b + d) / 2.0, (d - b) / 2.0));
        let mut pos = head + 1;
        while let Some(k) = tree.first_above(pos, d) {
            let (b2, d2) = items[k];
            pos = k + 1;
            if b2 > d {
                push_point(&mut layer, (d, 0.0));
            }
            if b2 >= d {
                push_point(&mut layer, (b2, 0.0));
                tree.set(k, f64::NEG_INFINITY);
            } else {
                push_point(&mut layer, ((b2 + d) / 2.0, (d - b2) / 2.0));
                // The hidden part (b2, d) goes back at slot k, after any
                // later tents of the same birth that outlive it.
                let mut free = k;
                let mut j = k + 1;
                while j < n && items[j].0 == b2 {
                    if tree.alive(j) {
                        if items[j].1 <= d {
                            break;
                        }
                        items[free] = items[j];
                        tree.set(free, items[j].1);
                        free = j;
                    }
                    j += 1;
                }
                items[free] = (b2, d);
                tree.set(free, d);
            }
            push_point(&mut layer, ((b2 + d2) / 2.0, (d2 - b2) / 2.0));
            d = d2;
        }
        push_point(&mut layer, (d, 0.0));
        layers.push(layer);
    }
    layers
}

/// Landscape of `d` in dimensions `0..=h_max`. Essential classes are not
/// part of the finite intervals and therefore do not contribute.
pub fn landscape_from_diagram(d: &PersistenceDiagram, h_max: usize) -> PersistenceLandscape {
    let mut l = PersistenceLandscape::zero(h_max);
    let mut intervals = BTreeMap::new();
    for h in 0..=h_max {
        let iv = d.intervals(h).to_vec();
        l.layers.insert(h, layers_from_intervals(&iv));
        intervals.insert(h, iv);
    }
    l.intervals = Some(intervals);
    l
}

fn merged_abscissae<'a>(layers: impl Iterator<Item = &'a Layer>) -> Vec<f64> {
    let mut ts: Vec<f64> = layers.flat_map(|l| l.iter().map(|&(t, _)| t)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Pointwise mean of the inputs, layer by layer. Missing layers count as
/// the zero function.
pub fn landscape_average(ls: &[PersistenceLandscape]) -> Result<PersistenceLandscape> {
    let Some(first) = ls.first() else {
        return Err(Error::Domain("cannot average an empty list of landscapes".into()));
    };
    for l in ls {
        if l.provenance != first.provenance {
            return Err(Error::Provenance(format!(
                "cannot average landscapes with provenance {:?} and {:?}",
                first.provenance, l.provenance
            )));
        }
    }
    let n = ls.len() as f64;
    let mut out = PersistenceLandscape::zero(first.h_max());
    out.provenance = first.provenance.clone();
    out.intervals = None;
    let dims: Vec<usize> = {
        let mut v: Vec<usize> = ls.iter().flat_map(|l| l.layers.keys().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for h in dims {
        let depth = ls.iter().map(|l| l.layers(h).len()).max().unwrap_or(0);
        let mut layers = Vec::with_capacity(depth);
        for j in 0..depth {
            let ts = merged_abscissae(ls.iter().filter_map(|l| l.layers(h).get(j)));
            let layer: Layer = ts
                .iter()
                .map(|&t| {
                    let s: f64 = ls.iter().map(|l| l.eval(h, j, t)).sum();
                    (t, s / n)
                })
                .collect();
            layers.push(layer);
        }
        out.layers.insert(h, layers);
    }
    Ok(out)
}

// Integral of |f|^p over one linear segment (p finite), splitting at a sign
// change.
fn segment_integral(t0: f64, v0: f64, t1: f64, v1: f64, norm: Norm) -> f64 {
    let dt = t1 - t0;
    if dt <= 0.0 {
        return 0.0;
    }
    if v0 * v1 < 0.0 {
        let tc = t0 + dt * v0.abs() / (v0.abs() + v1.abs());
        return segment_integral(t0, v0, tc, 0.0, norm) + segment_integral(tc, 0.0, t1, v1, norm);
    }
    let (a, b) = (v0.abs(), v1.abs());
    match norm {
        Norm::L1 => dt * (a + b) / 2.0,
        Norm::L2 => dt * (a * a + a * b + b * b) / 3.0,
        Norm::Inf => unreachable!("sup norm has no integral"),
    }
}

/// `||f||_p^p` for finite p, `sup |f|` otherwise, on a piecewise-linear
/// function given by its points.
fn layer_power(points: &[(f64, f64)], norm: Norm) -> f64 {
    match norm {
        Norm::Inf => points.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max),
        _ => points
            .windows(2)
            .map(|w| segment_integral(w[0].0, w[0].1, w[1].0, w[1].1, norm))
            .sum(),
    }
}

fn combine(powers: impl Iterator<Item = f64>, norm: Norm) -> f64 {
    match norm {
        Norm::L1 => powers.sum(),
        Norm::L2 => powers.sum::<f64>().sqrt(),
        Norm::Inf => powers.fold(0.0, f64::max),
    }
}

/// L^p norm of the dimension-`h` part: the sum of layer norms for p = 1,
/// the root of the summed squared layer norms for p = 2, and the largest
/// value for p = inf.
pub fn landscape_norm(l: &PersistenceLandscape, h: usize, norm: Norm) -> f64 {
    combine(l.layers(h).iter().map(|layer| layer_power(layer, norm)), norm)
}

/// Layerwise difference `a_j - b_j` sampled at the union of critical points,
/// which is exact for piecewise-linear functions.
fn difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let ts = merged_abscissae([a.to_vec(), b.to_vec()].iter());
    ts.into_iter().map(|t| (t, eval_layer(a, t) - eval_layer(b, t))).collect()
}

/// `||a - b||_p` in dimension `h`.
pub fn landscape_distance(a: &PersistenceLandscape, b: &PersistenceLandscape, h: usize, norm: Norm) -> f64 {
    let (la, lb) = (a.layers(h), b.layers(h));
    let depth = la.len().max(lb.len());
    let empty: Layer = Vec::new();
    combine(
        (0..depth).map(|j| {
            let x = la.get(j).unwrap_or(&empty);
            let y = lb.get(j).unwrap_or(&empty);
            layer_power(&difference(x, y), norm)
        }),
        norm,
    )
}

fn snap(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("grid step must be positive, got {step}")));
    }
    Ok(())
}

// Endpoints snapped to the grid; intervals that collapse are dropped.
fn round_intervals(iv: &[(f64, f64)], step: f64) -> Vec<(f64, f64)> {
    iv.iter()
        .map(|&(b, d)| (snap(b, step), snap(d, step)))
        .filter(|(b, d)| d > b)
        .collect()
}

/// Landscape of `d` after rounding every interval endpoint to the nearest
/// multiple of `step`. Same result as [`landscape_grid_round`] applied to
/// the exact landscape, without building the exact one first.
pub fn landscape_from_diagram_on_grid(d: &PersistenceDiagram, h_max: usize, step: f64) -> Result<PersistenceLandscape> {
    check_step(step)?;
    let mut l = PersistenceLandscape::zero(h_max);
    let mut intervals = BTreeMap::new();
    for h in 0..=h_max {
        let r = round_intervals(d.intervals(h), step);
        l.layers.insert(h, layers_from_intervals(&r));
        intervals.insert(h, r);
    }
    l.intervals = Some(intervals);
    l.grid = Some(Grid { origin: 0.0, step });
    Ok(l)
}

/// Rounds the source intervals to the nearest multiple of `step` and
/// rebuilds. Landscapes without known source intervals (averages) have
/// their critical abscissae snapped directly, keeping the largest value
/// when points collide.
pub fn landscape_grid_round(l: &PersistenceLandscape, step: f64) -> Result<PersistenceLandscape> {
    check_step(step)?;
    let mut out = l.clone();
    out.grid = Some(Grid { origin: 0.0, step });
    match &l.intervals {
        Some(map) => {
            let mut rounded = BTreeMap::new();
            for (&h, iv) in map {
                let r = round_intervals(iv, step);
                out.layers.insert(h, layers_from_intervals(&r));
                rounded.insert(h, r);
            }
            out.intervals = Some(rounded);
        }
        None => {
            for layers in out.layers.values_mut() {
                for layer in layers.iter_mut() {
                    let mut snapped: Vec<(f64, f64)> = Vec::with_capacity(layer.len());
                    for &(t, v) in layer.iter() {
                        let t = snap(t, step);
                        match snapped.last_mut() {
                            Some(last) if last.0 == t => last.1 = last.1.max(v),
                            _ => snapped.push((t, v)),
                        }
                    }
                    if let Some(f) = snapped.first_mut() {
                        f.1 = 0.0;
                    }
                    if let Some(l) = snapped.last_mut() {
                        l.1 = 0.0;
                    }
                    *layer = snapped;
                }
                layers.retain(|layer| layer.len() >= 2 && layer.iter().any(|&(_, v)| v > 0.0));
            }
        }
    }
    Ok(out)
}

/// A non-empty list of landscapes with identical provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSet {
    landscapes: Vec<PersistenceLandscape>,
}

impl LandscapeSet {
    pub fn new(landscapes: Vec<PersistenceLandscape>) -> Result<Self> {
        let Some(first) = landscapes.first() else {
            return Err(Error::Domain("a landscape set must not be empty".into()));
        };
        if let Some(l) = landscapes.iter().find(|l| l.provenance != first.provenance) {
            return Err(Error::Provenance(format!(
                "landscape set mixes provenance {:?} and {:?}",
                first.provenance, l.provenance
            )));
        }
        Ok(LandscapeSet { landscapes })
    }

    pub fn landscapes(&self) -> &[PersistenceLandscape] {
        &self.landscapes
    }

    pub fn len(&self) -> usize {
        self.landscapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landscapes.is_empty()
    }

    pub fn provenance(&self) -> &LandscapeProvenance {
        &self.landscapes[0].provenance
    }

    /// Landscapes keyed by their `source` id.
    pub fn by_source(&self) -> HashMap<&str, &PersistenceLandscape> {
        self.landscapes
            .iter()
            .filter_map(|l| l.source.as_deref().map(|s| (s, l)))
            .collect()
    }
}

mod string_keys {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(m: &BTreeMap<usize, T>, s: S) -> Result<S::Ok, S::Error> {
        let sm: BTreeMap<String, &T> = m.iter().map(|(k, v)| (k.to_string(), v)).collect();
        sm.serialize(s)
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, T>, D::Error> {
        let sm = BTreeMap::<String, T>::deserialize(d)?;
        sm.into_iter()
            .map(|(k, v)| {
                k.parse::<usize>()
                    .map(|k| (k, v))
                    .map_err(|_| serde::de::Error::custom(format!("bad dimension key `{k}`")))
            })
            .collect()
    }
}

mod opt_string_keys {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: serde::Serialize, S: Serializer>(
        m: &Option<BTreeMap<usize, T>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::string_keys::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<BTreeMap<usize, T>>, D::Error> {
        let sm = Option::<BTreeMap<String, T>>::deserialize(d)?;
        sm.map(|sm| {
            sm.into_iter()
                .map(|(k, v)| {
                    k.parse::<usize>()
                        .map(|k| (k, v))
                        .map_err(|_| serde::de::Error::custom(format!("bad dimension key `{k}`")))
                })
                .collect()
        })
        .transpose()
    }
}
