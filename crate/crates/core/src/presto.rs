//! Distances, variances and sensitivities over landscapes, multiverse
//! metric spaces, and the projection-loss checks.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    is_json, load_embedding, to_json, Artifact, Embedding, EmbeddingFormat, LabeledMatrix,
    MultiverseManifest,
};
use crate::landscape::{
    landscape_average, landscape_distance, landscape_from_diagram, landscape_from_diagram_on_grid,
    landscape_norm, LandscapeProvenance, LandscapeSet, Norm, PersistenceLandscape,
};
use crate::preprocess::{approx_diameter, normalize, project, ProjectionConfig, DEFAULT_EXACT_THRESHOLD, DEFAULT_RESTARTS};
use crate::topology::{
    alpha_complex, distance_matrix, persistence, rips_complex, ComplexKind, FilteredComplex,
    PersistenceDiagram,
};

/// Largest latent dimension for which the full-dimensional reference
/// topology is computed.
pub const REFERENCE_MAX_DIM: usize = 16;
/// Largest sample count for the full-dimensional reference topology.
pub const REFERENCE_MAX_POINTS: usize = 512;

/// Slack allowed when checking the projection bounds.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrestoConfig {
    pub p: Norm,
    pub h_max: usize,
    pub normalize: bool,
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub complex: ComplexKind,
    /// Turn essential classes into bars ending at the largest filtration
    /// value instead of dropping them.
    #[serde(default)]
    pub cap_essential: bool,
    #[serde(default)]
    pub grid_step: Option<f64>,
}

impl PrestoConfig {
    pub fn new(projection: ProjectionConfig) -> Self {
        PrestoConfig {
            p: Norm::L2,
            h_max: 2,
            normalize: false,
            projection,
            complex: ComplexKind::Alpha,
            cap_essential: false,
            grid_step: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.complex == ComplexKind::Alpha && self.projection.k > 3 {
            return Err(Error::UnsupportedDimension(self.projection.k));
        }
        if self.h_max > 2 {
            return Err(Error::Domain(format!("h must be 0, 1 or 2, got {}", self.h_max)));
        }
        if let Some(s) = self.grid_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Domain(format!("grid step must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn projector_label(&self) -> String {
        let c = &self.projection;
        format!("{}:k={}:n={}:seed={}", c.method, c.k, c.n_projections, c.seed)
    }

    /// Provenance stamped on every landscape this configuration produces.
    pub fn provenance(&self) -> LandscapeProvenance {
        LandscapeProvenance {
            h_max: self.h_max,
            normalized: Some(self.normalize),
            projector: Some(self.projector_label()),
            complex: Some(self.complex.to_string()),
        }
    }
}

/// Wall-clock milliseconds per pipeline stage, summed over universes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub load_ms: f64,
    pub preprocess_ms: f64,
    pub topology_ms: f64,
    pub landscape_ms: f64,
    pub distance_ms: f64,
}

impl StageTimes {
    fn add(&mut self, o: &StageTimes) {
        self.load_ms += o.load_ms;
        self.preprocess_ms += o.preprocess_ms;
        self.topology_ms += o.topology_ms;
        self.landscape_ms += o.landscape_ms;
        self.distance_ms += o.distance_ms;
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Filtered complex of a point cloud.
pub fn cloud_complex(points: &DMatrix<f64>, kind: ComplexKind, h_max: usize) -> Result<FilteredComplex> {
    match kind {
        ComplexKind::Alpha => alpha_complex(points),
        ComplexKind::Rips => rips_complex(&distance_matrix(points), h_max, None),
    }
}

/// Persistence diagram of a point cloud, with essential classes capped at
/// the largest filtration value when `cap_essential` is set.
pub fn cloud_diagram(
    points: &DMatrix<f64>,
    kind: ComplexKind,
    h_max: usize,
    cap_essential: bool,
) -> Result<PersistenceDiagram> {
    let c = cloud_complex(points, kind, h_max)?;
    let d = persistence(&c, h_max);
    if cap_essential {
        let top = c.simplices().last().map_or(0.0, |s| s.value);
        Ok(d.with_capped_essentials(top))
    } else {
        Ok(d)
    }
}

fn cloud_landscape(points: &DMatrix<f64>, cfg: &PrestoConfig, times: &mut StageTimes) -> Result<PersistenceLandscape> {
    let t = Instant::now();
    let d = cloud_diagram(points, cfg.complex, cfg.h_max, cfg.cap_essential)?;
    times.topology_ms += ms_since(t);
    let t = Instant::now();
    let l = match cfg.grid_step {
        Some(step) => landscape_from_diagram_on_grid(&d, cfg.h_max, step)?,
        None => landscape_from_diagram(&d, cfg.h_max),
    };
    times.landscape_ms += ms_since(t);
    Ok(l)
}

/// Full pipeline for one embedding: optional normalization, projection,
/// persistence and landscape. Several random projections are averaged.
pub fn embedding_landscape(e: &Embedding, cfg: &PrestoConfig) -> Result<PersistenceLandscape> {
    embedding_landscape_timed(e, cfg).map(|(l, _)| l)
}

pub fn embedding_landscape_timed(e: &Embedding, cfg: &PrestoConfig) -> Result<(PersistenceLandscape, StageTimes)> {
    cfg.validate()?;
    let mut times = StageTimes::default();
    let t = Instant::now();
    let normalized;
    let e = if cfg.normalize && !e.normalized {
        let diam = approx_diameter(e, DEFAULT_RESTARTS, DEFAULT_EXACT_THRESHOLD)?;
        normalized = normalize(e, diam)?;
        &normalized
    } else {
        e
    };
    let set = project(e, &cfg.projection)?;
    times.preprocess_ms += ms_since(t);
    let mut ls = Vec::with_capacity(set.projections.len());
    for p in &set.projections {
        let mut l = cloud_landscape(p, cfg, &mut times)?;
        l.provenance = cfg.provenance();
        ls.push(l);
    }
    let t = Instant::now();
    let mut l = if ls.len() == 1 {
        ls.pop().expect("one landscape")
    } else {
        landscape_average(&ls)?
    };
    times.landscape_ms += ms_since(t);
    l.source = Some(e.source_id.clone());
    l.provenance = cfg.provenance();
    Ok((l, times))
}

/// Sum over dimensions `0..=h_max` of the layerwise landscape distance,
/// without any provenance check.
pub fn summed_distance(a: &PersistenceLandscape, b: &PersistenceLandscape, h_max: usize, p: Norm) -> f64 {
    (0..=h_max).map(|x| landscape_distance(a, b, x, p)).sum()
}

fn same_provenance(a: &PersistenceLandscape, b: &PersistenceLandscape) -> Result<()> {
    if a.provenance != b.provenance {
        return Err(Error::Provenance(format!(
            "landscapes were produced differently: {:?} vs {:?}",
            a.provenance, b.provenance
        )));
    }
    Ok(())
}

/// PRESTO distance: summed landscape distances over dimensions `0..=h`.
pub fn presto_distance(a: &PersistenceLandscape, b: &PersistenceLandscape, cfg: &PrestoConfig) -> Result<f64> {
    same_provenance(a, b)?;
    Ok(summed_distance(a, b, cfg.h_max, cfg.p))
}

/// PRESTO distance over the dimensions both landscapes were computed for.
pub fn landscape_pair_distance(a: &PersistenceLandscape, b: &PersistenceLandscape, p: Norm) -> Result<f64> {
    same_provenance(a, b)?;
    Ok(summed_distance(a, b, a.h_max(), p))
}

/// Per-dimension norms `[x]` of one landscape.
pub fn dimension_norms(l: &PersistenceLandscape, h_max: usize, p: Norm) -> Vec<f64> {
    (0..=h_max).map(|x| landscape_norm(l, x, p)).collect()
}

/// PRESTO variance from norms given as `norms[i][x]` (landscape `i`,
/// dimension `x`): `(1/N) sum_x sum_i (norm - mean_x)^2`.
pub fn variance_from_norms(norms: &[Vec<f64>]) -> Result<f64> {
    let n = norms.len();
    if n == 0 {
        return Err(Error::Domain("variance of an empty landscape set".into()));
    }
    let dims = norms[0].len();
    if norms.iter().any(|r| r.len() != dims) {
        return Err(Error::Domain("norm lists have different dimension counts".into()));
    }
    let mut total = 0.0;
    for x in 0..dims {
        let mean = norms.iter().map(|r| r[x]).sum::<f64>() / n as f64;
        total += norms.iter().map(|r| (r[x] - mean).powi(2)).sum::<f64>();
    }
    Ok(total / n as f64)
}

pub fn presto_variance(ls: &LandscapeSet, cfg: &PrestoConfig) -> Result<f64> {
    let norms: Vec<Vec<f64>> = ls
        .landscapes()
        .iter()
        .map(|l| dimension_norms(l, cfg.h_max, cfg.p))
        .collect();
    variance_from_norms(&norms)
}

/// Universes agreeing on every parameter except one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    /// Values of the fixed parameters.
    pub key: IndexMap<String, String>,
    pub members: Vec<String>,
}

/// Classes of the relation "equal in every parameter but `dim_name`", in
/// order of first appearance.
pub fn equivalence_classes(m: &MultiverseManifest, dim_name: &str) -> Result<Vec<EquivalenceClass>> {
    let names = m.param_names();
    if !names.iter().any(|n| n == dim_name) {
        return Err(Error::Domain(format!(
            "parameter `{dim_name}` is not in the manifest (have {names:?})"
        )));
    }
    let mut classes: IndexMap<Vec<String>, EquivalenceClass> = IndexMap::new();
    for u in &m.universes {
        let key: IndexMap<String, String> = names
            .iter()
            .filter(|n| *n != dim_name)
            .map(|n| (n.clone(), u.param_key(n).unwrap_or_default()))
            .collect();
        let k: Vec<String> = key.values().cloned().collect();
        classes
            .entry(k)
            .or_insert_with(|| EquivalenceClass {
                key,
                members: Vec::new(),
            })
            .members
            .push(u.id.clone());
    }
    Ok(classes.into_values().collect())
}

fn class_variance(
    class: &EquivalenceClass,
    landscapes: &HashMap<String, PersistenceLandscape>,
    cfg: &PrestoConfig,
) -> Result<f64> {
    if class.members.is_empty() {
        return Err(Error::Domain("equivalence class has no members".into()));
    }
    let ls = class
        .members
        .iter()
        .map(|id| {
            landscapes
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Domain(format!("no landscape for universe `{id}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    presto_variance(&LandscapeSet::new(ls)?, cfg)
}

/// Individual sensitivity of one class: the root of its variance.
pub fn presto_sensitivity_individual(
    class: &EquivalenceClass,
    landscapes: &HashMap<String, PersistenceLandscape>,
    cfg: &PrestoConfig,
) -> Result<f64> {
    Ok(class_variance(class, landscapes, cfg)?.sqrt())
}

fn mean_class_variance(
    m: &MultiverseManifest,
    landscapes: &HashMap<String, PersistenceLandscape>,
    dim_name: &str,
    cfg: &PrestoConfig,
) -> Result<f64> {
    let classes = equivalence_classes(m, dim_name)?;
    let mut sum = 0.0;
    for c in &classes {
        sum += class_variance(c, landscapes, cfg)?;
    }
    Ok(sum / classes.len() as f64)
}

/// Local sensitivity along one parameter: root of the mean class variance.
pub fn presto_sensitivity_local(
    m: &MultiverseManifest,
    landscapes: &HashMap<String, PersistenceLandscape>,
    dim_name: &str,
    cfg: &PrestoConfig,
) -> Result<f64> {
    Ok(mean_class_variance(m, landscapes, dim_name, cfg)?.sqrt())
}

/// Global sensitivity: root of the mean over parameters of the mean class
/// variance.
pub fn presto_sensitivity_global(
    m: &MultiverseManifest,
    landscapes: &HashMap<String, PersistenceLandscape>,
    cfg: &PrestoConfig,
) -> Result<f64> {
    let names = m.param_names();
    if names.is_empty() {
        return Err(Error::Domain("manifest has no parameters".into()));
    }
    let mut sum = 0.0;
    for n in &names {
        sum += mean_class_variance(m, landscapes, n, cfg)?;
    }
    Ok((sum / names.len() as f64).sqrt())
}

/// Universes with their pairwise topological distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiverseMetricSpace {
    pub ids: Vec<String>,
    #[serde(with = "matrix_rows")]
    pub dist: DMatrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PrestoConfig>,
}

impl MultiverseMetricSpace {
    /// Checks shape, zero diagonal, nonnegativity and symmetry (1e-12).
    pub fn new(ids: Vec<String>, dist: DMatrix<f64>, config: Option<PrestoConfig>) -> Result<Self> {
        let m = ids.len();
        if dist.nrows() != m || dist.ncols() != m {
            return Err(Error::Domain(format!(
                "{} ids for a {}x{} matrix",
                m,
                dist.nrows(),
                dist.ncols()
            )));
        }
        for i in 0..m {
            if dist[(i, i)] != 0.0 {
                return Err(Error::Domain(format!("diagonal entry for `{}` is nonzero", ids[i])));
            }
            for j in 0..m {
                let v = dist[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Domain(format!("distance ({i}, {j}) = {v} is invalid")));
                }
                if (v - dist[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Domain(format!("distance matrix is asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(MultiverseMetricSpace { ids, dist, config })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Largest violation of the triangle inequality over all triples.
    pub fn triangle_excess(&self) -> f64 {
        let m = self.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    worst = worst.max(self.dist[(i, j)] - self.dist[(i, k)] - self.dist[(k, j)]);
                }
            }
        }
        worst
    }

    pub fn to_labeled(&self) -> LabeledMatrix {
        LabeledMatrix {
            ids: self.ids.clone(),
            values: (0..self.len())
                .map(|i| (0..self.len()).map(|j| self.dist[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn from_labeled(m: &LabeledMatrix) -> Result<Self> {
        let n = m.ids.len();
        let dist = DMatrix::from_fn(n, n, |i, j| m.values[i][j]);
        Self::new(m.ids.clone(), dist, None)
    }

    /// Reads the CSV or JSON form, chosen by extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if is_json(path) {
            let mms: MultiverseMetricSpace = crate::ingest::load_json(path)?;
            Self::new(mms.ids, mms.dist, mms.config)
        } else {
            Self::from_labeled(&crate::ingest::load_matrix_csv(path)?)
        }
    }
}

impl Artifact for MultiverseMetricSpace {
    fn render(&self, path: &Path) -> Result<String> {
        if is_json(path) {
            return to_json(self);
        }
        let mut out = String::new();
        if let Some(c) = &self.config {
            out.push_str("# config: ");
            out.push_str(&serde_json::to_string(c).map_err(|e| Error::Format(e.to_string()))?);
            out.push('\n');
        }
        out.push_str(&self.to_labeled().to_csv());
        Ok(out)
    }
}

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("distance matrix must be square"));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

/// Pairwise distance matrix over landscapes, filled in parallel over the
/// upper triangle.
pub fn mms_from_landscapes(
    ids: Vec<String>,
    landscapes: &[PersistenceLandscape],
    cfg: &PrestoConfig,
) -> Result<MultiverseMetricSpace> {
    let m = landscapes.len();
    for l in landscapes.iter().skip(1) {
        same_provenance(&landscapes[0], l)?;
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| summed_distance(&landscapes[i], &landscapes[j], cfg.h_max, cfg.p))
        .collect();
    let mut dist = DMatrix::zeros(m, m);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        dist[(i, j)] = v;
        dist[(j, i)] = v;
    }
    MultiverseMetricSpace::new(ids, dist, Some(cfg.clone()))
}

/// Result of [`build_mms`]: the metric space plus the landscapes it was
/// computed from, in manifest order.
#[derive(Debug, Clone)]
pub struct MmsBuild {
    pub mms: MultiverseMetricSpace,
    pub landscapes: Vec<PersistenceLandscape>,
    pub times: StageTimes,
}

/// Landscape of every universe, computed once per id, in parallel.
pub fn universe_landscapes(m: &MultiverseManifest, cfg: &PrestoConfig) -> Result<(Vec<PersistenceLandscape>, StageTimes)> {
    m.validate()?;
    cfg.validate()?;
    let results: Vec<Result<(PersistenceLandscape, StageTimes)>> = m
        .universes
        .par_iter()
        .map(|u| {
            let t = Instant::now();
            let path = &u.embedding_path;
            let mut e = load_embedding(path, EmbeddingFormat::from_path(path)).map_err(|e| e.in_universe(&u.id))?;
            e.source_id = u.id.clone();
            let load_ms = ms_since(t);
            let (l, mut times) = embedding_landscape_timed(&e, cfg).map_err(|e| e.in_universe(&u.id))?;
            times.load_ms += load_ms;
            Ok((l, times))
        })
        .collect();
    let mut total = StageTimes::default();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        let (l, t) = r?;
        total.add(&t);
        out.push(l);
    }
    Ok((out, total))
}

/// Loads every embedding, runs the pipeline per universe and fills the
/// pairwise PRESTO distances.
pub fn build_mms(m: &MultiverseManifest, cfg: &PrestoConfig) -> Result<MmsBuild> {
    let (landscapes, mut times) = universe_landscapes(m, cfg)?;
    let t = Instant::now();
    let mms = mms_from_landscapes(m.ids(), &landscapes, cfg)?;
    times.distance_ms += ms_since(t);
    Ok(MmsBuild {
        mms,
        landscapes,
        times,
    })
}

/// Configuration for the full-dimensional reference topology and its
/// projected counterpart: Rips on exact distances in both cases, so the
/// two landscapes live in the same space.
pub fn loss_config(cfg: &PrestoConfig) -> PrestoConfig {
    PrestoConfig {
        complex: ComplexKind::Rips,
        ..cfg.clone()
    }
}

/// Landscape of the unprojected embedding (Rips on exact distances).
/// Refused beyond `REFERENCE_MAX_DIM` dimensions or `REFERENCE_MAX_POINTS`
/// points.
pub fn reference_landscape(e: &Embedding, cfg: &PrestoConfig) -> Result<PersistenceLandscape> {
    if e.d() > REFERENCE_MAX_DIM || e.n() > REFERENCE_MAX_POINTS {
        return Err(Error::NotComputable(format!(
            "reference topology needs d <= {REFERENCE_MAX_DIM} and n <= {REFERENCE_MAX_POINTS}, got d = {}, n = {}",
            e.d(),
            e.n()
        )));
    }
    let cfg = loss_config(cfg);
    let normalized;
    let e = if cfg.normalize && !e.normalized {
        normalized = normalize(e, approx_diameter(e, DEFAULT_RESTARTS, DEFAULT_EXACT_THRESHOLD)?)?;
        &normalized
    } else {
        e
    };
    let mut times = StageTimes::default();
    let mut l = cloud_landscape(&e.data, &cfg, &mut times)?;
    l.source = Some(e.source_id.clone());
    l.provenance = LandscapeProvenance {
        projector: Some("identity".into()),
        ..cfg.provenance()
    };
    Ok(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologicalLossReport {
    pub ids: Vec<String>,
    pub per_universe_loss: Vec<f64>,
    /// The maximum of `per_universe_loss`.
    pub loss: f64,
    pub projector: String,
}

/// `max_i d_T(E_i, P_i)` over parallel lists of original and projected
/// landscapes.
pub fn topological_loss(
    originals: &LandscapeSet,
    projecteds: &LandscapeSet,
    cfg: &PrestoConfig,
) -> Result<TopologicalLossReport> {
    if originals.len() != projecteds.len() {
        return Err(Error::Domain(format!(
            "{} original landscapes but {} projected ones",
            originals.len(),
            projecteds.len()
        )));
    }
    let (po, pp) = (originals.provenance(), projecteds.provenance());
    if po.h_max != pp.h_max || po.complex != pp.complex || po.normalized != pp.normalized {
        return Err(Error::Provenance(format!(
            "original and projected landscapes are not comparable: {po:?} vs {pp:?}"
        )));
    }
    let per: Vec<f64> = originals
        .landscapes()
        .iter()
        .zip(projecteds.landscapes())
        .map(|(a, b)| summed_distance(a, b, cfg.h_max, cfg.p))
        .collect();
    let ids = originals
        .landscapes()
        .iter()
        .enumerate()
        .map(|(i, l)| l.source.clone().unwrap_or_else(|| i.to_string()))
        .collect();
    Ok(TopologicalLossReport {
        ids,
        loss: per.iter().copied().fold(0.0, f64::max),
        per_universe_loss: per,
        projector: pp.projector.clone().unwrap_or_default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub a: String,
    pub b: String,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPreservationReport {
    pub pairs_checked: usize,
    /// Smallest `mms + 2 loss - pmms` over all pairs.
    pub min_slack: f64,
    pub violations: Vec<PairViolation>,
}

impl MetricPreservationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `pmms[i,j] <= mms[i,j] + 2 loss` for every pair.
pub fn check_metric_preservation(
    mms: &MultiverseMetricSpace,
    pmms: &MultiverseMetricSpace,
    loss: f64,
) -> Result<MetricPreservationReport> {
    if mms.ids != pmms.ids {
        return Err(Error::Domain("metric spaces list different universes".into()));
    }
    let m = mms.len();
    let mut report = MetricPreservationReport {
        pairs_checked: 0,
        min_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    for i in 0..m {
        for j in (i + 1)..m {
            let slack = mms.dist[(i, j)] + 2.0 * loss - pmms.dist[(i, j)];
            report.pairs_checked += 1;
            report.min_slack = report.min_slack.min(slack);
            if slack < -BOUND_TOL {
                report.violations.push(PairViolation {
                    a: mms.ids[i].clone(),
                    b: mms.ids[j].clone(),
                    excess: -slack,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBoundReport {
    pub pv_original: f64,
    pub pv_projected: f64,
    pub loss: f64,
    /// Universes (by index) whose norm leaves `[orig - loss, orig + loss]`
    /// in some dimension.
    pub sandwich_violations: Vec<usize>,
    /// Smallest `loss - |orig - proj|` over universes and dimensions.
    pub sandwich_min_slack: f64,
    /// Summed absolute deviations of the original norms, per dimension.
    pub sigma_abs: Vec<f64>,
    /// `sum_x (4 loss / N) sigma_x + (2 loss)^2`.
    pub aggregate_bound: f64,
    pub aggregate_holds: bool,
    /// The same with the last term divided by `N`, as sometimes written;
    /// informational, it can fail for N > 1.
    pub aggregate_bound_literal: f64,
    pub aggregate_literal_holds: bool,
}

impl VarianceBoundReport {
    pub fn passed(&self) -> bool {
        self.sandwich_violations.is_empty() && self.aggregate_holds
    }
}

/// Checks how far norms and variance can move under projection.
/// `orig_norms[i][x]` and `proj_norms[i][x]` are per-universe,
/// per-dimension norms. Each projected norm must stay within `loss` of its
/// original; the variance change is compared against a bound built from
/// absolute deviations.
pub fn check_variance_bound(orig_norms: &[Vec<f64>], proj_norms: &[Vec<f64>], loss: f64) -> Result<VarianceBoundReport> {
    if orig_norms.len() != proj_norms.len() {
        return Err(Error::Domain("norm lists have different lengths".into()));
    }
    let pv_o = variance_from_norms(orig_norms)?;
    let pv_p = variance_from_norms(proj_norms)?;
    let n = orig_norms.len();
    let dims = orig_norms[0].len();
    let mut violations = Vec::new();
    let mut min_slack = f64::INFINITY;
    for (i, (o, p)) in orig_norms.iter().zip(proj_norms).enumerate() {
        let mut bad = false;
        for (a, b) in o.iter().zip(p) {
            let slack = loss - (a - b).abs();
            min_slack = min_slack.min(slack);
            bad |= slack < -BOUND_TOL;
        }
        if bad {
            violations.push(i);
        }
    }
    let sigma: Vec<f64> = (0..dims)
        .map(|x| {
            let mean = orig_norms.iter().map(|r| r[x]).sum::<f64>() / n as f64;
            orig_norms.iter().map(|r| (r[x] - mean).abs()).sum()
        })
        .collect();
    let nf = n as f64;
    let first: f64 = sigma.iter().map(|s| 4.0 * loss / nf * s).sum();
    let bound = first + dims as f64 * (2.0 * loss).powi(2);
    let literal = first + dims as f64 * (2.0 * loss).powi(2) / nf;
    let change = (pv_o - pv_p).abs();
    Ok(VarianceBoundReport {
        pv_original: pv_o,
        pv_projected: pv_p,
        loss,
        sandwich_violations: violations,
        sandwich_min_slack: min_slack,
        sigma_abs: sigma,
        aggregate_bound: bound,
        aggregate_holds: change <= bound + BOUND_TOL,
        aggregate_bound_literal: literal,
        aggregate_literal_holds: change <= literal + BOUND_TOL,
    })
}
