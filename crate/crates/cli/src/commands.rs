//! Subcommand implementations. Each returns the one-line summary.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use presto::analysis::{
    cluster_universes, compare_mms, compress_search_space, detect_outliers, epsilon_from_quantile, mantel_test,
    CompressionMethod, DiagramMetric, OutlierMethod, Threshold,
};
use presto::ingest::{load_embedding, load_manifest, Artifact, EmbeddingFormat};
use presto::landscape::landscape_norm;
use presto::preprocess::ProjectionConfig;
use presto::presto::{
    build_mms, dimension_norms, embedding_landscape_timed, equivalence_classes, landscape_pair_distance,
    presto_sensitivity_global, presto_sensitivity_individual, presto_sensitivity_local, universe_landscapes,
    variance_from_norms, StageTimes,
};
use presto::topology::ComplexKind;
use presto::{Error, LandscapeSet, MultiverseMetricSpace, PersistenceLandscape, PrestoConfig, Result};
use serde_json::json;

use crate::args::*;
use crate::provenance::{payload, write_csv, write_json, RunProvenance};

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn load_landscape(path: &Path) -> Result<PersistenceLandscape> {
    let v = payload(read_json(path)?);
    let l: PersistenceLandscape =
        serde_json::from_value(v).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    l.validate()?;
    Ok(l)
}

/// Every `*.json` landscape in `dir`, by file name.
fn load_landscape_dir(dir: &Path, prov: &mut RunProvenance) -> Result<LandscapeSet> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("json")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Domain(format!("no landscape JSON files in {}", dir.display())));
    }
    let mut ls = Vec::with_capacity(paths.len());
    for p in &paths {
        prov.digest(p)?;
        let mut l = load_landscape(p)?;
        if l.source.is_none() {
            l.source = p.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        ls.push(l);
    }
    LandscapeSet::new(ls)
}

pub fn load_mms(path: &Path) -> Result<MultiverseMetricSpace> {
    let is_json = path.extension().is_some_and(|x| x.eq_ignore_ascii_case("json"));
    if !is_json {
        return MultiverseMetricSpace::load(path);
    }
    let v = payload(read_json(path)?);
    let m: MultiverseMetricSpace =
        serde_json::from_value(v).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    MultiverseMetricSpace::new(m.ids, m.dist, m.config)
}

fn add_stage_times(prov: &mut RunProvenance, t: &StageTimes) {
    prov.add_ms("load", t.load_ms);
    prov.add_ms("preprocess", t.preprocess_ms);
    prov.add_ms("topology", t.topology_ms);
    prov.add_ms("landscape", t.landscape_ms);
    prov.add_ms("distance", t.distance_ms);
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv"))
}

fn written(out: &Option<PathBuf>) -> String {
    out.as_ref().map_or(String::new(), |p| format!(" -> {}", p.display()))
}

impl PipelineArgs {
    pub fn config(&self) -> PrestoConfig {
        let projection = match self.projector {
            Projector::Pca => ProjectionConfig::pca(self.k),
            Projector::Gauss => ProjectionConfig::gaussian(self.k, self.n_projections, self.seed),
            Projector::Mmds => ProjectionConfig::mmds(self.k),
        };
        PrestoConfig {
            p: self.p,
            h_max: self.h,
            normalize: self.normalize,
            projection,
            complex: match self.complex {
                ComplexArg::Alpha => ComplexKind::Alpha,
                ComplexArg::Rips => ComplexKind::Rips,
            },
            cap_essential: self.cap_essential,
            grid_step: self.grid_step,
        }
    }
}

pub fn landscape(a: &LandscapeArgs) -> Result<String> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let mut prov = RunProvenance::new("landscape", a);
    prov.digest(&a.input)?;
    let format = match a.format {
        Some(FormatArg::Csv) => EmbeddingFormat::Csv,
        Some(FormatArg::Npy) => EmbeddingFormat::Npy,
        None => EmbeddingFormat::from_path(&a.input),
    };
    let e = prov.time("load", || load_embedding(&a.input, format))?;
    let (l, times) = embedding_landscape_timed(&e, &cfg)?;
    add_stage_times(&mut prov, &times);
    if let Some(out) = &a.out {
        write_json(out, &prov, &l)?;
    }
    let layers: Vec<String> = (0..=cfg.h_max).map(|h| l.layers(h).len().to_string()).collect();
    let norms: Vec<String> = (0..=cfg.h_max).map(|h| format!("{:.6}", landscape_norm(&l, h, cfg.p))).collect();
    Ok(format!(
        "landscape {}: {}x{}, layers per dimension [{}], L{} norms [{}]{}",
        e.source_id,
        e.n(),
        e.d(),
        layers.join(", "),
        cfg.p,
        norms.join(", "),
        written(&a.out)
    ))
}

pub fn distance(a: &DistanceArgs) -> Result<String> {
    let mut prov = RunProvenance::new("distance", a);
    prov.digest(&a.a)?;
    prov.digest(&a.b)?;
    let (la, lb) = prov.time("load", || Ok::<_, Error>((load_landscape(&a.a)?, load_landscape(&a.b)?)))?;
    let d = prov.time("distance", || landscape_pair_distance(&la, &lb, a.p))?;
    if let Some(out) = &a.out {
        write_json(out, &prov, &json!({ "distance": d, "p": a.p, "h_max": la.h_max() }))?;
    }
    Ok(format!("{d}{}", written(&a.out)))
}

pub fn variance(a: &VarianceArgs) -> Result<String> {
    let mut prov = RunProvenance::new("variance", a);
    let ls = load_landscape_dir(&a.landscapes, &mut prov)?;
    let h_max = ls.provenance().h_max;
    let norms: Vec<Vec<f64>> = ls.landscapes().iter().map(|l| dimension_norms(l, h_max, a.p)).collect();
    let pv = prov.time("variance", || variance_from_norms(&norms))?;
    if let Some(out) = &a.out {
        write_json(
            out,
            &prov,
            &json!({ "variance": pv, "p": a.p, "h_max": h_max, "landscapes": ls.len() }),
        )?;
    }
    Ok(format!(
        "variance {pv} over {} landscapes (h <= {h_max}, p = {}){}",
        ls.len(),
        a.p,
        written(&a.out)
    ))
}

pub fn sensitivity(a: &SensitivityArgs) -> Result<String> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let mut prov = RunProvenance::new("sensitivity", a);
    prov.digest(&a.manifest)?;
    let m = load_manifest(&a.manifest)?;
    for u in &m.universes {
        prov.digest(&u.embedding_path)?;
    }
    let (ls, times) = with_jobs(a.jobs, || universe_landscapes(&m, &cfg))??;
    add_stage_times(&mut prov, &times);
    let by_id: HashMap<String, PersistenceLandscape> = m.ids().into_iter().zip(ls).collect();
    let (summary, result) = if let Some(dim) = &a.dimension {
        let local = presto_sensitivity_local(&m, &by_id, dim, &cfg)?;
        let mut classes = Vec::new();
        for c in equivalence_classes(&m, dim)? {
            let individual = presto_sensitivity_individual(&c, &by_id, &cfg)?;
            classes.push(json!({ "key": c.key, "members": c.members, "individual": individual }));
        }
        let n = classes.len();
        (
            format!("local sensitivity along `{dim}`: {local} ({n} classes)"),
            json!({ "dimension": dim, "local": local, "classes": classes }),
        )
    } else {
        let global = presto_sensitivity_global(&m, &by_id, &cfg)?;
        let mut per = serde_json::Map::new();
        for name in m.param_names() {
            let v = presto_sensitivity_local(&m, &by_id, &name, &cfg)?;
            per.insert(name, json!(v));
        }
        (
            format!("global sensitivity: {global} over {} parameters", per.len()),
            json!({ "global": global, "local": per }),
        )
    };
    if let Some(out) = &a.out {
        write_json(out, &prov, &result)?;
    }
    Ok(format!("{summary}{}", written(&a.out)))
}

pub fn outliers(a: &OutliersArgs) -> Result<String> {
    let mut prov = RunProvenance::new("outliers", a);
    let ls = load_landscape_dir(&a.landscapes, &mut prov)?;
    let method = match a.method {
        OutlierArg::Zscore => OutlierMethod::Zscore,
        OutlierArg::Iqr => OutlierMethod::Iqr,
    };
    let threshold = a.threshold.unwrap_or(method.default_threshold());
    let report = prov.time("outliers", || {
        detect_outliers(&ls, ls.provenance().h_max, a.p, method, threshold)
    })?;
    if let Some(out) = &a.out {
        if is_csv(out) {
            let mut body = String::from("id,score,flagged\n");
            for (id, s) in &report.scores {
                body.push_str(&format!("{id},{s},{}\n", report.flagged.contains(id)));
            }
            write_csv(out, &prov, &body)?;
        } else {
            write_json(out, &prov, &report)?;
        }
    }
    Ok(format!(
        "{} of {} landscapes flagged [{}]{}",
        report.flagged.len(),
        report.scores.len(),
        report.flagged.join(", "),
        written(&a.out)
    ))
}

fn threshold(t: &ThresholdArgs) -> Threshold {
    match (t.epsilon, t.quantile) {
        (Some(e), _) => Threshold::Epsilon(e),
        (None, Some(q)) => Threshold::Quantile(q),
        (None, None) => unreachable!("clap requires one of --epsilon and --quantile"),
    }
}

pub fn cluster(a: &ClusterArgs) -> Result<String> {
    let mut prov = RunProvenance::new("cluster", a);
    prov.digest(&a.mms)?;
    let mms = prov.time("load", || load_mms(&a.mms))?;
    let eps = match threshold(&a.threshold) {
        Threshold::Epsilon(e) => e,
        Threshold::Quantile(q) => epsilon_from_quantile(&mms, q)?,
    };
    let r = prov.time("cluster", || cluster_universes(&mms, eps))?;
    if let Some(out) = &a.out {
        if is_csv(out) {
            let mut body = String::from("id,value\n");
            for (id, l) in &r.labels {
                body.push_str(&format!("{id},{l}\n"));
            }
            write_csv(out, &prov, &body)?;
        } else {
            write_json(out, &prov, &r)?;
        }
    }
    Ok(format!(
        "{} clusters among {} universes at epsilon {eps}{}",
        r.heights.len(),
        mms.len(),
        written(&a.out)
    ))
}

pub fn compress(a: &CompressArgs) -> Result<String> {
    let mut prov = RunProvenance::new("compress", a);
    prov.digest(&a.mms)?;
    let mms = prov.time("load", || load_mms(&a.mms))?;
    let method = match a.method {
        MethodArg::GreedySetCover => CompressionMethod::GreedySetCover,
        MethodArg::CompleteLinkage => CompressionMethod::CompleteLinkage,
    };
    let r = prov.time("compress", || compress_search_space(&mms, threshold(&a.threshold), method))?;
    // Coverage is checked again before anything is written.
    let index: HashMap<&str, usize> = mms.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    for (u, rep) in &r.assignment {
        let d = mms.dist[(index[u.as_str()], index[rep.as_str()])];
        if d > r.epsilon {
            return Err(Error::State(format!(
                "`{u}` is {d} from representative `{rep}`, above epsilon {}",
                r.epsilon
            )));
        }
    }
    if let Some(out) = &a.out {
        if is_csv(out) {
            let mut body = String::from("id,value\n");
            for (id, rep) in &r.assignment {
                body.push_str(&format!("{id},{rep}\n"));
            }
            write_csv(out, &prov, &body)?;
        } else {
            write_json(out, &prov, &r)?;
        }
    }
    let bound = r.greedy_bound.map_or(String::new(), |b| format!(", H(m) c* = {b:.3}"));
    Ok(format!(
        "{} of {} universes kept at epsilon {}{bound}{}",
        r.representatives.len(),
        mms.len(),
        r.epsilon,
        written(&a.out)
    ))
}

/// `b` reordered to the universe order of `a`.
fn aligned(a: &MultiverseMetricSpace, b: &MultiverseMetricSpace) -> Result<MultiverseMetricSpace> {
    if a.ids == b.ids {
        return Ok(b.clone());
    }
    let pos: HashMap<&str, usize> = b.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let perm: Vec<usize> = a
        .ids
        .iter()
        .map(|id| {
            pos.get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Domain(format!("universe `{id}` is missing from the second matrix")))
        })
        .collect::<Result<_>>()?;
    if b.len() != a.len() {
        return Err(Error::Domain(format!("matrices list {} and {} universes", a.len(), b.len())));
    }
    let dist = b.dist.select_rows(&perm).select_columns(&perm);
    MultiverseMetricSpace::new(a.ids.clone(), dist, b.config.clone())
}

pub fn mantel(a: &MantelArgs) -> Result<String> {
    let mut prov = RunProvenance::new("mantel", a);
    prov.digest(&a.a)?;
    prov.digest(&a.b)?;
    let (ma, mb) = prov.time("load", || Ok::<_, Error>((load_mms(&a.a)?, load_mms(&a.b)?)))?;
    let mb = aligned(&ma, &mb)?;
    let r = prov.time("mantel", || mantel_test(&ma.dist, &mb.dist, a.permutations, a.seed, None))?;
    if let Some(out) = &a.out {
        write_json(out, &prov, &r)?;
    }
    Ok(format!(
        "Mantel r = {:.6}, p = {} ({} permutations){}",
        r.r,
        r.p_value,
        r.permutations,
        written(&a.out)
    ))
}

pub fn compare(a: &CompareArgs) -> Result<String> {
    let mut prov = RunProvenance::new("compare-mms", a);
    prov.digest(&a.a)?;
    prov.digest(&a.b)?;
    let (ma, mb) = prov.time("load", || Ok::<_, Error>((load_mms(&a.a)?, load_mms(&a.b)?)))?;
    let metric = match a.metric {
        MetricArg::Bottleneck => DiagramMetric::Bottleneck,
        MetricArg::Wasserstein => DiagramMetric::Wasserstein,
    };
    let d = prov.time("compare", || compare_mms(&ma, &mb, metric, a.p))?;
    if let Some(out) = &a.out {
        write_json(
            out,
            &prov,
            &json!({
                "distance": d,
                "metric": metric,
                "p": a.p,
                "method": "Rips persistence (H0 and H1) of each distance matrix, diagram distances summed",
            }),
        )?;
    }
    Ok(format!("{d}{}", written(&a.out)))
}

pub fn build(a: &BuildArgs) -> Result<String> {
    let cfg = a.pipeline.config();
    cfg.validate()?;
    let mut prov = RunProvenance::new("build-mms", a);
    prov.digest(&a.manifest)?;
    let m = load_manifest(&a.manifest)?;
    for u in &m.universes {
        prov.digest(&u.embedding_path)?;
    }
    let b = with_jobs(a.jobs, || build_mms(&m, &cfg))??;
    add_stage_times(&mut prov, &b.times);
    if let Some(out) = &a.out {
        if is_csv(out) {
            write_csv(out, &prov, &b.mms.render(out)?)?;
        } else {
            write_json(out, &prov, &b.mms)?;
        }
    }
    let max = b.mms.dist.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "multiverse metric space over {} universes, largest distance {max}{}",
        b.mms.len(),
        written(&a.out)
    ))
}

/// Runs `f` on a pool of `jobs` threads (all cores when unset).
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::State(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
