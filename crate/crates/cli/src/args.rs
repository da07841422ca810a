use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use presto::Norm;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "presto", version, about = "Topological comparison of embeddings across a multiverse of model choices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Persistence landscape of one embedding.
    Landscape(LandscapeArgs),
    /// Distance between two stored landscapes.
    Distance(DistanceArgs),
    /// Variance of a directory of stored landscapes.
    Variance(VarianceArgs),
    /// Local or global sensitivity of a multiverse to its parameters.
    Sensitivity(SensitivityArgs),
    /// Universes whose landscape norm is anomalous.
    Outliers(OutliersArgs),
    /// Complete-linkage clusters of a multiverse metric space.
    Cluster(ClusterArgs),
    /// Representatives covering a multiverse within a radius.
    Compress(CompressArgs),
    /// Mantel test between two multiverse metric spaces.
    Mantel(MantelArgs),
    /// Distance between two multiverse metric spaces.
    CompareMms(CompareArgs),
    /// Pairwise distances between every universe of a manifest.
    BuildMms(BuildArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Projector {
    Pca,
    Gauss,
    Mmds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexArg {
    Alpha,
    Rips,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Npy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierArg {
    Zscore,
    Iqr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodArg {
    GreedySetCover,
    CompleteLinkage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Bottleneck,
    Wasserstein,
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    s.parse().map_err(|e: presto::Error| e.to_string())
}

fn parse_jobs(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Flags shared by every command that runs the landscape pipeline.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    /// Target dimension of the projection.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Largest homology dimension.
    #[arg(long = "h", default_value_t = 2)]
    pub h: usize,
    #[arg(long, value_enum, default_value_t = Projector::Pca)]
    pub projector: Projector,
    /// Number of Gaussian projections to average.
    #[arg(long, default_value_t = 1)]
    pub n_projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rescale each embedding to unit diameter first.
    #[arg(long)]
    pub normalize: bool,
    /// Round landscape breakpoints to this grid.
    #[arg(long, value_parser = parse_positive)]
    pub grid_step: Option<f64>,
    #[arg(long, value_enum, default_value_t = ComplexArg::Alpha)]
    pub complex: ComplexArg,
    /// Keep essential classes, capped at the largest filtration value.
    #[arg(long)]
    pub cap_essential: bool,
    /// Landscape norm: 1, 2 or inf.
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    pub p: Norm,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistanceArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    pub p: Norm,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VarianceArgs {
    /// Directory of landscape JSON files.
    #[arg(long)]
    pub landscapes: PathBuf,
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    pub p: Norm,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("scope").required(true).args(["dimension", "global"]))]
pub struct SensitivityArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Parameter to vary.
    #[arg(long)]
    pub dimension: Option<String>,
    /// Average over every parameter.
    #[arg(long)]
    pub global: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, env = "PRESTO_JOBS", value_parser = parse_jobs)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutliersArgs {
    #[arg(long)]
    pub landscapes: PathBuf,
    #[arg(long, value_enum, default_value_t = OutlierArg::Zscore)]
    pub method: OutlierArg,
    /// Defaults to 3 for z-scores and 1.5 for the IQR rule.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    pub p: Norm,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Quantile of the pairwise distances, in (0, 1).
    #[arg(long)]
    pub quantile: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub mms: PathBuf,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompressArgs {
    #[arg(long)]
    pub mms: PathBuf,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::GreedySetCover)]
    pub method: MethodArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MantelArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 999)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Bottleneck)]
    pub metric: MetricArg,
    /// Wasserstein exponent.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Worker threads; all cores when unset.
    #[arg(long, env = "PRESTO_JOBS", value_parser = parse_jobs)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
