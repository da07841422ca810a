//! Topological comparison of latent spaces across a multiverse of model
//! choices: persistence landscapes of projected embeddings, the distances
//! and variances built on them, and the analyses that use those.

pub mod analysis;
pub mod error;
pub mod ingest;
pub mod landscape;
pub mod preprocess;
pub mod presto;
pub mod topology;

pub use error::{Error, Result};
pub use ingest::{Embedding, MultiverseManifest};
pub use landscape::{LandscapeSet, Norm, PersistenceLandscape};
pub use presto::{MultiverseMetricSpace, PrestoConfig};
pub use topology::PersistenceDiagram;
