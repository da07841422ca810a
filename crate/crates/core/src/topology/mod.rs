//! Filtered simplicial complexes, persistent homology over Z/2 and
//! distances between persistence diagrams.
//!
//! Alpha filtration values use the squared-circumradius convention: an
//! edge of length `l` that is Gabriel enters at `(l/2)^2`.

mod alpha;
mod delaunay;
mod diagram;
mod geometry;
mod matching;
mod reduction;
mod rips;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alpha::alpha_complex;
pub use diagram::PersistenceDiagram;
pub use matching::{bottleneck, bottleneck_intervals, wasserstein, wasserstein_intervals};
pub use reduction::{persistence, persistence_pairs, PersistencePair};
pub use rips::{distance_matrix, rips_complex};

/// Which complex backs a point cloud's persistence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    #[default]
    Alpha,
    Rips,
}

impl std::fmt::Display for ComplexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ComplexKind::Alpha => "alpha",
            ComplexKind::Rips => "rips",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    /// Sorted vertex indices.
    pub vertices: Vec<u32>,
    pub value: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<u32>, value: f64) -> Self {
        vertices.sort_unstable();
        Simplex { vertices, value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Simplices sorted by `(value, dimension, vertices)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    simplices: Vec<Simplex>,
    max_dim: usize,
}

impl FilteredComplex {
    /// Sorts the simplices into filtration order and checks that every face
    /// is present with a value no larger than its coface.
    pub fn new(mut simplices: Vec<Simplex>) -> Result<Self> {
        for s in &simplices {
            if s.vertices.is_empty() {
                return Err(Error::Domain("empty simplex".into()));
            }
            if !(s.value.is_finite() && s.value >= 0.0) {
                return Err(Error::Domain(format!(
                    "filtration value {} of {:?} is not finite and nonnegative",
                    s.value, s.vertices
                )));
            }
            if s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Domain(format!(
                    "simplex {:?} has unsorted or repeated vertices",
                    s.vertices
                )));
            }
        }
        simplices.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.vertices.len().cmp(&b.vertices.len()))
                .then_with(|| a.vertices.cmp(&b.vertices))
        });
        let index: HashMap<&[u32], usize> = simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i))
            .collect();
        if index.len() != simplices.len() {
            return Err(Error::Domain("complex lists a simplex twice".into()));
        }
        let mut facet = Vec::new();
        for (i, s) in simplices.iter().enumerate() {
            if s.vertices.len() < 2 {
                continue;
            }
            for skip in 0..s.vertices.len() {
                facet.clear();
                facet.extend(
                    s.vertices
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != skip)
                        .map(|(_, &v)| v),
                );
                match index.get(facet.as_slice()) {
                    Some(&j) if j < i => {}
                    Some(_) => {
                        return Err(Error::Domain(format!(
                            "face {facet:?} enters after its coface {:?}",
                            s.vertices
                        )))
                    }
                    None => {
                        return Err(Error::Domain(format!(
                            "face {facet:?} of {:?} is missing",
                            s.vertices
                        )))
                    }
                }
            }
        }
        let max_dim = simplices.iter().map(Simplex::dim).max().unwrap_or(0);
        Ok(FilteredComplex { simplices, max_dim })
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Number of simplices of each dimension.
    pub fn counts_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            counts[s.dim()] += 1;
        }
        counts
    }

    /// Filtration value of a simplex given by (unsorted) vertices.
    pub fn value_of(&self, vertices: &[u32]) -> Option<f64> {
        let mut key = vertices.to_vec();
        key.sort_unstable();
        self.simplices
            .iter()
            .find(|s| s.vertices == key)
            .map(|s| s.value)
    }

    /// Boundary columns as indices into [`FilteredComplex::simplices`],
    /// each sorted ascending.
    pub fn boundary_columns(&self) -> Vec<Vec<u32>> {
        let index: HashMap<&[u32], u32> = self
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i as u32))
            .collect();
        let mut facet = Vec::with_capacity(4);
        self.simplices
            .iter()
            .map(|s| {
                if s.vertices.len() < 2 {
                    return Vec::new();
                }
                let mut col: Vec<u32> = (0..s.vertices.len())
                    .map(|skip| {
                        facet.clear();
                        facet.extend(
                            s.vertices
                                .iter()
                                .enumerate()
                                .filter(|&(j, _)| j != skip)
                                .map(|(_, &v)| v),
                        );
                        index[facet.as_slice()]
                    })
                    .collect();
                col.sort_unstable();
                col
            })
            .collect()
    }
}
