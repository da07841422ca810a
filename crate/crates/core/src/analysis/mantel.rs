use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Permuted correlations within this distance of the observed one count as
/// ties (and therefore as "at least as large").
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MantelResult {
    pub r: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub corrected_p: Option<f64>,
}

fn check_distance_matrix(d: &DMatrix<f64>, name: &str) -> Result<()> {
    let m = d.nrows();
    if d.ncols() != m {
        return Err(Error::Domain(format!("{name} is not square")));
    }
    for i in 0..m {
        if d[(i, i)] != 0.0 {
            return Err(Error::Domain(format!("{name} has a nonzero diagonal")));
        }
        for j in (i + 1)..m {
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-9 {
                return Err(Error::Domain(format!("{name} is not symmetric")));
            }
        }
    }
    Ok(())
}

/// Pearson correlation over the strict upper triangles, with `b` read
/// through the vertex permutation `perm`.
fn correlation(a: &[f64], b: &DMatrix<f64>, perm: &[usize]) -> f64 {
    let m = perm.len();
    let mut bv = Vec::with_capacity(a.len());
    for i in 0..m {
        for j in (i + 1)..m {
            bv.push(b[(perm[i], perm[j])]);
        }
    }
    pearson(a, &bv)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation of the strict upper triangles of two matrices.
pub fn pearson_upper(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = a.nrows();
    let av: Vec<f64> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
    correlation(&av, b, &(0..m).collect::<Vec<_>>())
}

/// One-sided Mantel permutation test of positive association. Rows and
/// columns of `d2` are permuted together; permutation `i` draws from its
/// own ChaCha stream of `seed`, so results do not depend on scheduling.
pub fn mantel_test(
    d1: &DMatrix<f64>,
    d2: &DMatrix<f64>,
    permutations: usize,
    seed: u64,
    n_comparisons: Option<usize>,
) -> Result<MantelResult> {
    check_distance_matrix(d1, "first matrix")?;
    check_distance_matrix(d2, "second matrix")?;
    let m = d1.nrows();
    if d2.nrows() != m {
        return Err(Error::Domain(format!("matrices have sizes {m} and {}", d2.nrows())));
    }
    if m < 3 {
        return Err(Error::Domain(format!("Mantel test needs at least 3 universes, got {m}")));
    }
    if permutations < 99 {
        return Err(Error::Domain(format!("use at least 99 permutations, got {permutations}")));
    }
    if n_comparisons == Some(0) {
        return Err(Error::Domain("number of comparisons must be at least 1".into()));
    }
    let upper = |d: &DMatrix<f64>| -> Vec<f64> {
        (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).map(|(i, j)| d[(i, j)]).collect()
    };
    let (a, b) = (upper(d1), upper(d2));
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(&a) || constant(&b) {
        return Err(Error::Degenerate("a distance matrix has constant off-diagonal entries".into()));
    }
    let identity: Vec<usize> = (0..m).collect();
    let r = correlation(&a, d2, &identity);
    let hits: usize = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let mut perm = identity.clone();
            perm.shuffle(&mut rng);
            usize::from(correlation(&a, d2, &perm) >= r - TIE_TOL)
        })
        .sum();
    let p = (1 + hits) as f64 / (permutations + 1) as f64;
    Ok(MantelResult {
        r,
        p_value: p,
        permutations,
        corrected_p: n_comparisons.map(|c| (p * c as f64).min(1.0)),
    })
}
