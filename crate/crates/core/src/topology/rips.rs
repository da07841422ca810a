use nalgebra::DMatrix;

use super::{FilteredComplex, Simplex};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;

/// Euclidean distance matrix between the rows of `points`.
pub fn distance_matrix(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..points.ncols() {
                let t = points[(i, c)] - points[(j, c)];
                acc += t * t;
            }
            let v = acc.sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Vietoris–Rips complex with simplices up to dimension `max_dim + 1`.
/// A simplex enters at the largest pairwise distance among its vertices;
/// anything above `threshold` (default: the largest entry) is left out.
pub fn rips_complex(
    dist: &DMatrix<f64>,
    max_dim: usize,
    threshold: Option<f64>,
) -> Result<FilteredComplex> {
    let m = dist.nrows();
    if dist.ncols() != m {
        return Err(Error::Domain(format!(
            "distance matrix must be square, got {}x{}",
            m,
            dist.ncols()
        )));
    }
    for i in 0..m {
        if dist[(i, i)] != 0.0 {
            return Err(Error::Domain(format!("distance matrix diagonal entry {i} is nonzero")));
        }
        for j in (i + 1)..m {
            let (a, b) = (dist[(i, j)], dist[(j, i)]);
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::Domain(format!("distance ({i}, {j}) = {a} is invalid")));
            }
            if (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::Domain(format!(
                    "distance matrix is asymmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
        }
    }
    let threshold = threshold.unwrap_or_else(|| dist.iter().copied().fold(0.0, f64::max));
    if threshold < 0.0 {
        return Err(Error::Domain("Rips threshold must be nonnegative".into()));
    }
    let d = |i: u32, j: u32| {
        let (i, j) = (i.min(j) as usize, i.max(j) as usize);
        dist[(i, j)]
    };

    let top = max_dim + 1;
    let mut out: Vec<Simplex> = (0..m as u32).map(|v| Simplex::new(vec![v], 0.0)).collect();
    // Depth-first clique expansion over increasing vertex sequences.
    let mut stack: Vec<(Vec<u32>, f64)> = (0..m as u32).rev().map(|v| (vec![v], 0.0)).collect();
    while let Some((s, value)) = stack.pop() {
        if s.len() > top {
            continue;
        }
        let last = *s.last().expect("non-empty");
        for w in ((last + 1)..m as u32).rev() {
            let mut v = value;
            let mut ok = true;
            for &u in &s {
                let duw = d(u, w);
                if duw > threshold {
                    ok = false;
                    break;
                }
                v = v.max(duw);
            }
            if ok {
                let mut t = s.clone();
                t.push(w);
                out.push(Simplex {
                    vertices: t.clone(),
                    value: v,
                });
                stack.push((t, v));
            }
        }
    }
    FilteredComplex::new(out)
}
