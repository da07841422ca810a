use std::collections::HashMap;

use nalgebra::DMatrix;

use super::delaunay::{triangulate, Outcome};
use super::geometry::{circumsphere, Point};
use super::{FilteredComplex, Simplex};
use crate::error::{Error, Result};

/// Relative slack for the Gabriel test; points on the diametral sphere
/// (within rounding) count as outside it.
const GABRIEL_TOL: f64 = 1e-12;

/// Alpha complex of the rows of `points` (an `n x k` matrix, `k <= 3`),
/// filtered by squared circumradius.
pub fn alpha_complex(points: &DMatrix<f64>) -> Result<FilteredComplex> {
    let (n, k) = (points.nrows(), points.ncols());
    if !(1..=3).contains(&k) {
        return Err(Error::UnsupportedDimension(k));
    }
    if n == 0 {
        return Err(Error::Domain("alpha complex of an empty point set".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("alpha complex input contains non-finite values".into()));
    }
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| points.row(i).iter().copied().collect())
        .collect();
    let coords = perturb_duplicates(coords);
    let tops = delaunay_cells(&coords, k);
    FilteredComplex::new(alpha_values(&coords, n, &tops))
}

/// Exact duplicates: coordinate `i` of the `j`-th repeat (in index order)
/// is shifted by `j * 1e-12 * scale`, `scale` the bounding-box diagonal.
fn perturb_duplicates(mut coords: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = coords[0].len();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for p in &coords {
        for d in 0..k {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let diag = lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
    let scale = if diag > 0.0 { diag } else { 1.0 };

    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| {
        coords[a]
            .iter()
            .zip(&coords[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut head = order[0];
    let mut repeat = 0usize;
    for &cur in &order[1..] {
        if coords[head] == coords[cur] {
            repeat += 1;
            let shift = repeat as f64 * 1e-12 * scale;
            for x in coords[cur].iter_mut() {
                let moved = *x + shift;
                *x = if moved == *x { next_up_by(*x, repeat) } else { moved };
            }
        } else {
            head = cur;
            repeat = 0;
        }
    }
    coords
}

fn next_up_by(x: f64, steps: usize) -> f64 {
    (0..steps).fold(x, |v, _| v.next_up())
}

/// Top-dimensional Delaunay cells, falling back to the affine hull when the
/// points are degenerate.
fn delaunay_cells(coords: &[Vec<f64>], k: usize) -> Vec<Vec<u32>> {
    let n = coords.len();
    if n == 1 {
        return vec![vec![0]];
    }
    if k == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0]).then(a.cmp(&b)));
        return order
            .windows(2)
            .map(|w| {
                let mut e = vec![w[0] as u32, w[1] as u32];
                e.sort_unstable();
                e
            })
            .collect();
    }
    let pts: Vec<Point> = coords
        .iter()
        .map(|c| {
            let mut p = [0.0; 3];
            p[..k].copy_from_slice(c);
            p
        })
        .collect();
    match triangulate(k, &pts) {
        Outcome::Cells(cells) => cells,
        Outcome::Degenerate { rank, basis_points } => {
            let reduced = project_to_hull(coords, &basis_points, rank);
            delaunay_cells(&reduced, rank)
        }
    }
}

/// Coordinates in an orthonormal basis of the affine hull spanned by
/// `basis[0]` and the directions to `basis[1..=rank]`.
fn project_to_hull(coords: &[Vec<f64>], basis: &[usize], rank: usize) -> Vec<Vec<f64>> {
    let origin = &coords[basis[0]];
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(rank);
    for &b in &basis[1..=rank] {
        let mut v: Vec<f64> = coords[b].iter().zip(origin).map(|(x, o)| x - o).collect();
        for a in &axes {
            let dot: f64 = v.iter().zip(a).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(a).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        axes.push(v);
    }
    coords
        .iter()
        .map(|p| {
            axes.iter()
                .map(|a| p.iter().zip(origin).zip(a).map(|((x, o), y)| (x - o) * y).sum())
                .collect()
        })
        .collect()
}

/// Assigns alpha values to every face of the given top cells. A simplex that
/// is not Gabriel (some coface vertex lies strictly inside its smallest
/// circumsphere) takes the minimum value over its cofaces; otherwise it
/// takes its own squared circumradius.
fn alpha_values(coords: &[Vec<f64>], n: usize, tops: &[Vec<u32>]) -> Vec<Simplex> {
    let top_dim = tops.iter().map(|c| c.len() - 1).max().unwrap_or(0);
    // by_dim[d]: simplex -> (min value over cofaces, Gabriel violated)
    let mut by_dim: Vec<HashMap<Vec<u32>, (f64, bool)>> = vec![HashMap::new(); top_dim + 1];
    for c in tops {
        by_dim[c.len() - 1].entry(c.clone()).or_insert((f64::INFINITY, false));
    }

    let sphere = |s: &[u32]| {
        let pts: Vec<&[f64]> = s.iter().map(|&v| coords[v as usize].as_slice()).collect();
        circumsphere(&pts)
    };

    for d in (1..=top_dim).rev() {
        let mut level: Vec<(Vec<u32>, (f64, bool))> = by_dim[d].drain().collect();
        level.sort_by(|a, b| a.0.cmp(&b.0));
        for (s, (value, violated)) in &mut level {
            if !*violated {
                // min() keeps faces no later than cofaces under rounding.
                *value = value.min(sphere(s).1);
            }
        }
        for (s, (value, _)) in &level {
            for skip in 0..s.len() {
                let face: Vec<u32> = s
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let non_gabriel = d > 1 && {
                    let (center, r2) = sphere(&face);
                    let opp = &coords[s[skip] as usize];
                    let d2: f64 = opp.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
                    d2 < r2 * (1.0 - GABRIEL_TOL)
                };
                let entry = by_dim[d - 1].entry(face).or_insert((f64::INFINITY, false));
                entry.0 = entry.0.min(*value);
                entry.1 |= non_gabriel;
            }
        }
        by_dim[d] = level.into_iter().collect();
    }

    let mut out = Vec::new();
    for v in 0..n as u32 {
        out.push(Simplex::new(vec![v], 0.0));
    }
    for level in by_dim.into_iter().skip(1) {
        for (s, (value, _)) in level {
            out.push(Simplex {
                vertices: s,
                value,
            });
        }
    }
    out
}
