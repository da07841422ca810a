//! Exact orientation / in-sphere predicates and circumsphere computation.

use robust::{Coord, Coord3D};

pub(crate) type Point = [f64; 3];

fn c2(p: &Point) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn c3(p: &Point) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

/// Sign-exact orientation of `dim + 1` points (`dim` is 2 or 3).
pub(crate) fn orient(dim: usize, p: &[&Point]) -> f64 {
    match dim {
        2 => robust::orient2d(c2(p[0]), c2(p[1]), c2(p[2])),
        3 => -robust::orient3d(c3(p[0]), c3(p[1]), c3(p[2]), c3(p[3])),
        _ => unreachable!("orientation only in 2 or 3 dimensions"),
    }
}

/// Positive iff `q` lies strictly inside the circumsphere of the positively
/// oriented simplex `p`.
pub(crate) fn in_sphere(dim: usize, p: &[&Point], q: &Point) -> f64 {
    match dim {
        2 => robust::incircle(c2(p[0]), c2(p[1]), c2(p[2]), c2(q)),
        // orient3d is negated above; insphere's sign convention follows
        // robust::orient3d, so flip it back.
        3 => -robust::insphere(c3(p[0]), c3(p[1]), c3(p[2]), c3(p[3]), c3(q)),
        _ => unreachable!("in-sphere only in 2 or 3 dimensions"),
    }
}

/// Collinearity of three points in 3-space, decided exactly through the
/// three coordinate-plane projections.
pub(crate) fn collinear3(a: &Point, b: &Point, c: &Point) -> bool {
    let proj = |p: &Point, i: usize, j: usize| Coord { x: p[i], y: p[j] };
    [(0, 1), (1, 2), (0, 2)]
        .iter()
        .all(|&(i, j)| robust::orient2d(proj(a, i, j), proj(b, i, j), proj(c, i, j)) == 0.0)
}

/// Centre and squared radius of the smallest sphere through the given
/// points (the circumsphere within their affine hull). Works in any
/// ambient dimension for up to four affinely independent points.
pub(crate) fn circumsphere(points: &[&[f64]]) -> (Vec<f64>, f64) {
    let base = points[0];
    let m = points.len() - 1;
    if m == 0 {
        return (base.to_vec(), 0.0);
    }
    let rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if m == 1 {
        let center: Vec<f64> = base.iter().zip(&rows[0]).map(|(b, r)| b + 0.5 * r).collect();
        return (center, 0.25 * dot(&rows[0], &rows[0]));
    }
    // Gram system G lambda = 1/2 diag(G); offset = sum lambda_i row_i.
    let mut g = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = dot(&rows[i], &rows[j]);
        }
        g[i][m] = 0.5 * g[i][i];
    }
    let lambda = solve(g);
    let mut offset = vec![0.0; base.len()];
    for (l, row) in lambda.iter().zip(&rows) {
        for (o, r) in offset.iter_mut().zip(row) {
            *o += l * r;
        }
    }
    let r2 = dot(&offset, &offset);
    let center = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
    (center, r2)
}

// Gaussian elimination with partial pivoting on an augmented system.
fn solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, piv);
        let p = a[col][col];
        if p == 0.0 {
            continue;
        }
        for row in (col + 1)..m {
            let f = a[row][col] / p;
            if f != 0.0 {
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = a[row][m];
        for k in (row + 1)..m {
            acc -= a[row][k] * x[k];
        }
        x[row] = if a[row][row] == 0.0 { 0.0 } else { acc / a[row][row] };
    }
    x
}
