//! Diagram distances with the L-infinity ground metric. Unmatched points go
//! to the diagonal at half their persistence.

use std::collections::VecDeque;

use super::PersistenceDiagram;
use crate::error::{Error, Result};

fn pair_cost(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn diag_cost(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Bottleneck distance between the dimension-`h` parts of two diagrams.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram, h: usize) -> f64 {
    bottleneck_intervals(d1.intervals(h), d2.intervals(h))
}

/// p-Wasserstein distance between the dimension-`h` parts of two diagrams.
/// `p = inf` gives the bottleneck distance.
pub fn wasserstein(d1: &PersistenceDiagram, d2: &PersistenceDiagram, h: usize, p: f64) -> Result<f64> {
    wasserstein_intervals(d1.intervals(h), d2.intervals(h), p)
}

/// Exact bottleneck distance: binary search over the finite set of
/// candidate costs, checking each with a perfect-matching test.
pub fn bottleneck_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut cand: Vec<f64> = a.iter().chain(b).map(|&x| diag_cost(x)).collect();
    for &x in a {
        for &y in b {
            cand.push(pair_cost(x, y));
        }
    }
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let (mut lo, mut hi) = (0, cand.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(a, b, cand[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cand[lo]
}

// Left: points of a, then diagonal copies of b. Right: points of b, then
// diagonal copies of a.
fn feasible(a: &[(f64, f64)], b: &[(f64, f64)], delta: f64) -> bool {
    let (n, m) = (a.len(), b.len());
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            if pair_cost(x, y) <= delta {
                adj[i].push(j);
            }
        }
        if diag_cost(x) <= delta {
            adj[i].extend(m..m + n);
        }
    }
    for (j, &y) in b.iter().enumerate() {
        let row = &mut adj[n + j];
        if diag_cost(y) <= delta {
            row.push(j);
        }
        row.extend(m..m + n);
    }
    hopcroft_karp(&adj, n + m) == n + m
}

/// Maximum matching size in a bipartite graph with `adj[left] = rights`.
fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> usize {
    const FREE: usize = usize::MAX;
    let n_left = adj.len();
    let mut match_l = vec![FREE; n_left];
    let mut match_r = vec![FREE; n_right];
    let mut dist = vec![0usize; n_left];
    let mut size = 0;
    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if match_l[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return size;
        }
        let mut it = vec![0usize; n_left];
        for u in 0..n_left {
            if match_l[u] == FREE && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut it) {
                size += 1;
            }
        }
    }
}

fn augment(
    root: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    // Iterative DFS along the BFS layers.
    let mut path = vec![root];
    while let Some(&u) = path.last() {
        if it[u] == adj[u].len() {
            dist[u] = usize::MAX;
            path.pop();
            continue;
        }
        let v = adj[u][it[u]];
        it[u] += 1;
        let w = match_r[v];
        if w == usize::MAX {
            // Flip the path.
            let mut v = v;
            while let Some(u) = path.pop() {
                let prev = match_l[u];
                match_l[u] = v;
                match_r[v] = u;
                v = prev;
            }
            return true;
        }
        if dist[w] == dist[u].wrapping_add(1) {
            path.push(w);
        }
    }
    false
}

/// Exact p-Wasserstein distance by assignment on the diagonally augmented
/// square cost matrix.
pub fn wasserstein_intervals(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(bottleneck_intervals(a, b));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("Wasserstein order p must be >= 1, got {p}")));
    }
    let (n, m) = (a.len(), b.len());
    let size = n + m;
    if size == 0 {
        return Ok(0.0);
    }
    let mut cost = vec![vec![0.0; size]; size];
    for i in 0..n {
        for j in 0..m {
            cost[i][j] = pair_cost(a[i], b[j]).powf(p);
        }
        let c = diag_cost(a[i]).powf(p);
        for k in m..size {
            cost[i][k] = c;
        }
    }
    for j in 0..m {
        let c = diag_cost(b[j]).powf(p);
        for row in &mut cost[n..] {
            row[j] = c;
        }
    }
    let assignment = hungarian(&cost);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(total.powf(1.0 / p))
}

/// Minimum-cost perfect assignment for a square matrix; returns the column
/// assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}
