//! Incremental Bowyer–Watson Delaunay triangulation in 2 and 3 dimensions.
//!
//! The convex hull is closed off with ghost cells that share a vertex at
//! infinity, so no bounding super-simplex is needed. All geometric decisions
//! go through exact predicates. Points must be pairwise distinct.

use std::collections::HashMap;

use super::geometry::{collinear3, in_sphere, orient, Point};

const INF: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Cell {
    v: [u32; 4],
    /// `n[i]` is the cell across the facet opposite `v[i]`.
    n: [u32; 4],
    alive: bool,
}

pub(crate) enum Outcome {
    /// Top-dimensional cells, vertices sorted.
    Cells(Vec<Vec<u32>>),
    /// The points span an affine subspace of the given dimension.
    Degenerate { rank: usize, basis_points: Vec<usize> },
}

struct Triangulation<'a> {
    dim: usize,
    points: &'a [Point],
    cells: Vec<Cell>,
    free: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    last: u32,
}

impl<'a> Triangulation<'a> {
    fn pt(&self, v: u32) -> &'a Point {
        &self.points[v as usize]
    }

    fn is_ghost(&self, c: u32) -> bool {
        self.cells[c as usize].v[..=self.dim].contains(&INF)
    }

    fn alloc(&mut self, cell: Cell) -> u32 {
        if let Some(id) = self.free.pop() {
            self.cells[id as usize] = cell;
            self.stamp[id as usize] = 0;
            id
        } else {
            self.cells.push(cell);
            self.stamp.push(0);
            (self.cells.len() - 1) as u32
        }
    }

    /// Orientation of cell `c` with its vertex in `slot` replaced by `q`.
    fn orient_with(&self, c: u32, slot: usize, q: &Point) -> f64 {
        let cell = &self.cells[c as usize];
        let mut pts: [&Point; 4] = [q; 4];
        for i in 0..=self.dim {
            if i != slot {
                pts[i] = self.pt(cell.v[i]);
            }
        }
        orient(self.dim, &pts[..=self.dim])
    }

    fn finite_conflict(&self, c: u32, q: &Point) -> bool {
        let cell = &self.cells[c as usize];
        let mut pts: [&Point; 4] = [q; 4];
        for i in 0..=self.dim {
            pts[i] = self.pt(cell.v[i]);
        }
        in_sphere(self.dim, &pts[..=self.dim], q) > 0.0
    }

    fn conflict(&self, c: u32, q: &Point) -> bool {
        let cell = &self.cells[c as usize];
        match cell.v[..=self.dim].iter().position(|&v| v == INF) {
            None => self.finite_conflict(c, q),
            Some(slot) => {
                let o = self.orient_with(c, slot, q);
                if o > 0.0 {
                    true
                } else if o < 0.0 {
                    false
                } else {
                    self.finite_conflict(cell.n[slot], q)
                }
            }
        }
    }

    /// Visibility walk from the last created cell. Returns a cell that
    /// conflicts with `q`: either the finite cell containing it or a ghost
    /// cell whose hull facet sees it.
    fn locate(&self, q: &Point, salt: usize) -> u32 {
        let mut c = self.last;
        if self.is_ghost(c) {
            let slot = self.cells[c as usize].v.iter().position(|&v| v == INF).unwrap();
            c = self.cells[c as usize].n[slot];
        }
        let k = self.dim + 1;
        let mut step = salt;
        'walk: loop {
            step = step.wrapping_add(1);
            for t in 0..k {
                let slot = (t + step) % k;
                if self.orient_with(c, slot, q) < 0.0 {
                    c = self.cells[c as usize].n[slot];
                    if self.is_ghost(c) {
                        return c;
                    }
                    continue 'walk;
                }
            }
            return c;
        }
    }

    fn insert(&mut self, p: u32, salt: usize) {
        let q = self.pt(p);
        let start = self.locate(q, salt);

        // stamp == epoch: in conflict; stamp == epoch + 1: tested, not in conflict.
        self.epoch += 2;
        let epoch = self.epoch;
        let mut region = vec![start];
        self.stamp[start as usize] = epoch;
        let mut boundary: Vec<(u32, usize)> = Vec::new();
        let mut i = 0;
        while i < region.len() {
            let c = region[i];
            i += 1;
            for slot in 0..=self.dim {
                let nb = self.cells[c as usize].n[slot];
                if self.stamp[nb as usize] == epoch {
                    continue;
                }
                if self.stamp[nb as usize] == epoch + 1 {
                    boundary.push((c, slot));
                    continue;
                }
                if self.conflict(nb, q) {
                    self.stamp[nb as usize] = epoch;
                    region.push(nb);
                } else {
                    self.stamp[nb as usize] = epoch + 1;
                    boundary.push((c, slot));
                }
            }
        }

        // Star the cavity from p.
        let mut created = Vec::with_capacity(boundary.len());
        for &(c, slot) in &boundary {
            let old = self.cells[c as usize];
            let outside = old.n[slot];
            let mut v = old.v;
            v[slot] = p;
            let mut n = [NONE; 4];
            n[slot] = outside;
            let id = self.alloc(Cell { v, n, alive: true });
            let back = self.cells[outside as usize]
                .n
                .iter()
                .position(|&x| x == c)
                .expect("neighbour relation is symmetric");
            self.cells[outside as usize].n[back] = id;
            created.push((id, slot));
        }

        // Glue the new cells to each other across facets through p.
        let mut ridges: HashMap<[u32; 3], (u32, usize)> = HashMap::with_capacity(created.len() * 2);
        for &(id, pslot) in &created {
            for slot in 0..=self.dim {
                if slot == pslot {
                    continue;
                }
                let v = self.cells[id as usize].v;
                let mut key = [NONE; 3];
                let mut k = 0;
                for (j, &x) in v[..=self.dim].iter().enumerate() {
                    if j != slot && j != pslot {
                        key[k] = x;
                        k += 1;
                    }
                }
                key[..k].sort_unstable();
                if let Some((other, oslot)) = ridges.remove(&key) {
                    self.cells[id as usize].n[slot] = other;
                    self.cells[other as usize].n[oslot] = id;
                } else {
                    ridges.insert(key, (id, slot));
                }
            }
        }
        debug_assert!(ridges.is_empty(), "cavity boundary is not a closed sphere");

        for &c in &region {
            self.cells[c as usize].alive = false;
            self.free.push(c);
        }
        if let Some(&(id, _)) = created.iter().find(|(id, _)| !self.is_ghost(*id)) {
            self.last = id;
        } else if let Some(&(id, _)) = created.first() {
            self.last = id;
        }
    }
}

/// Finds `dim + 1` affinely independent points, scanning in `order`.
fn initial_simplex(dim: usize, points: &[Point], order: &[usize]) -> Result<Vec<usize>, Vec<usize>> {
    let mut chosen = vec![order[0]];
    let p0 = &points[order[0]];
    let p1 = match order.iter().find(|&&i| points[i] != *p0) {
        Some(&i) => i,
        None => return Err(chosen),
    };
    chosen.push(p1);
    let a = p0;
    let b = &points[p1];
    let independent2 = |c: &Point| {
        if dim == 2 {
            orient(2, &[a, b, c]) != 0.0
        } else {
            !collinear3(a, b, c)
        }
    };
    let p2 = match order.iter().find(|&&i| independent2(&points[i])) {
        Some(&i) => i,
        None => return Err(chosen),
    };
    chosen.push(p2);
    if dim == 3 {
        let c = &points[p2];
        match order.iter().find(|&&i| orient(3, &[a, b, c, &points[i]]) != 0.0) {
            Some(&i) => chosen.push(i),
            None => return Err(chosen),
        }
    }
    Ok(chosen)
}

/// Morton (Z-order) key over the bounding box, for locality of insertion.
fn spatial_order(dim: usize, points: &[Point]) -> Vec<usize> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let bits = if dim == 2 { 31 } else { 21 };
    let cells = ((1u64 << bits) - 1) as f64;
    let key = |p: &Point| -> u64 {
        let mut out = 0u64;
        let q: Vec<u64> = (0..dim)
            .map(|d| {
                let span = hi[d] - lo[d];
                if span > 0.0 {
                    (((p[d] - lo[d]) / span) * cells) as u64
                } else {
                    0
                }
            })
            .collect();
        for b in (0..bits).rev() {
            for qd in &q {
                out = (out << 1) | ((qd >> b) & 1);
            }
        }
        out
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    let keys: Vec<u64> = points.iter().map(key).collect();
    order.sort_by_key(|&i| (keys[i], i));
    order
}

/// Delaunay triangulation of distinct points in `dim` (2 or 3) dimensions.
pub(crate) fn triangulate(dim: usize, points: &[Point]) -> Outcome {
    assert!(dim == 2 || dim == 3);
    let order = spatial_order(dim, points);
    let init = match initial_simplex(dim, points, &order) {
        Ok(init) => init,
        Err(found) => {
            return Outcome::Degenerate {
                rank: found.len() - 1,
                basis_points: found,
            }
        }
    };

    let mut tri = Triangulation {
        dim,
        points,
        cells: Vec::with_capacity(points.len() * if dim == 2 { 2 } else { 7 }),
        free: Vec::new(),
        stamp: Vec::new(),
        epoch: 0,
        last: 0,
    };

    let mut v = [INF; 4];
    for (slot, &i) in init.iter().enumerate() {
        v[slot] = i as u32;
    }
    {
        let pts: Vec<&Point> = init.iter().map(|&i| &points[i]).collect();
        if orient(dim, &pts) < 0.0 {
            v.swap(0, 1);
        }
    }
    let root = tri.alloc(Cell {
        v,
        n: [NONE; 4],
        alive: true,
    });
    let mut all = vec![root];
    for slot in 0..=dim {
        let mut gv = v;
        gv[slot] = INF;
        // Flip orientation so the vertex at infinity sits outside the facet.
        let (a, b) = match slot {
            0 => (1, 2),
            _ => (0, if slot == 1 { 2 } else { 1 }),
        };
        gv.swap(a, b);
        let g = tri.alloc(Cell {
            v: gv,
            n: [NONE; 4],
            alive: true,
        });
        all.push(g);
    }
    // Glue the initial cells through their shared facets.
    let mut facets: HashMap<Vec<u32>, (u32, usize)> = HashMap::new();
    for &c in &all {
        for slot in 0..=dim {
            let mut key: Vec<u32> = tri.cells[c as usize].v[..=dim]
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != slot)
                .map(|(_, &x)| x)
                .collect();
            key.sort_unstable();
            if let Some((o, os)) = facets.remove(&key) {
                tri.cells[c as usize].n[slot] = o;
                tri.cells[o as usize].n[os] = c;
            } else {
                facets.insert(key, (c, slot));
            }
        }
    }
    debug_assert!(facets.is_empty());
    tri.last = root;

    for (salt, &i) in order.iter().enumerate() {
        if init.contains(&i) {
            continue;
        }
        tri.insert(i as u32, salt);
    }

    let cells = tri
        .cells
        .iter()
        .filter(|c| c.alive && !c.v[..=dim].contains(&INF))
        .map(|c| {
            let mut v = c.v[..=dim].to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    Outcome::Cells(cells)
}
