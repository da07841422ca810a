//! Matrix reduction over Z/2 with the clearing optimization.

use super::{FilteredComplex, PersistenceDiagram};

const NONE: u32 = u32::MAX;

/// A pairing between simplex indices (positions in filtration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: usize,
    /// `None` for an essential class.
    pub death: Option<usize>,
}

// dst <- dst xor src, both sorted ascending.
fn add_column(dst: &mut Vec<u32>, src: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < dst.len() && j < src.len() {
        match dst[i].cmp(&src[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(dst[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(src[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&dst[i..]);
    scratch.extend_from_slice(&src[j..]);
    std::mem::swap(dst, scratch);
}

/// Index-level persistence pairs for homology dimensions `0..=max_h`.
///
/// Works on the coboundary matrix: dimensions are reduced from 0 upwards,
/// each column in decreasing filtration order with its oldest cofacet as
/// pivot. A simplex that already appeared as a pivot is a death and its
/// column is skipped (clearing). The pairing is the same as for the
/// boundary matrix.
pub fn persistence_pairs(c: &FilteredComplex, max_h: usize) -> Vec<PersistencePair> {
    let simplices = c.simplices();
    let m = simplices.len();
    let top = c.max_dim().min(max_h);

    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); c.max_dim() + 1];
    for (i, s) in simplices.iter().enumerate() {
        by_dim[s.dim()].push(i);
    }
    // Coboundaries of simplices up to dimension `top`, ascending because
    // cofacets are visited in filtration order.
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (j, facets) in c.boundary_columns().into_iter().enumerate() {
        if simplices[j].dim() <= top + 1 {
            for f in facets {
                columns[f as usize].push(j as u32);
            }
        }
    }

    let mut pivot_owner = vec![NONE; m];
    let mut is_death = vec![false; m];
    let mut scratch = Vec::new();
    let mut pairs = Vec::new();
    for d in 0..=top {
        for &j in by_dim[d].iter().rev() {
            if is_death[j] {
                columns[j] = Vec::new();
                continue;
            }
            let mut col = std::mem::take(&mut columns[j]);
            while let Some(&piv) = col.first() {
                let owner = pivot_owner[piv as usize];
                if owner == NONE {
                    break;
                }
                add_column(&mut col, &columns[owner as usize], &mut scratch);
            }
            match col.first() {
                Some(&piv) => {
                    pivot_owner[piv as usize] = j as u32;
                    is_death[piv as usize] = true;
                    pairs.push(PersistencePair {
                        dim: d,
                        birth: j,
                        death: Some(piv as usize),
                    });
                }
                None => pairs.push(PersistencePair {
                    dim: d,
                    birth: j,
                    death: None,
                }),
            }
            columns[j] = col;
        }
    }
    pairs.sort();
    pairs
}

/// Persistence diagram in dimensions `0..=max_h`. Zero-persistence pairs are
/// discarded and infinite classes are counted as essential.
pub fn persistence(c: &FilteredComplex, max_h: usize) -> PersistenceDiagram {
    let simplices = c.simplices();
    let mut per_dim: Vec<Vec<(f64, f64)>> = vec![Vec::new(); max_h + 1];
    let mut diagram = PersistenceDiagram::empty(max_h);
    for p in persistence_pairs(c, max_h) {
        let birth = simplices[p.birth].value;
        match p.death {
            Some(d) => {
                let death = simplices[d].value;
                if death > birth {
                    per_dim[p.dim].push((birth, death));
                }
            }
            None => diagram.push_essential(p.dim, birth),
        }
    }
    for (h, list) in per_dim.iter().enumerate() {
        diagram
            .set_intervals(h, list)
            .expect("filtration values are finite and ordered");
    }
    diagram
}
