//! Diameter estimation, normalization and the linear projectors applied
//! before any topology is computed.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Embedding;

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_EXACT_THRESHOLD: usize = 2048;

/// Covariance eigendecomposition switches to the `n x n` Gram matrix above
/// this latent dimension.
const PCA_GRAM_THRESHOLD: usize = 1024;

fn row_dist(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..x.ncols() {
        let t = x[(i, c)] - x[(j, c)];
        acc += t * t;
    }
    acc.sqrt()
}

/// Index and distance of the row farthest from row `i` (lowest index on ties).
fn farthest_from(x: &DMatrix<f64>, i: usize) -> (usize, f64) {
    let mut best = (i, 0.0);
    for j in 0..x.nrows() {
        let dj = row_dist(x, i, j);
        if dj > best.1 {
            best = (j, dj);
        }
    }
    best
}

/// Exact diameter for `n <= exact_threshold`, otherwise the largest leg
/// seen over `restarts` deterministic double-sweep walks. Never exceeds the
/// true diameter.
pub fn approx_diameter(e: &Embedding, restarts: usize, exact_threshold: usize) -> Result<f64> {
    let x = &e.data;
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Domain(format!(
            "diameter needs at least 2 points, got {n}"
        )));
    }
    let diam = if n <= exact_threshold {
        (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .map(|j| row_dist(x, i, j))
                    .fold(0.0f64, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    } else {
        let restarts = restarts.max(1);
        (0..restarts)
            .map(|r| {
                let seed = r * n / restarts;
                let (a, d1) = farthest_from(x, seed);
                let (_, d2) = farthest_from(x, a);
                d1.max(d2)
            })
            .fold(0.0f64, f64::max)
    };
    if diam == 0.0 {
        return Err(Error::Degenerate("all points are identical (zero diameter)".into()));
    }
    Ok(diam)
}

/// Divides every coordinate by `diameter` and marks the embedding normalized.
pub fn normalize(e: &Embedding, diameter: f64) -> Result<Embedding> {
    if e.normalized {
        return Err(Error::State(format!(
            "embedding `{}` is already normalized",
            e.source_id
        )));
    }
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::Domain(format!(
            "normalization diameter must be positive, got {diameter}"
        )));
    }
    Ok(Embedding {
        data: e.data.map(|v| v / diameter),
        source_id: e.source_id.clone(),
        normalized: true,
        diameter_used: Some(diameter),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Gaussian,
    Mmds,
}

impl std::fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProjectionMethod::Pca => "pca",
            ProjectionMethod::Gaussian => "gaussian",
            ProjectionMethod::Mmds => "mmds",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    pub k: usize,
    /// Number of random projections (gaussian only).
    pub n_projections: usize,
    pub seed: u64,
}

impl ProjectionConfig {
    pub fn pca(k: usize) -> Self {
        ProjectionConfig {
            method: ProjectionMethod::Pca,
            k,
            n_projections: 1,
            seed: 0,
        }
    }

    pub fn gaussian(k: usize, n_projections: usize, seed: u64) -> Self {
        ProjectionConfig {
            method: ProjectionMethod::Gaussian,
            k,
            n_projections,
            seed,
        }
    }

    pub fn mmds(k: usize) -> Self {
        ProjectionConfig {
            method: ProjectionMethod::Mmds,
            k,
            n_projections: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub projections: Vec<DMatrix<f64>>,
    pub config: ProjectionConfig,
    /// Eigenvalues, descending (pca and mmds only).
    pub explained_variance: Option<Vec<f64>>,
}

pub fn project(e: &Embedding, cfg: &ProjectionConfig) -> Result<ProjectionSet> {
    match cfg.method {
        ProjectionMethod::Pca => project_pca(e, cfg.k),
        ProjectionMethod::Gaussian => project_gaussian(e, cfg.k, cfg.n_projections, cfg.seed),
        ProjectionMethod::Mmds => project_mmds(e, cfg.k),
    }
}

fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    c
}

/// Eigenpairs sorted by descending eigenvalue (ties by original index), with
/// each eigenvector's largest-magnitude entry made positive.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        fix_sign(v.as_mut_slice());
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

fn fix_sign(v: &mut [f64]) {
    let mut arg = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[arg].abs() {
            arg = i;
        }
    }
    if v.get(arg).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn project_pca(e: &Embedding, k: usize) -> Result<ProjectionSet> {
    let (n, d) = (e.n(), e.d());
    let rank_cap = n.min(d);
    if k == 0 || k > rank_cap {
        return Err(Error::Domain(format!(
            "PCA target dimension k={k} must lie in 1..={rank_cap} (min(n, d))"
        )));
    }
    let xc = centered(&e.data);
    let denom = (n.max(2) - 1) as f64;
    let (eigenvalues, projected) = if d <= PCA_GRAM_THRESHOLD {
        let cov = (xc.transpose() * &xc) / denom;
        let (values, vectors) = sorted_eigen(cov);
        let basis = vectors.columns(0, k).into_owned();
        (values, &xc * basis)
    } else {
        let gram = &xc * xc.transpose();
        let (values, vectors) = sorted_eigen(gram);
        // Covariance eigenvector v = Xc^T u / sqrt(mu); its sign follows the
        // same largest-entry rule as the covariance route.
        let mut proj = DMatrix::zeros(n, k);
        for i in 0..k {
            let mu = values[i].max(0.0);
            let mut v = xc.transpose() * vectors.column(i);
            if mu > 0.0 {
                v /= mu.sqrt();
            }
            fix_sign(v.as_mut_slice());
            proj.set_column(i, &(&xc * v));
        }
        (values.iter().map(|mu| mu / denom).collect(), proj)
    };
    Ok(ProjectionSet {
        projections: vec![projected],
        config: ProjectionConfig::pca(k),
        explained_variance: Some(eigenvalues.into_iter().take(rank_cap).collect()),
    })
}

/// Random `d x k` matrix with i.i.d. `Normal(0, 1/k)` entries, keyed by
/// `(seed, index)`.
pub fn gaussian_matrix(d: usize, k: usize, seed: u64, index: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let scale = (1.0 / k as f64).sqrt();
    let mut r = DMatrix::zeros(d, k);
    for i in 0..d {
        for j in 0..k {
            let z: f64 = StandardNormal.sample(&mut rng);
            r[(i, j)] = z * scale;
        }
    }
    r
}

/// `n_projections` Gaussian random projections `E * R_j`.
///
/// `k` may exceed `d`; the map is then an isometry in expectation rather
/// than a reduction.
pub fn project_gaussian(
    e: &Embedding,
    k: usize,
    n_projections: usize,
    seed: u64,
) -> Result<ProjectionSet> {
    if k == 0 {
        return Err(Error::Domain("projection dimension k must be positive".into()));
    }
    if n_projections == 0 {
        return Err(Error::Domain("at least one random projection is required".into()));
    }
    let projections = (0..n_projections as u64)
        .into_par_iter()
        .map(|j| &e.data * gaussian_matrix(e.d(), k, seed, j))
        .collect();
    Ok(ProjectionSet {
        projections,
        config: ProjectionConfig::gaussian(k, n_projections, seed),
        explained_variance: None,
    })
}

/// Classical (metric) multidimensional scaling.
pub fn project_mmds(e: &Embedding, k: usize) -> Result<ProjectionSet> {
    let (n, d) = (e.n(), e.d());
    let rank_cap = n.min(d);
    if k == 0 || k > rank_cap {
        return Err(Error::Domain(format!(
            "mMDS target dimension k={k} must lie in 1..={rank_cap} (min(n, d))"
        )));
    }
    let x = &e.data;
    let mut sq = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = row_dist(x, i, j);
            sq[(i, j)] = dij * dij;
            sq[(j, i)] = dij * dij;
        }
    }
    // -1/2 * C D2 C with C the centering matrix.
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));

    let (values, vectors) = sorted_eigen(b);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let tol = top * 1e-9 * n as f64;
    let rank = values.iter().filter(|&&v| v > tol).count();
    if rank < k {
        return Err(Error::Domain(format!(
            "mMDS needs {k} positive eigenvalues but the distance matrix has rank {rank}"
        )));
    }
    let mut coords = DMatrix::zeros(n, k);
    for c in 0..k {
        let s = values[c].sqrt();
        coords.set_column(c, &(vectors.column(c) * s));
    }
    Ok(ProjectionSet {
        projections: vec![coords],
        config: ProjectionConfig::mmds(k),
        explained_variance: Some(values.iter().take(rank_cap).map(|v| v.max(0.0)).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square() -> Embedding {
        Embedding::from_rows(
            &[vec![0., 0.], vec![1., 0.], vec![0., 1.], vec![1., 1.]],
            "square",
        )
        .unwrap()
    }

    // Sorted multiset of pairwise distances, computed directly.
    fn pair_dists(x: &DMatrix<f64>) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..x.nrows() {
            for j in (i + 1)..x.nrows() {
                out.push((x.row(i) - x.row(j)).norm());
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn diameter_examples() {
        assert_abs_diff_eq!(approx_diameter(&square(), 8, 2048).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        let line = Embedding::from_rows(&[vec![0., 0.], vec![3., 4.], vec![6., 8.]], "l").unwrap();
        assert_eq!(approx_diameter(&line, 8, 2048).unwrap(), 10.0);
        let dup = Embedding::from_rows(&[vec![1., 1.], vec![1., 1.]], "d").unwrap();
        assert!(matches!(approx_diameter(&dup, 8, 2048), Err(Error::Degenerate(_))));
        let one = Embedding::from_rows(&[vec![1., 1.]], "o").unwrap();
        assert!(matches!(approx_diameter(&one, 8, 2048), Err(Error::Domain(_))));
    }

    #[test]
    fn double_sweep_is_lower_bound() {
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() * (1.0 + 0.01 * i as f64), t.cos(), (t * 0.3).sin()]
            })
            .collect();
        let e = Embedding::from_rows(&rows, "w").unwrap();
        let exact = approx_diameter(&e, 8, 10_000).unwrap();
        let approx = approx_diameter(&e, 8, 10).unwrap();
        assert!(approx <= exact + 1e-15);
        assert!(approx > 0.5 * exact);
    }

    #[test]
    fn normalize_rules() {
        let n = normalize(&square(), 2f64.sqrt()).unwrap();
        assert!(n.normalized);
        assert_abs_diff_eq!(approx_diameter(&n, 8, 2048).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(normalize(&n, 1.0), Err(Error::State(_))));

        let mut scaled = square();
        scaled.data *= 17.0;
        let a = normalize(&scaled, approx_diameter(&scaled, 8, 2048).unwrap()).unwrap();
        for (x, y) in a.data.iter().zip(n.data.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn pca_examples() {
        let col = Embedding::from_rows(&[vec![0., 0., 0.], vec![1., 2., 2.], vec![2., 4., 4.]], "c").unwrap();
        let p = project_pca(&col, 1).unwrap();
        let got = pair_dists(&p.projections[0]);
        for (g, w) in got.iter().zip([3.0, 3.0, 6.0]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-9);
        }

        let p = project_pca(&square(), 2).unwrap();
        let want = pair_dists(&square().data);
        for (g, w) in pair_dists(&p.projections[0]).iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-12);
        }
        assert_eq!(p.explained_variance.as_ref().unwrap().len(), 2);
        assert!(matches!(project_pca(&square(), 3), Err(Error::Domain(_))));
    }

    #[test]
    fn pca_sign_convention_and_determinism() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.7).sin(), (t * 0.3).cos() * 2.0, t * 0.05, (t * 1.3).sin() * 0.1]
            })
            .collect();
        let e = Embedding::from_rows(&rows, "r").unwrap();
        let a = project_pca(&e, 4).unwrap();
        let b = project_pca(&e, 4).unwrap();
        assert_eq!(a, b);
        let ev = a.explained_variance.unwrap();
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        let want = pair_dists(&e.data);
        for (g, w) in pair_dists(&a.projections[0]).iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * w.max(1.0));
        }
    }

    #[test]
    fn gaussian_determinism_and_cardinality() {
        let e = square();
        let a = project_gaussian(&e, 2, 1, 7).unwrap();
        let b = project_gaussian(&e, 2, 1, 7).unwrap();
        assert_eq!(a.projections[0], b.projections[0]);
        let c = project_gaussian(&e, 2, 4, 7).unwrap();
        assert_eq!(c.projections.len(), 4);
        assert_eq!(c.projections[0], a.projections[0]);
        assert_ne!(c.projections[0], c.projections[1]);
    }

    #[test]
    fn mmds_examples() {
        let p = project_mmds(&square(), 2).unwrap();
        let want = pair_dists(&square().data);
        for (g, w) in pair_dists(&p.projections[0]).iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-9);
        }
        let col = Embedding::from_rows(&[vec![0., 0., 0.], vec![1., 0., 0.], vec![3., 0., 0.]], "c").unwrap();
        let p = project_mmds(&col, 1).unwrap();
        for (g, w) in pair_dists(&p.projections[0]).iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-9);
        }
        match project_mmds(&col, 3) {
            Err(Error::Domain(msg)) => assert!(msg.contains("rank 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
