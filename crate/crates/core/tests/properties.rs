//! Randomized invariants across the pipeline.

use nalgebra::DMatrix;
use presto::analysis::{
    cluster_universes, compress_search_space, harmonic, mantel_test, optimal_cover_size, CompressionMethod,
    Threshold,
};
use presto::ingest::Embedding;
use presto::landscape::{
    eval_layer, landscape_average, landscape_distance, landscape_from_diagram, landscape_grid_round, landscape_norm,
    Layer,
};
use presto::preprocess::{approx_diameter, normalize, ProjectionConfig};
use presto::presto::{mms_from_landscapes, summed_distance, variance_from_norms};
use presto::topology::{
    alpha_complex, bottleneck, bottleneck_intervals, distance_matrix, persistence, persistence_pairs, rips_complex,
    wasserstein_intervals,
};
use presto::{MultiverseMetricSpace, Norm, PersistenceDiagram, PersistenceLandscape, PrestoConfig};
use proptest::prelude::*;

const NORMS: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Inf];

fn intervals(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..10.0f64, 0.001..5.0f64), 0..max)
        .prop_map(|v| v.into_iter().map(|(b, len)| (b, b + len)).collect())
}

fn diagram() -> impl Strategy<Value = PersistenceDiagram> {
    (intervals(12), intervals(12)).prop_map(|(a, b)| {
        let mut d = PersistenceDiagram::from_intervals(0, &a).unwrap();
        d.set_intervals(1, &b).unwrap();
        d
    })
}

fn landscape() -> impl Strategy<Value = PersistenceLandscape> {
    diagram().prop_map(|d| landscape_from_diagram(&d, 1))
}

fn points(n: std::ops::Range<usize>, k: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, k), n)
        .prop_map(move |rows| DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

fn metric_space(m: std::ops::Range<usize>) -> impl Strategy<Value = MultiverseMetricSpace> {
    points(m, 2).prop_map(|p| {
        let ids = (0..p.nrows()).map(|i| format!("u{i}")).collect();
        MultiverseMetricSpace::new(ids, distance_matrix(&p), None).unwrap()
    })
}

fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

// Norm of one layer by direct integration of its segments.
fn layer_norm(layer: &Layer, p: f64) -> f64 {
    if p.is_infinite() {
        return layer.iter().map(|q| q.1).fold(0.0, f64::max);
    }
    let mut total = 0.0;
    for w in layer.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        // Exact integral of |linear|^p over a segment with non-negative ends.
        total += if (y1 - y0).abs() < 1e-300 {
            y0.powf(p) * (x1 - x0)
        } else {
            (x1 - x0) * (y1.powf(p + 1.0) - y0.powf(p + 1.0)) / ((p + 1.0) * (y1 - y0))
        };
    }
    total.powf(1.0 / p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn landscape_distance_is_a_pseudometric(a in landscape(), b in landscape(), c in landscape()) {
        for p in NORMS {
            for h in 0..=1 {
                let (ab, ba) = (landscape_distance(&a, &b, h, p), landscape_distance(&b, &a, h, p));
                prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
                prop_assert_eq!(landscape_distance(&a, &a, h, p), 0.0);
                let (ac, cb) = (landscape_distance(&a, &c, h, p), landscape_distance(&c, &b, h, p));
                prop_assert!(ab <= ac + cb + 1e-9, "{} > {} + {}", ab, ac, cb);
            }
            let (ab, ac, cb) = (summed_distance(&a, &b, 1, p), summed_distance(&a, &c, 1, p), summed_distance(&c, &b, 1, p));
            prop_assert!(ab <= ac + cb + 1e-9);
        }
    }

    #[test]
    fn norm_of_average_is_at_most_average_norm(ls in prop::collection::vec(landscape(), 1..6)) {
        let mean = landscape_average(&ls).unwrap();
        for p in NORMS {
            for h in 0..=1 {
                let avg = ls.iter().map(|l| landscape_norm(l, h, p)).sum::<f64>() / ls.len() as f64;
                prop_assert!(landscape_norm(&mean, h, p) <= avg + 1e-9);
            }
        }
    }

    #[test]
    fn layers_are_ordered_and_norms_consistent(d in diagram()) {
        let l = landscape_from_diagram(&d, 1);
        for h in 0..=1 {
            let layers = l.layers(h);
            let xs: Vec<f64> = layers.iter().flatten().map(|q| q.0).collect();
            for j in 1..layers.len() {
                for &x in &xs {
                    prop_assert!(eval_layer(&layers[j - 1], x) >= eval_layer(&layers[j], x) - 1e-12);
                }
            }
            for layer in layers {
                let support = layer[layer.len() - 1].0 - layer[0].0;
                let (n1, n2, ninf) = (layer_norm(layer, 1.0), layer_norm(layer, 2.0), layer_norm(layer, f64::INFINITY));
                prop_assert!(n1 <= ninf * support + 1e-9);
                prop_assert!(n2 <= ninf * support.sqrt() + 1e-9);
                // On the support rescaled to unit length the norms increase with p.
                prop_assert!(n1 / support <= n2 / support.sqrt() + 1e-9);
                prop_assert!(n2 / support.sqrt() <= ninf + 1e-9);
            }
            // Closed-form norms against a Riemann sum on 10^4 points.
            let (lo, hi) = match (xs.iter().cloned().reduce(f64::min), xs.iter().cloned().reduce(f64::max)) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => continue,
            };
            let n = 10_000;
            let dx = (hi - lo) / n as f64;
            let mut sums = [0.0f64; 2];
            for i in 0..n {
                let t = lo + (i as f64 + 0.5) * dx;
                for layer in layers {
                    let v = eval_layer(layer, t);
                    sums[0] += v * dx;
                    sums[1] += v * v * dx;
                }
            }
            let n1 = landscape_norm(&l, h, Norm::L1);
            let n2 = landscape_norm(&l, h, Norm::L2);
            prop_assert!((sums[0] - n1).abs() <= 1e-3 * n1);
            prop_assert!((sums[1].sqrt() - n2).abs() <= 1e-3 * n2);
        }
    }

    #[test]
    fn grid_rounding_moves_landscapes_by_half_a_step(d in diagram(), step in prop::sample::select(vec![0.5, 0.1, 0.01])) {
        let exact = landscape_from_diagram(&d, 1);
        let rounded = landscape_grid_round(&exact, step).unwrap();
        for h in 0..=1 {
            prop_assert!(landscape_distance(&exact, &rounded, h, Norm::Inf) <= step / 2.0 + 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_exact(d in diagram()) {
        let l = landscape_from_diagram(&d, 1);
        let back: PersistenceLandscape = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        prop_assert_eq!(&back, &l);
        let back: PersistenceDiagram = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn variance_is_translation_invariant_and_quadratic(
        norms in prop::collection::vec(prop::collection::vec(0.0..10.0f64, 3), 1..10),
        shift in -5.0..5.0f64,
        scale in 0.1..10.0f64,
    ) {
        let pv = variance_from_norms(&norms).unwrap();
        let shifted: Vec<Vec<f64>> = norms.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let scaled: Vec<Vec<f64>> = norms.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        prop_assert!((variance_from_norms(&shifted).unwrap() - pv).abs() <= 1e-9 * (1.0 + pv));
        prop_assert!((variance_from_norms(&scaled).unwrap() - scale * scale * pv).abs() <= 1e-9 * (1.0 + scale * scale * pv));
    }

    #[test]
    fn betti_numbers_give_the_euler_characteristic(p in points(3..25, 2), use_rips in any::<bool>()) {
        let c = if use_rips {
            rips_complex(&distance_matrix(&p), 2, None).unwrap()
        } else {
            alpha_complex(&p).unwrap()
        };
        let top = c.max_dim();
        let pairs = persistence_pairs(&c, top);
        let chi: i64 = c.counts_by_dim().iter().enumerate().map(|(h, &n)| if h % 2 == 0 { n as i64 } else { -(n as i64) }).sum();
        let mut betti = 0i64;
        let mut touched = 0;
        for q in &pairs {
            touched += if q.death.is_some() { 2 } else { 1 };
            if q.death.is_none() {
                betti += if q.dim % 2 == 0 { 1 } else { -1 };
            }
        }
        prop_assert_eq!(betti, chi);
        // Every simplex is either a birth or a death.
        prop_assert_eq!(touched, c.len());
    }

    #[test]
    fn diagrams_ignore_point_order(p in points(4..30, 2), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..p.nrows()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let q = p.select_rows(&order);
        let (a, b) = (persistence(&alpha_complex(&p).unwrap(), 1), persistence(&alpha_complex(&q).unwrap(), 1));
        for h in 0..=1 {
            let (x, y) = (sorted(a.intervals(h).to_vec()), sorted(b.intervals(h).to_vec()));
            prop_assert_eq!(x.len(), y.len());
            for (u, v) in x.iter().zip(&y) {
                prop_assert!((u.0 - v.0).abs() <= 1e-9 && (u.1 - v.1).abs() <= 1e-9);
            }
            prop_assert_eq!(a.essential_count(h), b.essential_count(h));
        }
    }

    #[test]
    fn wasserstein_sits_between_bottleneck_bounds(a in intervals(10), b in intervals(10)) {
        let db = bottleneck_intervals(&a, &b);
        let n = (a.len() + b.len()).max(1) as f64;
        let mut prev = f64::INFINITY;
        for p in [1.0, 2.0, 4.0] {
            let w = wasserstein_intervals(&a, &b, p).unwrap();
            prop_assert!(db <= w + 1e-9);
            prop_assert!(w <= db * n.powf(1.0 / p) + 1e-9);
            prop_assert!(w <= prev + 1e-9);
            prev = w;
        }
    }

    #[test]
    fn metric_space_satisfies_the_triangle_inequality(ls in prop::collection::vec(landscape(), 3..8)) {
        let ids = (0..ls.len()).map(|i| format!("u{i}")).collect();
        let mut cfg = PrestoConfig::new(ProjectionConfig::pca(2));
        cfg.h_max = 1;
        let mms = mms_from_landscapes(ids, &ls, &cfg).unwrap();
        prop_assert!(mms.triangle_excess() <= 1e-9);
    }

    #[test]
    fn normalizing_removes_uniform_scale(p in points(3..40, 4), c in 0.01..100.0f64) {
        let e = Embedding::new(p.clone(), "e").unwrap();
        let s = Embedding::new(p * c, "s").unwrap();
        let (ne, ns) = (
            normalize(&e, approx_diameter(&e, 4, 64).unwrap()).unwrap(),
            normalize(&s, approx_diameter(&s, 4, 64).unwrap()).unwrap(),
        );
        for (x, y) in ne.data.iter().zip(ns.data.iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    // Greedy cover size itself is not monotone in the radius; the optimum
    // is, and greedy stays within H(m) of the optimum at the smaller radius.
    #[test]
    fn cover_size_shrinks_as_radius_grows(mms in metric_space(2..13), e1 in 0.01..1.0f64, e2 in 0.01..1.0f64) {
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let (c_lo, c_hi) = (optimal_cover_size(&mms, lo).unwrap(), optimal_cover_size(&mms, hi).unwrap());
        prop_assert!(c_lo >= c_hi);
        let greedy_hi = compress_search_space(&mms, Threshold::Epsilon(hi), CompressionMethod::GreedySetCover)
            .unwrap()
            .representatives
            .len();
        prop_assert!(greedy_hi as f64 <= harmonic(mms.len()) * c_lo as f64 + 1e-12);
    }

    #[test]
    fn complete_linkage_clusters_respect_the_cut(mms in metric_space(2..15), eps in 0.0..1.0f64) {
        let r = cluster_universes(&mms, eps).unwrap();
        let labels: Vec<usize> = mms.ids.iter().map(|id| r.labels[id]).collect();
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                if labels[i] == labels[j] {
                    prop_assert!(mms.dist[(i, j)] <= r.heights[labels[i]] + 1e-12);
                    prop_assert!(r.heights[labels[i]] <= eps);
                }
            }
        }
    }

    #[test]
    fn mantel_is_deterministic_and_ranks_identity_first(a in metric_space(4..10), b in metric_space(4..10), seed in any::<u64>()) {
        let m = a.len().min(b.len());
        let (da, db) = (
            a.dist.view((0, 0), (m, m)).into_owned(),
            b.dist.view((0, 0), (m, m)).into_owned(),
        );
        let r1 = mantel_test(&da, &db, 99, seed, None).unwrap();
        prop_assert_eq!(&r1, &mantel_test(&da, &db, 99, seed, None).unwrap());
        prop_assert!(r1.p_value >= 1.0 / 100.0);
        let same = mantel_test(&da, &da, 99, seed, None).unwrap();
        prop_assert!((same.r - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn small_perturbations_move_diagrams_little(p in points(30..31, 2), noise in prop::collection::vec(-1.0..1.0f64, 60)) {
        let eps = 1e-3;
        let q = DMatrix::from_fn(30, 2, |i, j| p[(i, j)] + eps * noise[2 * i + j]);
        let (a, b) = (persistence(&alpha_complex(&p).unwrap(), 1), persistence(&alpha_complex(&q).unwrap(), 1));
        for h in 0..=1 {
            prop_assert!(bottleneck(&a, &b, h) <= 4.0 * eps);
        }
    }
}
