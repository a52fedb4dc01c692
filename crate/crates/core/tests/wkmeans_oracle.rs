//! Exhaustive-enumeration oracle for the weighted clustering objective.
//!
//! The oracle walks every possible assignment of points to clusters, places
//! each cluster's center at the weighted mean of its members, and keeps the
//! minimum objective. It shares no code with the Lloyd implementation.

use rand::Rng;
use stepal_core::seeding::rng_from_seed;
use stepal_core::wkmeans::{weighted_kmeans, KMeansParams, WeightedPoint};

/// Minimum of `sum_i w_i |x_i - c_assign(i)|^2` over all k^n assignments,
/// with centers at the weighted means.
fn exhaustive_optimum(points: &[WeightedPoint<f64>], k: usize) -> f64 {
    let n = points.len();
    let dim = points[0].vector.len();
    let total = k.pow(n as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut assignment = vec![0usize; n];
        let mut rest = code;
        for slot in assignment.iter_mut() {
            *slot = rest % k;
            rest /= k;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut weights = vec![0.0; k];
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            weights[c] += p.weight;
            for (s, &x) in sums[c].iter_mut().zip(&p.vector) {
                *s += p.weight * x;
            }
        }
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            if weights[c] == 0.0 {
                continue;
            }
            let mut d = 0.0;
            for (s, &x) in sums[c].iter().zip(&p.vector) {
                let center = s / weights[c];
                d += (x - center) * (x - center);
            }
            objective += p.weight * d;
        }
        if objective < best {
            best = objective;
        }
    }
    best
}

fn random_instance(seed: u64, n: usize) -> Vec<WeightedPoint<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|i| WeightedPoint {
            id: format!("p{i}"),
            vector: vec![rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0],
            weight: rng.random_range(1..=5) as f64,
        })
        .collect()
}

#[test]
fn six_points_two_clusters_near_optimal_on_most_seeds() {
    let params = KMeansParams::default();
    let mut hits = 0;
    for seed in 0..100u64 {
        let points = random_instance(seed, 6);
        let optimum = exhaustive_optimum(&points, 2);
        let model = weighted_kmeans(&points, 2, seed, &params).unwrap();
        assert!(
            model.objective >= optimum - 1e-9,
            "seed {seed}: Lloyd beat the exhaustive optimum ({} < {optimum})",
            model.objective
        );
        if model.objective <= 1.05 * optimum {
            hits += 1;
        }
    }
    assert!(hits >= 95, "only {hits}/100 instances within 5% of optimal");
}

#[test]
fn mixed_sizes_and_cluster_counts_near_optimal() {
    let params = KMeansParams::default();
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(seed ^ 0xABCD);
        let n = rng.random_range(4..=8);
        let k = rng.random_range(1..=3usize.min(n));
        let points = random_instance(seed.wrapping_add(1000), n);
        let optimum = exhaustive_optimum(&points, k);
        let model = weighted_kmeans(&points, k, seed, &params).unwrap();
        assert!(model.objective >= optimum - 1e-9);
        if model.objective <= 1.05 * optimum {
            hits += 1;
        }
    }
    assert!(hits >= 95, "only {hits}/100 instances within 5% of optimal");
}

#[test]
fn step_composition_fixture_clusters_optimally() {
    // Two videos per composition type in the concatenated representation
    // space; identical weights. The fitted objective must match the
    // exhaustive optimum (each type its own cluster).
    let z_split = vec![1.0, 0.0, 0.0, 1.0];
    let frac = 0.5f64.sqrt();
    let z_single = vec![frac, frac, frac, frac];
    let points = vec![
        WeightedPoint {
            id: "split1".into(),
            vector: z_split.clone(),
            weight: 0.69,
        },
        WeightedPoint {
            id: "split2".into(),
            vector: z_split,
            weight: 0.69,
        },
        WeightedPoint {
            id: "single1".into(),
            vector: z_single.clone(),
            weight: 0.69,
        },
        WeightedPoint {
            id: "single2".into(),
            vector: z_single,
            weight: 0.69,
        },
    ];
    let optimum = exhaustive_optimum(&points, 2);
    let model = weighted_kmeans(&points, 2, 4, &KMeansParams::default()).unwrap();
    assert!(model.objective <= 1.05 * optimum.max(1e-12));
    assert_eq!(model.assignment["split1"], model.assignment["split2"]);
    assert_eq!(model.assignment["single1"], model.assignment["single2"]);
    assert_ne!(model.assignment["split1"], model.assignment["single1"]);
}
