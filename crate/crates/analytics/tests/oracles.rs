//! Checks against independent reference computations: exhaustive path
//! enumeration for DTW, an exhaustive lag scan, dense eigensolves for PCA, and
//! distance round-trips for MDS.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsvis_analytics::projection::pairwise_distances;
use tsvis_analytics::{
    classical_mds, dtw, dtw_distance, lag_register, pair_metric, pairwise_matrix, pca_points,
    DtwCost, Measure, MetricId, TimeSeries,
};

/// Minimum accumulated cost over every monotone warping path, enumerated
/// recursively. Costs are summed from (0, 0) forwards.
fn brute_force_dtw(x: &[f64], y: &[f64], cost: DtwCost) -> f64 {
    fn walk(x: &[f64], y: &[f64], cost: DtwCost, i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + cost.eval(x[i], y[j]);
        if i == x.len() - 1 && j == y.len() - 1 {
            *best = best.min(acc);
            return;
        }
        if i + 1 < x.len() {
            walk(x, y, cost, i + 1, j, acc, best);
        }
        if j + 1 < y.len() {
            walk(x, y, cost, i, j + 1, acc, best);
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, cost, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, cost, 0, 0, 0.0, &mut best);
    best
}

fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-5.0..5.0)).collect()
}

#[test]
fn dtw_matches_exhaustive_enumeration_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD7);
    for trial in 0..200 {
        let (nx, ny) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let x = random_values(&mut rng, nx);
        let y = random_values(&mut rng, ny);
        for cost in [DtwCost::Abs, DtwCost::Squared] {
            let expected = brute_force_dtw(&x, &y, cost);
            assert_eq!(dtw(&x, &y, cost, None).unwrap().distance, expected, "trial {trial}");
            assert_eq!(dtw_distance(&x, &y, cost, None).unwrap(), expected);
        }
    }
}

#[test]
fn dtw_repeated_prefix_example_agrees_with_enumeration() {
    let (x, y) = ([0.0, 0.0, 1.0, 2.0], [0.0, 1.0, 2.0]);
    assert_eq!(brute_force_dtw(&x, &y, DtwCost::Abs), 0.0);
    assert_eq!(dtw(&x, &y, DtwCost::Abs, None).unwrap().distance, 0.0);
}

#[test]
fn dtw_bounded_by_diagonal_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(1..40);
        let x = random_values(&mut rng, n);
        let y = random_values(&mut rng, n);
        let diagonal: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        assert!(dtw_distance(&x, &y, DtwCost::Abs, None).unwrap() <= diagonal + 1e-12);
    }
}

#[test]
fn dtw_matrix_equals_independent_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let set: Vec<TimeSeries> = (0..3)
        .map(|k| {
            let len = rng.random_range(5..20);
            TimeSeries::from_values(format!("s{k}"), random_values(&mut rng, len)).unwrap()
        })
        .collect();
    let m = pairwise_matrix(&set, Measure::Dtw).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let d = dtw(&set[i].values, &set[j].values, DtwCost::Abs, None).unwrap().distance;
            assert_eq!(m.values[i][j], d);
        }
    }
}

#[test]
fn kendall_matches_pair_enumeration() {
    // 3 pairs: (1,2) concordant, (1,3) concordant, (2,3) discordant
    let tau = pair_metric(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0], MetricId::KendallTauB)
        .unwrap()
        .score();
    assert!((tau - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn pearson_matches_direct_covariance() {
    let (x, y) = ([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0]);
    // means 2.5; deviations (-1.5,-0.5,0.5,1.5) and (-1.5,0.5,-0.5,1.5)
    let cov = (2.25 - 0.25 - 0.25 + 2.25) / 4.0;
    let var = (2.25 + 0.25 + 0.25 + 2.25) / 4.0;
    let expected: f64 = cov / var;
    assert!((expected - 0.8).abs() < 1e-15);
    let r = pair_metric(&x, &y, MetricId::Pearson).unwrap().score();
    assert!((r - 0.8).abs() < 1e-12);
}

fn exhaustive_lag_scan(x: &[f64], y: &[f64], max_lag: i64) -> i64 {
    let corr = |lag: i64| {
        let pairs: Vec<(f64, f64)> = (0..x.len() as i64)
            .filter(|t| t + lag >= 0 && t + lag < y.len() as i64)
            .map(|t| (x[t as usize], y[(t + lag) as usize]))
            .collect();
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let syy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    };
    (-max_lag..=max_lag)
        .max_by(|a, b| corr(*a).partial_cmp(&corr(*b)).unwrap())
        .unwrap()
}

#[test]
fn white_noise_negative_shift_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base: Vec<f64> = (0..220).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = base[10..210].to_vec();
    // y[t] = x[t + 7]
    let y = base[17..217].to_vec();
    assert_eq!(exhaustive_lag_scan(&x, &y, 10), -7);
    let r = lag_register(&x, &y, 10).unwrap();
    assert_eq!(r.lag, -7);
    assert_eq!(r.score, 1.0);
}

fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let dims = points[0].len();
    let mut cols = Vec::new();
    for d in 0..dims {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            cols.push(points.iter().map(|p| (p[d] - mean) / sd).collect::<Vec<_>>());
        }
    }
    (0..points.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

#[test]
fn pca_explained_variance_matches_dense_covariance_eigensolve() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (n, t) in [(10, 12), (10, 6), (5, 30)] {
        let points: Vec<Vec<f64>> = (0..n).map(|_| random_values(&mut rng, t)).collect();
        let z = standardize(&points);
        let zm = DMatrix::from_fn(n, z[0].len(), |i, j| z[i][j]);
        let cov = zm.transpose() * &zm / n as f64;
        let trace = cov.trace();
        let mut eig: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));

        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let ev = pca_points(ids, &points).unwrap().explained_variance.unwrap();
        assert!((ev[0] - eig[0] / trace).abs() < 1e-8, "{} vs {}", ev[0], eig[0] / trace);
        assert!((ev[1] - eig[1] / trace).abs() < 1e-8);
        assert!(ev[0] >= ev[1]);
    }
}

#[test]
fn mds_round_trips_planar_point_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..8 {
        let points: Vec<[f64; 2]> = (0..8)
            .map(|_| [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)])
            .collect();
        let d = pairwise_distances(&points);
        let ids = (0..8).map(|i| format!("p{i}")).collect();
        let p = classical_mds(ids, &d).unwrap();
        let r = pairwise_distances(&p.coords);
        let sq: f64 = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .map(|(i, j)| (r[i][j] - d[i][j]).powi(2))
            .sum();
        let rms = (sq / 64.0).sqrt();
        assert!(rms <= 1e-6, "rms {rms}");
    }
}
