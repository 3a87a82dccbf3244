#![allow(dead_code, clippy::needless_range_loop)]

use dcov_core::distances::{pairwise_distances, DistanceMatrix, MetricKind, PointSet};
use dcov_core::estimators::PairedSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line(xs: &[f64]) -> DistanceMatrix {
    pairwise_distances(&PointSet::from_scalars(xs).unwrap(), MetricKind::Euclidean).unwrap()
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> PointSet {
    let rows = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    PointSet::new(rows).unwrap()
}

/// Distances from random points under a random metric and dimension.
pub fn random_metric(rng: &mut impl Rng, n: usize) -> DistanceMatrix {
    let dim = rng.random_range(1..=3);
    let metric = if rng.random_bool(0.5) {
        MetricKind::Euclidean
    } else {
        MetricKind::Manhattan
    };
    pairwise_distances(&random_points(rng, n, dim), metric).unwrap()
}

/// Symmetric zero-diagonal matrix with small integer entries; not
/// necessarily a metric.
pub fn random_integer_matrix(rng: &mut impl Rng, n: usize) -> DistanceMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.random_range(0..10) as f64;
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    DistanceMatrix::from_rows(rows).unwrap()
}

pub fn random_sample(rng: &mut impl Rng, n: usize) -> PairedSample {
    if rng.random_bool(0.3) {
        PairedSample::new(random_integer_matrix(rng, n), random_integer_matrix(rng, n)).unwrap()
    } else {
        PairedSample::new(random_metric(rng, n), random_metric(rng, n)).unwrap()
    }
}

/// Metric-space sample (negative type marginals).
pub fn random_metric_sample(rng: &mut impl Rng, n: usize) -> PairedSample {
    PairedSample::new(random_metric(rng, n), random_metric(rng, n)).unwrap()
}

pub fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniform_three(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..3) as f64).collect()
}

pub fn scale(s: &PairedSample) -> f64 {
    (1.0 + s.a().max_abs()) * (1.0 + s.b().max_abs())
}

/// Two-sample Kolmogorov-Smirnov distance between sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
