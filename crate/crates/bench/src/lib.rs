//! Seeded inputs shared by the benchmarks.

use dcov_core::{pairwise_distances, MetricKind, PairedSample, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` observations of a noisy nonlinear relation between 2D X and 1D Y.
pub fn sample(n: usize, seed: u64) -> PairedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|p| p[0] * p[1] + 0.5 * rng.random_range(-1.0..1.0))
        .collect();
    let a = pairwise_distances(&PointSet::new(xs).unwrap(), MetricKind::Euclidean).unwrap();
    let b = pairwise_distances(&PointSet::from_scalars(&ys).unwrap(), MetricKind::Euclidean).unwrap();
    PairedSample::new(a, b).unwrap()
}
