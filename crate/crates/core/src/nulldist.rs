//! Approximations of the null law of the scaled estimators: the bootstrap
//! built on the empirically modified second-order kernel, and a spectral
//! plug-in of the weighted chi-square limit.
//!
//! Replicate `j` always draws from ChaCha stream `j` of the master seed, so
//! results do not depend on how replicates are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centering::{double_center, grand_mean};
use crate::error::{Error, Result};
use crate::estimators::PairedSample;
use crate::kernels::{h2_empirical_matrix, H2Matrix};
use crate::summation::{sum, Neumaier};

pub const DEFAULT_BOOTSTRAP_REPS: usize = 1000;
pub const DEFAULT_SPECTRAL_REPS: usize = 4000;

/// Relative cutoff below which eigenvalues of the plug-in operator are
/// treated as zero.
pub const EIGEN_CUTOFF: f64 = 1e-12;

/// How a null distribution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMethod {
    Bootstrap,
    SpectralU,
    SpectralV,
}

impl NullMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullMethod::Bootstrap => "bootstrap",
            NullMethod::SpectralU => "spectral_u",
            NullMethod::SpectralV => "spectral_v",
        }
    }
}

impl fmt::Display for NullMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NullMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "bootstrap" => Ok(NullMethod::Bootstrap),
            "spectral_u" => Ok(NullMethod::SpectralU),
            "spectral_v" => Ok(NullMethod::SpectralV),
            other => Err(Error::InvalidConfig(format!("unknown null method '{other}'"))),
        }
    }
}

/// Sorted draws from an approximate null law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullDistribution {
    draws: Vec<f64>,
    method: NullMethod,
    seed: u64,
}

impl NullDistribution {
    fn from_unsorted(mut draws: Vec<f64>, method: NullMethod, seed: u64) -> Self {
        assert!(!draws.is_empty(), "null distribution needs at least one draw");
        draws.sort_by(f64::total_cmp);
        Self { draws, method, seed }
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn method(&self) -> NullMethod {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.draws.len()
    }

    /// One draw per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.draws.len() * 20);
        for d in &self.draws {
            out.push_str(&d.to_string());
            out.push('\n');
        }
        out
    }

    /// Number of draws `>= x`.
    pub fn count_at_least(&self, x: f64) -> usize {
        self.draws.len() - self.draws.partition_point(|d| *d < x)
    }
}

fn replicate_rng(seed: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    rng
}

/// `(30/n) sum_{k<l} H[idx_k][idx_l]` for one resample `idx`.
pub fn bootstrap_statistic(h: &H2Matrix, idx: &[usize]) -> f64 {
    let n = h.n();
    let mut counts = vec![0u32; n];
    for &i in idx {
        counts[i] += 1;
    }
    let support: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    // sum over unordered pairs of positions = (c^T H c - sum_i c_i H_ii) / 2
    let mut acc = Neumaier::new();
    for &i in &support {
        let row = h.row(i);
        let ci = counts[i] as f64;
        let mut inner = Neumaier::new();
        for &j in &support {
            inner.add(counts[j] as f64 * row[j]);
        }
        acc.add(ci * inner.total() - ci * row[i]);
    }
    30.0 / idx.len() as f64 * 0.5 * acc.total()
}

/// Resampling approximation of the null law of `n * U`.
pub fn bootstrap_null(s: &PairedSample, m: usize, seed: u64) -> Result<NullDistribution> {
    let n = s.n();
    if n < 2 {
        return Err(Error::InvalidConfig("bootstrap needs n >= 2".into()));
    }
    if m == 0 {
        return Err(Error::InvalidConfig("number of replicates must be positive".into()));
    }
    let h = h2_empirical_matrix(s.a(), s.b());
    let draws: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = replicate_rng(seed, j);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            bootstrap_statistic(&h, &idx)
        })
        .collect();
    Ok(NullDistribution::from_unsorted(draws, NullMethod::Bootstrap, seed))
}

/// Which limit law a spectral model targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralLaw {
    /// `sum lambda_i (W_i^2 - 1)`
    U,
    /// `sum lambda_i (W_i^2 - 1) + D(mu) D(nu)`
    V,
}

/// Eigenvalues of the plug-in integral operator plus the law's shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralModel {
    /// Nonzero eigenvalues, largest magnitude first.
    pub lambdas: Vec<f64>,
    pub shift: f64,
    /// Sum of all eigenvalues before truncation.
    pub eigen_sum: f64,
    /// `(1/n) sum_i Ã_ii B̃_ii`.
    pub trace: f64,
}

/// `(1/n) (Ã ∘ B̃)`: the operator with kernel `d_mu d_nu` under the empirical
/// measure.
pub fn spectral_matrix(s: &PairedSample) -> DMatrix<f64> {
    let n = s.n();
    let ca = double_center(s.a());
    let cb = double_center(s.b());
    let inv = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| inv * ca.get(i, j) * cb.get(i, j))
}

pub fn spectral_eigenvalues(s: &PairedSample, law: SpectralLaw) -> Result<SpectralModel> {
    let n = s.n();
    if n < 2 {
        return Err(Error::InvalidConfig("spectral approximation needs n >= 2".into()));
    }
    let m = spectral_matrix(s);
    let trace = sum(m.diagonal().iter().copied());
    let cutoff = EIGEN_CUTOFF * m.amax() * n as f64;
    let eig = SymmetricEigen::new(m).eigenvalues;
    let eigen_sum = sum(eig.iter().copied());
    let mut lambdas: Vec<f64> = eig.iter().copied().filter(|l| l.abs() > cutoff).collect();
    lambdas.sort_by(|x, y| y.abs().total_cmp(&x.abs()).then(y.total_cmp(x)));
    let shift = match law {
        SpectralLaw::U => 0.0,
        SpectralLaw::V => grand_mean(s.a()) * grand_mean(s.b()),
    };
    Ok(SpectralModel {
        lambdas,
        shift,
        eigen_sum,
        trace,
    })
}

/// Draws of `sum lambda_i (W_i^2 - 1) + shift` with `W_i` iid standard normal.
pub fn sample_weighted_chisq(
    model: &SpectralModel,
    m: usize,
    seed: u64,
    method: NullMethod,
) -> Result<NullDistribution> {
    if m == 0 {
        return Err(Error::InvalidConfig("number of draws must be positive".into()));
    }
    let draws: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = replicate_rng(seed, j);
            let mut acc = Neumaier::new();
            for l in &model.lambdas {
                let w: f64 = rng.sample(StandardNormal);
                acc.add(l * (w * w - 1.0));
            }
            acc.total() + model.shift
        })
        .collect();
    Ok(NullDistribution::from_unsorted(draws, method, seed))
}

/// Spectral approximation of the null law of `n * U` or `n * V`.
pub fn spectral_null(s: &PairedSample, law: SpectralLaw, m: usize, seed: u64) -> Result<NullDistribution> {
    let model = spectral_eigenvalues(s, law)?;
    let method = match law {
        SpectralLaw::U => NullMethod::SpectralU,
        SpectralLaw::V => NullMethod::SpectralV,
    };
    sample_weighted_chisq(&model, m, seed, method)
}

/// Left-continuous generalized inverse of the empirical CDF:
/// the smallest draw `x` with `F(x) >= p`.
pub fn quantile(nd: &NullDistribution, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let m = nd.m();
    let mut k = ((p * m as f64).ceil() as usize).clamp(1, m);
    // p * m can round up past an exact integer
    if k > 1 && (k - 1) as f64 / m as f64 >= p {
        k -= 1;
    }
    Ok(nd.draws[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::{pairwise_distances, DistanceMatrix, MetricKind, PointSet};

    fn line(xs: &[f64]) -> DistanceMatrix {
        pairwise_distances(&PointSet::from_scalars(xs).unwrap(), MetricKind::Euclidean).unwrap()
    }

    fn nd(draws: &[f64]) -> NullDistribution {
        NullDistribution::from_unsorted(draws.to_vec(), NullMethod::Bootstrap, 0)
    }

    #[test]
    fn quantile_examples() {
        let d = nd(&[3.0, 1.0, 4.0, 2.0]);
        assert_eq!(quantile(&d, 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&d, 0.95).unwrap(), 4.0);
        assert_eq!(quantile(&d, 0.25).unwrap(), 1.0);
        assert_eq!(quantile(&d, 0.2500001).unwrap(), 2.0);
        let c = nd(&[7.0; 5]);
        for p in [0.01, 0.5, 0.99] {
            assert_eq!(quantile(&c, p).unwrap(), 7.0);
        }
        assert!(matches!(quantile(&d, 1.0), Err(Error::InvalidProbability(_))));
        assert!(matches!(quantile(&d, 0.0), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn quantile_exact_multiple() {
        // 0.95 * 300 rounds to 285.00000000000006
        let d = nd(&(0..300).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(quantile(&d, 0.95).unwrap(), 284.0);
    }

    #[test]
    fn count_at_least_counts_ties() {
        let d = nd(&[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(d.count_at_least(0.0), 4);
        assert_eq!(d.count_at_least(1.0), 2);
        assert_eq!(d.count_at_least(2.5), 0);
    }

    #[test]
    fn bootstrap_identical_points() {
        let z = DistanceMatrix::zeros(5);
        let s = PairedSample::new(z.clone(), z).unwrap();
        let d = bootstrap_null(&s, 50, 1).unwrap();
        assert!(d.draws().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bootstrap_statistic_matches_pair_sum() {
        let s = PairedSample::new(line(&[0.0, 1.0, 3.5]), line(&[2.0, 0.5, 1.0])).unwrap();
        let h = h2_empirical_matrix(s.a(), s.b());
        let tau = bootstrap_statistic(&h, &[0, 1, 2]);
        let expected = 10.0 * (h.get(0, 1) + h.get(0, 2) + h.get(1, 2));
        assert!((tau - expected).abs() < 1e-12);
        let tau = bootstrap_statistic(&h, &[1, 1, 0]);
        let expected = 10.0 * (h.get(1, 1) + 2.0 * h.get(1, 0));
        assert!((tau - expected).abs() < 1e-12);
    }

    #[test]
    fn spectral_two_points() {
        let d = line(&[0.0, 1.0]);
        let s = PairedSample::new(d.clone(), d).unwrap();
        let u = spectral_eigenvalues(&s, SpectralLaw::U).unwrap();
        assert_eq!(u.lambdas.len(), 1);
        assert!((u.lambdas[0] - 0.25).abs() < 1e-15);
        assert_eq!(u.shift, 0.0);
        let v = spectral_eigenvalues(&s, SpectralLaw::V).unwrap();
        assert_eq!(v.shift, 0.25);
    }

    #[test]
    fn spectral_constant_y_is_point_mass() {
        let s = PairedSample::new(line(&[0.0, 1.0, 4.0]), DistanceMatrix::zeros(3)).unwrap();
        let u = spectral_eigenvalues(&s, SpectralLaw::U).unwrap();
        assert!(u.lambdas.is_empty());
        let d = sample_weighted_chisq(&u, 20, 9, NullMethod::SpectralU).unwrap();
        assert!(d.draws().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn chisq_moments() {
        let model = SpectralModel {
            lambdas: vec![1.0],
            shift: 0.0,
            eigen_sum: 1.0,
            trace: 1.0,
        };
        let d = sample_weighted_chisq(&model, 100_000, 2024, NullMethod::SpectralU).unwrap();
        let m = d.m() as f64;
        let mean = sum(d.draws().iter().copied()) / m;
        let var = sum(d.draws().iter().map(|x| (x - mean).powi(2))) / (m - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn shifted_point_mass() {
        let model = SpectralModel {
            lambdas: vec![],
            shift: 1.5,
            eigen_sum: 0.0,
            trace: 0.0,
        };
        let d = sample_weighted_chisq(&model, 7, 3, NullMethod::SpectralV).unwrap();
        assert_eq!(d.draws(), &[1.5; 7]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [NullMethod::Bootstrap, NullMethod::SpectralU, NullMethod::SpectralV] {
            assert_eq!(m.as_str().parse::<NullMethod>().unwrap(), m);
        }
        assert_eq!("spectral-u".parse::<NullMethod>().unwrap(), NullMethod::SpectralU);
    }
}
