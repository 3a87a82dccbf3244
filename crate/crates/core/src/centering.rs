//! Mean distances, double centering, and exact distance covariance of
//! finitely supported joint measures.

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};
use crate::summation::{sum, Neumaier};

/// Support points with weight below this are dropped before any computation.
pub const WEIGHT_PRUNE_THRESHOLD: f64 = 1e-15;

/// Allowed deviation of the total mass from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Double-centered distance matrix together with the means used to build it.
///
/// `a_tilde[i][j] = d[i][j] - row_means[i] - row_means[j] + grand_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix {
    n: usize,
    a_tilde: Vec<f64>,
    row_means: Vec<f64>,
    grand_mean: f64,
}

impl CenteredMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a_tilde[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a_tilde[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a_tilde
    }

    /// Mean distance from each point to the (weighted) sample.
    pub fn row_means(&self) -> &[f64] {
        &self.row_means
    }

    /// Mean of all pairwise distances.
    pub fn grand_mean(&self) -> f64 {
        self.grand_mean
    }
}

/// Row means `(1/n) sum_j d[i][j]`: the mean distance function evaluated at
/// every sample point under the empirical measure.
pub fn a_mu_empirical(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.n() as f64;
    (0..d.n()).map(|i| sum(d.row(i).iter().copied()) / n).collect()
}

/// `(1/n^2) sum_ij d[i][j]`.
pub fn grand_mean(d: &DistanceMatrix) -> f64 {
    let n = d.n() as f64;
    sum(d.as_slice().iter().copied()) / (n * n)
}

/// Double centering under the empirical (uniform) measure.
pub fn double_center(d: &DistanceMatrix) -> CenteredMatrix {
    let w = vec![1.0 / d.n() as f64; d.n()];
    center_weighted(d, &w)
}

/// Double centering under a weighted measure on the rows of `d`.
///
/// Row means and the grand mean are weighted by `w`; the centered matrix is
/// still indexed by all support points.
pub fn center_weighted(d: &DistanceMatrix, w: &[f64]) -> CenteredMatrix {
    let n = d.n();
    assert_eq!(w.len(), n, "weight vector length must match matrix size");
    let row_means = weighted_row_means(d, w);
    let grand_mean = sum(row_means.iter().zip(w).map(|(a, wi)| a * wi));
    let mut a_tilde = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a_tilde[i * n + j] = d.get(i, j) - (row_means[i] + row_means[j]) + grand_mean;
        }
    }
    CenteredMatrix {
        n,
        a_tilde,
        row_means,
        grand_mean,
    }
}

pub(crate) fn weighted_row_means(d: &DistanceMatrix, w: &[f64]) -> Vec<f64> {
    (0..d.n())
        .map(|i| sum(d.row(i).iter().zip(w).map(|(x, wj)| x * wj)))
        .collect()
}

/// Probability measure on finitely many support pairs `(x_k, y_k)`.
///
/// Both marginals are described by distance matrices over the same index
/// set; repeated support points are allowed (their distance is zero).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJointMeasure {
    dx: DistanceMatrix,
    dy: DistanceMatrix,
    weights: Vec<f64>,
}

impl DiscreteJointMeasure {
    /// Validates sizes and weights, then drops negligible support points.
    pub fn new(dx: DistanceMatrix, dy: DistanceMatrix, weights: Vec<f64>) -> Result<Self> {
        if dx.n() != dy.n() {
            return Err(Error::SizeMismatch { x: dx.n(), y: dy.n() });
        }
        if weights.len() != dx.n() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} support points",
                weights.len(),
                dx.n()
            )));
        }
        let keep = checked_support(&weights)?;
        Ok(Self {
            dx: dx.select(&keep),
            dy: dy.select(&keep),
            weights: keep.iter().map(|&k| weights[k]).collect(),
        })
    }

    /// Product of two marginal measures realized on the full support grid.
    ///
    /// Grid point `k = i * mu.len() + j` carries `(x_i, y_j)` with mass
    /// `mu[i] * nu[j]`.
    pub fn product(dx: &DistanceMatrix, mu: &[f64], dy: &DistanceMatrix, nu: &[f64]) -> Result<Self> {
        if mu.len() != dx.n() || nu.len() != dy.n() {
            return Err(Error::InvalidWeights(
                "marginal weight length does not match its support".into(),
            ));
        }
        let (p, q) = (dx.n(), dy.n());
        let grid_x: Vec<usize> = (0..p * q).map(|k| k / q).collect();
        let grid_y: Vec<usize> = (0..p * q).map(|k| k % q).collect();
        let weights = (0..p * q).map(|k| mu[k / q] * nu[k % q]).collect();
        Self::new(dx.select(&grid_x), dy.select(&grid_y), weights)
    }

    /// Uniform mass on the rows of a paired sample.
    pub fn empirical(dx: DistanceMatrix, dy: DistanceMatrix) -> Result<Self> {
        let n = dx.n();
        Self::new(dx, dy, vec![1.0 / n as f64; n])
    }

    pub fn dx(&self) -> &DistanceMatrix {
        &self.dx
    }

    pub fn dy(&self) -> &DistanceMatrix {
        &self.dy
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }
}

/// Returns the indices of non-negligible weights after validating the vector.
fn checked_support(weights: &[f64]) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::Empty("weights"));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weight {w} is not a finite nonnegative number"
        )));
    }
    let total = sum(weights.iter().copied());
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    Ok((0..weights.len())
        .filter(|&k| weights[k] >= WEIGHT_PRUNE_THRESHOLD)
        .collect())
}

fn weighted_pair_sum(w: &[f64], mut f: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut acc = Neumaier::new();
    for (k, wk) in w.iter().enumerate() {
        for (l, wl) in w.iter().enumerate() {
            acc.add(wk * wl * f(k, l));
        }
    }
    acc.total()
}

/// Exact distance covariance of a finitely supported joint measure.
pub fn dcov_discrete(theta: &DiscreteJointMeasure) -> f64 {
    let w = theta.weights();
    let cx = center_weighted(theta.dx(), w);
    let cy = center_weighted(theta.dy(), w);
    weighted_pair_sum(w, |k, l| cx.get(k, l) * cy.get(k, l))
}

/// Exact distance variance `dcov(X, X)` of a finitely supported measure.
pub fn dvar_discrete(dx: &DistanceMatrix, weights: &[f64]) -> Result<f64> {
    if weights.len() != dx.n() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} support points",
            weights.len(),
            dx.n()
        )));
    }
    let keep = checked_support(weights)?;
    let dx = dx.select(&keep);
    let w: Vec<f64> = keep.iter().map(|&k| weights[k]).collect();
    let c = center_weighted(&dx, &w);
    Ok(weighted_pair_sum(&w, |k, l| c.get(k, l).powi(2)))
}

/// Weighted mean distance `D(mu)` of one marginal.
pub fn grand_mean_weighted(d: &DistanceMatrix, w: &[f64]) -> f64 {
    sum(weighted_row_means(d, w).iter().zip(w).map(|(a, wi)| a * wi))
}
