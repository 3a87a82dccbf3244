//! Plug-in (V) and unbiased (U) estimators of distance covariance.

use crate::centering::{a_mu_empirical, double_center, grand_mean};
use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};
use crate::kernels::h_kernel;
use crate::reduction::h_terms;
use crate::summation::{sum, Neumaier};

/// Smallest sample size for which the U-statistic is defined.
pub const U_MIN_N: usize = 7;

/// Largest n accepted by the literal six-fold sums.
pub const NAIVE_MAX_N: usize = 8;

/// Paired observations described by their two marginal distance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    a: DistanceMatrix,
    b: DistanceMatrix,
}

impl PairedSample {
    pub fn new(a: DistanceMatrix, b: DistanceMatrix) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::SizeMismatch { x: a.n(), y: b.n() });
        }
        if a.n() == 0 {
            return Err(Error::Empty("paired sample"));
        }
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn a(&self) -> &DistanceMatrix {
        &self.a
    }

    pub fn b(&self) -> &DistanceMatrix {
        &self.b
    }

    /// Same pairs with the X marginal paired with itself.
    pub fn x_with_x(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.a.clone(),
        }
    }

    pub fn y_with_y(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.b.clone(),
        }
    }

    /// Rows picked by `idx` (repeats allowed): a resample of the pairs.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            a: self.a.select(idx),
            b: self.b.select(idx),
        }
    }
}

/// Plug-in estimator, i.e. the distance covariance of the empirical measure:
///
/// `(1/n^2) sum A∘B + mean(A) mean(B) - (2/n^3) sum_ijk A_ij B_ik`.
pub fn v_statistic(s: &PairedSample) -> f64 {
    let n = s.n() as f64;
    let (a, b) = (s.a(), s.b());
    let ab = sum(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y)) / (n * n);
    let ra = a_mu_empirical(a);
    let rb = a_mu_empirical(b);
    let cross = sum(ra.iter().zip(&rb).map(|(x, y)| x * y)) / n;
    ab + grand_mean(a) * grand_mean(b) - 2.0 * cross
}

/// `(1/n^2) sum_ij Ã_ij B̃_ij` with double-centered matrices.
pub fn v_statistic_centered(s: &PairedSample) -> f64 {
    let n = s.n() as f64;
    let ca = double_center(s.a());
    let cb = double_center(s.b());
    sum(ca.as_slice().iter().zip(cb.as_slice()).map(|(x, y)| x * y)) / (n * n)
}

/// Sums of `A[u,v] B[r,s]` over assignments of distinct sample indices to
/// the positions a product touches, for 2, 3 and 4 touched positions.
#[derive(Debug, Clone, Copy)]
struct DistinctSums {
    two: f64,
    three: f64,
    four: f64,
}

fn distinct_sums(s: &PairedSample) -> DistinctSums {
    let n = s.n();
    let (a, b) = (s.a(), s.b());
    let ab = sum(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y));
    let ra: Vec<f64> = (0..n).map(|i| sum(a.row(i).iter().copied())).collect();
    let rb: Vec<f64> = (0..n).map(|i| sum(b.row(i).iter().copied())).collect();
    let rr = sum(ra.iter().zip(&rb).map(|(x, y)| x * y));
    let total_a = sum(ra.iter().copied());
    let total_b = sum(rb.iter().copied());
    // Zero diagonals make every coincidence inside one edge vanish, so only
    // coincidences across the two edges need removing.
    DistinctSums {
        two: ab,
        three: rr - ab,
        four: total_a * total_b - 4.0 * rr + 2.0 * ab,
    }
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Unbiased estimator: mean of `h` over ordered 6-tuples of distinct indices.
///
/// Each of the 16 products in `h` touches 2, 3 or 4 positions; summing it
/// over distinct tuples gives the distinct-index sum of its touched
/// positions times the number of ways to fill the untouched ones.
pub fn u_statistic(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    if n < U_MIN_N {
        return Err(Error::SampleTooSmall { n, min: U_MIN_N });
    }
    let sums = distinct_sums(s);
    let mut acc = Neumaier::new();
    for (term, coef) in h_terms() {
        let k = term.arity();
        let inner = match k {
            2 => sums.two,
            3 => sums.three,
            _ => sums.four,
        };
        acc.add(coef * inner / falling(n, k));
    }
    Ok(acc.total())
}

fn check_naive(n: usize) -> Result<()> {
    if n > NAIVE_MAX_N {
        return Err(Error::TooLargeForNaive { n, max: NAIVE_MAX_N });
    }
    Ok(())
}

fn for_each_tuple(n: usize, mut f: impl FnMut(&[usize; 6])) {
    let mut t = [0usize; 6];
    loop {
        f(&t);
        let mut pos = 5;
        loop {
            t[pos] += 1;
            if t[pos] < n {
                break;
            }
            t[pos] = 0;
            if pos == 0 {
                return;
            }
            pos -= 1;
        }
    }
}

/// `n^-6` times the sum of `h` over all `n^6` index tuples.
pub fn v_statistic_naive(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    check_naive(n)?;
    let mut acc = Neumaier::new();
    for_each_tuple(n, |t| acc.add(h_kernel(s.a(), s.b(), t)));
    Ok(acc.total() / (n as f64).powi(6))
}

/// Mean of `h` over ordered tuples of six distinct indices.
pub fn u_statistic_naive(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    if n < U_MIN_N {
        return Err(Error::SampleTooSmall { n, min: U_MIN_N });
    }
    check_naive(n)?;
    let mut acc = Neumaier::new();
    for_each_tuple(n, |t| {
        let distinct = (0..6).all(|i| (i + 1..6).all(|j| t[i] != t[j]));
        if distinct {
            acc.add(h_kernel(s.a(), s.b(), t));
        }
    });
    Ok(acc.total() / falling(n, 6))
}
