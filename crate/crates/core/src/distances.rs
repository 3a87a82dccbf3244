//! Distance matrices, their validation, and the finite-sample negative-type
//! diagnostic.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations in R^d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from rows of equal dimension with finite entries.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("point set"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Empty("point dimension"));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    row,
                    expected: dim,
                    found: r.len(),
                });
            }
            for (col, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
            coords.extend_from_slice(r);
        }
        Ok(Self { dim, coords })
    }

    /// One-dimensional point set.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Which metric produced (or will produce) a distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Manhattan,
    /// Distances supplied directly as a matrix.
    Precomputed,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Manhattan => "manhattan",
            MetricKind::Precomputed => "precomputed",
        }
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            MetricKind::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            MetricKind::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            MetricKind::Precomputed => unreachable!("precomputed metric has no point formula"),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(MetricKind::Euclidean),
            "manhattan" => Ok(MetricKind::Manhattan),
            "precomputed" => Ok(MetricKind::Precomputed),
            other => Err(Error::InvalidConfig(format!("unknown metric '{other}'"))),
        }
    }
}

/// Validation depth for externally supplied matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationLevel {
    /// Symmetry, sign, zero diagonal, finiteness.
    #[default]
    Basic,
    /// Basic plus the triangle inequality over all index triples (O(n^3)).
    Strict,
}

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from a row-major buffer that the caller guarantees is valid.
    pub(crate) fn from_raw_unchecked(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    /// Validates nested rows with [`ValidationLevel::Basic`] and the
    /// default tolerance.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let tol = default_validation_tolerance(&rows);
        validate_distance_matrix(rows, ValidationLevel::Basic, tol)
    }

    /// The n x n all-zero matrix (every point coincides).
    pub fn zeros(n: usize) -> Self {
        Self::from_raw_unchecked(n, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Multiplies every distance by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0 && c.is_finite(), "scale must be positive and finite");
        Self::from_raw_unchecked(self.n, self.data.iter().map(|v| v * c).collect())
    }

    /// Restriction to the given indices (repeats allowed).
    pub fn select(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Self::from_raw_unchecked(m, data)
    }
}

/// Tolerance used when none is given: `1e-9 * (1 + max |entry|)`.
pub fn default_validation_tolerance(rows: &[Vec<f64>]) -> f64 {
    let max = rows
        .iter()
        .flatten()
        .filter(|v| v.is_finite())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-9 * (1.0 + max)
}

/// Computes all pairwise distances under a point metric.
pub fn pairwise_distances(points: &PointSet, metric: MetricKind) -> Result<DistanceMatrix> {
    if metric == MetricKind::Precomputed {
        return Err(Error::UnsupportedMetric("precomputed"));
    }
    let n = points.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.distance(points.point(i), points.point(j));
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix::from_raw_unchecked(n, data))
}

/// Checks a raw square matrix and returns it as a [`DistanceMatrix`].
///
/// Deviations within `tol` are repaired: the result is exactly symmetric,
/// has an exactly zero diagonal and no negative entries.
pub fn validate_distance_matrix(raw: Vec<Vec<f64>>, level: ValidationLevel, tol: f64) -> Result<DistanceMatrix> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::Empty("distance matrix"));
    }
    for (row, r) in raw.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                row,
                cols: r.len(),
            });
        }
        for (col, v) in r.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }

    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let dii = raw[i][i];
        if dii.abs() > tol {
            return Err(Error::NonzeroDiagonal { i, value: dii });
        }
        for j in (i + 1)..n {
            let (a, b) = (raw[i][j], raw[j][i]);
            if (a - b).abs() > tol {
                return Err(Error::Asymmetric { i, j, a, b });
            }
            for (value, (r, c)) in [(a, (i, j)), (b, (j, i))] {
                if value < -tol {
                    return Err(Error::NegativeEntry { i: r, j: c, value });
                }
            }
            let d = (0.5 * (a + b)).max(0.0);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    let d = DistanceMatrix::from_raw_unchecked(n, data);

    if level == ValidationLevel::Strict {
        check_triangle(&d, tol)?;
    }
    Ok(d)
}

fn check_triangle(d: &DistanceMatrix, tol: f64) -> Result<()> {
    let n = d.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            for k in 0..n {
                let bound = d.get(i, k) + d.get(k, j);
                if dij > bound + tol {
                    return Err(Error::TriangleViolation { i, j, k, dij, bound });
                }
            }
        }
    }
    Ok(())
}

/// Outcome of [`negative_type_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeTypeReport {
    /// True when the base-point kernel is positive semidefinite up to
    /// `tolerance`. A necessary condition only: it says nothing about
    /// points outside the sample.
    pub is_negative_type_on_sample: bool,
    pub min_eigenvalue: f64,
    /// Zero-based index of the base point.
    pub base_point_index: usize,
    pub tolerance: f64,
}

/// Builds `K[i][j] = d(i, o) + d(j, o) - d(i, j)` for base point `o`.
pub fn base_point_kernel(d: &DistanceMatrix, base: usize) -> Result<DMatrix<f64>> {
    let n = d.n();
    if base >= n {
        return Err(Error::IndexOutOfBounds { index: base, n });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        d.get(i, base) + d.get(j, base) - d.get(i, j)
    }))
}

/// Tests whether the base-point kernel of `d` is positive semidefinite.
///
/// `tol = None` selects `1e-9 * (1 + max |K|)`. The verdict does not depend
/// on `base`; the eigenvalue itself does.
pub fn negative_type_check(d: &DistanceMatrix, base: usize, tol: Option<f64>) -> Result<NegativeTypeReport> {
    let k = base_point_kernel(d, base)?;
    let tolerance = tol.unwrap_or_else(|| 1e-9 * (1.0 + k.amax()));
    let min_eigenvalue = if k.nrows() == 1 {
        k[(0, 0)]
    } else {
        SymmetricEigen::new(k).eigenvalues.min()
    };
    Ok(NegativeTypeReport {
        is_negative_type_on_sample: min_eigenvalue >= -tolerance,
        min_eigenvalue,
        base_point_index: base,
        tolerance,
    })
}

/// Path metric of the complete bipartite graph K_{2,3}: a metric that is
/// not of negative type.
pub fn k23_path_metric() -> DistanceMatrix {
    let side = [0, 0, 1, 1, 1];
    let n = side.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                data[i * n + j] = if side[i] == side[j] { 2.0 } else { 1.0 };
            }
        }
    }
    DistanceMatrix::from_raw_unchecked(n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[&[f64]]) -> PointSet {
        PointSet::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_point() {
        let d = pairwise_distances(&pts(&[&[0.0]]), MetricKind::Euclidean).unwrap();
        assert_eq!(d.to_rows(), vec![vec![0.0]]);
    }

    #[test]
    fn euclidean_1d() {
        let d = pairwise_distances(&pts(&[&[0.0], &[1.0], &[3.0]]), MetricKind::Euclidean).unwrap();
        assert_eq!(
            d.to_rows(),
            vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]]
        );
    }

    #[test]
    fn manhattan_2d() {
        let d = pairwise_distances(&pts(&[&[0.0, 0.0], &[1.0, 1.0]]), MetricKind::Manhattan).unwrap();
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(1, 0), 2.0);
    }

    #[test]
    fn precomputed_has_no_point_formula() {
        let err = pairwise_distances(&pts(&[&[0.0]]), MetricKind::Precomputed).unwrap_err();
        assert_eq!(err, Error::UnsupportedMetric("precomputed"));
    }

    #[test]
    fn point_set_errors() {
        assert!(matches!(
            PointSet::new(vec![vec![0.0, 1.0], vec![0.0]]),
            Err(Error::DimensionMismatch { row: 1, .. })
        ));
        assert!(matches!(
            PointSet::new(vec![vec![f64::NAN]]),
            Err(Error::NonFinite { row: 0, col: 0 })
        ));
        assert!(matches!(PointSet::new(vec![]), Err(Error::Empty(_))));
    }

    #[test]
    fn validate_accepts_smallest_metric() {
        let d = validate_distance_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]], ValidationLevel::Strict, 1e-9).unwrap();
        assert_eq!(d.n(), 2);
    }

    #[test]
    fn validate_rejects_asymmetry() {
        let err =
            validate_distance_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]], ValidationLevel::Basic, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { i: 0, j: 1, .. }));
    }

    #[test]
    fn validate_rejects_triangle_violation_only_when_strict() {
        let raw = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(validate_distance_matrix(raw.clone(), ValidationLevel::Basic, 1e-9).is_ok());
        let err = validate_distance_matrix(raw, ValidationLevel::Strict, 1e-9).unwrap_err();
        assert!(matches!(err, Error::TriangleViolation { i: 0, j: 2, k: 1, .. }));
    }

    #[test]
    fn validate_rejects_negative_and_diagonal() {
        let err =
            validate_distance_matrix(vec![vec![0.0, -1.0], vec![-1.0, 0.0]], ValidationLevel::Basic, 1e-9).unwrap_err();
        assert!(matches!(err, Error::NegativeEntry { .. }));
        let err =
            validate_distance_matrix(vec![vec![0.5, 1.0], vec![1.0, 0.0]], ValidationLevel::Basic, 1e-9).unwrap_err();
        assert!(matches!(err, Error::NonzeroDiagonal { i: 0, .. }));
        let err = validate_distance_matrix(vec![vec![0.0, 1.0], vec![1.0]], ValidationLevel::Basic, 1e-9).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
    }

    #[test]
    fn validate_repairs_within_tolerance() {
        let d = validate_distance_matrix(
            vec![vec![1e-12, 1.0 + 1e-12], vec![1.0, 0.0]],
            ValidationLevel::Basic,
            1e-9,
        )
        .unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(0, 1), d.get(1, 0));
    }

    #[test]
    fn negative_type_single_point() {
        let r = negative_type_check(&DistanceMatrix::zeros(1), 0, None).unwrap();
        assert!(r.is_negative_type_on_sample);
        assert_eq!(r.min_eigenvalue, 0.0);
    }

    #[test]
    fn negative_type_line() {
        let d = pairwise_distances(&pts(&[&[0.0], &[1.0], &[2.0]]), MetricKind::Euclidean).unwrap();
        let k = base_point_kernel(&d, 0).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 0., 2., 2., 0., 2., 4.]);
        assert_eq!(k, expected);
        let r = negative_type_check(&d, 0, None).unwrap();
        assert!(r.is_negative_type_on_sample);
        // eigenvalues of [[2,2],[2,4]] are 3 +- sqrt(5) > 0, plus the zero row
        assert!(r.min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn k23_fails() {
        let d = k23_path_metric();
        let alpha = [-3.0, -3.0, 2.0, 2.0, 2.0];
        let mut q = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                q += alpha[i] * alpha[j] * d.get(i, j);
            }
        }
        assert_eq!(q, 12.0);
        for base in 0..5 {
            let r = negative_type_check(&d, base, None).unwrap();
            assert!(!r.is_negative_type_on_sample, "base {base}");
            assert!(r.min_eigenvalue < 0.0);
        }
    }

    #[test]
    fn bad_base_index() {
        let d = DistanceMatrix::zeros(2);
        assert_eq!(
            negative_type_check(&d, 2, None).unwrap_err(),
            Error::IndexOutOfBounds { index: 2, n: 2 }
        );
    }

    #[test]
    fn metric_kind_parses() {
        assert_eq!("Euclidean".parse::<MetricKind>().unwrap(), MetricKind::Euclidean);
        assert!("cosine".parse::<MetricKind>().is_err());
    }
}
