use std::path::{Path, PathBuf};

use clap::Args;
use dcov_core::distances::{default_validation_tolerance, pairwise_distances, validate_distance_matrix};
use dcov_core::io::{read_matrix_file, read_points_file};
use dcov_core::{DistanceMatrix, MetricKind, PointSet, ValidationLevel};

use crate::CliError;

#[derive(Args, Debug, Clone)]
pub struct MarginArgs {
    /// X observations: a points CSV with header, or a headerless distance
    /// matrix when --metric-x is precomputed
    #[arg(long, value_name = "FILE")]
    pub x: PathBuf,

    /// Y observations, same formats as --x
    #[arg(long, value_name = "FILE")]
    pub y: PathBuf,

    #[command(flatten)]
    pub options: MetricOptions,
}

#[derive(Args, Debug, Clone)]
pub struct MetricOptions {
    /// Metric on X
    #[arg(long, default_value = "euclidean", value_name = "METRIC")]
    pub metric_x: MetricKind,

    /// Metric on Y
    #[arg(long, default_value = "euclidean", value_name = "METRIC")]
    pub metric_y: MetricKind,

    /// Columns of the X points file to use, comma-separated (default: all)
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub x_columns: Option<Vec<String>>,

    /// Columns of the Y points file to use, comma-separated (default: all)
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub y_columns: Option<Vec<String>>,

    /// Also check the triangle inequality on precomputed matrices (O(n^3))
    #[arg(long)]
    pub strict_metric: bool,
}

impl MetricOptions {
    fn level(&self) -> ValidationLevel {
        if self.strict_metric {
            ValidationLevel::Strict
        } else {
            ValidationLevel::Basic
        }
    }
}

pub fn load_points(path: &Path, columns: Option<&[String]>) -> Result<PointSet, CliError> {
    read_points_file(path, columns).map_err(|e| CliError::input(path, e))
}

pub fn load_distances(
    path: &Path,
    metric: MetricKind,
    columns: Option<&[String]>,
    level: ValidationLevel,
) -> Result<DistanceMatrix, CliError> {
    match metric {
        MetricKind::Precomputed => {
            if columns.is_some() {
                return Err(CliError::Config(format!(
                    "{}: column selection does not apply to a precomputed matrix",
                    path.display()
                )));
            }
            let raw = read_matrix_file(path).map_err(|e| CliError::input(path, e))?;
            let tol = default_validation_tolerance(&raw);
            validate_distance_matrix(raw, level, tol).map_err(|e| CliError::input(path, e))
        }
        metric => {
            let points = load_points(path, columns)?;
            pairwise_distances(&points, metric).map_err(|e| CliError::input(path, e))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

pub fn load_margin(path: &Path, side: Side, opts: &MetricOptions) -> Result<DistanceMatrix, CliError> {
    let (metric, columns) = match side {
        Side::X => (opts.metric_x, opts.x_columns.as_deref()),
        Side::Y => (opts.metric_y, opts.y_columns.as_deref()),
    };
    load_distances(path, metric, columns, opts.level())
}

pub fn load_pair(args: &MarginArgs) -> Result<(DistanceMatrix, DistanceMatrix), CliError> {
    let a = load_margin(&args.x, Side::X, &args.options)?;
    let b = load_margin(&args.y, Side::Y, &args.options)?;
    if a.n() != b.n() {
        return Err(CliError::Input(format!(
            "X has {} observations but Y has {}",
            a.n(),
            b.n()
        )));
    }
    Ok((a, b))
}
