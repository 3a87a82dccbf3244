//! The independence test: statistic, null approximation, threshold,
//! p-value, decision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distances::{negative_type_check, DistanceMatrix, MetricKind};
use crate::error::{Error, Result};
use crate::estimators::{u_statistic, v_statistic, PairedSample, U_MIN_N};
use crate::nulldist::{bootstrap_null, quantile, spectral_null, NullDistribution, SpectralLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Unbiased, distinct-index estimator.
    U,
    /// Plug-in estimator.
    V,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" => Ok(Estimator::U),
            "v" => Ok(Estimator::V),
            other => Err(Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::U => "u",
            Estimator::V => "v",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Bootstrap,
    Spectral,
}

impl FromStr for ThresholdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bootstrap" => Ok(ThresholdMethod::Bootstrap),
            "spectral" => Ok(ThresholdMethod::Spectral),
            other => Err(Error::InvalidConfig(format!("unknown threshold method '{other}'"))),
        }
    }
}

impl fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMethod::Bootstrap => "bootstrap",
            ThresholdMethod::Spectral => "spectral",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub estimator: Estimator,
    pub threshold_method: ThresholdMethod,
    pub alpha: f64,
    /// Number of null draws.
    pub m: usize,
    pub seed: u64,
    pub metric_x: MetricKind,
    pub metric_y: MetricKind,
}

impl TestConfig {
    pub fn new(estimator: Estimator, threshold_method: ThresholdMethod, alpha: f64, m: usize, seed: u64) -> Self {
        Self {
            estimator,
            threshold_method,
            alpha,
            m,
            seed,
            metric_x: MetricKind::Precomputed,
            metric_y: MetricKind::Precomputed,
        }
    }

    pub fn with_metrics(mut self, x: MetricKind, y: MetricKind) -> Self {
        self.metric_x = x;
        self.metric_y = y;
        self
    }

    /// Checks the configuration against a sample of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("number of null draws must be positive".into()));
        }
        if self.estimator == Estimator::V && self.threshold_method == ThresholdMethod::Bootstrap {
            return Err(Error::InvalidConfig(
                "the bootstrap threshold is only available for the u estimator; use --threshold spectral with v".into(),
            ));
        }
        if self.estimator == Estimator::U && n < U_MIN_N {
            return Err(Error::SampleTooSmall { n, min: U_MIN_N });
        }
        if n < 2 {
            return Err(Error::InvalidConfig("the test needs at least two observations".into()));
        }
        Ok(())
    }
}

/// Outcome of [`run_test`]; serializes with fixed field names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub n: usize,
    pub estimator: Estimator,
    pub threshold_method: ThresholdMethod,
    pub alpha: f64,
    pub m: usize,
    pub seed: u64,
    pub statistic_raw: f64,
    /// `n * statistic_raw`
    pub statistic_scaled: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub negative_type_warning: Option<String>,
}

fn marginal_warning(name: &str, d: &DistanceMatrix, metric: MetricKind) -> Result<Option<String>> {
    // Euclidean and Manhattan distances are of negative type.
    if metric != MetricKind::Precomputed {
        return Ok(None);
    }
    let report = negative_type_check(d, 0, None)?;
    Ok((!report.is_negative_type_on_sample).then(|| {
        format!(
            "{name} distances are not of negative type on the sample (min eigenvalue {:e}); \
             zero distance covariance does not certify independence",
            report.min_eigenvalue
        )
    }))
}

/// Null draws for the configured estimator and threshold method.
pub fn null_distribution(s: &PairedSample, cfg: &TestConfig) -> Result<NullDistribution> {
    match (cfg.estimator, cfg.threshold_method) {
        (Estimator::U, ThresholdMethod::Bootstrap) => bootstrap_null(s, cfg.m, cfg.seed),
        (Estimator::U, ThresholdMethod::Spectral) => spectral_null(s, SpectralLaw::U, cfg.m, cfg.seed),
        (Estimator::V, ThresholdMethod::Spectral) => spectral_null(s, SpectralLaw::V, cfg.m, cfg.seed),
        (Estimator::V, ThresholdMethod::Bootstrap) => Err(Error::InvalidConfig(
            "the bootstrap threshold is only available for the u estimator".into(),
        )),
    }
}

/// Runs the test. Rejects when `n * statistic` strictly exceeds the
/// `(1 - alpha)` quantile of the null draws; the p-value is
/// `(1 + #{draws >= statistic}) / (m + 1)`.
pub fn run_test(s: &PairedSample, cfg: &TestConfig) -> Result<TestReport> {
    let n = s.n();
    cfg.validate(n)?;
    let statistic_raw = match cfg.estimator {
        Estimator::U => u_statistic(s)?,
        Estimator::V => v_statistic(s),
    };
    let statistic_scaled = n as f64 * statistic_raw;
    let nd = null_distribution(s, cfg)?;
    let threshold = quantile(&nd, 1.0 - cfg.alpha)?;
    let exceed = nd.count_at_least(statistic_scaled);
    let p_value = (1 + exceed) as f64 / (nd.m() + 1) as f64;

    let warnings: Vec<String> = [
        marginal_warning("X", s.a(), cfg.metric_x)?,
        marginal_warning("Y", s.b(), cfg.metric_y)?,
    ]
    .into_iter()
    .flatten()
    .collect();

    Ok(TestReport {
        n,
        estimator: cfg.estimator,
        threshold_method: cfg.threshold_method,
        alpha: cfg.alpha,
        m: nd.m(),
        seed: cfg.seed,
        statistic_raw,
        statistic_scaled,
        threshold,
        p_value,
        reject: statistic_scaled > threshold,
        negative_type_warning: (!warnings.is_empty()).then(|| warnings.join("; ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::{k23_path_metric, pairwise_distances, PointSet};

    fn line(xs: &[f64]) -> DistanceMatrix {
        pairwise_distances(&PointSet::from_scalars(xs).unwrap(), MetricKind::Euclidean).unwrap()
    }

    fn sample(xs: &[f64], ys: &[f64]) -> PairedSample {
        PairedSample::new(line(xs), line(ys)).unwrap()
    }

    #[test]
    fn constant_y_never_rejects() {
        let xs: Vec<f64> = (0..12).map(|i| (i * 7 % 5) as f64).collect();
        let s = PairedSample::new(line(&xs), DistanceMatrix::zeros(12)).unwrap();
        for est in [Estimator::U, Estimator::V] {
            let cfg = TestConfig::new(est, ThresholdMethod::Spectral, 0.5, 200, 4);
            let r = run_test(&s, &cfg).unwrap();
            assert_eq!(r.statistic_raw, 0.0);
            assert_eq!(r.p_value, 1.0);
            assert!(!r.reject);
        }
    }

    #[test]
    fn config_errors() {
        let s = sample(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 0.0, 2.0, 3.0, 5.0, 4.0]);
        let cfg = TestConfig::new(Estimator::U, ThresholdMethod::Bootstrap, 0.05, 100, 1);
        assert_eq!(run_test(&s, &cfg).unwrap_err(), Error::SampleTooSmall { n: 6, min: 7 });
        let cfg = TestConfig::new(Estimator::V, ThresholdMethod::Bootstrap, 0.05, 100, 1);
        assert!(matches!(run_test(&s, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = TestConfig::new(Estimator::V, ThresholdMethod::Spectral, 1.0, 100, 1);
        assert!(matches!(run_test(&s, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = TestConfig::new(Estimator::V, ThresholdMethod::Spectral, 0.05, 0, 1);
        assert!(matches!(run_test(&s, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn reject_and_p_value_agree() {
        let xs: Vec<f64> = (0..30).map(|i| (i % 3) as f64).collect();
        let s = sample(&xs, &xs);
        let cfg = TestConfig::new(Estimator::U, ThresholdMethod::Bootstrap, 0.05, 200, 11);
        let r = run_test(&s, &cfg).unwrap();
        assert!(r.reject);
        assert!(r.p_value <= cfg.alpha + 1.0 / (cfg.m as f64 + 1.0));
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
    }

    #[test]
    fn warns_on_non_negative_type_marginal() {
        let s = PairedSample::new(k23_path_metric(), line(&[0.0, 1.0, 2.0, 0.5, 1.5])).unwrap();
        let cfg = TestConfig::new(Estimator::V, ThresholdMethod::Spectral, 0.05, 50, 3);
        let r = run_test(&s, &cfg).unwrap();
        let w = r.negative_type_warning.unwrap();
        assert!(w.starts_with("X distances"), "{w}");
    }

    #[test]
    fn report_field_names() {
        let s = sample(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]);
        let cfg = TestConfig::new(Estimator::V, ThresholdMethod::Spectral, 0.05, 10, 3);
        let r = run_test(&s, &cfg).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut expected = vec![
            "n",
            "estimator",
            "threshold_method",
            "alpha",
            "m",
            "seed",
            "statistic_raw",
            "statistic_scaled",
            "threshold",
            "p_value",
            "reject",
            "negative_type_warning",
        ];
        let mut keys_sorted = keys.clone();
        keys_sorted.sort();
        expected.sort();
        assert_eq!(keys_sorted, expected);
        assert_eq!(v["estimator"], "v");
        assert_eq!(v["threshold_method"], "spectral");
        assert!(v["negative_type_warning"].is_null());
    }
}
