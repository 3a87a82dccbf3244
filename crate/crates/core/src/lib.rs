//! Distance covariance for data in metric spaces.
//!
//! The crate covers the population quantity on finitely supported measures
//! ([`centering`]), the plug-in and unbiased estimators ([`estimators`]),
//! the degree-6 kernel and its Hoeffding projections ([`kernels`]), two
//! approximations of the null law ([`nulldist`]), the resulting independence
//! test ([`hypothesis`]), a negative-type diagnostic ([`distances`]) and a
//! characteristic-function cross-check for real-valued data
//! ([`crosscheck`]).

pub mod centering;
pub mod crosscheck;
pub mod distances;
pub mod error;
pub mod estimators;
pub mod hypothesis;
pub mod io;
pub mod kernels;
pub mod nulldist;
pub mod reduction;
pub mod summation;

pub use centering::{
    a_mu_empirical, dcov_discrete, double_center, dvar_discrete, grand_mean, CenteredMatrix, DiscreteJointMeasure,
};
pub use crosscheck::{c_constant, dcov_charfn_1d, QuadratureConfig};
pub use distances::{
    negative_type_check, pairwise_distances, validate_distance_matrix, DistanceMatrix, MetricKind, NegativeTypeReport,
    PointSet, ValidationLevel,
};
pub use error::{Error, Result};
pub use estimators::{u_statistic, v_statistic, PairedSample};
pub use hypothesis::{run_test, Estimator, TestConfig, TestReport, ThresholdMethod};
pub use kernels::{h2_empirical_matrix, H2Matrix};
pub use nulldist::{
    bootstrap_null, quantile, sample_weighted_chisq, spectral_eigenvalues, NullDistribution, NullMethod, SpectralLaw,
    SpectralModel,
};
