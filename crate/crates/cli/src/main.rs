mod input;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcov_core::centering::grand_mean;
use dcov_core::crosscheck::{dcov_charfn_1d, QuadratureConfig};
use dcov_core::estimators::U_MIN_N;
use dcov_core::nulldist::{spectral_null, DEFAULT_BOOTSTRAP_REPS, DEFAULT_SPECTRAL_REPS};
use dcov_core::{
    bootstrap_null, negative_type_check, run_test, u_statistic, v_statistic, Estimator, MetricKind, NegativeTypeReport,
    NullMethod, PairedSample, SpectralLaw, TestConfig, ThresholdMethod,
};
use serde::Serialize;

use input::{load_margin, load_pair, load_points, MarginArgs, MetricOptions, Side};

/// Distance covariance statistics and independence tests for paired data
#[derive(Parser, Debug)]
#[command(name = "dcov", version, about, long_about = None)]
#[command(after_help = "EXAMPLES:\n  \
    dcov test --x x.csv --y y.csv --seed 7\n  \
    dcov test --x dx.csv --metric-x precomputed --y y.csv --estimator v --threshold spectral --seed 7\n  \
    dcov dcov --x data.csv --x-columns a,b --y data.csv --y-columns c\n  \
    dcov nulldist --x x.csv --y y.csv --method spectral-u --reps 2000 --seed 1 > draws.csv")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the independence test and print the report as JSON
    Test(TestArgs),
    /// Print the plug-in and unbiased estimates with distance variances
    Dcov(MarginArgs),
    /// Check each marginal's distances for negative type on the sample
    Diagnose(DiagnoseArgs),
    /// Print null-distribution draws as CSV, one per line
    Nulldist(NulldistArgs),
    /// Compare the characteristic-function integral with the plug-in estimate (1D data)
    Crosscheck(CrosscheckArgs),
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    margins: MarginArgs,

    /// Estimator: u (unbiased) or v (plug-in)
    #[arg(long, default_value = "u")]
    estimator: Estimator,

    /// Threshold method: bootstrap (u only) or spectral
    #[arg(long, default_value = "bootstrap")]
    threshold: ThresholdMethod,

    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Number of null draws [default: 1000 for bootstrap, 4000 for spectral]
    #[arg(long)]
    reps: Option<usize>,

    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long, value_name = "FILE")]
    x: PathBuf,

    #[arg(long, value_name = "FILE")]
    y: Option<PathBuf>,

    #[command(flatten)]
    options: MetricOptions,

    /// Index of the base point (0-based)
    #[arg(long, default_value_t = 0)]
    base: usize,

    /// Eigenvalue tolerance [default: 1e-9 * (1 + max |K|)]
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct NulldistArgs {
    #[command(flatten)]
    margins: MarginArgs,

    /// bootstrap, spectral-u or spectral-v
    #[arg(long, default_value = "bootstrap")]
    method: NullMethod,

    /// Number of draws [default: 1000 for bootstrap, 4000 for spectral]
    #[arg(long)]
    reps: Option<usize>,

    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CrosscheckArgs {
    #[command(flatten)]
    margins: MarginArgs,

    /// Inner frequency cutoff
    #[arg(long)]
    epsilon: Option<f64>,

    /// Outer frequency cutoff
    #[arg(long)]
    radius: Option<f64>,

    /// Midpoint cells per half-axis
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Config(String),
}

impl CliError {
    /// Tags a library error with the file it came from.
    pub fn input(path: &Path, e: dcov_core::Error) -> Self {
        // i/o errors already name the file
        if matches!(e, dcov_core::Error::Io(_)) {
            return CliError::from(e);
        }
        match CliError::from(e) {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            config => config,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl From<dcov_core::Error> for CliError {
    fn from(e: dcov_core::Error) -> Self {
        use dcov_core::Error::*;
        match e {
            SampleTooSmall { n, min } => CliError::Config(format!(
                "the u estimator needs a minimum sample size of {min} observations, got {n}"
            )),
            InvalidConfig(_)
            | InvalidProbability(_)
            | InvalidWeights(_)
            | UnsupportedMetric(_)
            | IndexOutOfBounds { .. }
            | TooLargeForNaive { .. } => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    emit(&(text + "\n"))
}

fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Input(format!("writing output: {e}")))
}

fn sample(margins: &MarginArgs) -> Result<PairedSample, CliError> {
    let (a, b) = load_pair(margins)?;
    Ok(PairedSample::new(a, b)?)
}

fn default_reps(bootstrap: bool) -> usize {
    if bootstrap {
        DEFAULT_BOOTSTRAP_REPS
    } else {
        DEFAULT_SPECTRAL_REPS
    }
}

fn cmd_test(args: &TestArgs) -> Result<(), CliError> {
    let s = sample(&args.margins)?;
    let reps = args
        .reps
        .unwrap_or(default_reps(args.threshold == ThresholdMethod::Bootstrap));
    let opts = &args.margins.options;
    let cfg = TestConfig::new(args.estimator, args.threshold, args.alpha, reps, args.seed)
        .with_metrics(opts.metric_x, opts.metric_y);
    cfg.validate(s.n())?;
    eprintln!(
        "dcov: n = {}, estimator {}, {} threshold with {reps} draws",
        s.n(),
        args.estimator,
        args.threshold
    );
    let report = run_test(&s, &cfg)?;
    if let Some(w) = &report.negative_type_warning {
        eprintln!("dcov: warning: {w}");
    }
    emit_json(&report)
}

#[derive(Serialize)]
struct BoundCheck {
    /// |V(X,Y)| <= sqrt(V(X,X) V(Y,Y))
    dcov_le_dvar_product: bool,
    /// sqrt(V(X,X) V(Y,Y)) <= D(mu) D(nu)
    dvar_product_le_mean_distance_product: bool,
}

#[derive(Serialize)]
struct DcovReport {
    n: usize,
    v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    dvar_x: f64,
    dvar_y: f64,
    mean_distance_x: f64,
    mean_distance_y: f64,
    bound_check: BoundCheck,
}

fn cmd_dcov(args: &MarginArgs) -> Result<(), CliError> {
    let s = sample(args)?;
    let v = v_statistic(&s);
    let u = (s.n() >= U_MIN_N).then(|| u_statistic(&s)).transpose()?;
    let dvar_x = v_statistic(&s.x_with_x());
    let dvar_y = v_statistic(&s.y_with_y());
    let (mx, my) = (grand_mean(s.a()), grand_mean(s.b()));
    let mid = (dvar_x.max(0.0) * dvar_y.max(0.0)).sqrt();
    let slack = |x: f64| 1e-10 * (1.0 + x.abs());
    emit_json(&DcovReport {
        n: s.n(),
        v,
        u,
        dvar_x,
        dvar_y,
        mean_distance_x: mx,
        mean_distance_y: my,
        bound_check: BoundCheck {
            dcov_le_dvar_product: v.abs() <= mid + slack(mid),
            dvar_product_le_mean_distance_product: mid <= mx * my + slack(mx * my),
        },
    })
}

#[derive(Serialize)]
struct DiagnoseReport {
    x: NegativeTypeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<NegativeTypeReport>,
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<(), CliError> {
    let check = |path: &Path, side| -> Result<NegativeTypeReport, CliError> {
        let d = load_margin(path, side, &args.options)?;
        let report = negative_type_check(&d, args.base, args.tol)?;
        if !report.is_negative_type_on_sample {
            eprintln!(
                "dcov: {} distances are not of negative type on the sample (min eigenvalue {:e})",
                path.display(),
                report.min_eigenvalue
            );
        }
        Ok(report)
    };
    let x = check(&args.x, Side::X)?;
    let y = args.y.as_deref().map(|p| check(p, Side::Y)).transpose()?;
    emit_json(&DiagnoseReport { x, y })
}

fn cmd_nulldist(args: &NulldistArgs) -> Result<(), CliError> {
    let s = sample(&args.margins)?;
    let reps = args.reps.unwrap_or(default_reps(args.method == NullMethod::Bootstrap));
    let nd = match args.method {
        NullMethod::Bootstrap => bootstrap_null(&s, reps, args.seed)?,
        NullMethod::SpectralU => spectral_null(&s, SpectralLaw::U, reps, args.seed)?,
        NullMethod::SpectralV => spectral_null(&s, SpectralLaw::V, reps, args.seed)?,
    };
    eprintln!("dcov: {} draws ({}), n = {}", nd.m(), nd.method(), s.n());
    emit(&nd.to_csv())
}

#[derive(Serialize)]
struct CrosscheckReport {
    n: usize,
    quadrature: QuadratureConfig,
    charfn: f64,
    v_statistic: f64,
    abs_error: f64,
    /// `abs_error / v_statistic`, absent when the statistic is zero
    relative_error: Option<f64>,
}

fn scalar_column(path: &Path, columns: Option<&[String]>) -> Result<Vec<f64>, CliError> {
    let points = load_points(path, columns)?;
    if points.dim() != 1 {
        return Err(CliError::Config(format!(
            "{}: crosscheck needs one column per variable, got {} (select one with --x-columns/--y-columns)",
            path.display(),
            points.dim()
        )));
    }
    Ok((0..points.len()).map(|i| points.point(i)[0]).collect())
}

fn cmd_crosscheck(args: &CrosscheckArgs) -> Result<(), CliError> {
    let opts = &args.margins.options;
    if opts.metric_x == MetricKind::Precomputed || opts.metric_y == MetricKind::Precomputed {
        return Err(CliError::Config(
            "crosscheck works on real-valued observations, not precomputed matrices".into(),
        ));
    }
    let x = scalar_column(&args.margins.x, opts.x_columns.as_deref())?;
    let y = scalar_column(&args.margins.y, opts.y_columns.as_deref())?;
    if x.len() != y.len() {
        return Err(CliError::Input(format!(
            "X has {} observations but Y has {}",
            x.len(),
            y.len()
        )));
    }
    let defaults = QuadratureConfig::default();
    let q = QuadratureConfig {
        epsilon: args.epsilon.unwrap_or(defaults.epsilon),
        radius: args.radius.unwrap_or(defaults.radius),
        grid: args.grid.unwrap_or(defaults.grid),
    };
    q.validate()?;
    let s = sample(&args.margins)?;
    let v = v_statistic(&s);
    let charfn = dcov_charfn_1d(&x, &y, &q)?;
    let abs_error = (charfn - v).abs();
    emit_json(&CrosscheckReport {
        n: x.len(),
        quadrature: q,
        charfn,
        v_statistic: v,
        abs_error,
        relative_error: (v != 0.0).then(|| abs_error / v.abs()),
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Dcov(args) => cmd_dcov(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Nulldist(args) => cmd_nulldist(args),
        Command::Crosscheck(args) => cmd_crosscheck(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dcov: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
