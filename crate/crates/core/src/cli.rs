//! The `flr` command line: `fit`, `predict` and `simulate <experiment>`.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 degenerate
//! computation (empty retained set, degenerate normalizer), 4 every Monte Carlo
//! replicate failed. Failures print one line `error kind=<kind> <message>`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{fit, predict, prediction_interval, EstimatorFit, FitRecord, Normalizer};
use crate::filters::{cube_root_rank, threshold_for_rank, FilterKind, FilterSpec, GeneralizedVariant};
use crate::hilbert::read_curve_matrix_path;
use crate::simlab::config::SimulationConfig;
use crate::simlab::experiments::{coverage_experiment, fixed_x_experiment, norm_divergence_demo};
use crate::simlab::oracle::{condition_u_diagnostic, variance_inner_sums, variance_lower_bound, VarianceBoundRow};
use crate::spectral::{eigendecompose, empirical_covariance, Centering};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_ALL_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "flr", version, about = "Functional linear regression with spectral regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit ρ̂ from a curve matrix and responses; writes the fit as JSON.
    Fit(FitArgs),
    /// Predict at each curve of a matrix, optionally with an interval.
    Predict(PredictArgs),
    /// Run a simulation experiment from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterName {
    Truncation,
    Ridge,
    Tikhonov,
    Generalized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantName {
    A,
    B,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Curve matrix CSV: grid points on the first row, one curve per row after.
    #[arg(long)]
    curves: PathBuf,
    /// One response per line, in curve order.
    #[arg(long)]
    responses: PathBuf,
    #[arg(long, value_enum, default_value = "truncation")]
    filter: FilterName,
    #[arg(long)]
    alpha: Option<f64>,
    /// Generalized filter exponent.
    #[arg(long)]
    p: Option<u32>,
    #[arg(long, value_enum)]
    variant: Option<VariantName>,
    /// Threshold; by default placed to keep ⌊n^{1/3}⌋ empirical modes.
    #[arg(long)]
    cn: Option<f64>,
    /// Do not center curves and responses.
    #[arg(long)]
    no_center: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Fit JSON written by `flr fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Curves to predict at, on the fit's grid.
    #[arg(long)]
    curves: PathBuf,
    /// Interval level; without it only the point prediction is printed.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, default_value = "s_hat")]
    normalizer: Normalizer,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    Coverage,
    FixedX,
    NormDivergence,
    VarianceBound,
    ConditionU,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    /// Report JSON; the per-row CSV goes next to it with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

/// Parse `args` (program name first) and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error kind={} {}", e.kind(), e.to_string().replace('\n', " "));
            if e.is_degenerate() {
                EXIT_DEGENERATE
            } else {
                EXIT_VALIDATION
            }
        }
    }
}

fn filter_kind(a: &FitArgs) -> Result<FilterKind> {
    let alpha = || a.alpha.ok_or_else(|| Error::Config("--alpha is required for this filter".into()));
    Ok(match a.filter {
        FilterName::Truncation => FilterKind::Truncation,
        FilterName::Ridge => FilterKind::Ridge { alpha: alpha()? },
        FilterName::Tikhonov => FilterKind::Tikhonov { alpha: alpha()? },
        FilterName::Generalized => FilterKind::Generalized {
            alpha: alpha()?,
            p: a.p.ok_or_else(|| Error::Config("--p is required for the generalized filter".into()))?,
            variant: match a.variant {
                Some(VariantName::A) => GeneralizedVariant::A,
                Some(VariantName::B) => GeneralizedVariant::B,
                None => return Err(Error::Config("--variant is required for the generalized filter".into())),
            },
        },
    })
}

fn read_responses(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 1 {
            return Err(Error::Validation(format!("responses line {}: expected one value", i + 1)));
        }
        let v: f64 = rec[0]
            .parse()
            .map_err(|_| Error::Validation(format!("responses line {}: {:?} is not a number", i + 1, &rec[0])))?;
        if !v.is_finite() {
            return Err(Error::Validation(format!("responses line {}: non-finite value", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let kind = filter_kind(a)?;
    let (_, curves) = read_curve_matrix_path(&a.curves)?;
    let responses = read_responses(&a.responses)?;
    if responses.len() != curves.len() {
        return Err(Error::Validation(format!(
            "{} curves but {} responses",
            curves.len(),
            responses.len()
        )));
    }
    let centering = if a.no_center { Centering::None } else { Centering::Mean };
    let cn = match a.cn {
        Some(cn) => cn,
        None => {
            if curves.len() < 2 {
                return Err(Error::Validation(format!("need n >= 2 curves, got {}", curves.len())));
            }
            let decomp = eigendecompose(&empirical_covariance(&curves, centering)?)?;
            threshold_for_rank(decomp.eigenvalues(), cube_root_rank(curves.len()))?
        }
    };
    let filter = FilterSpec::new(kind, cn)?;
    let f = fit(&curves, &responses, &filter, centering)?;
    write_json(&a.out, &f.to_record())?;
    let sigma = f.sigma_hat().map_or_else(|| "none".to_string(), |s| format!("{s:?}"));
    println!("n={} cn={:?} d_n={} s_hat={:?} sigma_hat={sigma}", f.n(), cn, f.d_n(), f.s_hat());
    Ok(EXIT_OK)
}

fn load_fit(path: &Path) -> Result<EstimatorFit> {
    let text = fs::read_to_string(path)?;
    let record: FitRecord = serde_json::from_str(&text).map_err(|e| Error::Validation(format!("fit JSON: {e}")))?;
    EstimatorFit::from_record(record)
}

fn cmd_predict(a: &PredictArgs) -> Result<i32> {
    let f = load_fit(&a.fit)?;
    let (_, curves) = read_curve_matrix_path(&a.curves)?;
    let mut lines = Vec::with_capacity(curves.len());
    for x in &curves {
        lines.push(match a.level {
            None => format!("{:?}", predict(&f, x)?),
            Some(level) => {
                let pi = prediction_interval(&f, x, level, a.normalizer)?;
                format!("{:?},{:?},{:?}", pi.center, pi.lo(), pi.hi())
            }
        });
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for l in lines {
        writeln!(out, "{l}")?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VarianceBoundReport {
    beta: f64,
    rows: Vec<VarianceBoundRow>,
}

#[derive(Serialize)]
struct PartialSumRow {
    j: usize,
    partial_sum: f64,
}

#[derive(Serialize)]
struct InnerSumRow {
    j: usize,
    inner_sum: f64,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let text = fs::read_to_string(&a.config)?;
    let mut config = SimulationConfig::from_json(&text)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.threads == Some(0) {
        return Err(Error::Validation("--threads must be >= 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = a.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| simulate(a.experiment, &config, &a.out))
}

fn simulate(experiment: Experiment, config: &SimulationConfig, out: &Path) -> Result<i32> {
    let model = config.model()?;
    let csv_path = out.with_extension("csv");
    match experiment {
        Experiment::Coverage | Experiment::FixedX => {
            let settings = config.settings(&model)?;
            let outcome = if matches!(experiment, Experiment::Coverage) {
                coverage_experiment(&model, &settings)?
            } else {
                let rule = SimulationConfig::require(&config.x, "x")?;
                let x = model.curve_from_coeffs(&rule.coefficients(model.terms())?)?;
                fixed_x_experiment(&model, &x, &settings)?
            };
            write_json(out, &outcome.report)?;
            write_csv(&csv_path, &outcome.rows)?;
            if outcome.all_failed() {
                eprintln!(
                    "error kind=all_replicates_failed: {} of {} replicates failed",
                    outcome.report.failures, outcome.report.replicates
                );
                return Ok(EXIT_ALL_FAILED);
            }
        }
        Experiment::NormDivergence => {
            let n_grid = SimulationConfig::require(&config.n_grid, "n_grid")?;
            let report = norm_divergence_demo(&model, &n_grid, &config.filter_plan()?, config.replicates, config.seed)?;
            write_json(out, &report)?;
            write_csv(&csv_path, &report.rows)?;
            if report.rows.iter().all(|r| r.completed == 0) {
                eprintln!("error kind=all_replicates_failed: no fit succeeded at any n");
                return Ok(EXIT_ALL_FAILED);
            }
        }
        Experiment::VarianceBound => {
            let rule = SimulationConfig::require(&config.x, "x")?;
            let beta = SimulationConfig::require(&config.beta, "beta")?;
            let x = rule.coefficients(model.terms())?;
            let k_grid = config
                .k_grid
                .clone()
                .unwrap_or_else(|| (1..=model.terms()).collect());
            let rows = variance_lower_bound(model.lambdas(), model.rho_coeffs(), &x, beta, &k_grid)?;
            let inner: Vec<InnerSumRow> = variance_inner_sums(model.lambdas(), &x)?
                .into_iter()
                .enumerate()
                .map(|(j, inner_sum)| InnerSumRow { j: j + 1, inner_sum })
                .collect();
            write_json(out, &VarianceBoundReport { beta, rows })?;
            write_csv(&csv_path, &inner)?;
        }
        Experiment::ConditionU => {
            let terms = config.condition_terms.unwrap_or(model.terms());
            let report = condition_u_diagnostic(model.lambdas(), model.rho_coeffs(), terms)?;
            let rows: Vec<PartialSumRow> = report
                .partial_sums
                .iter()
                .enumerate()
                .map(|(j, &partial_sum)| PartialSumRow { j: j + 1, partial_sum })
                .collect();
            write_json(out, &report)?;
            write_csv(&csv_path, &rows)?;
        }
    }
    Ok(EXIT_OK)
}
