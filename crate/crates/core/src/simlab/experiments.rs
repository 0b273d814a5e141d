//! Monte Carlo experiments. Replicate `r` of cell `c` draws from the stream
//! `cell_stream(c, r)` of the run seed, and results are collected in replicate
//! order before any aggregation, so reports do not depend on thread count.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::estimator::{fit, fit_with_decomposition, prediction_interval, EstimatorFit, Normalizer};
use crate::filters::{cube_root_rank, select_kn, threshold_for_rank, FilterKind, FilterSpec};
use crate::hilbert::{check_same_grid, inner_product, norm, Curve};
use crate::spectral::{cross_covariance, eigendecompose, empirical_covariance, Centering};

use super::model::{generate_dataset, Dataset, SpectralModel};
use super::oracle::{range_condition, true_normalizers, truncation_bias, BiasTarget, TrueNormalizers};
use super::rng::{cell_stream, stream_rng};
use super::stats::{ks_critical, ks_normal, mean};

/// How `c_n` is set for a given sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CnRule {
    Fixed(f64),
    /// Place `c_n` between the true `λ_d` and `λ_{d+1}` with `d = ⌊n^{1/3}⌋`.
    CubeRoot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPlan {
    pub kind: FilterKind,
    pub rule: CnRule,
}

impl FilterPlan {
    pub fn fixed(spec: FilterSpec) -> Self {
        FilterPlan {
            kind: spec.kind(),
            rule: CnRule::Fixed(spec.cn()),
        }
    }

    pub fn resolve(&self, true_eigenvalues: &[f64], n: usize) -> Result<FilterSpec> {
        let cn = match self.rule {
            CnRule::Fixed(cn) => cn,
            CnRule::CubeRoot => threshold_for_rank(true_eigenvalues, cube_root_rank(n))?,
        };
        FilterSpec::new(self.kind, cn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSettings {
    pub n: usize,
    pub filter: FilterSpec,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl ExperimentSettings {
    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return validation("replicates must be >= 1");
        }
        if self.n < 2 {
            return validation(format!("n must be >= 2, got {}", self.n));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return validation(format!("level must lie in (0, 1), got {}", self.level));
        }
        Ok(())
    }
}

/// One replicate. `status` is `"ok"` or the error kind that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub status: String,
    pub d_n: Option<usize>,
    pub target: f64,
    pub center: Option<f64>,
    pub half_width: Option<f64>,
    pub covered: Option<bool>,
    /// `√n (Ŷ − target) / (σ̂ N)`
    pub z: Option<f64>,
    /// `ŝ_n` or `t̂_{n,x}`
    pub normalizer: Option<f64>,
    /// Truncation bias `⟨Π_{k_n}ρ − ρ, X⟩` (random X) or the random-bias proxy
    /// `⟨(Π̂ − Π)ρ, x⟩` (fixed x).
    pub bias: Option<f64>,
}

impl ReplicateRow {
    fn failed(replicate: usize, target: f64, err: &Error) -> Self {
        ReplicateRow {
            replicate,
            status: err.kind().to_string(),
            d_n: None,
            target,
            center: None,
            half_width: None,
            covered: None,
            z: None,
            normalizer: None,
            bias: None,
        }
    }

    fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub mean_abs: f64,
    pub rms: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Option<Self> {
        let len = values.len() as f64;
        (!values.is_empty()).then(|| Summary {
            mean: values.iter().sum::<f64>() / len,
            mean_abs: values.iter().map(|v| v.abs()).sum::<f64>() / len,
            rms: (values.iter().map(|v| v * v).sum::<f64>() / len).sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub experiment: String,
    pub nominal_level: f64,
    pub n: usize,
    pub replicates: usize,
    pub completed: usize,
    pub failures: usize,
    pub failure_kinds: BTreeMap<String, usize>,
    /// Over completed replicates; `None` when every replicate failed.
    pub empirical_coverage: Option<f64>,
    pub mean_half_width: Option<f64>,
    pub mean_normalizer: Option<f64>,
    pub mean_d_n: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub ks_critical_1pct: f64,
    pub bias_summary: Option<Summary>,
    pub filter: FilterSpec,
    pub truth: Option<TrueNormalizers>,
    /// `|Σ_{l > k_n} ρ_l x_l|` for fixed x, `√(Σ_{l > k_n} λ_l ρ_l²)` otherwise.
    pub truncation_bias: Option<f64>,
    /// `sup_{p ≤ L} x_p² / λ_p` (fixed x only).
    pub range_condition: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageOutcome {
    pub report: CoverageReport,
    pub rows: Vec<ReplicateRow>,
}

impl CoverageOutcome {
    pub fn all_failed(&self) -> bool {
        self.report.completed == 0
    }
}

fn replicate_data(model: &SpectralModel, n: usize, seed: u64, cell: usize, r: usize) -> (Dataset, Vec<f64>) {
    let mut rng = stream_rng(seed, cell_stream(cell, r));
    let data = generate_dataset(model, n, &mut rng);
    let new_scores = model.draw_scores(&mut rng);
    (data, new_scores)
}

fn run_replicates<F>(replicates: usize, body: F) -> Vec<ReplicateRow>
where
    F: Fn(usize) -> ReplicateRow + Send + Sync,
{
    (0..replicates).into_par_iter().map(body).collect()
}

fn aggregate(
    experiment: &str,
    settings: &ExperimentSettings,
    rows: &[ReplicateRow],
    truth: Option<TrueNormalizers>,
    truncation_bias: Option<f64>,
    range_condition: Option<f64>,
) -> CoverageReport {
    let ok: Vec<&ReplicateRow> = rows.iter().filter(|r| r.ok()).collect();
    let mut failure_kinds = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.ok()) {
        *failure_kinds.entry(r.status.clone()).or_insert(0) += 1;
    }
    let z: Vec<f64> = ok.iter().filter_map(|r| r.z).collect();
    let bias: Vec<f64> = ok.iter().filter_map(|r| r.bias).collect();
    CoverageReport {
        experiment: experiment.to_string(),
        nominal_level: settings.level,
        n: settings.n,
        replicates: settings.replicates,
        completed: ok.len(),
        failures: rows.len() - ok.len(),
        failure_kinds,
        empirical_coverage: mean(ok.iter().map(|r| f64::from(u8::from(r.covered == Some(true))))),
        mean_half_width: mean(ok.iter().filter_map(|r| r.half_width)),
        mean_normalizer: mean(ok.iter().filter_map(|r| r.normalizer)),
        mean_d_n: mean(ok.iter().filter_map(|r| r.d_n.map(|d| d as f64))),
        ks_statistic: ks_normal(&z),
        ks_critical_1pct: ks_critical(0.01, z.len().max(1)),
        bias_summary: Summary::of(&bias),
        filter: settings.filter,
        truth,
        truncation_bias,
        range_condition,
        seed: settings.seed,
    }
}

fn standardized(n: usize, center: f64, target: f64, scale: f64) -> Option<f64> {
    let z = (n as f64).sqrt() * (center - target) / scale;
    z.is_finite().then_some(z)
}

/// Random-predictor coverage of the `ŝ_n` interval for `⟨ρ, X_{n+1}⟩`.
///
/// The model has mean zero, so fits are uncentered.
pub fn coverage_experiment(model: &SpectralModel, settings: &ExperimentSettings) -> Result<CoverageOutcome> {
    settings.validate()?;
    let lambdas = model.lambdas();
    let rho = model.rho_coeffs();
    let k_n = select_kn(lambdas, settings.filter.cn()).ok();
    let truth = true_normalizers(lambdas, &settings.filter, None).ok();
    let rows = run_replicates(settings.replicates, |r| {
        let (data, xi) = replicate_data(model, settings.n, settings.seed, 0, r);
        let target: f64 = (0..model.terms()).map(|l| rho[l] * lambdas[l].sqrt() * xi[l]).sum();
        let x_new = model.curve_from_scores(&xi);
        let attempt = || -> Result<ReplicateRow> {
            let f = fit(&data.curves, &data.responses, &settings.filter, Centering::None)?;
            let pi = prediction_interval(&f, &x_new, settings.level, Normalizer::SHat)?;
            let scale = f.sigma_hat().unwrap_or(0.0) * pi.normalizer;
            Ok(ReplicateRow {
                replicate: r,
                status: "ok".into(),
                d_n: Some(f.d_n()),
                target,
                center: Some(pi.center),
                half_width: Some(pi.half_width),
                covered: Some(pi.contains(target)),
                z: standardized(settings.n, pi.center, target, scale),
                normalizer: Some(pi.normalizer),
                bias: k_n.map(|k| {
                    -(k..model.terms())
                        .map(|l| rho[l] * lambdas[l].sqrt() * xi[l])
                        .sum::<f64>()
                }),
            })
        };
        attempt().unwrap_or_else(|e| ReplicateRow::failed(r, target, &e))
    });
    let bias = k_n.map(|k| truncation_bias(lambdas, rho, k, BiasTarget::Expected));
    let report = aggregate("coverage", settings, &rows, truth, bias, None);
    Ok(CoverageOutcome { report, rows })
}

/// `⟨Π̂_{d_n}ρ, x⟩ − ⟨Π_{k_n}ρ, x⟩`, with `Π̂` the projection on the retained
/// empirical eigenvectors.
fn random_bias(f: &EstimatorFit, model: &SpectralModel, x: &Curve, x_coeffs: &[f64], k_n: usize) -> Result<f64> {
    let mut empirical = 0.0;
    for e in f.inverse().eigenvectors() {
        empirical += inner_product(model.rho(), e)? * inner_product(x, e)?;
    }
    let population: f64 = model.rho_coeffs()[..k_n]
        .iter()
        .zip(x_coeffs)
        .map(|(r, x)| r * x)
        .sum();
    Ok(empirical - population)
}

/// Fixed-point coverage of the `t̂_{n,x}` interval for `⟨ρ, x⟩`. A replicate with
/// a degenerate `t̂_{n,x}` counts as a failure.
pub fn fixed_x_experiment(model: &SpectralModel, x: &Curve, settings: &ExperimentSettings) -> Result<CoverageOutcome> {
    settings.validate()?;
    check_same_grid(model.grid(), x.grid())?;
    let lambdas = model.lambdas();
    let x_coeffs = model.coefficients_of(x)?;
    let target: f64 = model.rho_coeffs().iter().zip(&x_coeffs).map(|(r, x)| r * x).sum();
    let k_n = select_kn(lambdas, settings.filter.cn()).ok();
    let truth = true_normalizers(lambdas, &settings.filter, Some(&x_coeffs)).ok();
    let rows = run_replicates(settings.replicates, |r| {
        let (data, _) = replicate_data(model, settings.n, settings.seed, 0, r);
        let attempt = || -> Result<ReplicateRow> {
            let f = fit(&data.curves, &data.responses, &settings.filter, Centering::None)?;
            let pi = prediction_interval(&f, x, settings.level, Normalizer::THat)?;
            let scale = f.sigma_hat().unwrap_or(0.0) * pi.normalizer;
            Ok(ReplicateRow {
                replicate: r,
                status: "ok".into(),
                d_n: Some(f.d_n()),
                target,
                center: Some(pi.center),
                half_width: Some(pi.half_width),
                covered: Some(pi.contains(target)),
                z: standardized(settings.n, pi.center, target, scale),
                normalizer: Some(pi.normalizer),
                bias: k_n.map(|k| random_bias(&f, model, x, &x_coeffs, k)).transpose()?,
            })
        };
        attempt().unwrap_or_else(|e| ReplicateRow::failed(r, target, &e))
    });
    let bias = k_n.map(|k| truncation_bias(lambdas, model.rho_coeffs(), k, BiasTarget::Fixed(&x_coeffs)));
    let range = range_condition(lambdas, &x_coeffs);
    let report = aggregate("fixed_x", settings, &rows, truth, bias, Some(range));
    Ok(CoverageOutcome { report, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormDivergenceRow {
    pub n: usize,
    pub cn: f64,
    pub completed: usize,
    pub failures: usize,
    pub mean_d_n: Option<f64>,
    /// Mean of `‖ρ̂ − ρ‖`.
    pub mean_error: Option<f64>,
    /// Mean of `√n ‖ρ̂ − ρ‖ / ŝ_n`.
    pub mean_normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormDivergenceReport {
    pub rows: Vec<NormDivergenceRow>,
    /// `mean_normalized[i+1] / mean_normalized[i]`
    pub ratios: Vec<Option<f64>>,
    /// The last two ratios both exceed 1.
    pub diverging: bool,
    pub replicates: usize,
    pub seed: u64,
}

/// Track `‖ρ̂ − ρ‖` and `√n ‖ρ̂ − ρ‖ / ŝ_n` along an increasing `n`-grid.
pub fn norm_divergence_demo(
    model: &SpectralModel,
    n_grid: &[usize],
    plan: &FilterPlan,
    replicates: usize,
    seed: u64,
) -> Result<NormDivergenceReport> {
    if replicates == 0 {
        return validation("replicates must be >= 1");
    }
    if n_grid.is_empty() || n_grid[0] < 2 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return validation("n-grid must be strictly increasing with n >= 2");
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (cell, &n) in n_grid.iter().enumerate() {
        let filter = plan.resolve(model.lambdas(), n)?;
        let errs: Vec<Option<(usize, f64, f64)>> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(seed, cell_stream(cell, r));
                let data = generate_dataset(model, n, &mut rng);
                let f = fit(&data.curves, &data.responses, &filter, Centering::None).ok()?;
                let err = norm(&f.rho_hat().sub(model.rho()).ok()?).ok()?;
                Some((f.d_n(), err, (n as f64).sqrt() * err / f.s_hat()))
            })
            .collect();
        let ok: Vec<(usize, f64, f64)> = errs.into_iter().flatten().collect();
        rows.push(NormDivergenceRow {
            n,
            cn: filter.cn(),
            completed: ok.len(),
            failures: replicates - ok.len(),
            mean_d_n: mean(ok.iter().map(|o| o.0 as f64)),
            mean_error: mean(ok.iter().map(|o| o.1)),
            mean_normalized: mean(ok.iter().map(|o| o.2)),
        });
    }
    let ratios: Vec<Option<f64>> = rows
        .windows(2)
        .map(|w| Some(w[1].mean_normalized? / w[0].mean_normalized?))
        .collect();
    let diverging = ratios.len() >= 2 && ratios[ratios.len() - 2..].iter().all(|r| r.is_some_and(|r| r > 1.0));
    Ok(NormDivergenceReport {
        rows,
        ratios,
        diverging,
        replicates,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdErrorRow {
    pub cn: f64,
    pub completed: usize,
    pub mean_d_n: Option<f64>,
    pub mean_error: Option<f64>,
}

/// Mean `‖ρ̂ − ρ‖` at fixed `n` for each threshold. Every threshold sees the
/// same samples, so differences come from the filter alone.
pub fn error_by_threshold(
    model: &SpectralModel,
    n: usize,
    kind: FilterKind,
    thresholds: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<ThresholdErrorRow>> {
    if replicates == 0 || n < 2 {
        return validation("need replicates >= 1 and n >= 2");
    }
    let filters = thresholds
        .iter()
        .map(|&cn| FilterSpec::new(kind, cn))
        .collect::<Result<Vec<_>>>()?;
    let per_rep: Vec<Vec<Option<(usize, f64)>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, cell_stream(0, r));
            let data = generate_dataset(model, n, &mut rng);
            let decomp = empirical_covariance(&data.curves, Centering::None)
                .and_then(|c| eigendecompose(&c))
                .map(Arc::new);
            let delta = cross_covariance(&data.curves, &data.responses, Centering::None);
            filters
                .iter()
                .map(|f| {
                    let (decomp, delta) = (decomp.as_ref().ok()?, delta.as_ref().ok()?);
                    let fit = fit_with_decomposition(decomp.clone(), delta.curve(), f).ok()?;
                    Some((fit.d_n(), norm(&fit.rho_hat().sub(model.rho()).ok()?).ok()?))
                })
                .collect()
        })
        .collect();
    Ok(filters
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let ok: Vec<(usize, f64)> = per_rep.iter().filter_map(|row| row[i]).collect();
            ThresholdErrorRow {
                cn: f.cn(),
                completed: ok.len(),
                mean_d_n: mean(ok.iter().map(|o| o.0 as f64)),
                mean_error: mean(ok.iter().map(|o| o.1)),
            }
        })
        .collect())
}
