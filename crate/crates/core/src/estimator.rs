//! The regularized estimator `ρ̂ = Γ_n† Δ_n`, point prediction, the adaptive
//! normalizers `ŝ_n` and `t̂_{n,x}`, residual noise estimation and CLT-based
//! prediction intervals.
//!
//! Intervals ignore the truncation bias `⟨Π_{k_n}ρ − ρ, x⟩`. That is only safe
//! when `ρ` is smooth relative to the spectrum; the `simlab` module measures it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{validation, Error, Result};
use crate::filters::{count_at_least, FilterKind, FilterSpec};
use crate::hilbert::{check_same_grid, inner_product, norm, Curve, Grid};
use crate::spectral::{
    cross_covariance, eigendecompose, empirical_covariance, Centering, SpectralDecomposition,
};

/// Slack used by [`PredictionInterval::contains`] so a zero-width interval still
/// holds its own center after rounding.
const CONTAINS_RTOL: f64 = 1e-10;
/// `t̂_{n,x}` at or below this fraction of `‖x‖·max_j √λ̂_j f_n(λ̂_j)` is treated as
/// zero: `x` is orthogonal to the retained eigenvectors up to rounding.
const DEGENERATE_T_RTOL: f64 = 1e-10;

/// `Γ_n† = Σ_{j ≤ d_n} f_n(λ̂_j) ê_j ⊗ ê_j`, kept in its eigenbasis.
#[derive(Debug, Clone)]
pub struct RegularizedInverse {
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Curve>,
    filtered_values: Vec<f64>,
    filter: FilterSpec,
}

impl RegularizedInverse {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Retained eigenvalues `λ̂_1..λ̂_{d_n}`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Curve] {
        &self.eigenvectors
    }

    /// `f_n(λ̂_j)` for the retained modes.
    pub fn filtered_values(&self) -> &[f64] {
        &self.filtered_values
    }

    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn apply(&self, h: &Curve) -> Result<Curve> {
        check_same_grid(&self.grid, h.grid())?;
        let mut out = vec![0.0; self.grid.len()];
        for (f, e) in self.filtered_values.iter().zip(&self.eigenvectors) {
            let c = f * inner_product(h, e)?;
            for (o, v) in out.iter_mut().zip(e.values()) {
                *o += c * v;
            }
        }
        Ok(Curve::from_parts_unchecked(self.grid.clone(), out))
    }

    /// `√(Σ_j [λ̂_j f_n(λ̂_j)]²)`
    pub fn s_hat(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.filtered_values)
            .map(|(&l, f)| {
                let gain = if self.filter.kind() == FilterKind::Truncation {
                    1.0
                } else {
                    l * f
                };
                gain * gain
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `√(Σ_j λ̂_j f_n(λ̂_j)² ⟨x, ê_j⟩²)`
    pub fn t_hat(&self, x: &Curve) -> Result<f64> {
        check_same_grid(&self.grid, x.grid())?;
        let mut acc = 0.0;
        for ((l, f), e) in self
            .eigenvalues
            .iter()
            .zip(&self.filtered_values)
            .zip(&self.eigenvectors)
        {
            acc += l * f * f * inner_product(x, e)?.powi(2);
        }
        Ok(acc.sqrt())
    }
}

pub fn regularized_inverse(
    decomp: &SpectralDecomposition,
    filter: &FilterSpec,
) -> Result<RegularizedInverse> {
    let d_n = count_at_least(decomp.eigenvalues(), filter.cn());
    if d_n == 0 {
        return Err(Error::ThresholdExceedsSpectrum {
            cn: filter.cn(),
            top: decomp.eigenvalues().first().copied().unwrap_or(0.0),
        });
    }
    // eigenvalues are sorted, so the retained set is a prefix
    let eigenvalues = decomp.eigenvalues()[..d_n].to_vec();
    let filtered_values = eigenvalues.iter().map(|&l| filter.eval(l)).collect();
    Ok(RegularizedInverse {
        grid: decomp.grid().clone(),
        eigenvalues,
        eigenvectors: decomp.eigenvectors()[..d_n].to_vec(),
        filtered_values,
        filter: *filter,
    })
}

pub fn s_hat(decomp: &SpectralDecomposition, filter: &FilterSpec) -> Result<f64> {
    Ok(regularized_inverse(decomp, filter)?.s_hat())
}

pub fn t_hat(decomp: &SpectralDecomposition, filter: &FilterSpec, x: &Curve) -> Result<f64> {
    regularized_inverse(decomp, filter)?.t_hat(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    SHat,
    THat,
}

impl std::str::FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s_hat" => Ok(Normalizer::SHat),
            "t_hat" => Ok(Normalizer::THat),
            other => validation(format!("unknown normalizer {other:?} (s_hat | t_hat)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorFit {
    inverse: RegularizedInverse,
    rho_hat: Curve,
    s_hat: f64,
    sigma_hat: Option<f64>,
    n: usize,
    mean: Option<Curve>,
    intercept: f64,
    decomposition: Option<Arc<SpectralDecomposition>>,
}

impl EstimatorFit {
    pub fn rho_hat(&self) -> &Curve {
        &self.rho_hat
    }

    pub fn d_n(&self) -> usize {
        self.inverse.rank()
    }

    pub fn s_hat(&self) -> f64 {
        self.s_hat
    }

    /// Residual noise estimate; `None` when `n ≤ d_n` leaves no degrees of freedom.
    pub fn sigma_hat(&self) -> Option<f64> {
        self.sigma_hat
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn filter(&self) -> &FilterSpec {
        self.inverse.filter()
    }

    pub fn inverse(&self) -> &RegularizedInverse {
        &self.inverse
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.rho_hat.grid()
    }

    /// Mean curve removed before fitting, for centered fits.
    pub fn mean(&self) -> Option<&Curve> {
        self.mean.as_ref()
    }

    /// Mean response, the prediction at the mean curve (0 when uncentered).
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Full decomposition of `Γ_n`; absent for fits loaded from JSON.
    pub fn decomposition(&self) -> Option<&Arc<SpectralDecomposition>> {
        self.decomposition.as_ref()
    }

    fn centered(&self, x: &Curve) -> Result<Curve> {
        check_same_grid(self.grid(), x.grid())?;
        match &self.mean {
            Some(m) => x.sub(m),
            None => Ok(x.clone()),
        }
    }

    pub fn t_hat(&self, x: &Curve) -> Result<f64> {
        self.inverse.t_hat(&self.centered(x)?)
    }

    /// Largest value `t̂_{n,x}` could take for a point of this norm.
    fn t_hat_scale(&self, x: &Curve) -> Result<f64> {
        let gain = self
            .inverse
            .eigenvalues
            .iter()
            .zip(&self.inverse.filtered_values)
            .map(|(l, f)| l.sqrt() * f)
            .fold(0.0, f64::max);
        Ok(gain * norm(&self.centered(x)?)?)
    }

    pub fn to_record(&self) -> FitRecord {
        FitRecord {
            grid: (**self.grid()).clone(),
            rho_hat: self.rho_hat.values().to_vec(),
            eigenvalues: self.inverse.eigenvalues.clone(),
            filtered_values: self.inverse.filtered_values.clone(),
            eigenvectors: self
                .inverse
                .eigenvectors
                .iter()
                .map(|e| e.values().to_vec())
                .collect(),
            d_n: self.d_n(),
            s_hat: self.s_hat,
            sigma_hat: self.sigma_hat,
            filter: *self.filter(),
            n: self.n,
            mean: self.mean.as_ref().map(|m| m.values().to_vec()),
            intercept: self.intercept,
        }
    }

    pub fn from_record(rec: FitRecord) -> Result<Self> {
        let grid = Arc::new(Grid::new(
            rec.grid.points().to_vec(),
            rec.grid.weights().to_vec(),
        )?);
        let d = rec.d_n;
        if rec.eigenvalues.len() != d || rec.filtered_values.len() != d || rec.eigenvectors.len() != d
        {
            return validation(format!("fit record: d_n = {d} disagrees with stored spectrum"));
        }
        if d == 0 || rec.n == 0 {
            return validation("fit record: empty fit");
        }
        let eigenvectors = rec
            .eigenvectors
            .into_iter()
            .map(|v| Curve::new(grid.clone(), v))
            .collect::<Result<Vec<_>>>()?;
        let mean = rec.mean.map(|m| Curve::new(grid.clone(), m)).transpose()?;
        let finite = |v: f64| v.is_finite() && v >= 0.0;
        if !finite(rec.s_hat) || !rec.sigma_hat.is_none_or(finite) || !rec.intercept.is_finite() {
            return validation("fit record: invalid scalar summary");
        }
        Ok(EstimatorFit {
            inverse: RegularizedInverse {
                grid: grid.clone(),
                eigenvalues: rec.eigenvalues,
                eigenvectors,
                filtered_values: rec.filtered_values,
                filter: rec.filter,
            },
            rho_hat: Curve::new(grid, rec.rho_hat)?,
            s_hat: rec.s_hat,
            sigma_hat: rec.sigma_hat,
            n: rec.n,
            mean,
            intercept: rec.intercept,
            decomposition: None,
        })
    }
}

/// Serialized form of a fit. Retained eigenvectors are stored so `t̂_{n,x}` can
/// be evaluated after reloading.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    pub grid: Grid,
    pub rho_hat: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub filtered_values: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub d_n: usize,
    pub s_hat: f64,
    pub sigma_hat: Option<f64>,
    pub filter: FilterSpec,
    pub n: usize,
    pub mean: Option<Vec<f64>>,
    pub intercept: f64,
}

/// Fit `ρ̂ = Γ_n† Δ_n`.
pub fn fit(
    sample: &[Curve],
    responses: &[f64],
    filter: &FilterSpec,
    centering: Centering,
) -> Result<EstimatorFit> {
    if sample.len() < 2 {
        return validation(format!("need n >= 2 curves, got {}", sample.len()));
    }
    let cov = empirical_covariance(sample, centering)?;
    let delta = cross_covariance(sample, responses, centering)?;
    let decomp = Arc::new(eigendecompose(&cov)?);
    let mut out = fit_with_decomposition(decomp, delta.curve(), filter)?;
    out.mean = cov.mean().cloned();
    out.intercept = delta.response_mean();
    out.sigma_hat = match sigma_hat(sample, responses, &out) {
        Ok(s) => Some(s),
        Err(Error::DegreesOfFreedom { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(out)
}

/// Fit from a precomputed decomposition and cross-covariance, uncentered and
/// without a noise estimate. Useful when sweeping `c_n` on one sample.
pub fn fit_with_decomposition(
    decomp: Arc<SpectralDecomposition>,
    delta: &Curve,
    filter: &FilterSpec,
) -> Result<EstimatorFit> {
    let inverse = regularized_inverse(&decomp, filter)?;
    let rho_hat = inverse.apply(delta)?;
    Ok(EstimatorFit {
        s_hat: inverse.s_hat(),
        inverse,
        rho_hat,
        sigma_hat: None,
        n: decomp.n(),
        mean: None,
        intercept: 0.0,
        decomposition: Some(decomp),
    })
}

/// `Ŷ = ⟨ρ̂, x⟩`, or `Ȳ + ⟨ρ̂, x − X̄⟩` for a centered fit.
pub fn predict(fit: &EstimatorFit, x: &Curve) -> Result<f64> {
    Ok(fit.intercept + inner_product(&fit.rho_hat, &fit.centered(x)?)?)
}

/// `√( Σ_i (Y_i − Ŷ_i)² / (n − d_n) )`.
pub fn sigma_hat(sample: &[Curve], responses: &[f64], fit: &EstimatorFit) -> Result<f64> {
    let n = sample.len();
    if n != responses.len() {
        return validation(format!("{n} curves but {} responses", responses.len()));
    }
    let d_n = fit.d_n();
    if n <= d_n {
        return Err(Error::DegreesOfFreedom { n, d_n });
    }
    let mut rss = 0.0;
    for (x, y) in sample.iter().zip(responses) {
        rss += (y - predict(fit, x)?).powi(2);
    }
    Ok((rss / (n - d_n) as f64).sqrt())
}

/// Two-sided standard normal quantile `Φ^{-1}(1 − (1 − level)/2)`.
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return validation(format!("level must lie in (0, 1), got {level}"));
    }
    Ok(Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub center: f64,
    pub half_width: f64,
    pub level: f64,
    pub normalizer_kind: Normalizer,
    /// Value of `ŝ_n` or `t̂_{n,x}` used.
    pub normalizer: f64,
}

impl PredictionInterval {
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.center).abs() <= self.half_width + CONTAINS_RTOL * (1.0 + self.center.abs())
    }
}

/// `⟨ρ̂, x⟩ ± q σ̂ N / √n` with `N` either `ŝ_n` or `t̂_{n,x}`.
pub fn prediction_interval(
    fit: &EstimatorFit,
    x: &Curve,
    level: f64,
    normalizer: Normalizer,
) -> Result<PredictionInterval> {
    let q = normal_quantile(level)?;
    let center = predict(fit, x)?;
    let sigma = fit.sigma_hat.ok_or(Error::DegreesOfFreedom {
        n: fit.n,
        d_n: fit.d_n(),
    })?;
    let norm = match normalizer {
        Normalizer::SHat => fit.s_hat,
        Normalizer::THat => {
            let t = fit.t_hat(x)?;
            if t <= DEGENERATE_T_RTOL * fit.t_hat_scale(x)? {
                return Err(Error::DegenerateNormalizer);
            }
            t
        }
    };
    Ok(PredictionInterval {
        center,
        half_width: q * sigma * norm / (fit.n as f64).sqrt(),
        level,
        normalizer_kind: normalizer,
        normalizer: norm,
    })
}
