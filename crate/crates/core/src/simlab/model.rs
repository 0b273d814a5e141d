//! Ground-truth spectral models and Karhunen-Loève data generation.
//!
//! A model fixes eigenvalues `λ_1 > … > λ_L`, an orthonormal basis `e_1..e_L` on
//! a grid, coefficients `ρ_j = ⟨ρ, e_j⟩` and a score law. Curves are drawn as
//! `X = Σ_{l ≤ L} √λ_l ξ_l e_l` and responses as `Y = ⟨ρ, X⟩ + ε`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::hilbert::{inner_product, weighted_dot, Curve, Grid};

/// Default cap on the number of simulated KL terms.
pub const DEFAULT_MAX_TERMS: usize = 100;

/// Eigenvalue decay rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Decay {
    /// `λ_j = j^{-1-a}`, `a > 0`
    Power { a: f64 },
    /// `λ_j = r^j`, `0 < r < 1`
    Geometric { r: f64 },
}

impl Decay {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Decay::Power { a } if !(a.is_finite() && a > 0.0) => {
                Err(Error::Config(format!("power decay needs a > 0, got {a}")))
            }
            Decay::Geometric { r } if !(r > 0.0 && r < 1.0) => {
                Err(Error::Config(format!("geometric decay needs 0 < r < 1, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// `λ_j` for `j ≥ 1`.
    pub fn lambda(&self, j: usize) -> f64 {
        match *self {
            Decay::Power { a } => (j as f64).powf(-1.0 - a),
            Decay::Geometric { r } => r.powi(j as i32),
        }
    }

    pub fn lambdas(&self, len: usize) -> Vec<f64> {
        (1..=len).map(|j| self.lambda(j)).collect()
    }
}

/// Rule for basis coefficients, used for `ρ` and for fixed evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientRule {
    /// `c_j = scale · j^{-b}`, optionally rescaled so that `Σ c_j² = norm²`.
    Power {
        b: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm: Option<f64>,
    },
    /// `c_j = scale · r^j`
    Geometric {
        r: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Explicit leading coefficients, zero afterwards.
    Finite { coeffs: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl CoefficientRule {
    pub fn coefficients(&self, len: usize) -> Result<Vec<f64>> {
        let out = match self {
            CoefficientRule::Power { b, scale, norm } => {
                let mut c: Vec<f64> = (1..=len).map(|j| scale * (j as f64).powf(-b)).collect();
                if let Some(target) = norm {
                    let cur = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if cur == 0.0 {
                        return Err(Error::Config("cannot normalize a zero coefficient rule".into()));
                    }
                    c.iter_mut().for_each(|v| *v *= target / cur);
                }
                c
            }
            CoefficientRule::Geometric { r, scale } => {
                (1..=len).map(|j| scale * r.powi(j as i32)).collect()
            }
            CoefficientRule::Finite { coeffs } => {
                if coeffs.len() > len {
                    return Err(Error::Config(format!(
                        "{} coefficients given but only {len} basis functions",
                        coeffs.len()
                    )));
                }
                let mut c = coeffs.clone();
                c.resize(len, 0.0);
                c
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("coefficient rule produced non-finite values".into()));
        }
        Ok(out)
    }
}

/// Law of the standardized KL scores `ξ_l` (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum XiLaw {
    #[default]
    Gaussian,
    /// Uniform on `[-√3, √3]`.
    Uniform,
    /// `±1` with probability 1/2.
    Rademacher,
}

impl XiLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            XiLaw::Gaussian => StandardNormal.sample(rng),
            XiLaw::Uniform => rng.random_range(-3f64.sqrt()..3f64.sqrt()),
            XiLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// `E ξ⁴`
    pub fn fourth_moment(&self) -> f64 {
        match self {
            XiLaw::Gaussian => 3.0,
            XiLaw::Uniform => 9.0 / 5.0,
            XiLaw::Rademacher => 1.0,
        }
    }
}

/// `e_1 = 1`, `e_j = √2 cos((j−1)π t)` on the grid's domain mapped to `[0, 1]`,
/// then Gram-Schmidt orthonormalized (two passes) under the grid inner product.
pub fn cosine_basis(grid: &Arc<Grid>, len: usize) -> Result<Vec<Curve>> {
    if len == 0 || len > grid.len() {
        return validation(format!(
            "basis size must be in 1..={}, got {len}",
            grid.len()
        ));
    }
    let a = grid.points()[0];
    let span = grid.span();
    let w = grid.weights();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(len);
    for j in 0..len {
        let mut v: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| {
                if j == 0 {
                    1.0
                } else {
                    SQRT_2 * (j as f64 * PI * (t - a) / span).cos()
                }
            })
            .collect();
        for _ in 0..2 {
            for b in &basis {
                let c = weighted_dot(w, &v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = weighted_dot(w, &v, &v).sqrt();
        if nrm < 1e-8 {
            return Err(Error::Validation(format!(
                "basis function {} is numerically dependent on the previous ones",
                j + 1
            )));
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        basis.push(v);
    }
    Ok(basis
        .into_iter()
        .map(|v| Curve::from_parts_unchecked(grid.clone(), v))
        .collect())
}

/// Declarative description of a [`SpectralModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub decay: Decay,
    pub rho: CoefficientRule,
    pub noise_sd: f64,
    #[serde(default)]
    pub xi: XiLaw,
    /// Number of simulated KL terms; defaults to `min(100, grid_points − 1)`.
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    pub grid_points: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralModel {
    grid: Arc<Grid>,
    lambdas: Vec<f64>,
    basis: Vec<Curve>,
    rho_coeffs: Vec<f64>,
    rho: Curve,
    noise_sd: f64,
    xi_law: XiLaw,
    /// `√λ_l · e_l(t_i)` as an `L × p` matrix.
    loadings: DMatrix<f64>,
}

impl SpectralModel {
    /// Build the model on a uniform trapezoid grid over `[0, 1]`.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.decay.validate()?;
        if spec.grid_points < 3 {
            return Err(Error::Config("grid_points must be >= 3".into()));
        }
        let grid = Arc::new(crate::hilbert::make_trapezoid_grid(0.0, 1.0, spec.grid_points)?);
        let terms = spec
            .terms
            .unwrap_or_else(|| DEFAULT_MAX_TERMS.min(spec.grid_points - 1));
        if terms == 0 || terms >= spec.grid_points {
            return Err(Error::Config(format!(
                "L must be in 1..{}, got {terms}",
                spec.grid_points
            )));
        }
        let basis = cosine_basis(&grid, terms)?;
        let lambdas = spec.decay.lambdas(terms);
        let rho = spec.rho.coefficients(terms)?;
        Self::new(basis, lambdas, rho, spec.noise_sd, spec.xi)
    }

    /// Assemble a model from an explicit orthonormal basis.
    pub fn new(
        basis: Vec<Curve>,
        lambdas: Vec<f64>,
        rho_coeffs: Vec<f64>,
        noise_sd: f64,
        xi_law: XiLaw,
    ) -> Result<Self> {
        let terms = basis.len();
        if terms == 0 || lambdas.len() != terms || rho_coeffs.len() != terms {
            return validation("basis, eigenvalues and rho coefficients must have one common length >= 1");
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0))
            || lambdas.windows(2).any(|w| w[1] >= w[0])
        {
            return validation("model eigenvalues must be positive and strictly decreasing");
        }
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::Config(format!("noise_sd must be >= 0, got {noise_sd}")));
        }
        let grid = basis[0].grid().clone();
        let p = grid.len();
        let mut rho = vec![0.0; p];
        for (c, e) in rho_coeffs.iter().zip(&basis) {
            for (r, v) in rho.iter_mut().zip(e.values()) {
                *r += c * v;
            }
        }
        let loadings = DMatrix::from_fn(terms, p, |l, i| lambdas[l].sqrt() * basis[l].values()[i]);
        Ok(SpectralModel {
            rho: Curve::new(grid.clone(), rho)?,
            grid,
            lambdas,
            basis,
            rho_coeffs,
            noise_sd,
            xi_law,
            loadings,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn terms(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn basis(&self) -> &[Curve] {
        &self.basis
    }

    pub fn rho_coeffs(&self) -> &[f64] {
        &self.rho_coeffs
    }

    pub fn rho(&self) -> &Curve {
        &self.rho
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn xi_law(&self) -> XiLaw {
        self.xi_law
    }

    /// `Σ_l c_l e_l` for coefficients on the model basis.
    pub fn curve_from_coeffs(&self, coeffs: &[f64]) -> Result<Curve> {
        if coeffs.len() > self.terms() {
            return validation("more coefficients than basis functions");
        }
        let mut v = vec![0.0; self.grid.len()];
        for (c, e) in coeffs.iter().zip(&self.basis) {
            for (o, b) in v.iter_mut().zip(e.values()) {
                *o += c * b;
            }
        }
        Curve::new(self.grid.clone(), v)
    }

    /// `⟨x, e_l⟩` for every basis function.
    pub fn coefficients_of(&self, x: &Curve) -> Result<Vec<f64>> {
        self.basis.iter().map(|e| inner_product(x, e)).collect()
    }

    /// `⟨E(XY), e_j⟩ = λ_j ρ_j`, the coordinates of `Δ = Γρ`.
    pub fn cross_covariance_coeffs(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .zip(&self.rho_coeffs)
            .map(|(l, r)| l * r)
            .collect()
    }

    /// Draw `ξ_1..ξ_L`.
    pub fn draw_scores<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.terms()).map(|_| self.xi_law.sample(rng)).collect()
    }

    /// `Σ_l √λ_l ξ_l e_l`.
    pub fn curve_from_scores(&self, scores: &[f64]) -> Curve {
        let v = self.loadings.tr_mul(&nalgebra::DVector::from_column_slice(scores));
        Curve::from_parts_unchecked(self.grid.clone(), v.iter().copied().collect())
    }
}

/// One draw of `X` from the model.
pub fn kl_sample<R: Rng + ?Sized>(model: &SpectralModel, rng: &mut R) -> Curve {
    model.curve_from_scores(&model.draw_scores(rng))
}

/// Simulated sample with its latent scores.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub curves: Vec<Curve>,
    pub responses: Vec<f64>,
    /// `n × L` matrix of the `ξ_il`.
    pub scores: DMatrix<f64>,
}

/// `n` i.i.d. pairs `(X_i, Y_i)`. For each `i` the scores `ξ_i1..ξ_iL` are drawn
/// first and then `ε_i`, so the stream matches repeated [`kl_sample`] calls.
pub fn generate_dataset<R: Rng + ?Sized>(model: &SpectralModel, n: usize, rng: &mut R) -> Dataset {
    let terms = model.terms();
    let mut scores = DMatrix::zeros(n, terms);
    let mut noise = Vec::with_capacity(n);
    for i in 0..n {
        for l in 0..terms {
            scores[(i, l)] = model.xi_law.sample(rng);
        }
        let e: f64 = StandardNormal.sample(rng);
        noise.push(model.noise_sd * e);
    }
    let x = &scores * &model.loadings;
    let grid = model.grid.clone();
    let curves: Vec<Curve> = x
        .row_iter()
        .map(|row| Curve::from_parts_unchecked(grid.clone(), row.iter().copied().collect()))
        .collect();
    let w = grid.weights();
    let responses = curves
        .iter()
        .zip(&noise)
        .map(|(c, e)| weighted_dot(w, model.rho.values(), c.values()) + e)
        .collect();
    Dataset {
        curves,
        responses,
        scores,
    }
}
