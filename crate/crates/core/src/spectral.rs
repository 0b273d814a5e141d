//! Empirical covariance `Γ_n`, cross-covariance `Δ_n`, and the functional PCA of
//! `Γ_n` under the quadrature inner product.
//!
//! The covariance acts on a curve as `(Γ_n h)(t_i) = Σ_j K_ij w_j h_j`. Its
//! eigenproblem is solved through the symmetric similarity transform
//! `S = W^{1/2} K W^{1/2}`; eigenvectors of `S` are mapped back with `W^{-1/2}`,
//! which makes them orthonormal under `⟨·,·⟩`.
//!
//! The asymptotic theory assumes centered predictors. By default the sample is
//! centered at its empirical mean; pass [`Centering::None`] for synthetic data
//! that is already centered.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{validation, Error, Result};
use crate::hilbert::{check_same_grid, inner_product, Curve, Grid};

/// Absolute asymmetry tolerated in a kernel (scaled by `max(1, max|K|)`).
const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues below this fraction of the leading one are set to zero.
const CLAMP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    /// Subtract the empirical mean curve (and mean response).
    #[default]
    Mean,
    /// Use the raw curves, for data known to have zero mean.
    None,
}

/// Row-major stack of the sample into an `n × p` matrix.
pub(crate) fn sample_matrix(sample: &[Curve]) -> Result<(Arc<Grid>, DMatrix<f64>)> {
    let first = sample
        .first()
        .ok_or_else(|| Error::Validation("sample is empty".into()))?;
    let grid = first.grid().clone();
    let p = grid.len();
    for c in sample {
        check_same_grid(&grid, c.grid())?;
    }
    let m = DMatrix::from_fn(sample.len(), p, |i, j| sample[i].values()[j]);
    Ok((grid, m))
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

#[derive(Debug, Clone)]
pub struct CovarianceOperator {
    grid: Arc<Grid>,
    kernel: DMatrix<f64>,
    n: usize,
    mean: Option<Curve>,
}

impl CovarianceOperator {
    /// Wrap an explicit kernel matrix, e.g. a population covariance.
    pub fn from_kernel(grid: Arc<Grid>, kernel: DMatrix<f64>, n: usize) -> Result<Self> {
        let p = grid.len();
        if kernel.nrows() != p || kernel.ncols() != p {
            return validation(format!(
                "kernel is {}x{} but grid has {p} points",
                kernel.nrows(),
                kernel.ncols()
            ));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return validation("kernel contains non-finite values");
        }
        Ok(CovarianceOperator {
            grid,
            kernel,
            n,
            mean: None,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The mean curve that was subtracted, if the sample was centered.
    pub fn mean(&self) -> Option<&Curve> {
        self.mean.as_ref()
    }

    /// `(Γ h)(t_i) = Σ_j K_ij w_j h_j`.
    pub fn apply(&self, h: &Curve) -> Result<Curve> {
        check_same_grid(&self.grid, h.grid())?;
        let wh = DVector::from_iterator(
            h.len(),
            h.values()
                .iter()
                .zip(self.grid.weights())
                .map(|(v, w)| v * w),
        );
        let out = &self.kernel * wh;
        Ok(Curve::from_parts_unchecked(
            self.grid.clone(),
            out.iter().copied().collect(),
        ))
    }
}

/// `Γ_n = (1/n) Σ X_i ⊗ X_i`, optionally after centering.
pub fn empirical_covariance(sample: &[Curve], centering: Centering) -> Result<CovarianceOperator> {
    let (grid, mut x) = sample_matrix(sample)?;
    let n = x.nrows();
    let mean = match centering {
        Centering::Mean => {
            let mu = column_means(&x);
            for mut row in x.row_iter_mut() {
                row -= mu.transpose();
            }
            Some(Curve::from_parts_unchecked(
                grid.clone(),
                mu.iter().copied().collect(),
            ))
        }
        Centering::None => None,
    };
    let mut kernel = x.transpose() * &x;
    kernel /= n as f64;
    // enforce exact symmetry lost to rounding in the product
    let kernel = (&kernel + kernel.transpose()) * 0.5;
    Ok(CovarianceOperator {
        grid,
        kernel,
        n,
        mean,
    })
}

#[derive(Debug, Clone)]
pub struct CrossCovariance {
    curve: Curve,
    response_mean: f64,
}

impl CrossCovariance {
    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Mean response subtracted before forming `Δ_n` (zero when uncentered).
    pub fn response_mean(&self) -> f64 {
        self.response_mean
    }
}

/// `Δ_n = (1/n) Σ Y_i X_i`, centered the same way as [`empirical_covariance`].
pub fn cross_covariance(
    sample: &[Curve],
    responses: &[f64],
    centering: Centering,
) -> Result<CrossCovariance> {
    if sample.len() != responses.len() {
        return validation(format!(
            "{} curves but {} responses",
            sample.len(),
            responses.len()
        ));
    }
    if responses.iter().any(|y| !y.is_finite()) {
        return validation("responses contain non-finite values");
    }
    let (grid, x) = sample_matrix(sample)?;
    let n = x.nrows() as f64;
    let y = DVector::from_column_slice(responses);
    let (y, response_mean) = match centering {
        Centering::Mean => {
            let ybar = y.sum() / n;
            (y.add_scalar(-ybar), ybar)
        }
        // Σ (Y_i - Ȳ)(X_i - X̄) = Σ (Y_i - Ȳ) X_i, so only Y needs centering
        Centering::None => (y, 0.0),
    };
    let delta = x.transpose() * y / n;
    Ok(CrossCovariance {
        curve: Curve::from_parts_unchecked(grid, delta.iter().copied().collect()),
        response_mean,
    })
}

/// Eigenpairs of `Γ_n` in descending order with gaps `δ̂_j`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Curve>,
    gaps: Vec<f64>,
    n: usize,
}

impl SpectralDecomposition {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Curve] {
        &self.eigenvectors
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of eigenvalues that survived the clamp.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > 0.0).count()
    }

    /// Coordinates `⟨h, ê_j⟩` of `h` on the first `k` eigenvectors.
    pub fn coordinates(&self, h: &Curve, k: usize) -> Result<Vec<f64>> {
        check_same_grid(&self.grid, h.grid())?;
        self.eigenvectors
            .iter()
            .take(k)
            .map(|e| inner_product(h, e))
            .collect()
    }

    /// `Σ_{j<k} c_j ê_j`.
    pub fn combine(&self, coeffs: &[f64]) -> Curve {
        let mut out = vec![0.0; self.grid.len()];
        for (c, e) in coeffs.iter().zip(&self.eigenvectors) {
            for (o, v) in out.iter_mut().zip(e.values()) {
                *o += c * v;
            }
        }
        Curve::from_parts_unchecked(self.grid.clone(), out)
    }
}

/// `δ_1 = λ_1 − λ_2`, `δ_j = min(λ_j − λ_{j+1}, λ_{j−1} − λ_j)`. The last entry only
/// has a left neighbour.
pub fn spectral_gaps(lambdas: &[f64]) -> Vec<f64> {
    let m = lambdas.len();
    (0..m)
        .map(|j| {
            let right = (j + 1 < m).then(|| lambdas[j] - lambdas[j + 1]);
            let left = (j > 0).then(|| lambdas[j - 1] - lambdas[j]);
            match (left, right) {
                (None, Some(r)) => r,
                (Some(l), None) => l,
                (Some(l), Some(r)) => l.min(r),
                (None, None) => lambdas[j],
            }
        })
        .collect()
}

/// Functional PCA of the weighted operator.
///
/// Eigenvectors are sign-normalized so their largest-magnitude coordinate is
/// positive (first index wins ties). Eigenvalues below `1e-12·λ̂_1` become 0.
pub fn eigendecompose(op: &CovarianceOperator) -> Result<SpectralDecomposition> {
    let k = op.kernel();
    let p = k.nrows();
    let scale = k.amax().max(1.0);
    for i in 0..p {
        for j in 0..i {
            if (k[(i, j)] - k[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return validation(format!("kernel not symmetric at ({i}, {j})"));
            }
        }
    }
    let sqrt_w: Vec<f64> = op.grid().weights().iter().map(|w| w.sqrt()).collect();
    let s = DMatrix::from_fn(p, p, |i, j| {
        0.5 * (k[(i, j)] + k[(j, i)]) * sqrt_w[i] * sqrt_w[j]
    });
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]].max(0.0);
    let mut eigenvalues = Vec::with_capacity(p);
    let mut eigenvectors = Vec::with_capacity(p);
    for &idx in &order {
        let lam = eig.eigenvalues[idx];
        eigenvalues.push(if lam < CLAMP_RTOL * top || lam <= 0.0 { 0.0 } else { lam });
        let v = eig.eigenvectors.column(idx);
        let mut values: Vec<f64> = v.iter().zip(&sqrt_w).map(|(x, sw)| x / sw).collect();
        let nrm = values
            .iter()
            .zip(op.grid().weights())
            .map(|(x, w)| w * x * x)
            .sum::<f64>()
            .sqrt();
        let mut pivot = 0;
        for (i, x) in values.iter().enumerate() {
            if x.abs() > values[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if values[pivot] < 0.0 { -1.0 } else { 1.0 };
        for x in &mut values {
            *x *= sign / nrm;
        }
        eigenvectors.push(Curve::from_parts_unchecked(op.grid().clone(), values));
    }
    let gaps = spectral_gaps(&eigenvalues);
    Ok(SpectralDecomposition {
        grid: op.grid().clone(),
        eigenvalues,
        eigenvectors,
        gaps,
        n: op.n(),
    })
}
