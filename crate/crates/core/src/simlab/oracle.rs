//! Truth oracles computed from a known spectrum: the nonrandom normalizers
//! `s_n`, `t_{n,x}`, truncation bias, the variance growth mechanism behind the
//! fixed-point negative result, Condition 𝒰 partial sums, and the eigenvalue
//! inequalities used for convex decay.
//!
//! Everything here works on coefficient vectors in the true eigenbasis
//! (`λ_j`, `ρ_j = ⟨ρ, e_j⟩`, `x_j = ⟨x, e_j⟩`), so none of it depends on a grid.

use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::filters::{select_kn, FilterSpec};
use crate::simlab::model::SpectralModel;

/// Relative slack when comparing the two sides of an eigenvalue inequality.
const INEQUALITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrueNormalizers {
    pub k_n: usize,
    /// `√(Σ_{j ≤ k_n} [λ_j f_n(λ_j)]²)`
    pub s_n: f64,
    /// `√(Σ_{j ≤ k_n} λ_j f_n(λ_j)² x_j²)`, when a fixed `x` was given.
    pub t_n_x: Option<f64>,
}

/// `k_n`, `s_n` and (for fixed `x`) `t_{n,x}` from the true eigenvalues.
///
/// The population operator keeps exactly the first `k_n` modes, so the filter
/// expression is evaluated there without its `c_n` indicator; with truncation
/// this gives `s_n = √k_n`.
pub fn true_normalizers(
    lambdas: &[f64],
    filter: &FilterSpec,
    x_coeffs: Option<&[f64]>,
) -> Result<TrueNormalizers> {
    let k_n = select_kn(lambdas, filter.cn())?;
    let s_n = lambdas[..k_n]
        .iter()
        .map(|&l| truth_gain(filter, l).powi(2))
        .sum::<f64>()
        .sqrt();
    let t_n_x = x_coeffs.map(|x| t_partial_sums(lambdas, x, filter)[k_n.min(x.len()).max(1) - 1]);
    let t_n_x = match (t_n_x, x_coeffs) {
        (Some(_), Some(x)) if x.is_empty() || k_n == 0 => Some(0.0),
        (t, _) => t,
    };
    Ok(TrueNormalizers { k_n, s_n, t_n_x })
}

fn truth_gain(filter: &FilterSpec, l: f64) -> f64 {
    match filter.kind() {
        crate::filters::FilterKind::Truncation => 1.0,
        _ => l * filter.formula(l),
    }
}

/// `t_k = √(Σ_{j ≤ k} λ_j f_n(λ_j)² x_j²)` for `k = 1..=min(len)`.
pub fn t_partial_sums(lambdas: &[f64], x_coeffs: &[f64], filter: &FilterSpec) -> Vec<f64> {
    let mut acc = 0.0;
    lambdas
        .iter()
        .zip(x_coeffs)
        .map(|(&l, &x)| {
            let f = filter.formula(l);
            acc += l * f * f * x * x;
            acc.sqrt()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasTarget<'a> {
    /// Root mean square over a random predictor: `√(Σ_{l>k} λ_l ρ_l²)`.
    Expected,
    /// Fixed point: `|Σ_{l>k} ρ_l x_l|`.
    Fixed(&'a [f64]),
}

/// Size of `⟨Π_k ρ − ρ, ·⟩`, the part of `ρ` beyond the first `k` modes.
pub fn truncation_bias(lambdas: &[f64], rho: &[f64], k: usize, target: BiasTarget<'_>) -> f64 {
    match target {
        BiasTarget::Expected => lambdas
            .iter()
            .zip(rho)
            .skip(k)
            .map(|(l, r)| l * r * r)
            .sum::<f64>()
            .sqrt(),
        BiasTarget::Fixed(x) => rho
            .iter()
            .zip(x)
            .skip(k)
            .map(|(r, x)| r * x)
            .sum::<f64>()
            .abs(),
    }
}

pub fn model_truncation_bias(model: &SpectralModel, k: usize, target: BiasTarget<'_>) -> f64 {
    truncation_bias(model.lambdas(), model.rho_coeffs(), k, target)
}

/// `I_j = Σ_{l<j} λ_l x_l² / (λ_j − λ_l)²` for `j = 1..=len` (`I_1 = 0`).
pub fn variance_inner_sums(lambdas: &[f64], x_coeffs: &[f64]) -> Result<Vec<f64>> {
    let len = lambdas.len().min(x_coeffs.len());
    if lambdas[..len].windows(2).any(|w| w[1] >= w[0]) {
        return validation("variance bound needs strictly decreasing eigenvalues");
    }
    Ok((0..len)
        .map(|j| {
            (0..j)
                .map(|l| lambdas[l] * x_coeffs[l].powi(2) / (lambdas[j] - lambdas[l]).powi(2))
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceBoundRow {
    pub k: usize,
    /// `Σ_{j ≤ k} λ_j ρ_j² I_j`
    pub value: f64,
    /// `Σ_{j ≤ k} j^{1−β} ρ_j²`
    pub reference: f64,
}

/// Lower bound on the variance of the random fixed-point bias term, at each `k`.
pub fn variance_lower_bound(
    lambdas: &[f64],
    rho: &[f64],
    x_coeffs: &[f64],
    beta: f64,
    k_grid: &[usize],
) -> Result<Vec<VarianceBoundRow>> {
    let len = lambdas.len().min(rho.len()).min(x_coeffs.len());
    if let Some(&k) = k_grid.iter().find(|&&k| k == 0 || k > len) {
        return validation(format!("k = {k} outside 1..={len}"));
    }
    let inner = variance_inner_sums(&lambdas[..len], &x_coeffs[..len])?;
    let mut value = Vec::with_capacity(len);
    let mut reference = Vec::with_capacity(len);
    let (mut v, mut r) = (0.0, 0.0);
    for j in 0..len {
        v += lambdas[j] * rho[j].powi(2) * inner[j];
        r += ((j + 1) as f64).powf(1.0 - beta) * rho[j].powi(2);
        value.push(v);
        reference.push(r);
    }
    Ok(k_grid
        .iter()
        .map(|&k| VarianceBoundRow {
            k,
            value: value[k - 1],
            reference: reference[k - 1],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionUReport {
    /// `Σ_{j ≤ J} ⟨E(XY), e_j⟩² / λ_j²` for `J = 1..`
    pub partial_sums: Vec<f64>,
    /// Increment over the last block `(J/b, J]`.
    pub last_increment: f64,
    /// Increment over the block before it, `(J/b², J/b]`.
    pub previous_increment: f64,
    /// Block factor `b`: 10 when `J ≥ 100`, else 2.
    pub block_factor: usize,
    pub convergent: bool,
}

/// Partial sums of Condition 𝒰 with a heuristic convergence flag: the series is
/// called convergent when the last block contributes less than half of the one
/// before (or both are zero). Logarithmic divergence gives a ratio near 1.
pub fn condition_u_diagnostic(lambdas: &[f64], rho: &[f64], terms: usize) -> Result<ConditionUReport> {
    let len = lambdas.len().min(rho.len());
    if terms == 0 || terms > len {
        return validation(format!("J must be in 1..={len}, got {terms}"));
    }
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = lambdas[..terms]
        .iter()
        .zip(&rho[..terms])
        .map(|(l, r)| {
            let cross = l * r;
            acc += cross * cross / (l * l);
            acc
        })
        .collect();
    let s = |j: usize| if j == 0 { 0.0 } else { partial_sums[j - 1] };
    let b = if terms >= 100 { 10 } else { 2 };
    let (j2, j1) = (terms / b, terms / (b * b));
    let last_increment = s(terms) - s(j2);
    let previous_increment = s(j2) - s(j1);
    let convergent = if previous_increment > 0.0 {
        last_increment < 0.5 * previous_increment
    } else {
        last_increment == 0.0
    };
    Ok(ConditionUReport {
        partial_sums,
        last_increment,
        previous_increment,
        block_factor: b,
        convergent,
    })
}

pub fn model_condition_u(model: &SpectralModel, terms: usize) -> Result<ConditionUReport> {
    condition_u_diagnostic(model.lambdas(), model.rho_coeffs(), terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenInequalityReport {
    pub length: usize,
    /// First pair `(j, k)`, `j < k` (1-based), with `k λ_k > j λ_j`.
    pub first_rank_violation: Option<(usize, usize)>,
    pub rank_violations: usize,
    /// First `k` (1-based) with `Σ_{j ≥ k} λ_j > (k + 1) λ_k`.
    pub first_tail_violation: Option<usize>,
    pub tail_violations: usize,
}

impl EigenInequalityReport {
    pub fn holds(&self) -> bool {
        self.rank_violations == 0 && self.tail_violations == 0
    }
}

/// Check `j λ_j ≥ k λ_k` for every pair `j < k` and `Σ_{j ≥ k} λ_j ≤ (k+1) λ_k`
/// for every `k`, the tail sum running to the end of the given sequence.
/// `rank_violations` counts the indices `j` that have at least one violating `k`.
pub fn eigen_inequality_check(lambdas: &[f64]) -> EigenInequalityReport {
    let m = lambdas.len();
    let weighted: Vec<f64> = lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| (i + 1) as f64 * l)
        .collect();
    let mut first_rank_violation = None;
    let mut rank_violations = 0;
    for j in 0..m {
        let bound = weighted[j] * (1.0 + INEQUALITY_RTOL);
        if let Some(k) = (j + 1..m).find(|&k| weighted[k] > bound) {
            rank_violations += 1;
            first_rank_violation.get_or_insert((j + 1, k + 1));
        }
    }
    let mut tail = 0.0;
    let mut tails = vec![0.0; m];
    for k in (0..m).rev() {
        tail += lambdas[k];
        tails[k] = tail;
    }
    let mut first_tail_violation = None;
    let mut tail_violations = 0;
    for k in 0..m {
        if tails[k] > (k + 2) as f64 * lambdas[k] * (1.0 + INEQUALITY_RTOL) {
            tail_violations += 1;
            first_tail_violation.get_or_insert(k + 1);
        }
    }
    EigenInequalityReport {
        length: m,
        first_rank_violation,
        rank_violations,
        first_tail_violation,
        tail_violations,
    }
}

/// `sup_{p ≤ L} x_p² / λ_p`, the fixed-point regularity condition.
pub fn range_condition(lambdas: &[f64], x_coeffs: &[f64]) -> f64 {
    lambdas
        .iter()
        .zip(x_coeffs)
        .map(|(l, x)| x * x / l)
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return validation("slope fit needs two or more paired points");
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Validation("slope fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
