//! Spectral regularization filters `f_n` supported on `[c_n, +∞)`, the rank
//! rules `k_n` / `d_n`, and a finite-sample look at the bias condition
//! `sup_{s ≥ c_n} |s f_n(s) − 1| = o(1/√n)`.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::spectral::{spectral_gaps, SpectralDecomposition};

/// Grid resolution for the sup in [`check_h3`] when no closed form is used.
const H3_GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneralizedVariant {
    /// `x^p / (x + α)^{p+1}`
    A,
    /// `x^p / (x^{p+1} + α)`
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    /// `1/x`: plain spectral cut-off.
    Truncation,
    /// `1/(x + α)`
    Ridge { alpha: f64 },
    /// `x/(x² + α)`
    Tikhonov { alpha: f64 },
    Generalized {
        alpha: f64,
        p: u32,
        variant: GeneralizedVariant,
    },
}

impl FilterKind {
    fn alpha(&self) -> Option<f64> {
        match *self {
            FilterKind::Truncation => None,
            FilterKind::Ridge { alpha }
            | FilterKind::Tikhonov { alpha }
            | FilterKind::Generalized { alpha, .. } => Some(alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Truncation => "truncation",
            FilterKind::Ridge { .. } => "ridge",
            FilterKind::Tikhonov { .. } => "tikhonov",
            FilterKind::Generalized { .. } => "generalized",
        }
    }
}

/// A filter family with its threshold `c_n`.
///
/// `c_n` must be positive for truncation. The parametric kinds are finite at 0
/// and also accept `c_n = 0`, which keeps every mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterConfig", into = "FilterConfig")]
pub struct FilterSpec {
    kind: FilterKind,
    cn: f64,
}

impl FilterSpec {
    pub fn new(kind: FilterKind, cn: f64) -> Result<Self> {
        if !cn.is_finite() || cn < 0.0 {
            return Err(Error::Config(format!("threshold c_n must be finite and >= 0, got {cn}")));
        }
        if let Some(alpha) = kind.alpha() {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::Config(format!("alpha must be finite and > 0, got {alpha}")));
            }
        } else if cn == 0.0 {
            return Err(Error::Config("truncation needs c_n > 0".into()));
        }
        Ok(FilterSpec { kind, cn })
    }

    pub fn truncation(cn: f64) -> Result<Self> {
        Self::new(FilterKind::Truncation, cn)
    }

    pub fn ridge(alpha: f64, cn: f64) -> Result<Self> {
        Self::new(FilterKind::Ridge { alpha }, cn)
    }

    pub fn tikhonov(alpha: f64, cn: f64) -> Result<Self> {
        Self::new(FilterKind::Tikhonov { alpha }, cn)
    }

    pub fn generalized(alpha: f64, p: u32, variant: GeneralizedVariant, cn: f64) -> Result<Self> {
        Self::new(FilterKind::Generalized { alpha, p, variant }, cn)
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// `x f_n(x)`, exactly 1 on the support for truncation.
    pub fn gain(&self, x: f64) -> f64 {
        match self.kind {
            FilterKind::Truncation if x >= self.cn => 1.0,
            _ => x * self.eval(x),
        }
    }

    pub fn cn(&self) -> f64 {
        self.cn
    }

    /// Same family with a different threshold.
    pub fn with_cn(&self, cn: f64) -> Result<Self> {
        Self::new(self.kind, cn)
    }

    /// `f_n(x)`; zero below the threshold, `x = c_n` included in the support.
    pub fn value(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return validation(format!("filter argument must be >= 0, got {x}"));
        }
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        if x < self.cn {
            return 0.0;
        }
        self.formula(x)
    }

    /// The family's expression without the support indicator.
    pub fn formula(&self, x: f64) -> f64 {
        match self.kind {
            FilterKind::Truncation => 1.0 / x,
            FilterKind::Ridge { alpha } => 1.0 / (x + alpha),
            FilterKind::Tikhonov { alpha } => x / (x * x + alpha),
            FilterKind::Generalized { alpha, p, variant } => {
                let xp = x.powi(p as i32);
                match variant {
                    GeneralizedVariant::A => xp / (x + alpha).powi(p as i32 + 1),
                    GeneralizedVariant::B => xp / (xp * x + alpha),
                }
            }
        }
    }
}

pub fn filter_value(spec: &FilterSpec, x: f64) -> Result<f64> {
    spec.value(x)
}

/// JSON shape of a filter: `{"kind", "alpha"?, "p"?, "variant"?, "cn"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<GeneralizedVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn: Option<f64>,
}

impl FilterConfig {
    /// Kind without a threshold; used when `c_n` comes from a rule instead.
    pub fn kind(&self) -> Result<FilterKind> {
        let need_alpha = || {
            self.alpha
                .ok_or_else(|| Error::Config(format!("filter {:?} needs alpha", self.kind)))
        };
        let kind = match self.kind.as_str() {
            "truncation" => {
                if self.alpha.is_some() {
                    return Err(Error::Config("truncation takes no alpha".into()));
                }
                FilterKind::Truncation
            }
            "ridge" => FilterKind::Ridge { alpha: need_alpha()? },
            "tikhonov" => FilterKind::Tikhonov { alpha: need_alpha()? },
            "generalized" => FilterKind::Generalized {
                alpha: need_alpha()?,
                p: self
                    .p
                    .ok_or_else(|| Error::Config("generalized filter needs p".into()))?,
                variant: self
                    .variant
                    .ok_or_else(|| Error::Config("generalized filter needs variant".into()))?,
            },
            other => return Err(Error::Config(format!("unknown filter kind {other:?}"))),
        };
        if !matches!(kind, FilterKind::Generalized { .. }) && (self.p.is_some() || self.variant.is_some()) {
            return Err(Error::Config("p and variant apply only to the generalized filter".into()));
        }
        Ok(kind)
    }
}

impl TryFrom<FilterConfig> for FilterSpec {
    type Error = Error;

    fn try_from(c: FilterConfig) -> Result<Self> {
        let cn = c
            .cn
            .ok_or_else(|| Error::Config("filter needs cn".into()))?;
        FilterSpec::new(c.kind()?, cn)
    }
}

impl From<FilterSpec> for FilterConfig {
    fn from(s: FilterSpec) -> Self {
        let (p, variant) = match s.kind {
            FilterKind::Generalized { p, variant, .. } => (Some(p), Some(variant)),
            _ => (None, None),
        };
        FilterConfig {
            kind: s.kind.name().to_string(),
            alpha: s.kind.alpha(),
            p,
            variant,
            cn: Some(s.cn),
        }
    }
}

fn check_strictly_decreasing_positive(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return validation("eigenvalue sequence is empty");
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return validation("eigenvalues must be finite and positive");
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return validation("eigenvalues must be strictly decreasing");
    }
    Ok(())
}

/// The nonrandom rank `k_n = sup{p : λ_p + δ_p/2 ≥ c_n}` from true eigenvalues.
pub fn select_kn(true_eigenvalues: &[f64], cn: f64) -> Result<usize> {
    check_strictly_decreasing_positive(true_eigenvalues)?;
    if !(cn < true_eigenvalues[0]) {
        return validation(format!(
            "c_n = {cn} must be below the leading eigenvalue {}",
            true_eigenvalues[0]
        ));
    }
    let gaps = spectral_gaps(true_eigenvalues);
    Ok(true_eigenvalues
        .iter()
        .zip(&gaps)
        .rposition(|(l, d)| l + d / 2.0 >= cn)
        .map_or(0, |i| i + 1))
}

/// `d_n = #{j : λ̂_j ≥ c_n}`.
pub fn effective_rank(decomp: &SpectralDecomposition, cn: f64) -> usize {
    count_at_least(decomp.eigenvalues(), cn)
}

pub(crate) fn count_at_least(eigenvalues: &[f64], cn: f64) -> usize {
    eigenvalues.iter().filter(|&&l| l >= cn).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub d_n: usize,
    pub k_n: Option<usize>,
}

/// `d_n` from the data and, when the true spectrum is known, `k_n`.
pub fn rank_report(
    decomp: &SpectralDecomposition,
    cn: f64,
    true_eigenvalues: Option<&[f64]>,
) -> Result<RankReport> {
    let k_n = true_eigenvalues.map(|l| select_kn(l, cn)).transpose()?;
    Ok(RankReport {
        d_n: effective_rank(decomp, cn),
        k_n,
    })
}

/// Threshold placing the cut between the `d`-th and `(d+1)`-th eigenvalue
/// (geometric mean of the two), so that about `d` modes are retained.
pub fn threshold_for_rank(eigenvalues: &[f64], d: usize) -> Result<f64> {
    let positive: Vec<f64> = eigenvalues.iter().copied().filter(|&l| l > 0.0).collect();
    if d == 0 || positive.is_empty() {
        return validation("need d >= 1 and at least one positive eigenvalue");
    }
    let d = d.min(positive.len());
    let hi = positive[d - 1];
    Ok(match positive.get(d) {
        Some(&lo) => (hi * lo).sqrt(),
        None => 0.5 * hi,
    })
}

/// Rule-of-thumb target rank `floor(n^{1/3})`, at least 1.
pub fn cube_root_rank(n: usize) -> usize {
    // nudge guards against cbrt(1000) = 9.999...
    ((n as f64).cbrt() + 1e-9).floor().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H3Report {
    pub sup_deviation: f64,
    /// `sup_deviation · √n`
    pub scaled_deviation: f64,
    /// `scaled_deviation ≤ 1`; a finite-sample proxy, not a verdict.
    pub bound_satisfied_hint: bool,
}

/// `sup_{s ∈ [c_n, upper]} |s f_n(s) − 1|`.
///
/// Truncation, ridge and Tikhonov have their extremum at `s = c_n` and are
/// evaluated in closed form; the generalized family is searched on a grid.
pub fn check_h3(spec: &FilterSpec, n: usize, upper: f64) -> H3Report {
    let cn = spec.cn();
    let sup_deviation = match spec.kind() {
        FilterKind::Truncation => 0.0,
        FilterKind::Ridge { alpha } => alpha / (cn + alpha),
        FilterKind::Tikhonov { alpha } => alpha / (cn * cn + alpha),
        FilterKind::Generalized { .. } => {
            let upper = upper.max(cn);
            let dev = |s: f64| (s * spec.eval(s) - 1.0).abs();
            let step = (upper - cn) / (H3_GRID_POINTS - 1) as f64;
            (0..H3_GRID_POINTS)
                .map(|i| dev(cn + step * i as f64))
                .chain([dev(cn), dev(upper)])
                .fold(0.0, f64::max)
        }
    };
    let scaled_deviation = sup_deviation * (n as f64).sqrt();
    H3Report {
        sup_deviation,
        scaled_deviation,
        bound_satisfied_hint: scaled_deviation <= 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigendecompose, CovarianceOperator};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn diag_decomp(values: &[f64]) -> SpectralDecomposition {
        let p = values.len();
        let grid = Arc::new(
            crate::hilbert::Grid::new((0..p).map(|i| i as f64).collect(), vec![1.0; p]).unwrap(),
        );
        let k = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values));
        eigendecompose(&CovarianceOperator::from_kernel(grid, k, 10).unwrap()).unwrap()
    }

    #[test]
    fn filter_values() {
        let t = FilterSpec::truncation(0.3).unwrap();
        assert_eq!(t.value(0.5).unwrap(), 2.0);
        assert_eq!(t.value(0.2).unwrap(), 0.0);
        assert_eq!(t.value(0.3).unwrap(), 1.0 / 0.3);
        let tk = FilterSpec::tikhonov(0.01, 0.05).unwrap();
        assert!((tk.value(0.1).unwrap() - 5.0).abs() < 1e-12);
        let r = FilterSpec::ridge(0.1, 0.05).unwrap();
        assert!((r.value(0.4).unwrap() - 2.0).abs() < 1e-12);
        let ga = FilterSpec::generalized(0.1, 2, GeneralizedVariant::A, 0.05).unwrap();
        assert!((ga.value(0.4).unwrap() - 0.16 / 0.125).abs() < 1e-12);
        let gb = FilterSpec::generalized(0.1, 2, GeneralizedVariant::B, 0.05).unwrap();
        assert!((gb.value(0.4).unwrap() - 0.16 / (0.064 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn filter_errors() {
        let t = FilterSpec::truncation(0.3).unwrap();
        assert!(matches!(t.value(-1.0), Err(Error::Validation(_))));
        assert!(matches!(t.value(f64::NAN), Err(Error::Validation(_))));
        assert!(matches!(FilterSpec::ridge(0.0, 0.1), Err(Error::Config(_))));
        assert!(matches!(FilterSpec::tikhonov(-1.0, 0.1), Err(Error::Config(_))));
        assert!(matches!(FilterSpec::truncation(0.0), Err(Error::Config(_))));
        assert!(FilterSpec::ridge(0.5, 0.0).is_ok());
    }

    #[test]
    fn json_fragment() {
        let s: FilterSpec =
            serde_json::from_str(r#"{"kind":"ridge","alpha":0.1,"cn":0.3}"#).unwrap();
        assert_eq!(s, FilterSpec::ridge(0.1, 0.3).unwrap());
        let g: FilterSpec = serde_json::from_str(
            r#"{"kind":"generalized","alpha":0.1,"p":2,"variant":"B","cn":0.3}"#,
        )
        .unwrap();
        let back: FilterSpec = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(g, back);
        assert!(serde_json::from_str::<FilterSpec>(r#"{"kind":"ridge","cn":0.3}"#).is_err());
        assert!(serde_json::from_str::<FilterSpec>(r#"{"kind":"lasso","cn":0.3}"#).is_err());
        assert!(
            serde_json::from_str::<FilterSpec>(r#"{"kind":"truncation","cn":0.3,"extra":1}"#)
                .is_err()
        );
    }

    #[test]
    fn kn_examples() {
        let l = [1.0, 0.5, 0.25, 0.125, 0.0625];
        assert_eq!(select_kn(&l, 0.3).unwrap(), 3);
        // boundary: c_n between λ_2 + δ_2/2 = 0.75 and λ_1 + δ_1/2 = 1.25
        assert_eq!(select_kn(&l, 1.0 - 1e-9).unwrap(), 1);
        assert_eq!(select_kn(&[1.0, 0.2, 0.1], 0.3).unwrap(), 1);
        // δ_2 = 0.5 under the neighbour rule, so λ_2 + δ_2/2 = 0.75 ≥ 0.6
        assert_eq!(select_kn(&[1.0, 0.5], 0.6).unwrap(), 2);
    }

    #[test]
    fn kn_errors() {
        assert!(select_kn(&[1.0, 0.5], 1.0).is_err());
        assert!(select_kn(&[1.0, 0.5, 0.7], 0.1).is_err());
        assert!(select_kn(&[1.0, 1.0], 0.1).is_err());
        assert!(select_kn(&[], 0.1).is_err());
    }

    #[test]
    fn effective_rank_examples() {
        assert_eq!(effective_rank(&diag_decomp(&[0.01, 0.02]), 0.5), 0);
        assert_eq!(effective_rank(&diag_decomp(&[2.0, 0.5, 1e-13]), 0.1), 2);
        assert_eq!(effective_rank(&diag_decomp(&[1.0, 0.5, 0.25]), 0.25), 3);
        let r = rank_report(&diag_decomp(&[1.0, 0.5, 0.25]), 0.3, Some(&[1.0, 0.5, 0.25])).unwrap();
        // λ_3 + δ_3/2 = 0.375 ≥ 0.3 although λ̂_3 < c_n
        assert_eq!(r, RankReport { d_n: 2, k_n: Some(3) });
    }

    #[test]
    fn h3_values() {
        let t = check_h3(&FilterSpec::truncation(0.3).unwrap(), 100, 2.0);
        assert_eq!(t.sup_deviation, 0.0);
        assert!(t.bound_satisfied_hint);
        let r = check_h3(&FilterSpec::ridge(0.1, 0.3).unwrap(), 100, 2.0);
        assert!((r.sup_deviation - 0.25).abs() < 1e-12);
        assert!(!r.bound_satisfied_hint);
        let tk = check_h3(&FilterSpec::tikhonov(0.01, 0.3).unwrap(), 100, 2.0);
        assert!((tk.sup_deviation - 0.1).abs() < 1e-12);
        // generalized: deviation 1 - (s/(s+α))^{p+1} is maximal at c_n
        let g = FilterSpec::generalized(0.01, 2, GeneralizedVariant::A, 0.3).unwrap();
        let want = 1.0 - (0.3f64 / 0.31).powi(3);
        assert!((check_h3(&g, 100, 2.0).sup_deviation - want).abs() < 1e-12);
    }

    #[test]
    fn threshold_rule() {
        let l = [1.0, 0.25, 0.0625, 0.0];
        let c = threshold_for_rank(&l, 2).unwrap();
        assert!((c - 0.125).abs() < 1e-15);
        assert_eq!(count_at_least(&l, c), 2);
        assert_eq!(count_at_least(&l, threshold_for_rank(&l, 5).unwrap()), 3);
        assert_eq!(cube_root_rank(100), 4);
        assert_eq!(cube_root_rank(400), 7);
        assert_eq!(cube_root_rank(1000), 10);
        assert_eq!(cube_root_rank(1), 1);
    }

    fn arb_spec() -> impl Strategy<Value = FilterSpec> {
        (0.05f64..0.5, 1e-4f64..0.05, 0usize..5).prop_map(|(cn, alpha, which)| match which {
            0 => FilterSpec::truncation(cn).unwrap(),
            1 => FilterSpec::ridge(alpha, cn).unwrap(),
            2 => FilterSpec::tikhonov(alpha.min(cn * cn / 2.0), cn).unwrap(),
            // decreasing on the support needs c_n ≥ pα for variant A
            3 => FilterSpec::generalized(alpha.min(cn / 3.0), 2, GeneralizedVariant::A, cn).unwrap(),
            _ => FilterSpec::generalized(alpha.min(cn.powi(3) / 4.0), 2, GeneralizedVariant::B, cn)
                .unwrap(),
        })
    }

    proptest! {
        #[test]
        fn support_positivity_and_monotonicity(spec in arb_spec(), lam1 in 0.6f64..3.0) {
            let cn = spec.cn();
            prop_assert_eq!(spec.value(cn * 0.999).unwrap(), 0.0);
            prop_assert_eq!(spec.value(0.0).unwrap(), 0.0);
            // [c_n, λ_1 + δ_1] with δ_1 ≤ λ_1
            let hi = 2.0 * lam1;
            let mut prev = f64::INFINITY;
            for i in 0..=400 {
                let x = cn + (hi - cn) * i as f64 / 400.0;
                let f = spec.value(x).unwrap();
                prop_assert!(f > 0.0);
                prop_assert!(f <= prev * (1.0 + 1e-12));
                prev = f;
                let xf = x * f;
                prop_assert!(xf > 0.0 && xf <= 1.0 + 1e-12);
                if spec.kind() == FilterKind::Truncation {
                    prop_assert!((xf - 1.0).abs() < 1e-12);
                }
            }
            // the jump at c_n is f_n(c_n) and the filter is continuous just above it
            let a = spec.value(cn).unwrap();
            let b = spec.value(cn * (1.0 + 1e-9)).unwrap();
            prop_assert!((a - b).abs() <= 1e-6 * a);
        }

        #[test]
        fn ridge_approaches_truncation(cn in 0.05f64..0.5, alpha in 1e-6f64..0.1, t in 0.0f64..1.0) {
            let x = cn + t * 5.0;
            let r = FilterSpec::ridge(alpha, cn).unwrap().value(x).unwrap();
            prop_assert!((r - 1.0 / x).abs() <= alpha / (x * x) * (1.0 + 1e-12));
        }

        #[test]
        fn kn_nonincreasing_in_cn(a in 0.1f64..2.0, c1 in 1e-4f64..0.9, c2 in 1e-4f64..0.9) {
            let l: Vec<f64> = (1..=60).map(|j| (j as f64).powf(-1.0 - a)).collect();
            let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(select_kn(&l, lo).unwrap() >= select_kn(&l, hi).unwrap());
        }

        #[test]
        fn rank_rules_agree_when_gap_straddles(d in 1usize..6, drop in 50.0f64..500.0) {
            // d well-separated leading values, then a cliff
            let mut l: Vec<f64> = (0..d).map(|j| 1.0 - 0.05 * j as f64).collect();
            let tail = l[d - 1] / drop;
            l.extend((0..4).map(|j| tail * 0.5f64.powi(j)));
            let cn = (l[d - 1] * l[d]).sqrt();
            let dec = diag_decomp(&l);
            prop_assert_eq!(effective_rank(&dec, cn), select_kn(&l, cn).unwrap());
            prop_assert_eq!(effective_rank(&dec, cn), d);
        }
    }
}
