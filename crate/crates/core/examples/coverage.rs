//! Random-predictor coverage of the s_hat interval on a smooth model.
//! Pass `--threads N` to pin the thread count; results do not change.

use flr::filters::FilterKind;
use flr::simlab::experiments::{coverage_experiment, CnRule, ExperimentSettings, FilterPlan};
use flr::simlab::{CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};

fn main() -> flr::Result<()> {
    let model = SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 2.0 },
        rho: CoefficientRule::Power { b: 3.0, scale: 1.0, norm: Some(1.0) },
        noise_sd: 0.5,
        xi: XiLaw::Gaussian,
        terms: None,
        grid_points: 101,
    })?;
    let plan = FilterPlan { kind: FilterKind::Truncation, rule: CnRule::CubeRoot };
    for n in [50, 100, 400] {
        let settings = ExperimentSettings {
            n,
            filter: plan.resolve(model.lambdas(), n)?,
            level: 0.95,
            replicates: 500,
            seed: 2024,
        };
        let r = coverage_experiment(&model, &settings)?.report;
        println!(
            "n = {n:>4}  d_n ~ {:.2}  coverage = {:.3}  KS = {:.4} (1% critical {:.4})  mean half-width = {:.4}",
            r.mean_d_n.unwrap_or(f64::NAN),
            r.empirical_coverage.unwrap_or(f64::NAN),
            r.ks_statistic.unwrap_or(f64::NAN),
            r.ks_critical_1pct,
            r.mean_half_width.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
