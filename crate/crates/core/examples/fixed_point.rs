//! Fixed-point intervals with t_hat for a smooth and a rough evaluation point.

use flr::filters::{cube_root_rank, threshold_for_rank, FilterSpec};
use flr::simlab::experiments::{fixed_x_experiment, ExperimentSettings};
use flr::simlab::{CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};

fn main() -> flr::Result<()> {
    let model = SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 1.0 },
        rho: CoefficientRule::Power { b: 2.0, scale: 1.0, norm: Some(1.0) },
        noise_sd: 0.5,
        xi: XiLaw::Gaussian,
        terms: Some(60),
        grid_points: 121,
    })?;
    let points = [
        ("smooth x_j = j^-2", CoefficientRule::Power { b: 2.0, scale: 1.0, norm: None }),
        ("rough x_j = j^-1", CoefficientRule::Power { b: 1.0, scale: 1.0, norm: None }),
    ];
    for (name, rule) in points {
        let x = model.curve_from_coeffs(&rule.coefficients(model.terms())?)?;
        println!("{name}");
        for n in [200, 800, 3200] {
            let cn = threshold_for_rank(model.lambdas(), cube_root_rank(n))?;
            let settings = ExperimentSettings {
                n,
                filter: FilterSpec::truncation(cn)?,
                level: 0.95,
                replicates: 200,
                seed: 77,
            };
            let r = fixed_x_experiment(&model, &x, &settings)?.report;
            println!(
                "  n = {n:>4}  mean t_hat = {:.3}  t_n,x = {:.3}  coverage = {:.3}  sup x_p^2/lambda_p = {:.1}",
                r.mean_normalizer.unwrap_or(f64::NAN),
                r.truth.and_then(|t| t.t_n_x).unwrap_or(f64::NAN),
                r.empirical_coverage.unwrap_or(f64::NAN),
                r.range_condition.unwrap_or(f64::NAN),
            );
        }
    }
    Ok(())
}
