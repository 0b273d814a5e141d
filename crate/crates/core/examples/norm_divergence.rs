//! The norm error of rho_hat does not settle under the s_hat scaling, and
//! shrinking c_n at fixed n inflates it.

use flr::filters::{threshold_for_rank, FilterKind};
use flr::simlab::experiments::{error_by_threshold, norm_divergence_demo, CnRule, FilterPlan};
use flr::simlab::{CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};

fn main() -> flr::Result<()> {
    let model = SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 1.0 },
        rho: CoefficientRule::Power { b: 2.0, scale: 1.0, norm: Some(1.0) },
        noise_sd: 0.5,
        xi: XiLaw::Gaussian,
        terms: None,
        grid_points: 101,
    })?;
    let plan = FilterPlan { kind: FilterKind::Truncation, rule: CnRule::CubeRoot };
    let rep = norm_divergence_demo(&model, &[100, 400, 1600, 6400], &plan, 200, 5)?;
    for row in &rep.rows {
        println!(
            "n = {:>5}  d_n ~ {:>5.2}  E|rho_hat - rho| = {:.4}  E[sqrt(n)|rho_hat - rho|/s_hat] = {:.4}",
            row.n,
            row.mean_d_n.unwrap_or(f64::NAN),
            row.mean_error.unwrap_or(f64::NAN),
            row.mean_normalized.unwrap_or(f64::NAN)
        );
    }
    println!("diverging: {}", rep.diverging);

    let cns: Vec<f64> = [2, 5, 10, 20, 40]
        .iter()
        .map(|&d| threshold_for_rank(model.lambdas(), d))
        .collect::<flr::Result<_>>()?;
    for row in error_by_threshold(&model, 400, FilterKind::Truncation, &cns, 200, 6)? {
        println!(
            "c_n = {:.2e}  d_n ~ {:>5.2}  E|rho_hat - rho| = {:.4}",
            row.cn,
            row.mean_d_n.unwrap_or(f64::NAN),
            row.mean_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
