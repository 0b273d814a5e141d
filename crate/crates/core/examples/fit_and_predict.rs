//! Fit on simulated curves, save the fit, reload it and build intervals.

use flr::estimator::{fit, predict, prediction_interval, EstimatorFit, Normalizer};
use flr::filters::{cube_root_rank, threshold_for_rank, FilterSpec};
use flr::simlab::{generate_dataset, stream_rng, CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};
use flr::spectral::{eigendecompose, empirical_covariance, Centering};

fn main() -> flr::Result<()> {
    let model = SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 1.0 },
        rho: CoefficientRule::Power { b: 2.0, scale: 1.0, norm: Some(1.0) },
        noise_sd: 0.3,
        xi: XiLaw::Gaussian,
        terms: Some(40),
        grid_points: 81,
    })?;
    let train = generate_dataset(&model, 300, &mut stream_rng(1, 0));
    let test = generate_dataset(&model, 5, &mut stream_rng(1, 1));

    let cov = empirical_covariance(&train.curves, Centering::Mean)?;
    let decomp = eigendecompose(&cov)?;
    let cn = threshold_for_rank(decomp.eigenvalues(), cube_root_rank(train.curves.len()))?;
    let filter = FilterSpec::truncation(cn)?;
    let fitted = fit(&train.curves, &train.responses, &filter, Centering::Mean)?;
    println!(
        "c_n = {cn:.4e}, d_n = {}, s_hat = {:.4}, sigma_hat = {:.4}",
        fitted.d_n(),
        fitted.s_hat(),
        fitted.sigma_hat().unwrap_or(f64::NAN)
    );

    let json = serde_json::to_string(&fitted.to_record())?;
    let reloaded = EstimatorFit::from_record(serde_json::from_str(&json)?)?;

    for (x, y) in test.curves.iter().zip(&test.responses) {
        let s = prediction_interval(&reloaded, x, 0.95, Normalizer::SHat)?;
        let t = prediction_interval(&reloaded, x, 0.95, Normalizer::THat)?;
        assert_eq!(predict(&fitted, x)?, s.center);
        println!(
            "y = {y:+.3}  fit = {:+.3}  s-interval [{:+.3}, {:+.3}]  t-interval [{:+.3}, {:+.3}]",
            s.center,
            s.lo(),
            s.hi(),
            t.lo(),
            t.hi()
        );
    }
    Ok(())
}
