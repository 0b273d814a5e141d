//! Filter values, the ranks k_n and d_n, and the bias check on each family.

use flr::filters::{check_h3, rank_report, select_kn, FilterSpec, GeneralizedVariant};
use flr::simlab::{generate_dataset, stream_rng, CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};
use flr::spectral::{eigendecompose, empirical_covariance, Centering};

fn main() -> flr::Result<()> {
    let cn = 0.05;
    let filters = [
        FilterSpec::truncation(cn)?,
        FilterSpec::ridge(1e-3, cn)?,
        FilterSpec::tikhonov(1e-4, cn)?,
        FilterSpec::generalized(1e-3, 2, GeneralizedVariant::A, cn)?,
        FilterSpec::generalized(1e-3, 2, GeneralizedVariant::B, cn)?,
    ];
    println!("{:<12} {:>10} {:>10} {:>10} {:>12}", "filter", "f(0.01)", "f(0.05)", "f(1)", "sup|sf-1|");
    let labels = ["truncation", "ridge", "tikhonov", "general A", "general B"];
    for (f, label) in filters.iter().zip(labels) {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>12.3e}",
            label,
            f.value(0.01)?,
            f.value(0.05)?,
            f.value(1.0)?,
            check_h3(f, 500, 1.0).sup_deviation
        );
    }

    let model = SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 1.0 },
        rho: CoefficientRule::Geometric { r: 0.6, scale: 1.0 },
        noise_sd: 0.5,
        xi: XiLaw::Gaussian,
        terms: Some(30),
        grid_points: 61,
    })?;
    let data = generate_dataset(&model, 500, &mut stream_rng(4, 0));
    let decomp = eigendecompose(&empirical_covariance(&data.curves, Centering::None)?)?;
    for cn in [0.2, 0.05, 0.01, 0.002] {
        let r = rank_report(&decomp, cn, Some(model.lambdas()))?;
        println!("c_n = {cn:<6} k_n = {:?}  d_n = {}", r.k_n, r.d_n);
        assert_eq!(r.k_n, Some(select_kn(model.lambdas(), cn)?));
    }
    Ok(())
}
