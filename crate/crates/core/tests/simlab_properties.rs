use flr::estimator::t_hat;
use flr::filters::{cube_root_rank, threshold_for_rank, FilterSpec};
use flr::hilbert::inner_product;
use flr::simlab::experiments::{fixed_x_experiment, ExperimentSettings};
use flr::simlab::model::{generate_dataset, CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};
use flr::simlab::oracle::true_normalizers;
use flr::simlab::rng::{cell_stream, stream_rng};
use flr::simlab::stats::ks_critical;
use flr::spectral::{eigendecompose, empirical_covariance, Centering};

fn model(decay: Decay, rho: CoefficientRule, terms: usize, xi: XiLaw) -> SpectralModel {
    SpectralModel::from_spec(&ModelSpec {
        decay,
        rho,
        noise_sd: 0.5,
        xi,
        terms: Some(terms),
        grid_points: 41,
    })
    .unwrap()
}

#[test]
fn empirical_spectrum_matches_truth_at_large_n() {
    for xi in [XiLaw::Gaussian, XiLaw::Uniform, XiLaw::Rademacher] {
        let m = model(Decay::Geometric { r: 0.5 }, CoefficientRule::Finite { coeffs: vec![1.0] }, 3, xi);
        let data = generate_dataset(&m, 50_000, &mut stream_rng(3, 0));
        let d = eigendecompose(&empirical_covariance(&data.curves, Centering::None).unwrap()).unwrap();
        for j in 0..3 {
            let rel = (d.eigenvalues()[j] - m.lambdas()[j]).abs() / m.lambdas()[j];
            assert!(rel < 0.05, "{xi:?} λ_{}: {rel}", j + 1);
            let cos = inner_product(&d.eigenvectors()[j], &m.basis()[j]).unwrap().abs();
            assert!(cos >= 0.99, "{xi:?} e_{}: {cos}", j + 1);
        }
    }
}

#[test]
fn fixed_point_errors_are_normal() {
    let m = model(
        Decay::Geometric { r: 0.5 },
        CoefficientRule::Finite { coeffs: vec![1.0, -1.0] },
        5,
        XiLaw::Gaussian,
    );
    let cn = threshold_for_rank(m.lambdas(), 3).unwrap();
    let settings = ExperimentSettings {
        n: 1000,
        filter: FilterSpec::truncation(cn).unwrap(),
        level: 0.95,
        replicates: 400,
        seed: 17,
    };
    let out = fixed_x_experiment(&m, &m.basis()[0].clone(), &settings).unwrap();
    let ks = out.report.ks_statistic.unwrap();
    assert_eq!(out.report.failures, 0);
    assert!(ks < ks_critical(0.05, 400), "ks = {ks}");
    // t̂ for x = e_1 estimates 1/√λ_1
    let t = out.report.mean_normalizer.unwrap();
    assert!((t - m.lambdas()[0].powf(-0.5)).abs() < 0.05, "{t}");
}

#[test]
fn t_hat_stabilizes_for_smooth_fixed_points() {
    // λ_j = j^{-2}, x_j² = j^{-4}: x lies in the range of Γ^{1/2}
    let m = model(
        Decay::Power { a: 1.0 },
        CoefficientRule::Power { b: 2.0, scale: 1.0, norm: Some(1.0) },
        30,
        XiLaw::Gaussian,
    );
    let x = m
        .curve_from_coeffs(&CoefficientRule::Power { b: 2.0, scale: 1.0, norm: None }.coefficients(30).unwrap())
        .unwrap();
    let ns = [200, 400, 800, 1600];
    let means: Vec<f64> = ns
        .iter()
        .enumerate()
        .map(|(cell, &n)| {
            let cn = threshold_for_rank(m.lambdas(), cube_root_rank(n)).unwrap();
            let filter = FilterSpec::truncation(cn).unwrap();
            let ts: Vec<f64> = (0..60)
                .map(|r| {
                    let data = generate_dataset(&m, n, &mut stream_rng(5, cell_stream(cell, r)));
                    let cov = empirical_covariance(&data.curves, Centering::None).unwrap();
                    t_hat(&eigendecompose(&cov).unwrap(), &filter, &x).unwrap()
                })
                .collect();
            ts.iter().sum::<f64>() / ts.len() as f64
        })
        .collect();
    let overall = means.iter().sum::<f64>() / means.len() as f64;
    let last = means[means.len() - 1];
    assert!((last - overall).abs() / overall < 0.05, "{means:?}");

    // the population value is bounded by √(π²/6)
    let cn = threshold_for_rank(m.lambdas(), cube_root_rank(1600)).unwrap();
    let x_coeffs = m.coefficients_of(&x).unwrap();
    let tn = true_normalizers(m.lambdas(), &FilterSpec::truncation(cn).unwrap(), Some(&x_coeffs)).unwrap();
    assert!(tn.t_n_x.unwrap() < (std::f64::consts::PI.powi(2) / 6.0).sqrt());
}
