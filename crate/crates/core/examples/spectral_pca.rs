//! Functional PCA on a nonuniform grid, compared with the true KL basis.

use std::sync::Arc;

use flr::hilbert::{inner_product, Grid};
use flr::simlab::model::cosine_basis;
use flr::simlab::{generate_dataset, stream_rng, CoefficientRule, SpectralModel, XiLaw};
use flr::spectral::{eigendecompose, empirical_covariance, Centering};

fn main() -> flr::Result<()> {
    // denser near 0
    let points: Vec<f64> = (0..60).map(|i| (i as f64 / 59.0).powi(2)).collect();
    let grid = Arc::new(Grid::trapezoid(points)?);
    let basis = cosine_basis(&grid, 5)?;
    let lambdas = vec![1.0, 0.4, 0.15, 0.05, 0.01];
    let rho = CoefficientRule::Finite { coeffs: vec![1.0] }.coefficients(5)?;
    let model = SpectralModel::new(basis, lambdas, rho, 0.0, XiLaw::Uniform)?;

    let data = generate_dataset(&model, 20_000, &mut stream_rng(9, 0));
    let decomp = eigendecompose(&empirical_covariance(&data.curves, Centering::Mean)?)?;
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "j", "lambda", "lambda_hat", "gap_hat", "|<e,e_hat>|");
    for j in 0..5 {
        let cos = inner_product(&decomp.eigenvectors()[j], &model.basis()[j])?.abs();
        println!(
            "{:>3} {:>10.4} {:>10.4} {:>10.4} {:>10.5}",
            j + 1,
            model.lambdas()[j],
            decomp.eigenvalues()[j],
            decomp.gaps()[j],
            cos
        );
    }
    let trace: f64 = decomp.eigenvalues().iter().sum();
    println!("trace = {trace:.4} (population {:.4})", model.lambdas().iter().sum::<f64>());
    Ok(())
}
