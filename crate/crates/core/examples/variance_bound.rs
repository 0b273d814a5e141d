//! Growth of the fixed-point variance lower bound when x is too rough.

use flr::simlab::oracle::{log_log_slope, variance_inner_sums, variance_lower_bound};
use flr::simlab::Decay;

fn main() -> flr::Result<()> {
    let (alpha, beta) = (0.5, 2.0);
    let len = 500;
    let lambdas = Decay::Power { a: alpha }.lambdas(len);
    let x: Vec<f64> = (1..=len).map(|k| (k as f64).powf(-(1.0 + beta) / 2.0)).collect();
    let rho: Vec<f64> = (1..=len).map(|k| (k as f64).powf(-0.75)).collect();

    let inner = variance_inner_sums(&lambdas, &x)?;
    let js: Vec<f64> = (50..=len).map(|j| j as f64).collect();
    let slope = log_log_slope(&js, &inner[49..])?;
    println!("inner-sum log-log slope on [50, 500]: {slope:.3} (2 + alpha - beta = {})", 2.0 + alpha - beta);

    let k_grid = [10, 50, 100, 200, 500];
    for row in variance_lower_bound(&lambdas, &rho, &x, beta, &k_grid)? {
        println!("k = {:>3}  bound = {:.4}  reference = {:.4}", row.k, row.value, row.reference);
    }
    Ok(())
}
