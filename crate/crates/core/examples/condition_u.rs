//! Partial sums of the identifiability series for three coefficient profiles.

use flr::simlab::oracle::condition_u_diagnostic;
use flr::simlab::{CoefficientRule, Decay};

fn main() -> flr::Result<()> {
    let terms = 1000;
    let lambdas = Decay::Power { a: 1.0 }.lambdas(terms);
    let profiles = [
        ("rho_j = 2^-j", CoefficientRule::Geometric { r: 0.5, scale: 1.0 }),
        ("rho_j = j^-1/2", CoefficientRule::Power { b: 0.5, scale: 1.0, norm: None }),
        ("rho = (3, -1, 0, ...)", CoefficientRule::Finite { coeffs: vec![3.0, -1.0] }),
    ];
    for (name, rule) in profiles {
        let rho = rule.coefficients(terms)?;
        let r = condition_u_diagnostic(&lambdas, &rho, terms)?;
        println!(
            "{name:<22} S_10 = {:.4}  S_100 = {:.4}  S_1000 = {:.4}  last/previous decade = {:.3e}/{:.3e}  convergent = {}",
            r.partial_sums[9],
            r.partial_sums[99],
            r.partial_sums[999],
            r.last_increment,
            r.previous_increment,
            r.convergent
        );
    }
    Ok(())
}
