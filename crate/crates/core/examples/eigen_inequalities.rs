//! Check j*lambda_j >= k*lambda_k and the tail-sum bound on several spectra.

use flr::simlab::oracle::eigen_inequality_check;
use flr::simlab::Decay;

fn main() {
    let cases = [
        ("j^-1.5", Decay::Power { a: 0.5 }.lambdas(1000)),
        ("j^-2", Decay::Power { a: 1.0 }.lambdas(1000)),
        ("j^-3", Decay::Power { a: 2.0 }.lambdas(1000)),
        ("0.5^j", Decay::Geometric { r: 0.5 }.lambdas(60)),
        ("0.9^j", Decay::Geometric { r: 0.9 }.lambdas(60)),
        ("(1, .9, .1, .09)", vec![1.0, 0.9, 0.1, 0.09]),
    ];
    for (name, l) in cases {
        let r = eigen_inequality_check(&l);
        println!(
            "{name:<18} len = {:>4}  rank violations = {:>3} (first {:?})  tail violations = {:>3} (first {:?})",
            r.length, r.rank_violations, r.first_rank_violation, r.tail_violations, r.first_tail_violation
        );
    }
}
