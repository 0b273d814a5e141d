//! Acceptance suite. Every check prints one `criterion N ...: PASS|FAIL` line
//! (run with `--nocapture` to see them) and then asserts.

use std::sync::{Arc, OnceLock};

use flr::estimator::fit;
use flr::filters::{check_h3, threshold_for_rank, FilterKind, FilterSpec};
use flr::hilbert::{Curve, Grid};
use flr::simlab::experiments::{coverage_experiment, norm_divergence_demo, CoverageOutcome, ExperimentSettings, FilterPlan, CnRule};
use flr::simlab::model::{CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};
use flr::simlab::oracle::{eigen_inequality_check, log_log_slope, t_partial_sums, variance_inner_sums};
use flr::simlab::stats::ks_critical;
use flr::spectral::Centering;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SEED: u64 = 20_240_501;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id} ({name}): {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn smooth_model() -> SpectralModel {
    SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 2.0 },
        rho: CoefficientRule::Power {
            b: 3.0,
            scale: 1.0,
            norm: Some(1.0),
        },
        noise_sd: 0.5,
        xi: XiLaw::Gaussian,
        terms: None,
        grid_points: 101,
    })
    .unwrap()
}

fn smooth_run(n: usize) -> CoverageOutcome {
    let model = smooth_model();
    let plan = FilterPlan {
        kind: FilterKind::Truncation,
        rule: CnRule::CubeRoot,
    };
    let settings = ExperimentSettings {
        n,
        filter: plan.resolve(model.lambdas(), n).unwrap(),
        level: 0.95,
        replicates: 1000,
        seed: SEED,
    };
    coverage_experiment(&model, &settings).unwrap()
}

fn clt_run() -> &'static CoverageOutcome {
    static RUN: OnceLock<CoverageOutcome> = OnceLock::new();
    RUN.get_or_init(|| smooth_run(400))
}

#[test]
fn criterion_1_coverage() {
    let out = smooth_run(100);
    let r = &out.report;
    let cov = r.empirical_coverage.unwrap();
    let pass = r.failures == 0 && (0.92..=0.98).contains(&cov);
    report(
        1,
        "coverage at n = 100",
        pass,
        format!("coverage={cov:.4} band=[0.92, 0.98] mean_d_n={:?} failures={}", r.mean_d_n, r.failures),
    );
    assert!(pass);
}

#[test]
fn criterion_2_clt_normality() {
    let r = &clt_run().report;
    let ks = r.ks_statistic.unwrap();
    let crit = ks_critical(0.01, 1000);
    let pass = r.failures == 0 && ks < crit;
    report(
        2,
        "standardized errors are normal at n = 400",
        pass,
        format!("ks={ks:.4} critical={crit:.4} mean_d_n={:?}", r.mean_d_n),
    );
    assert!(pass);
}

/// Random sample on a nonuniform grid, returned with `W^{1/2}`-weighted rows.
struct Instance {
    curves: Vec<Curve>,
    y: Vec<f64>,
    xw: DMatrix<f64>,
    sqrt_w: DVector<f64>,
}

fn instance(n: usize, p: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![0.0];
    for _ in 1..p {
        let step: f64 = StandardNormal.sample(&mut rng);
        pts.push(pts.last().unwrap() + 0.5 + step.abs());
    }
    let grid = Arc::new(Grid::trapezoid(pts).unwrap());
    let sqrt_w = DVector::from_iterator(p, grid.weights().iter().map(|w| w.sqrt()));
    let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let curves = x
        .row_iter()
        .map(|r| Curve::new(grid.clone(), r.iter().copied().collect()).unwrap())
        .collect();
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sqrt_w[j]);
    Instance { curves, y, xw, sqrt_w }
}

fn unweight(u: &DVector<f64>, sqrt_w: &DVector<f64>) -> Vec<f64> {
    u.iter().zip(sqrt_w.iter()).map(|(a, s)| a / s).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn center(m: &DMatrix<f64>, y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = m.nrows() as f64;
    let mut mc = m.clone();
    for mut col in mc.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    let ybar = y.iter().sum::<f64>() / n;
    (mc, DVector::from_iterator(y.len(), y.iter().map(|v| v - ybar)))
}

/// Principal components regression: regress `Y` on the leading `d` scores.
fn pcr(xw: &DMatrix<f64>, y: &DVector<f64>, d: usize) -> (DVector<f64>, Vec<f64>) {
    let n = xw.nrows() as f64;
    let svd = (xw / n.sqrt()).svd(false, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let vt = svd.v_t.unwrap();
    let eig: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let v = DMatrix::from_fn(xw.ncols(), d, |r, c| vt[(order[c], r)]);
    let z = xw * &v;
    let beta = (z.transpose() * &z).lu().solve(&(z.transpose() * y)).unwrap();
    (v * beta, eig)
}

#[test]
fn criterion_3_oracle_equivalences() {
    let mut worst = [0.0f64; 3];
    for seed in 0..5 {
        // (a) truncation against PCR, centered and uncentered
        let inst = instance(14, 6, seed);
        for centering in [Centering::None, Centering::Mean] {
            let (xw, y) = match centering {
                Centering::None => (inst.xw.clone(), DVector::from_vec(inst.y.clone())),
                Centering::Mean => center(&inst.xw, &inst.y),
            };
            let (_, eig) = pcr(&xw, &y, 1);
            let cn = threshold_for_rank(&eig, 3).unwrap();
            let (u, _) = pcr(&xw, &y, 3);
            let f = fit(&inst.curves, &inst.y, &FilterSpec::truncation(cn).unwrap(), centering).unwrap();
            assert_eq!(f.d_n(), 3);
            worst[0] = worst[0].max(max_diff(f.rho_hat().values(), &unweight(&u, &inst.sqrt_w)));
        }

        // (b), (c): dense solves in weighted coordinates
        let n = inst.xw.nrows() as f64;
        let s = inst.xw.transpose() * &inst.xw / n;
        let rhs = inst.xw.transpose() * DVector::from_vec(inst.y.clone()) / n;
        let id = DMatrix::<f64>::identity(s.nrows(), s.ncols());
        for alpha in [0.05, 0.5] {
            let ridge = (&s + &id * alpha).lu().solve(&rhs).unwrap();
            let f = fit(&inst.curves, &inst.y, &FilterSpec::ridge(alpha, 0.0).unwrap(), Centering::None).unwrap();
            worst[1] = worst[1].max(max_diff(f.rho_hat().values(), &unweight(&ridge, &inst.sqrt_w)));

            let tik = &s * (&s * &s + &id * alpha).lu().solve(&rhs).unwrap();
            let f = fit(&inst.curves, &inst.y, &FilterSpec::tikhonov(alpha, 0.0).unwrap(), Centering::None).unwrap();
            worst[2] = worst[2].max(max_diff(f.rho_hat().values(), &unweight(&tik, &inst.sqrt_w)));
        }
    }
    let pass = worst.iter().all(|&w| w <= 1e-8);
    report(
        3,
        "truncation = PCR, ridge and Tikhonov = dense solves",
        pass,
        format!("max_abs_diff pcr={:.2e} ridge={:.2e} tikhonov={:.2e} tol=1e-8", worst[0], worst[1], worst[2]),
    );
    assert!(pass);
}

#[test]
fn criterion_4_filter_condition() {
    let mut ok = true;
    let mut worst = 0.0f64;
    for &cn in &[1e-4, 0.01, 0.3, 2.0] {
        ok &= check_h3(&FilterSpec::truncation(cn).unwrap(), 100, 10.0).sup_deviation == 0.0;
        for &alpha in &[1e-6, 0.01, 1.0] {
            let r = check_h3(&FilterSpec::ridge(alpha, cn).unwrap(), 100, 10.0).sup_deviation;
            let t = check_h3(&FilterSpec::tikhonov(alpha, cn).unwrap(), 100, 10.0).sup_deviation;
            worst = worst
                .max((r - alpha / (cn + alpha)).abs())
                .max((t - alpha / (cn * cn + alpha)).abs());
        }
    }
    let pass = ok && worst <= 1e-10;
    report(
        4,
        "filter bias condition values",
        pass,
        format!("truncation_exact_zero={ok} max_abs_diff={worst:.2e} tol=1e-10"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_eigen_inequalities() {
    let cases: Vec<(String, Vec<f64>)> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&a| (format!("power a={a}"), Decay::Power { a }.lambdas(1000)))
        .chain([0.5, 0.9].iter().map(|&r| (format!("geometric r={r}"), Decay::Geometric { r }.lambdas(60))))
        .collect();
    let mut pass = true;
    let mut details = Vec::new();
    for (name, l) in &cases {
        let r = eigen_inequality_check(l);
        pass &= r.holds();
        details.push(format!(
            "[{name}: rank_violations={} first={:?} tail_violations={} first={:?}]",
            r.rank_violations, r.first_rank_violation, r.tail_violations, r.first_tail_violation
        ));
    }
    report(5, "eigenvalue inequalities", pass, details.join(" "));
    assert!(pass, "eigenvalue inequalities violated: {}", details.join(" "));
}

#[test]
fn criterion_6_t_regime_dichotomy() {
    let len = 500;
    let l = Decay::Power { a: 1.0 }.lambdas(len);
    let filter = FilterSpec::truncation(l[len - 1] / 2.0).unwrap();
    let smooth: Vec<f64> = (1..=len).map(|j| (j as f64).powi(-2)).collect();
    let rough: Vec<f64> = l.iter().map(|v| v.sqrt()).collect();
    let ts = t_partial_sums(&l, &smooth, &filter);
    let tr = t_partial_sums(&l, &rough, &filter);
    let increment = (ts[len - 1] - ts[len / 10 - 1]) / ts[len / 10 - 1];
    let growth = tr[len - 1] / tr[4];
    // sqrt(500 / 5) is exactly 10 in exact arithmetic
    let pass = increment < 0.01 && growth >= 10.0 * (1.0 - 1e-12);
    report(
        6,
        "bounded vs divergent t",
        pass,
        format!("last_decade_rel_increment={increment:.5} growth_k500_over_k5={growth:.6}"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_norm_divergence() {
    let model = SpectralModel::from_spec(&ModelSpec {
        decay: Decay::Power { a: 1.0 },
        rho: CoefficientRule::Power {
            b: 2.0,
            scale: 1.0,
            norm: Some(1.0),
        },
        noise_sd: 0.5,
        xi: XiLaw::Gaussian,
        terms: None,
        grid_points: 101,
    })
    .unwrap();
    let plan = FilterPlan {
        kind: FilterKind::Truncation,
        rule: CnRule::CubeRoot,
    };
    let rep = norm_divergence_demo(&model, &[200, 800, 3200], &plan, 500, SEED).unwrap();
    let normalized: Vec<f64> = rep.rows.iter().map(|r| r.mean_normalized.unwrap()).collect();
    let clt = &clt_run().report;
    let ks_ok = clt.ks_statistic.unwrap() < ks_critical(0.01, 1000);
    let pass = rep.diverging && ks_ok;
    report(
        7,
        "norm error diverges while pointwise error stays normal",
        pass,
        format!(
            "normalized_means={normalized:?} ratios={:?} pointwise_ks={:.4}",
            rep.ratios,
            clt.ks_statistic.unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_growth_slope() {
    let (alpha, beta) = (0.5, 2.0);
    let l = Decay::Power { a: alpha }.lambdas(500);
    let x: Vec<f64> = (1..=500).map(|k| (k as f64).powf(-(1.0 + beta) / 2.0)).collect();
    let inner = variance_inner_sums(&l, &x).unwrap();
    let js: Vec<f64> = (50..=500).map(|j| j as f64).collect();
    let slope = log_log_slope(&js, &inner[49..]).unwrap();
    let target = 2.0 + alpha - beta;
    let pass = (slope - target).abs() <= 0.15;
    report(
        8,
        "inner-sum growth exponent",
        pass,
        format!("slope={slope:.4} target={target} tol=0.15"),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "decay": {"kind": "power", "a": 2.0},
            "rho": {"kind": "power", "b": 3.0, "norm": 1.0},
            "noise_sd": 0.5,
            "L": 30,
            "grid_points": 41,
            "filter": {"kind": "truncation"},
            "cn_rule": "cube_root",
            "n": 80,
            "replicates": 64,
            "seed": 9,
            "x": {"kind": "power", "b": 2.0},
            "n_grid": [50, 100],
            "beta": 3.0
        }"#,
    )
    .unwrap();
    let mut identical = true;
    for experiment in ["coverage", "fixed-x", "norm-divergence", "variance-bound", "condition-u"] {
        let mut outputs = Vec::new();
        for (tag, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
            let out = dir.path().join(format!("{experiment}-{tag}.json"));
            let code = flr::cli::run([
                "flr",
                "simulate",
                experiment,
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ]);
            assert_eq!(code, 0, "{experiment}");
            let json = std::fs::read(&out).unwrap();
            let csv = std::fs::read(out.with_extension("csv")).unwrap();
            outputs.push((json, csv));
        }
        identical &= outputs.windows(2).all(|w| w[0] == w[1]);
    }
    report(
        9,
        "byte-identical reports across runs and thread counts",
        identical,
        "subcommands=5 runs=3 threads={1,1,4}".to_string(),
    );
    assert!(identical);
}
