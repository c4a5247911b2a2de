//! Acceptance checks. Each test prints one `criterion N: PASS|FAIL` line.

mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use hawkes_trim::estimate::fit_hive_with_state;
use hawkes_trim::experiment::{export_report, run_experiment, ExperimentConfig, ExportFormat, Payload};
use hawkes_trim::hive::{sin_theta, span_projector};
use hawkes_trim::lasso::{fit_lasso, kkt_residuals, lasso_objective, LassoOptions};
use hawkes_trim::{
    build_design, compute_svd, estimate_q, hetero_pca, make_block_network, oracle_confounding_bias, simulate,
    trim_transform, BlockParams, EventData, FitOptions, Method, NetworkSpec, PenaltyRule, TransitionKernel,
};

use common::*;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn spec_from(b: &[f64], p: usize, mu: f64) -> NetworkSpec {
    NetworkSpec {
        p,
        q: 0,
        mu: vec![mu; p],
        theta: DMatrix::from_row_slice(p, p, b),
        delta: DMatrix::zeros(p, 0),
        hidden_block: DMatrix::zeros(0, p),
        kernel: vec![TransitionKernel::exponential(1.0).unwrap(); p],
    }
}

fn with<F: FnOnce(&mut ExperimentConfig)>(preset: &str, f: F) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(preset).unwrap();
    f(&mut cfg);
    cfg
}

#[test]
fn criterion_01_poisson_counts() {
    let spec = spec_from(&[0.0], 1, 0.05);
    let start = Instant::now();
    let counts: Vec<usize> = (0..10)
        .map(|seed| simulate(&spec, 10_000.0, seed, 0.0).unwrap().total_events())
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = counts.iter().filter(|c| (433..=567).contains(*c)).count();
    report(
        1,
        ok >= 9 && secs < 1.0,
        format!("{ok}/10 seeds in [433, 567], counts {counts:?}, {secs:.3} s"),
    );
}

#[test]
fn criterion_02_stationary_rates() {
    let spec = spec_from(&[0.0, 0.3, 0.3, 0.0], 2, 0.05);
    let start = Instant::now();
    let mut mean = [0.0; 2];
    for seed in 0..5 {
        let ev = simulate(&spec, 20_000.0, seed, 0.0).unwrap();
        for (m, r) in mean.iter_mut().zip(hawkes_trim::empirical_rates(&ev)) {
            *m += r / 5.0;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let target = 1.0 / 14.0;
    let err = mean.iter().map(|m| (m - target).abs() / target).fold(0.0, f64::max);
    report(
        2,
        err < 0.05 && secs < 10.0,
        format!("rates {mean:.5?} vs {target:.5}, max rel err {err:.4}, {secs:.2} s"),
    );
}

#[test]
fn criterion_03_recursion_matches_brute_force() {
    let mut rng = rng(3);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n_comp = rng.random_range(1..=4);
        let horizon: f64 = rng.random_range(20.0..200.0);
        let n_events = rng.random_range(0..=1000);
        let mut events = vec![Vec::new(); n_comp];
        for _ in 0..n_events {
            events[rng.random_range(0..n_comp)].push(rng.random_range(0.0..horizon));
        }
        for e in &mut events {
            e.sort_by(f64::total_cmp);
            e.dedup();
        }
        let rate = rng.random_range(0.2..3.0);
        let bin_width = horizon / rng.random_range(10..150) as f64;
        let ev = EventData::new(horizon, events.clone(), (0..n_comp).collect()).unwrap();
        let kernels = vec![TransitionKernel::exponential(rate).unwrap(); n_comp];
        let reg = build_design(&ev, &kernels, bin_width, false).unwrap();
        for (j, times) in events.iter().enumerate() {
            let brute = brute_force_covariates(times, rate, bin_width, reg.n_bins);
            for (k, b) in brute.iter().enumerate() {
                worst = worst.max((reg.x[(k, j)] - b).abs());
            }
        }
    }
    report(3, worst < 1e-10, format!("max abs difference {worst:.3e} over 100 instances"));
}

#[test]
fn criterion_04_trim_spectrum() {
    let mut rng = rng(4);
    let mut spec_err = 0.0_f64;
    let mut fixed_err = 0.0_f64;
    for _ in 0..20 {
        let n = rng.random_range(15..60);
        let p = rng.random_range(2..12);
        let x = random_matrix(&mut rng, n, p);
        let tf = trim_transform(&x, None).unwrap();
        let (xt, _) = tf.apply(&x, &DMatrix::zeros(n, 1)).unwrap();
        let resvd = compute_svd(&xt).unwrap();
        let mut expect: Vec<f64> = tf.d.iter().map(|d| d.min(tf.tau_trim)).collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in resvd.d.iter().zip(&expect) {
            spec_err = spec_err.max((a - b).abs());
        }
        let again = trim_transform(&xt, Some(tf.tau_trim)).unwrap();
        let (xtt, _) = again.apply(&xt, &DMatrix::zeros(n, 1)).unwrap();
        fixed_err = fixed_err.max((&xtt - &xt).amax());
    }
    report(
        4,
        spec_err < 1e-8 && fixed_err < 1e-10,
        format!("spectrum error {spec_err:.2e}, fixed-point error {fixed_err:.2e}"),
    );
}

#[test]
fn criterion_05_lasso_optimality() {
    let mut rng = rng(5);
    let mut coef_err = 0.0_f64;
    let mut obj_err = 0.0_f64;
    let mut kkt = 0.0_f64;
    for _ in 0..20 {
        let t = rng.random_range(20..=100);
        let p = rng.random_range(1..=5);
        let x = random_matrix(&mut rng, t, p);
        let beta = random_vector(&mut rng, p);
        let y = &x * &beta + random_vector(&mut rng, t) * 0.5;
        let lambda = rng.random_range(0.01..0.3);
        let fit = fit_lasso(&x, &y, lambda, &LassoOptions::default()).unwrap();
        assert!(fit.converged);
        let (mu, b) = prox_grad_lasso(&x, &y, lambda, 50_000);
        let cd = DVector::from_column_slice(&fit.beta);
        coef_err = coef_err.max((&cd - &b).amax());
        let o_cd = lasso_objective(&x, &y, fit.intercept, &fit.beta, lambda);
        let o_pg = lasso_objective(&x, &y, mu, b.as_slice(), lambda);
        obj_err = obj_err.max((o_cd - o_pg).abs());
        kkt = kkt_residuals(&fit, &x, &y).unwrap().into_iter().fold(kkt, f64::max);
    }
    report(
        5,
        coef_err < 1e-5 && obj_err < 1e-6 && kkt < 1e-6,
        format!("coef diff {coef_err:.2e}, objective diff {obj_err:.2e}, KKT slack {kkt:.2e}"),
    );
}

#[test]
fn criterion_06_support_recovery() {
    let cfg = with("fig2-desk", |c| {
        c.horizons = vec![5000.0];
        c.n_replicates = 50;
        c.methods = vec![Method::HpTrim];
    });
    let start = Instant::now();
    let rep = run_experiment(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let cell = rep.cell(Method::HpTrim, 5000.0).unwrap();
    report(
        6,
        cell.exact_recovery_rate >= 0.9 && secs < 600.0,
        format!(
            "exact recovery in {:.0}% of 50 replicates (mean TP {:.1}/{}, mean FP {:.1}), {secs:.1} s",
            100.0 * cell.exact_recovery_rate,
            cell.tp_mean,
            rep.true_edges,
            cell.fp_mean
        ),
    );
}

#[test]
fn criterion_07_hp_trim_beats_naive() {
    let methods = vec![Method::HpTrim, Method::Naive];
    let rate = run_experiment(&with("fig2-desk", |c| c.methods = methods.clone())).unwrap();
    let budget = run_experiment(&with("fig2-desk", |c| {
        c.methods = methods.clone();
        c.penalty = PenaltyRule::edge_budget(80);
        c.tau_select = Some(0.0);
    }))
    .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for h in [1000.0, 5000.0] {
        let (hp, nv) = (rate.cell(Method::HpTrim, h).unwrap(), rate.cell(Method::Naive, h).unwrap());
        let (hb, nb) = (budget.cell(Method::HpTrim, h).unwrap(), budget.cell(Method::Naive, h).unwrap());
        pass &= hp.l1_mean < nv.l1_mean && hb.tp_mean >= nb.tp_mean;
        detail.push(format!(
            "T={h}: l1 {:.3} vs {:.3}; budget TP {:.2} vs {:.2} at FP {:.2} vs {:.2}",
            hp.l1_mean, nv.l1_mean, hb.tp_mean, nb.tp_mean, hb.fp_mean, nb.fp_mean
        ));
    }
    report(7, pass, format!("hp-trim vs naive, {}", detail.join("; ")));
}

#[test]
fn criterion_08_hive_directional() {
    let orth = run_experiment(&ExperimentConfig::preset("fig3-desk").unwrap()).unwrap();
    let conf = run_experiment(&with("fig2-desk", |c| c.methods = vec![Method::Naive, Method::HiveOracle])).unwrap();
    let tp = |r: &hawkes_trim::ExperimentReport, m, h| r.cell(m, h).unwrap().tp_mean;
    let mut pass = true;
    let mut detail = Vec::new();
    for h in [1000.0, 5000.0] {
        let (ho, hp) = (tp(&orth, Method::HiveOracle, h), tp(&orth, Method::HpTrim, h));
        pass &= ho >= hp;
        detail.push(format!("orthogonal T={h}: hive-oracle TP {ho:.2}, hp-trim TP {hp:.2}"));
    }
    let (hp1, he1) = (tp(&orth, Method::HpTrim, 1000.0), tp(&orth, Method::HiveEmpirical, 1000.0));
    pass &= hp1 >= he1;
    detail.push(format!("orthogonal T=1000: hp-trim TP {hp1:.2}, hive-empirical TP {he1:.2}"));
    for h in [1000.0, 5000.0] {
        let (nv, ho) = (tp(&conf, Method::Naive, h), tp(&conf, Method::HiveOracle, h));
        pass &= nv >= ho;
        detail.push(format!("confounded T={h}: naive TP {nv:.2}, hive-oracle TP {ho:.2}"));
    }
    report(8, pass, detail.join("; "));
}

#[test]
fn criterion_09_error_decreases_with_t() {
    let rep = run_experiment(&with("fig2-desk", |c| {
        c.horizons = vec![1000.0, 3000.0, 9000.0];
        c.n_replicates = 30;
        c.methods = vec![Method::HpTrim];
    }))
    .unwrap();
    let med: Vec<f64> = [1000.0, 3000.0, 9000.0]
        .iter()
        .map(|&h| rep.cell(Method::HpTrim, h).unwrap().l1_median)
        .collect();
    report(
        9,
        med[0] > med[1] && med[1] > med[2],
        format!("median l1 error at T = 1000, 3000, 9000: {med:.3?}"),
    );
}

#[test]
fn criterion_10_hive_algebra() {
    let cfg = ExperimentConfig::preset("fig3-desk").unwrap();
    let spec = cfg.network().unwrap();
    let p = spec.p;
    let perp = DMatrix::identity(p, p) - span_projector(&spec.delta);
    let e_delta = (&perp * &spec.delta).norm();
    let e_theta = (&perp * &spec.theta - &spec.theta).norm();

    let ev = simulate(&spec, 2000.0, 10, 0.0).unwrap();
    let ev = ev.select(&(0..p).collect::<Vec<_>>()).unwrap();
    let reg = build_design(&ev, &spec.kernel[..p], 1.0, false).unwrap();
    let (_, state) = fit_hive_with_state(&reg, &cfg.penalty, None, &FitOptions::default()).unwrap();
    let pp = &state.p_delta_perp;
    let idem = (pp * pp - pp).norm();
    let cross = (pp * &state.p_delta).norm();
    report(
        10,
        e_delta < 1e-10 && e_theta < 1e-10 && idem < 1e-8 && cross < 1e-8,
        format!(
            "|P_perp Delta| {e_delta:.1e}, |P_perp Theta - Theta| {e_theta:.1e}, idempotency {idem:.1e}, |P_perp P| {cross:.1e}"
        ),
    );
}

#[test]
fn criterion_11_hetero_pca_recovery() {
    let p = 50;
    let n = 1000;
    let mut rng = rng(11);
    let mut good_subspace = 0;
    let mut good_q = 0;
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let raw = random_matrix(&mut rng, p, 2);
        let v = raw.qr().q();
        let noise: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..1.5)).collect();
        // population: V diag(10, 10) Vᵀ + diag(noise), mean noise variance 1
        let mut samples = DMatrix::zeros(n, p);
        for t in 0..n {
            let f = random_normal_vec(&mut rng, 2) * 10f64.sqrt();
            let e = DVector::from_fn(p, |i, _| noise[i].sqrt() * random_normal(&mut rng));
            let row = &v * f + e;
            samples.row_mut(t).copy_from(&row.transpose());
        }
        let sigma = samples.tr_mul(&samples) / n as f64;
        let basis = hetero_pca(&sigma, 2, 10).unwrap();
        let st = sin_theta(&v, &basis);
        worst = worst.max(st);
        if st < 0.1 {
            good_subspace += 1;
        }
        if estimate_q(&sigma).unwrap().q_hat == 2 {
            good_q += 1;
        }
    }
    report(
        11,
        good_subspace >= 45 && good_q >= 45,
        format!("sin-theta < 0.1 in {good_subspace}/50 (worst {worst:.3}), q_hat = 2 in {good_q}/50"),
    );
}

fn random_normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn random_normal_vec(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| random_normal(rng))
}

#[test]
fn criterion_12_confounding_bias_shrinks() {
    let mut medians = Vec::new();
    for p in [10usize, 20, 40] {
        let spec = make_block_network(&BlockParams::confounded(p, p)).unwrap();
        let mut vals = Vec::new();
        for r in 0..20u64 {
            let ev = simulate(&spec, 5000.0, 1000 + r, 0.0).unwrap();
            let reg = build_design(&ev, &spec.kernel, 1.0, true).unwrap();
            for i in 0..p {
                let delta_i: Vec<f64> = spec.delta.row(i).iter().copied().collect();
                if delta_i.iter().any(|d| *d != 0.0) {
                    vals.push(oracle_confounding_bias(&reg, &delta_i).unwrap().b_l2_sq);
                }
            }
        }
        medians.push(median(&vals));
    }
    report(
        12,
        medians[0] > medians[1] && medians[1] > medians[2],
        format!("median |b_i|^2 at p = 10, 20, 40: {medians:.4?}"),
    );
}

#[test]
fn criterion_13_experiment_determinism() {
    let cfg = with("fig2-desk", |c| {
        c.n_replicates = 3;
        c.horizons = vec![1000.0];
    });
    let a = export_report(&Payload::Report(run_experiment(&cfg).unwrap()), ExportFormat::Json).unwrap();
    let b = export_report(&Payload::Report(run_experiment(&cfg).unwrap()), ExportFormat::Json).unwrap();
    report(13, a == b, format!("{} byte reports, identical: {}", a.len(), a == b));
}
