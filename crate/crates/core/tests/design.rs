mod common;

use common::{brute_force_covariates, rng};
use hawkes_trim::{build_design, oracle_confounding_bias, EventData, TransitionKernel};
use rand::Rng;

fn random_events(seed: u64, n_components: usize, per: usize, horizon: f64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n_components)
        .map(|_| {
            let mut t: Vec<f64> = (0..per).map(|_| r.random_range(0.0..horizon)).collect();
            t.sort_by(f64::total_cmp);
            t.dedup();
            t
        })
        .collect()
}

#[test]
fn recursion_matches_direct_sum() {
    let rates = [1.0, 0.5, 2.5];
    let kernels: Vec<TransitionKernel> = rates.iter().map(|&r| TransitionKernel::exponential(r).unwrap()).collect();
    for seed in 0..20 {
        let events = random_events(seed, 3, 300, 200.0);
        let ev = EventData::new(200.0, events.clone(), vec![0, 1, 2]).unwrap();
        for width in [1.0, 0.5, 2.0] {
            let reg = build_design(&ev, &kernels, width, false).unwrap();
            for j in 0..3 {
                let oracle = brute_force_covariates(&events[j], rates[j], width, reg.n_bins);
                for (t, o) in oracle.iter().enumerate() {
                    assert!((reg.x[(t, j)] - o).abs() < 1e-10, "seed {seed} width {width} col {j} row {t}");
                }
            }
        }
    }
}

#[test]
fn single_event_decays() {
    let ev = EventData::new(10.0, vec![vec![0.5]], vec![0]).unwrap();
    let reg = build_design(&ev, &[TransitionKernel::default()], 1.0, false).unwrap();
    assert_eq!(reg.x[(0, 0)], 0.0);
    for (t, e) in [(1, 0.5f64), (2, 1.5), (3, 2.5)] {
        assert!((reg.x[(t, 0)] - (-e).exp()).abs() < 1e-14);
    }
}

#[test]
fn empty_events_give_zero_design() {
    let ev = EventData::new(20.0, vec![vec![], vec![]], vec![0, 1]).unwrap();
    let reg = build_design(&ev, &[TransitionKernel::default(); 2], 1.0, false).unwrap();
    assert!(reg.x.iter().all(|v| *v == 0.0));
    assert!(reg.y.iter().all(|v| *v == 0.0));
}

#[test]
fn rows_depend_only_on_the_past() {
    let events = random_events(3, 2, 100, 100.0);
    let kernels = [TransitionKernel::default(); 2];
    let base = build_design(&EventData::new(100.0, events.clone(), vec![0, 1]).unwrap(), &kernels, 1.0, false).unwrap();
    // move one event of component 0 within its bin
    let mut moved = events.clone();
    let k = moved[0].len() / 2;
    let s = moved[0][k];
    let bin = s.floor();
    let lo = moved[0].get(k - 1).copied().unwrap_or(bin).max(bin);
    moved[0][k] = 0.5 * (lo + s);
    let after = build_design(&EventData::new(100.0, moved, vec![0, 1]).unwrap(), &kernels, 1.0, false).unwrap();
    let t = bin as usize;
    for row in 0..=t {
        assert_eq!(base.x.row(row), after.x.row(row), "row {row}");
    }
    assert!((t + 1..base.n_bins).any(|row| base.x[(row, 0)] != after.x[(row, 0)]));
    assert_eq!(base.y, after.y);
}

#[test]
fn counts_are_conserved() {
    let events = random_events(9, 3, 150, 90.0);
    let ev = EventData::new(90.0, events.clone(), vec![0, 1, 2]).unwrap();
    for width in [1.0, 0.3, 3.0] {
        let reg = build_design(&ev, &[TransitionKernel::default(); 3], width, false).unwrap();
        for j in 0..3 {
            let total: f64 = reg.y.column(j).iter().map(|v| v * width).sum();
            assert!((total - events[j].len() as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn hidden_columns_kept_on_request() {
    let events = random_events(1, 3, 50, 50.0);
    let ev = EventData::new(50.0, events, vec![0, 2]).unwrap();
    let kernels = [TransitionKernel::default(); 3];
    let reg = build_design(&ev, &kernels, 1.0, true).unwrap();
    assert_eq!(reg.x.ncols(), 2);
    assert_eq!(reg.z.as_ref().unwrap().ncols(), 1);
    assert!(build_design(&ev, &kernels, 1.0, false).unwrap().z.is_none());
}

#[test]
fn invalid_bin_widths_rejected() {
    let ev = EventData::new(5.0, vec![vec![1.0]], vec![0]).unwrap();
    let k = [TransitionKernel::default()];
    assert!(build_design(&ev, &k, 5.0, false).is_err());
    assert!(build_design(&ev, &k, 1.0, false).is_err());
    assert!(build_design(&ev, &k, -1.0, false).is_err());
}

#[test]
fn confounding_bias_oracle() {
    let events = random_events(4, 2, 200, 200.0);
    // hidden component 2 replays observed component 0
    let all = vec![events[0].clone(), events[1].clone(), events[0].clone()];
    let ev = EventData::new(200.0, all, vec![0, 1]).unwrap();
    let reg = build_design(&ev, &[TransitionKernel::default(); 3], 1.0, true).unwrap();

    let zero = oracle_confounding_bias(&reg, &[0.0]).unwrap();
    assert!(zero.b.iter().all(|b| b.abs() < 1e-12));

    let d = oracle_confounding_bias(&reg, &[1.0]).unwrap();
    assert!((d.b[0] - 1.0).abs() < 1e-6 && d.b[1].abs() < 1e-6, "{:?}", d.b);

    let no_z = build_design(&ev, &[TransitionKernel::default(); 3], 1.0, false).unwrap();
    assert!(oracle_confounding_bias(&no_z, &[1.0]).is_err());
}

#[test]
fn confounding_residual_is_orthogonal_to_design() {
    let spec = hawkes_trim::make_block_network(&hawkes_trim::BlockParams::confounded(10, 10)).unwrap();
    let ev = hawkes_trim::simulate(&spec, 2000.0, 2, 0.0).unwrap();
    let reg = build_design(&ev, &spec.kernel, 1.0, true).unwrap();
    let center = |m: &nalgebra::DMatrix<f64>| {
        let mut c = m.clone();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c
    };
    let xc = center(&reg.x);
    let zc = center(reg.z.as_ref().unwrap());
    for i in 0..10 {
        let delta_i: Vec<f64> = spec.delta.row(i).iter().copied().collect();
        let diag = oracle_confounding_bias(&reg, &delta_i).unwrap();
        let resid = &zc * nalgebra::DVector::from_vec(delta_i) - &xc * nalgebra::DVector::from_vec(diag.b);
        let cov = xc.transpose() * resid / reg.n_bins as f64;
        assert!(cov.amax() < 1e-8, "row {i}: {}", cov.amax());
    }
}
