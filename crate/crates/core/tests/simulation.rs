mod common;

use common::{ks_critical_01, ks_exponential, observed_network};
use hawkes_trim::{simulate, stationary_rates, EventData};
use nalgebra::DMatrix;

fn gaps(times: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let g = t - prev;
            prev = t;
            g
        })
        .collect()
}

#[test]
fn poisson_interarrivals_are_exponential() {
    let spec = observed_network(DMatrix::zeros(1, 1), vec![0.05]);
    let failures = (0..10u64)
        .filter(|&seed| {
            let ev = simulate(&spec, 20_000.0, seed, 0.0).unwrap();
            let g = gaps(&ev.events[0]);
            ks_exponential(&g, 0.05) > ks_critical_01(g.len())
        })
        .count();
    assert!(failures <= 1, "{failures} of 10 seeds rejected");
}

#[test]
fn independent_sources_superpose() {
    let spec = observed_network(DMatrix::zeros(3, 3), vec![0.02, 0.03, 0.05]);
    let ev = simulate(&spec, 20_000.0, 7, 0.0).unwrap();
    let mut all: Vec<f64> = ev.events.concat();
    all.sort_by(f64::total_cmp);
    let g = gaps(&all);
    assert!(ks_exponential(&g, 0.1) < ks_critical_01(g.len()));
}

#[test]
fn empirical_rate_converges_to_stationary_mean() {
    let spec = observed_network(DMatrix::from_row_slice(2, 2, &[0.0, 0.3, 0.3, 0.0]), vec![0.05, 0.05]);
    let target = stationary_rates(&spec).unwrap();
    assert!((target[0] - 0.05 / 0.7).abs() < 1e-12);
    let err = |h: f64| -> f64 {
        (0..8u64)
            .map(|s| {
                let ev = simulate(&spec, h, 100 + s, 0.0).unwrap();
                (ev.events[0].len() as f64 / h - target[0]).abs() / target[0]
            })
            .sum::<f64>()
            / 8.0
    };
    let (e1, e2, e3) = (err(2_000.0), err(8_000.0), err(32_000.0));
    assert!(e3 < e1, "errors {e1} {e2} {e3}");
    assert!(e3 < 0.05, "errors {e1} {e2} {e3}");
}

#[test]
fn same_seed_same_events() {
    let spec = hawkes_trim::make_block_network(&hawkes_trim::BlockParams::confounded(10, 10)).unwrap();
    let a = simulate(&spec, 500.0, 3, 0.0).unwrap();
    let b = simulate(&spec, 500.0, 3, 0.0).unwrap();
    let c = simulate(&spec, 500.0, 4, 0.0).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn inhibitory_edge_is_rectified() {
    let spec = observed_network(DMatrix::from_row_slice(2, 2, &[0.0, -0.9, 0.0, 0.0]), vec![0.5, 0.5]);
    assert!(stationary_rates(&spec).is_err());
    let ev = simulate(&spec, 2_000.0, 11, 0.0).unwrap();
    ev.validate().unwrap();
    let rates = hawkes_trim::empirical_rates(&ev);
    assert!(rates[0] < rates[1], "inhibited {} vs source {}", rates[0], rates[1]);
    assert!(rates[0] > 0.0);
}

#[test]
fn events_stay_inside_horizon_and_sorted() {
    let spec = hawkes_trim::make_block_network(&hawkes_trim::BlockParams::confounded(20, 20)).unwrap();
    let ev = simulate(&spec, 1_000.0, 1, 0.0).unwrap();
    assert_eq!(ev.n_components, 40);
    for e in &ev.events {
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!(e.iter().all(|t| (0.0..1_000.0).contains(t)));
    }
}

#[test]
fn csv_round_trip() {
    let spec = observed_network(DMatrix::zeros(2, 2), vec![0.1, 0.2]);
    let ev = simulate(&spec, 100.0, 5, 0.0).unwrap();
    let mut buf = Vec::new();
    ev.write_csv(&mut buf).unwrap();
    let back = EventData::read_csv(buf.as_slice(), 100.0).unwrap();
    assert_eq!(back.events, ev.events);
}

#[test]
fn unstable_network_refused() {
    let spec = observed_network(DMatrix::from_row_slice(2, 2, &[0.0, 1.2, 1.2, 0.0]), vec![0.05, 0.05]);
    assert_eq!(simulate(&spec, 10.0, 0, 0.0).unwrap_err().exit_code(), 3);
}
