//! Exact simulation of the linear multivariate Hawkes process by Ogata
//! thinning, plus stationary and empirical rate summaries.
//!
//! Random streams: component `i` draws all of its candidate waiting times and
//! acceptance uniforms from ChaCha8 stream `i` keyed by `seed`. Runs are
//! therefore reproducible for a given `(spec, horizon, seed, floor)`, and
//! replicates with distinct seeds are independent.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{check_stationarity, NetworkSpec};

/// Realized point process over `[0, horizon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventData {
    pub n_components: usize,
    pub horizon: f64,
    /// Per-component strictly increasing event times.
    pub events: Vec<Vec<f64>>,
    pub observed_ids: Vec<usize>,
}

impl EventData {
    pub fn new(horizon: f64, events: Vec<Vec<f64>>, observed_ids: Vec<usize>) -> Result<Self> {
        let ev = EventData {
            n_components: events.len(),
            horizon,
            events,
            observed_ids,
        };
        ev.validate()?;
        Ok(ev)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.events.len() != self.n_components {
            return Err(Error::Dimension(format!(
                "{} event lists for {} components",
                self.events.len(),
                self.n_components
            )));
        }
        if let Some(id) = self.observed_ids.iter().find(|&&id| id >= self.n_components) {
            return Err(Error::Dimension(format!(
                "observed id {id} out of range for {} components",
                self.n_components
            )));
        }
        for (c, times) in self.events.iter().enumerate() {
            for w in times.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::Data(format!(
                        "component {c}: event times not strictly increasing ({} then {})",
                        w[0], w[1]
                    )));
                }
            }
            if let Some(t) = times
                .iter()
                .find(|t| !(t.is_finite() && **t >= 0.0 && **t < self.horizon))
            {
                return Err(Error::Data(format!(
                    "component {c}: event time {t} outside [0, {})",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    /// Event data restricted to the given components, re-indexed densely in
    /// the order given; all retained components are marked observed.
    pub fn select(&self, ids: &[usize]) -> Result<EventData> {
        let mut events = Vec::with_capacity(ids.len());
        for &id in ids {
            let times = self.events.get(id).ok_or_else(|| {
                Error::Dimension(format!("component {id} out of range"))
            })?;
            events.push(times.clone());
        }
        let n = events.len();
        EventData::new(self.horizon, events, (0..n).collect())
    }

    /// All `(component_id, time)` records ordered by time, ties by id.
    pub fn records(&self) -> Vec<(usize, f64)> {
        let mut recs: Vec<(usize, f64)> = self
            .events
            .iter()
            .enumerate()
            .flat_map(|(c, ts)| ts.iter().map(move |&t| (c, t)))
            .collect();
        recs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        recs
    }

    /// Writes `component_id,time` records ascending by time.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["component_id", "time"])?;
        for (c, t) in self.records() {
            wtr.write_record([c.to_string(), t.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads records written by [`EventData::write_csv`] back with the
    /// original component ids (no re-indexing); `n_components` is one more
    /// than the largest id. For external spike files use
    /// [`crate::spikes::ingest_spikes`].
    pub fn read_csv<R: Read>(r: R, horizon: f64) -> Result<EventData> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut events: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let (c, t) = parse_record(&rec)?;
            if events.len() <= c {
                events.resize(c + 1, Vec::new());
            }
            events[c].push(t);
        }
        let n = events.len();
        EventData::new(horizon, events, (0..n).collect())
    }
}

pub(crate) fn parse_record(rec: &csv::StringRecord) -> Result<(usize, f64)> {
    let line = rec.position().map_or(0, |p| p.line());
    if rec.len() < 2 {
        return Err(Error::Data(format!("line {line}: expected component_id,time")));
    }
    let c: usize = rec[0]
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: bad component id {:?}", &rec[0])))?;
    let t: f64 = rec[1]
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: bad time {:?}", &rec[1])))?;
    Ok((c, t))
}

/// Sparse row view of the full coefficient matrix: for every target, its
/// nonzero `(source, weight)` pairs.
fn sparse_rows(b: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    b.row_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect()
        })
        .collect()
}

/// Simulates all `p + q` components on `[0, horizon)` with conditional
/// intensity `max(μ_i + Σ_j B_ij x_j(t), floor)`.
///
/// Between events every x_j only decays, so `max(μ_i + Σ_j B⁺_ij x_j(t), floor)`
/// evaluated at the current time dominates λ_i until the next event of any
/// component. Each component proposes a candidate from its own dominating
/// rate; the earliest candidate is accepted with probability λ_i/M_i and all
/// bounds are refreshed.
pub fn simulate(spec: &NetworkSpec, horizon: f64, seed: u64, floor: f64) -> Result<EventData> {
    spec.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(Error::Config(format!("floor must be nonnegative, got {floor}")));
    }
    let report = check_stationarity(spec);
    if !report.passes_a1 {
        return Err(Error::Stationarity { report });
    }

    let n = spec.n_components();
    let b = spec.full_matrix();
    let rows = sparse_rows(&b);
    let rates: Vec<f64> = spec.kernel.iter().map(|k| k.rate).collect();
    let limit = guard_limit(spec, horizon, floor);

    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(i as u64);
            r
        })
        .collect();

    let mut x = vec![0.0_f64; n];
    let mut events: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut t = 0.0_f64;
    let mut bounds = vec![0.0_f64; n];

    loop {
        for (i, row) in rows.iter().enumerate() {
            let drive: f64 = row
                .iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(j, w)| w * x[*j])
                .sum();
            bounds[i] = (spec.mu[i] + drive).max(floor);
        }
        let mut next = f64::INFINITY;
        let mut who = usize::MAX;
        for (i, rng) in rngs.iter_mut().enumerate() {
            if bounds[i] <= 0.0 {
                continue;
            }
            let e: f64 = rng.sample(Exp1);
            let cand = t + e / bounds[i];
            if cand < next {
                next = cand;
                who = i;
            }
        }
        if who == usize::MAX || next >= horizon {
            break;
        }
        let dt = next - t;
        for (xj, r) in x.iter_mut().zip(&rates) {
            *xj *= (-r * dt).exp();
        }
        t = next;
        let linear: f64 = spec.mu[who] + rows[who].iter().map(|(j, w)| w * x[*j]).sum::<f64>();
        let intensity = linear.max(floor);
        let u: f64 = rngs[who].random();
        if u * bounds[who] < intensity {
            // times are strictly increasing per component because candidates
            // always lie strictly after the current time
            if events[who].last().is_some_and(|&last| last >= t) {
                continue;
            }
            events[who].push(t);
            x[who] += 1.0;
            if events[who].len() > limit {
                return Err(Error::Runaway { limit, time: t });
            }
        }
    }

    EventData::new(horizon, events, (0..spec.p).collect())
}

/// Per-component event cap: 50 · horizon · (largest stationary rate of the
/// network with |B|), at least 1000.
fn guard_limit(spec: &NetworkSpec, horizon: f64, floor: f64) -> usize {
    let n = spec.n_components();
    let abs_b = spec.omega();
    let mu = DVector::from_iterator(n, spec.mu.iter().map(|m| m.max(floor)));
    let max_rate = (DMatrix::identity(n, n) - abs_b)
        .lu()
        .solve(&mu)
        .map(|r| r.max())
        .filter(|r| r.is_finite() && *r > 0.0)
        .unwrap_or_else(|| mu.max() * n as f64);
    ((50.0 * horizon * max_rate).ceil() as usize).max(1000)
}

/// Stationary mean intensity (I − B̄)⁻¹ μ of a purely excitatory network.
pub fn stationary_rates(spec: &NetworkSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.has_negative_coefficients() {
        return Err(Error::Config(
            "stationary rates are only defined here for nonnegative coefficients".into(),
        ));
    }
    let report = check_stationarity(spec);
    if !report.passes_a1 {
        return Err(Error::Stationarity { report });
    }
    let n = spec.n_components();
    let a = DMatrix::identity(n, n) - spec.integrated_matrix();
    let mu = DVector::from_column_slice(&spec.mu);
    let rates = a
        .lu()
        .solve(&mu)
        .ok_or_else(|| Error::Config("I - B is singular".into()))?;
    Ok(rates.iter().copied().collect())
}

/// Event count per unit time for every component.
pub fn empirical_rates(ev: &EventData) -> Vec<f64> {
    ev.events
        .iter()
        .map(|e| e.len() as f64 / ev.horizon)
        .collect()
}
