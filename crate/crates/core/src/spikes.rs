//! Spike trains: ingestion of `component_id,time` recordings and the
//! hold-out stability analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::build_design;
use crate::error::{Error, Result};
use crate::estimate::{fit_method, FitOptions, Method, NetworkEstimate};
use crate::lasso::PenaltyRule;
use crate::network::TransitionKernel;
use crate::sim::EventData;

/// At most this many offending lines are quoted in an error.
const MAX_REPORTED: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecording {
    pub events: EventData,
    /// `original_ids[k]` is the file id of dense component `k`.
    pub original_ids: Vec<u64>,
    /// time_unit · decimation.
    pub bin_width: f64,
}

impl SpikeRecording {
    /// Mapping table as CSV (`index,original_id`).
    pub fn mapping_csv(&self) -> String {
        let mut s = String::from("index,original_id\n");
        for (k, id) in self.original_ids.iter().enumerate() {
            s.push_str(&format!("{k},{id}\n"));
        }
        s
    }
}

/// Reads a spike file from disk. See [`read_spikes`].
pub fn ingest_spikes(path: &Path, time_unit: f64, horizon: f64, decimation: usize) -> Result<SpikeRecording> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_spikes(file, time_unit, horizon, decimation)
}

/// Parses `component_id,time` records (header optional, ascending by time)
/// with times in multiples of `time_unit`; times are converted to
/// `time · time_unit`. Components are the distinct ids in ascending order,
/// re-indexed densely from 0.
pub fn read_spikes<R: Read>(r: R, time_unit: f64, horizon: f64, decimation: usize) -> Result<SpikeRecording> {
    if !(time_unit.is_finite() && time_unit > 0.0) {
        return Err(Error::Config(format!("time unit must be positive, got {time_unit}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    if decimation == 0 {
        return Err(Error::Config("decimation must be at least 1".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut raw: Vec<(u64, f64, u64)> = Vec::new();
    let mut problems: Vec<String> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && rec.get(0).is_some_and(|f| f.parse::<u64>().is_err()) {
            continue; // header
        }
        if rec.len() < 2 {
            problems.push(format!("line {line}: expected component_id,time"));
            continue;
        }
        let id = match rec[0].parse::<u64>() {
            Ok(id) => id,
            Err(_) => {
                problems.push(format!("line {line}: bad component id {:?}", &rec[0]));
                continue;
            }
        };
        let t = match rec[1].parse::<f64>() {
            Ok(t) if t.is_finite() => t * time_unit,
            _ => {
                problems.push(format!("line {line}: bad time {:?}", &rec[1]));
                continue;
            }
        };
        if t < 0.0 {
            problems.push(format!("line {line}: negative time {}", &rec[1]));
        } else if t >= horizon {
            problems.push(format!("line {line}: time {} beyond horizon {horizon}", &rec[1]));
        } else if t < last {
            problems.push(format!("line {line}: time {} out of order", &rec[1]));
        }
        last = last.max(t);
        raw.push((id, t, line));
    }
    if !problems.is_empty() {
        let n = problems.len();
        let mut msg = problems.into_iter().take(MAX_REPORTED).collect::<Vec<_>>().join("; ");
        if n > MAX_REPORTED {
            msg.push_str(&format!("; and {} more", n - MAX_REPORTED));
        }
        return Err(Error::Data(msg));
    }
    if raw.is_empty() {
        return Err(Error::Data("spike file has no records: nothing to fit".into()));
    }
    let ids: BTreeSet<u64> = raw.iter().map(|r| r.0).collect();
    let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(k, id)| (*id, k)).collect();
    let mut events = vec![Vec::new(); ids.len()];
    let mut last_line: Vec<u64> = vec![0; ids.len()];
    let mut dups = Vec::new();
    for (id, t, line) in raw {
        let k = index[&id];
        if events[k].last() == Some(&t) {
            dups.push(format!("line {line}: repeats the time on line {} for component {id}", last_line[k]));
            continue;
        }
        events[k].push(t);
        last_line[k] = line;
    }
    if !dups.is_empty() {
        return Err(Error::Data(dups.into_iter().take(MAX_REPORTED).collect::<Vec<_>>().join("; ")));
    }
    let n = events.len();
    Ok(SpikeRecording {
        events: EventData::new(horizon, events, (0..n).collect())?,
        original_ids: ids.into_iter().collect(),
        bin_width: time_unit * decimation as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub method: Method,
    pub hidden_ids: Vec<usize>,
    pub retained_ids: Vec<usize>,
    /// Edges of the full fit among retained components.
    pub full_edges_restricted: usize,
    pub reduced_edges: usize,
    pub shared_edges: usize,
    /// |Ŝ_reduced ∩ Ŝ_full| / |Ŝ_reduced|, 1 when the reduced fit selects nothing.
    pub overlap_fraction: f64,
    pub full: NetworkEstimate,
    pub reduced: NetworkEstimate,
}

/// Settings shared by both fits of [`stability_holdout`].
#[derive(Debug, Clone, Copy)]
pub struct HoldoutOptions {
    pub kernel: TransitionKernel,
    pub bin_width: f64,
    /// Latent dimension for `hive-oracle`.
    pub oracle_q: Option<usize>,
    pub fit: FitOptions,
}

/// Fits `method` on all components and again with `hidden_ids` removed, then
/// compares the selected edges over the retained components (in the reduced
/// fit's dense indexing).
pub fn stability_holdout(
    ev: &EventData,
    hidden_ids: &[usize],
    method: Method,
    rule: &PenaltyRule,
    opts: &HoldoutOptions,
) -> Result<HoldoutReport> {
    let all: Vec<usize> = ev.observed_ids.clone();
    let hidden: BTreeSet<usize> = hidden_ids.iter().copied().collect();
    if let Some(h) = hidden.iter().find(|h| !all.contains(h)) {
        return Err(Error::Config(format!("hidden id {h} is not an observed component")));
    }
    let retained: Vec<usize> = all.iter().copied().filter(|c| !hidden.contains(c)).collect();
    if retained.is_empty() {
        return Err(Error::Config("hiding every component leaves nothing to fit".into()));
    }
    let fit = |ids: &[usize]| -> Result<NetworkEstimate> {
        let sub = ev.select(ids)?;
        let kernels = vec![opts.kernel; ids.len()];
        let reg = build_design(&sub, &kernels, opts.bin_width, false)?;
        fit_method(method, &reg, rule, opts.oracle_q, &opts.fit)
    };
    let full = fit(&all)?;
    let reduced = if hidden.is_empty() { full.clone() } else { fit(&retained)? };

    // position of each retained component in the full fit's indexing
    let pos_full: Vec<usize> = retained
        .iter()
        .map(|c| all.iter().position(|a| a == c).expect("retained ⊂ all"))
        .collect();
    let full_restricted: BTreeSet<(usize, usize)> = (0..retained.len())
        .flat_map(|a| (0..retained.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| full.edges.contains(&(pos_full[a], pos_full[b])))
        .collect();
    let shared = reduced.edges.intersection(&full_restricted).count();
    let overlap = if reduced.edges.is_empty() {
        1.0
    } else {
        shared as f64 / reduced.edges.len() as f64
    };
    Ok(HoldoutReport {
        method,
        hidden_ids: hidden.into_iter().collect(),
        retained_ids: retained,
        full_edges_restricted: full_restricted.len(),
        reduced_edges: reduced.edges.len(),
        shared_edges: shared,
        overlap_fraction: overlap,
        full,
        reduced,
    })
}
