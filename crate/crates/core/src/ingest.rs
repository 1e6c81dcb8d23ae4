//! Window-record files (JSON lines) to [`Dataset`].
//!
//! One line per window:
//!
//! ```text
//! {"trace_id": "605.mcf_s-665B", "window_index": 20, "instructions": 1000000,
//!  "event_counts": {"RQ_ROW_BUFFER_HIT": 1234, ...},
//!  "ipc_by_psc": {"nl-mlop-kpcp-nl": 0.81, ...}}
//! ```
//!
//! The event catalog and PSC catalog are taken, in key order, from the first
//! record read; every other record must name the same keys.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{
    compute_epti, Dataset, EventCatalog, PscCatalog, WindowRecord, DEFAULT_WINDOW_INSTRUCTIONS,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub warmup_instructions: u64,
    pub window_size_instructions: u64,
    pub max_windows_per_trace: Option<usize>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            warmup_instructions: 20_000_000,
            window_size_instructions: DEFAULT_WINDOW_INSTRUCTIONS,
            max_windows_per_trace: Some(100),
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size_instructions < 1000 {
            return Err(Error::Config(format!(
                "window size {} is below 1000 instructions",
                self.window_size_instructions
            )));
        }
        if !self.warmup_instructions.is_multiple_of(self.window_size_instructions) {
            return Err(Error::Config(format!(
                "warmup of {} instructions is not a multiple of the {}-instruction window",
                self.warmup_instructions, self.window_size_instructions
            )));
        }
        Ok(())
    }

    pub fn warmup_windows(&self) -> usize {
        (self.warmup_instructions / self.window_size_instructions) as usize
    }
}

/// One line of a window-record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub trace_id: String,
    pub window_index: u64,
    pub instructions: u64,
    pub event_counts: IndexMap<String, u64>,
    pub ipc_by_psc: IndexMap<String, f64>,
}

pub fn parse_records(path: &Path, text: &str) -> Result<Vec<(usize, RawRecord)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(line).map_err(|e| Error::Format {
            file: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn read_file(path: &PathBuf) -> Result<Vec<(usize, RawRecord)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(path, &text)
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<Vec<(usize, RawRecord)>>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        paths.par_iter().map(read_file).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        paths.iter().map(read_file).collect()
    }
}

pub fn load_dataset(paths: &[PathBuf], config: &IngestConfig) -> Result<Dataset> {
    config.validate()?;
    let files = read_all(paths)?;
    assemble(
        paths.iter().zip(files).map(|(p, recs)| (p.as_path(), recs)),
        config,
    )
}

/// Builds a dataset from already-parsed records, tagged with their origin for
/// error messages.
pub fn assemble<'a>(
    files: impl IntoIterator<Item = (&'a Path, Vec<(usize, RawRecord)>)>,
    config: &IngestConfig,
) -> Result<Dataset> {
    config.validate()?;
    let mut catalogs: Option<(Vec<String>, Vec<String>)> = None;
    let mut traces: BTreeMap<String, BTreeMap<u64, WindowRecord>> = BTreeMap::new();

    for (path, records) in files {
        for (line, rec) in records {
            let (events, pscs) = catalogs.get_or_insert_with(|| {
                (
                    rec.event_counts.keys().cloned().collect(),
                    rec.ipc_by_psc.keys().cloned().collect(),
                )
            });
            let conflict = |what: &str| {
                Error::CatalogConflict(format!(
                    "{}:{line}: {what} keys differ from the first record",
                    path.display()
                ))
            };
            if rec.event_counts.len() != events.len() {
                return Err(conflict("event_counts"));
            }
            if rec.ipc_by_psc.len() != pscs.len() {
                return Err(conflict("ipc_by_psc"));
            }
            let counts = events
                .iter()
                .map(|e| rec.event_counts.get(e).copied())
                .collect::<Option<Vec<u64>>>()
                .ok_or_else(|| conflict("event_counts"))?;
            let ipc = pscs
                .iter()
                .map(|p| rec.ipc_by_psc.get(p).copied())
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| conflict("ipc_by_psc"))?;
            let epti = compute_epti(&counts, rec.instructions).map_err(|e| Error::Format {
                file: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            let window = WindowRecord {
                trace_id: rec.trace_id.clone(),
                window_index: rec.window_index,
                epti,
                ipc,
            };
            if traces
                .entry(rec.trace_id.clone())
                .or_default()
                .insert(rec.window_index, window)
                .is_some()
            {
                return Err(Error::Format {
                    file: path.to_path_buf(),
                    line,
                    message: format!(
                        "duplicate window {} for trace `{}`",
                        rec.window_index, rec.trace_id
                    ),
                });
            }
        }
    }

    let (event_names, psc_ids) = catalogs.unwrap_or_default();
    let events = EventCatalog::new(event_names)?;
    let pscs = PscCatalog::from_ids(&psc_ids)?;
    let skip = config.warmup_windows();
    let cap = config.max_windows_per_trace.unwrap_or(usize::MAX);

    let mut windows = Vec::new();
    for (trace, recs) in traces {
        let total = recs.len();
        let kept: Vec<WindowRecord> = recs.into_values().skip(skip).take(cap).collect();
        if kept.is_empty() {
            warn!("trace `{trace}` has {total} windows, all consumed by the {skip}-window warmup");
        }
        windows.extend(kept);
    }
    Dataset::new(events, pscs, windows, config.window_size_instructions)
}

/// Writes `dataset` in the window-record format. Event counts are recovered
/// as `round(epti * window_size / 1000)`.
pub fn write_jsonl(dataset: &Dataset, mut out: impl Write) -> Result<()> {
    let thousands = dataset.window_size_instructions as f64 / 1000.0;
    for w in &dataset.windows {
        let rec = RawRecord {
            trace_id: w.trace_id.clone(),
            window_index: w.window_index,
            instructions: dataset.window_size_instructions,
            event_counts: dataset
                .events
                .names()
                .iter()
                .zip(w.epti.values())
                .map(|(n, v)| (n.clone(), (v * thousands).round() as u64))
                .collect(),
            ipc_by_psc: dataset.pscs.ids().into_iter().zip(w.ipc.iter().copied()).collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// Uniform random partition of windows into (train, test). Both halves keep
/// the original window order.
pub fn split_train_test(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} is outside (0, 1)"
        )));
    }
    let n = dataset.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "split", 0));
    let (train, test) = order.split_at(n_train);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
