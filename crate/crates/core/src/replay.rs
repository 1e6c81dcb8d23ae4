//! Table-driven window replay.
//!
//! The features of a window never depend on which PSC was active, so a run
//! under any policy is a sequence of lookups into the per-window IPC table:
//! window 0 of each trace uses the initial PSC, and the choice made from
//! window `w`'s E-PTI is applied to window `w + 1`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwsim::{evaluate_model, reference_evaluate};
use crate::nodemem::CompiledModel;
use crate::pscsel::TraceIpcTable;
use crate::train::{LabelMatrix, Suite};
use crate::types::{Dataset, EptiVector, PscCatalog};

/// A PSC chooser driven by one window's E-PTI.
pub trait Policy: Sync {
    fn pscs(&self) -> &PscCatalog;
    /// Class index into [`Policy::pscs`].
    fn choose(&self, epti: &EptiVector) -> Result<usize>;
}

impl Policy for CompiledModel {
    fn pscs(&self) -> &PscCatalog {
        &self.meta.pscs
    }

    fn choose(&self, epti: &EptiVector) -> Result<usize> {
        Ok(evaluate_model(self, epti)?.class_id)
    }
}

impl Policy for Suite {
    fn pscs(&self) -> &PscCatalog {
        &self.pscs
    }

    fn choose(&self, epti: &EptiVector) -> Result<usize> {
        Ok(reference_evaluate(self, epti)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOptions {
    pub baseline: String,
    pub initial: String,
    /// Fraction of a window's IPC lost when the PSC differs from the
    /// previous window's. Zero disables the penalty.
    #[serde(default)]
    pub switch_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReplay {
    pub windows: usize,
    pub adaptive_ipc: f64,
    pub static_ipc: IndexMap<String, f64>,
    pub oracle_ipc: f64,
    /// `adaptive_ipc / static_ipc[baseline] - 1`
    pub gain: f64,
    /// PSC applied to each window, in window order.
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_gain_vs_baseline: f64,
    pub max_gain: f64,
    /// Lowest per-trace gain (negative when some trace loses).
    pub worst_loss: f64,
    pub decision_count: usize,
    pub mean_adaptive_ipc: f64,
    pub mean_oracle_ipc: f64,
    pub mean_static_ipc: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub baseline: String,
    pub initial: String,
    pub per_trace: IndexMap<String, TraceReplay>,
    pub aggregate: Aggregate,
}

impl ReplayResult {
    /// Static per-trace IPCs in table form.
    pub fn to_ipc_table(&self) -> TraceIpcTable {
        TraceIpcTable {
            rows: self
                .per_trace
                .iter()
                .map(|(t, r)| (t.clone(), r.static_ipc.clone()))
                .collect(),
        }
    }

    /// Gain of every static PSC over the baseline, per trace.
    pub fn static_gains(&self) -> IndexMap<String, IndexMap<String, f64>> {
        self.per_trace
            .iter()
            .map(|(t, r)| {
                let base = r.static_ipc[&self.baseline];
                (t.clone(), r.static_ipc.iter().map(|(p, v)| (p.clone(), v / base - 1.0)).collect())
            })
            .collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn check_contiguous(dataset: &Dataset) -> Result<()> {
    for pair in dataset.windows.windows(2) {
        if pair[0].trace_id == pair[1].trace_id && pair[1].window_index != pair[0].window_index + 1 {
            return Err(Error::Data(format!(
                "trace `{}` jumps from window {} to {}",
                pair[0].trace_id, pair[0].window_index, pair[1].window_index
            )));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for r in dataset.trace_ranges() {
        if !seen.insert(&dataset.windows[r.start].trace_id) {
            return Err(Error::Data(format!(
                "trace `{}` is split across the dataset",
                dataset.windows[r.start].trace_id
            )));
        }
    }
    Ok(())
}

fn class_of(dataset: &Dataset, id: &str, what: &str) -> Result<usize> {
    dataset
        .pscs
        .index_of(id)
        .ok_or_else(|| Error::Data(format!("{what} PSC `{id}` has no IPC column in the dataset")))
}

pub fn run_replay(dataset: &Dataset, policy: &dyn Policy, options: &ReplayOptions) -> Result<ReplayResult> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot replay an empty dataset".into()));
    }
    if !(0.0..1.0).contains(&options.switch_penalty) {
        return Err(Error::Config(format!(
            "switch penalty {} must lie in [0, 1)",
            options.switch_penalty
        )));
    }
    check_contiguous(dataset)?;
    if policy.pscs().is_empty() {
        return Err(Error::InvalidInput("policy has no PSCs".into()));
    }
    let map: Vec<usize> = policy
        .pscs()
        .ids()
        .iter()
        .map(|id| class_of(dataset, id, "model"))
        .collect::<Result<_>>()?;
    let baseline = class_of(dataset, &options.baseline, "baseline")?;
    let initial = class_of(dataset, &options.initial, "initial")?;
    let ids = dataset.pscs.ids();

    let run_trace = |range: std::ops::Range<usize>| -> Result<(String, TraceReplay)> {
        let windows = &dataset.windows[range];
        let n = windows.len() as f64;
        let mut current = initial;
        let mut previous = initial;
        let mut adaptive = 0.0;
        let mut choices = Vec::with_capacity(windows.len());
        for (i, w) in windows.iter().enumerate() {
            let mut ipc = w.ipc[current];
            if i > 0 && current != previous {
                ipc *= 1.0 - options.switch_penalty;
            }
            adaptive += ipc;
            choices.push(ids[current].clone());
            previous = current;
            if i + 1 < windows.len() {
                current = map[policy.choose(&w.epti)?];
            }
        }
        let static_ipc: IndexMap<String, f64> = ids
            .iter()
            .enumerate()
            .map(|(c, id)| (id.clone(), windows.iter().map(|w| w.ipc[c]).sum::<f64>() / n))
            .collect();
        let oracle_ipc = windows.iter().map(|w| w.best_ipc()).sum::<f64>() / n;
        let adaptive_ipc = adaptive / n;
        Ok((
            windows[0].trace_id.clone(),
            TraceReplay {
                windows: windows.len(),
                adaptive_ipc,
                gain: adaptive_ipc / static_ipc[baseline] - 1.0,
                static_ipc,
                oracle_ipc,
                choices,
            },
        ))
    };

    let ranges = dataset.trace_ranges();
    #[cfg(feature = "parallel")]
    let traces: Vec<(String, TraceReplay)> = {
        use rayon::prelude::*;
        ranges.into_par_iter().map(run_trace).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let traces: Vec<(String, TraceReplay)> = ranges.into_iter().map(run_trace).collect::<Result<_>>()?;

    let per_trace: IndexMap<String, TraceReplay> = traces.into_iter().collect();
    let gains = || per_trace.values().map(|t| t.gain);
    let aggregate = Aggregate {
        mean_gain_vs_baseline: mean(gains()),
        max_gain: gains().fold(f64::NEG_INFINITY, f64::max),
        worst_loss: gains().fold(f64::INFINITY, f64::min),
        decision_count: per_trace.values().map(|t| t.windows - 1).sum(),
        mean_adaptive_ipc: mean(per_trace.values().map(|t| t.adaptive_ipc)),
        mean_oracle_ipc: mean(per_trace.values().map(|t| t.oracle_ipc)),
        mean_static_ipc: ids
            .iter()
            .map(|id| (id.clone(), mean(per_trace.values().map(|t| t.static_ipc[id]))))
            .collect(),
    };
    Ok(ReplayResult {
        baseline: options.baseline.clone(),
        initial: options.initial.clone(),
        per_trace,
        aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub per_trace: IndexMap<String, f64>,
    /// Best class of every window, in dataset order.
    pub choices: Vec<usize>,
    /// Largest `max_ipc / min_ipc - 1` over all windows.
    pub swing: f64,
}

pub fn oracle_policy(dataset: &Dataset) -> Result<OracleSummary> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("oracle of an empty dataset".into()));
    }
    let per_trace = dataset
        .trace_ranges()
        .into_iter()
        .map(|r| {
            let w = &dataset.windows[r];
            (w[0].trace_id.clone(), mean(w.iter().map(|x| x.best_ipc())))
        })
        .collect();
    let swing = dataset
        .windows
        .iter()
        .map(|w| {
            let min = w.ipc.iter().copied().fold(f64::INFINITY, f64::min);
            w.best_ipc() / min - 1.0
        })
        .fold(0.0, f64::max);
    Ok(OracleSummary {
        per_trace,
        choices: dataset.windows.iter().map(|w| w.best_class()).collect(),
        swing,
    })
}

/// Fraction of decided windows (every window but each trace's first) on which
/// the applied PSC is the window's best. With `skip_changes`, windows whose
/// best PSC differs from the previous window's are left out, since no policy
/// driven by the previous window's features can anticipate them.
pub fn choice_accuracy(dataset: &Dataset, result: &ReplayResult, skip_changes: bool) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for r in dataset.trace_ranges() {
        let windows = &dataset.windows[r];
        let trace = result.per_trace.get(&windows[0].trace_id).ok_or_else(|| {
            Error::Data(format!("trace `{}` missing from the replay", windows[0].trace_id))
        })?;
        for i in 1..windows.len() {
            if skip_changes && windows[i].best_class() != windows[i - 1].best_class() {
                continue;
            }
            let chosen = class_of(dataset, &trace.choices[i], "chosen")?;
            total += 1;
            hits += usize::from(windows[i].ipc[chosen] == windows[i].best_ipc());
        }
    }
    Ok(if total == 0 { 1.0 } else { hits as f64 / total as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pairs: usize,
    pub mean_ipc: f64,
    pub mean_accuracy: Option<f64>,
}

/// Scores a policy on next-window pairs: the choice made from each pair's
/// features is credited with the successor's IPC under that choice.
pub fn score_pairs(pairs: &Dataset, labels: Option<&LabelMatrix>, policy: &dyn Policy) -> Result<PairScore> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to score".into()));
    }
    let map: Vec<usize> = policy
        .pscs()
        .ids()
        .iter()
        .map(|id| class_of(pairs, id, "model"))
        .collect::<Result<_>>()?;
    let mut ipc = 0.0;
    let mut hits = 0usize;
    for (i, w) in pairs.windows.iter().enumerate() {
        let c = map[policy.choose(&w.epti)?];
        ipc += w.ipc[c];
        if let Some(l) = labels {
            hits += usize::from(l.get(i, c));
        }
    }
    let n = pairs.len() as f64;
    Ok(PairScore {
        pairs: pairs.len(),
        mean_ipc: ipc / n,
        mean_accuracy: labels.map(|_| hits as f64 / n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Best,
    Worst,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRow {
    pub trace_id: String,
    pub policy: String,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub baseline: String,
    pub best: Vec<OutlierRow>,
    pub worst: Vec<OutlierRow>,
    /// Set when fewer than `k` traces were available.
    pub truncated: bool,
}

impl OutlierReport {
    pub fn to_csv(&self, side: Side) -> String {
        let mut out = String::from("trace_id,policy,gain\n");
        let rows: Vec<&OutlierRow> = match side {
            Side::Best => self.best.iter().collect(),
            Side::Worst => self.worst.iter().collect(),
            Side::Both => self.best.iter().chain(&self.worst).collect(),
        };
        for r in rows {
            out.push_str(&format!("{},{},{}\n", r.trace_id, r.policy, r.gain));
        }
        out
    }
}

/// The `k` highest and `k` lowest adaptive gains over the baseline. Ties
/// are ordered by trace id.
pub fn summarize_outliers(result: &ReplayResult, k: usize) -> Result<OutlierReport> {
    if result.per_trace.is_empty() {
        return Err(Error::InvalidInput("replay result has no traces".into()));
    }
    let mut rows: Vec<OutlierRow> = result
        .per_trace
        .iter()
        .map(|(t, r)| OutlierRow {
            trace_id: t.clone(),
            policy: "adaptive".into(),
            gain: r.gain,
        })
        .collect();
    rows.sort_by(|a, b| b.gain.total_cmp(&a.gain).then_with(|| a.trace_id.cmp(&b.trace_id)));
    let take = k.min(rows.len());
    if take < k {
        log::info!("only {} traces available for {k} outlier rows per side", rows.len());
    }
    let best = rows[..take].to_vec();
    let mut worst = rows;
    worst.reverse();
    worst.truncate(take);
    Ok(OutlierReport {
        baseline: result.baseline.clone(),
        best,
        worst,
        truncated: take < k,
    })
}
