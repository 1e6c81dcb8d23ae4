//! Feature selection: keep events whose E-PTI does not depend on the active
//! configuration, then drop events that duplicate each other.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, EptiVector, EventCatalog, EventId};

pub const DEFAULT_INVARIANCE_THRESHOLD: f64 = 0.10;
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.9;
pub const DEFAULT_MAX_FEATURES: usize = 6;

/// E-PTI observations of the same windows, run once under every PSC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPscEpti {
    pub events: EventCatalog,
    pub per_psc: IndexMap<String, Vec<EptiVector>>,
}

/// How far an event's behaviour under one PSC may drift from its overall
/// behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceStatistic {
    /// max over PSCs of |mean_psc - grand_mean| / grand_mean
    #[default]
    MeanDeviation,
    /// max over PSCs of std_psc / grand_mean
    WindowSpread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventInvariance {
    pub event: EventId,
    pub mean: f64,
    pub max_relative_deviation: f64,
    pub invariant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub threshold: f64,
    pub statistic: InvarianceStatistic,
    pub per_event: Vec<EventInvariance>,
    pub retained: Vec<EventId>,
}

pub fn invariance_filter(input: &PerPscEpti, threshold: f64) -> Result<InvarianceReport> {
    invariance_filter_with(input, threshold, InvarianceStatistic::MeanDeviation)
}

pub fn invariance_filter_with(
    input: &PerPscEpti,
    threshold: f64,
    statistic: InvarianceStatistic,
) -> Result<InvarianceReport> {
    let n_events = input.events.len();
    let Some(first) = input.per_psc.values().next() else {
        return Err(Error::InvalidInput("no PSC observations".into()));
    };
    let n_windows = first.len();
    if n_windows == 0 || n_events == 0 {
        return Err(Error::InvalidInput("no windows or no events to filter".into()));
    }
    for (psc, rows) in &input.per_psc {
        if rows.len() != n_windows {
            return Err(Error::InvalidInput(format!(
                "PSC `{psc}` has {} windows, expected {n_windows}",
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n_events) {
            return Err(Error::InvalidInput(format!(
                "PSC `{psc}` has a vector of {} values for {n_events} events",
                r.len()
            )));
        }
    }

    let n = n_windows as f64;
    let mut per_event = Vec::with_capacity(n_events);
    for e in 0..n_events {
        let stats: Vec<(f64, f64)> = input
            .per_psc
            .values()
            .map(|rows| {
                let mean = rows.iter().map(|r| r.get(e)).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r.get(e) - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect();
        let grand = stats.iter().map(|s| s.0).sum::<f64>() / stats.len() as f64;
        let deviation = if grand == 0.0 {
            0.0
        } else {
            stats
                .iter()
                .map(|&(mean, sd)| match statistic {
                    InvarianceStatistic::MeanDeviation => (mean - grand).abs() / grand,
                    InvarianceStatistic::WindowSpread => sd / grand,
                })
                .fold(0.0, f64::max)
        };
        per_event.push(EventInvariance {
            event: input.events.id(e).expect("index in range"),
            mean: grand,
            max_relative_deviation: deviation,
            invariant: deviation < threshold,
        });
    }
    let retained = per_event
        .iter()
        .filter(|s| s.invariant)
        .map(|s| s.event.clone())
        .collect();
    Ok(InvarianceReport {
        threshold,
        statistic,
        per_event,
        retained,
    })
}

fn column(dataset: &Dataset, e: usize) -> Vec<f64> {
    dataset.windows.iter().map(|w| w.epti.get(e)).collect()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (mean, x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    cov / (vx.sqrt() * vy.sqrt())
}

/// Greedy variance-first retention of mutually uncorrelated events.
///
/// Zero-mean events are scanned after every other candidate.
pub fn redundancy_prune(
    dataset: &Dataset,
    candidates: &[EventId],
    correlation_threshold: f64,
    max_features: usize,
) -> Result<Vec<EventId>> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate events".into()));
    }
    if dataset.len() < 2 {
        return Err(Error::InvalidInput(
            "redundancy pruning needs at least two windows".into(),
        ));
    }
    if let Some(c) = candidates.iter().find(|c| c.index >= dataset.events.len()) {
        return Err(Error::InvalidInput(format!("event `{}` out of catalog range", c.name)));
    }
    let mut ranked: Vec<(&EventId, Vec<f64>, f64, f64)> = candidates
        .iter()
        .map(|c| {
            let col = column(dataset, c.index);
            let (mean, var) = mean_var(&col);
            (c, col, mean, var)
        })
        .collect();
    ranked.sort_by(|a, b| {
        (a.2 == 0.0)
            .cmp(&(b.2 == 0.0))
            .then(b.3.total_cmp(&a.3))
            .then(a.0.index.cmp(&b.0.index))
    });

    let mut kept: Vec<(&EventId, &[f64])> = Vec::new();
    for (id, col, _, _) in &ranked {
        if kept.len() >= max_features {
            break;
        }
        if kept
            .iter()
            .all(|(_, other)| pearson(col, other).abs() <= correlation_threshold)
        {
            kept.push((id, col));
        }
    }
    Ok(kept.into_iter().map(|(id, _)| id.clone()).collect())
}
