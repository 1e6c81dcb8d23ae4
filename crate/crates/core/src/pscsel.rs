//! Pruning the configuration space to a small candidate catalog.
//!
//! Every trace ranks all PSCs by IPC and ticks its top `k`. PSCs are then
//! scanned by descending tick count and kept only when they cover a trace
//! that no kept PSC covers yet. Traces whose IPC barely moves with the
//! configuration ("agnostic") need no coverage.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::PscCatalog;

pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_AGNOSTIC_EPSILON: f64 = 0.005;
pub const DEFAULT_MAX_CANDIDATES: usize = 10;

/// Mean IPC of every trace under every PSC. The PSC catalog order is the key
/// order of the first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceIpcTable {
    pub rows: IndexMap<String, IndexMap<String, f64>>,
}

impl TraceIpcTable {
    pub fn psc_order(&self) -> Vec<String> {
        self.rows
            .values()
            .next()
            .map(|r| r.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::InvalidInput("IPC table has no traces".into()));
        }
        let order = self.psc_order();
        for (trace, row) in &self.rows {
            if row.len() != order.len() || order.iter().any(|p| !row.contains_key(p)) {
                return Err(Error::InvalidInput(format!(
                    "trace `{trace}` does not cover the same PSCs as the first row"
                )));
            }
            if let Some((p, v)) = row.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "trace `{trace}` has non-positive IPC {v} for `{p}`"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTable {
    /// PSC catalog order used for every tie-break.
    pub pscs: Vec<String>,
    /// Per trace, the ticked PSCs in rank order.
    pub ticks: IndexMap<String, Vec<String>>,
    pub agnostic_traces: BTreeSet<String>,
}

impl CoverageTable {
    pub fn tick_count(&self, psc: &str) -> usize {
        self.ticks.values().filter(|t| t.iter().any(|p| p == psc)).count()
    }

    /// Distinct PSCs ticked by at least one trace.
    pub fn ticked_union(&self) -> BTreeSet<&str> {
        self.ticks.values().flatten().map(String::as_str).collect()
    }

    pub fn requires_cover(&self, trace: &str) -> bool {
        !self.agnostic_traces.contains(trace)
    }
}

pub fn build_coverage(table: &TraceIpcTable, k: usize, epsilon: f64) -> Result<CoverageTable> {
    table.validate()?;
    if k == 0 {
        return Err(Error::Config("top-k must be at least 1".into()));
    }
    let pscs = table.psc_order();
    let mut ticks = IndexMap::new();
    let mut agnostic = BTreeSet::new();
    for (trace, row) in &table.rows {
        let ipc: Vec<f64> = pscs.iter().map(|p| row[p]).collect();
        let mut order: Vec<usize> = (0..pscs.len()).collect();
        // stable: equal IPCs keep catalog order
        order.sort_by(|&a, &b| ipc[b].total_cmp(&ipc[a]));
        ticks.insert(
            trace.clone(),
            order.iter().take(k).map(|&i| pscs[i].clone()).collect(),
        );
        let max = ipc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ipc.iter().copied().fold(f64::INFINITY, f64::min);
        if min >= (1.0 - epsilon) * max {
            agnostic.insert(trace.clone());
        }
    }
    Ok(CoverageTable {
        pscs,
        ticks,
        agnostic_traces: agnostic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PscSelection {
    pub catalog: PscCatalog,
    /// Non-agnostic trace -> first selected PSC that ticks it.
    pub covered_by: IndexMap<String, String>,
    /// Non-agnostic traces left uncovered.
    pub uncovered: Vec<String>,
}

impl PscSelection {
    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }
}

pub fn greedy_select(coverage: &CoverageTable, max_candidates: usize) -> Result<PscSelection> {
    if coverage.ticks.is_empty() {
        return Err(Error::InvalidInput("coverage table has no traces".into()));
    }
    let mut ranked: Vec<(usize, &String)> = coverage
        .pscs
        .iter()
        .map(|p| (coverage.tick_count(p), p))
        .filter(|(n, _)| *n > 0)
        .collect();
    ranked.sort_by_key(|&(n, _)| std::cmp::Reverse(n));

    let needy: Vec<&String> = coverage
        .ticks
        .keys()
        .filter(|t| coverage.requires_cover(t))
        .collect();
    let mut covered: IndexMap<String, String> = IndexMap::new();
    let mut selected: Vec<String> = Vec::new();
    for (_, psc) in ranked {
        if selected.len() >= max_candidates || covered.len() == needy.len() {
            break;
        }
        let fresh: Vec<&String> = needy
            .iter()
            .copied()
            .filter(|t| !covered.contains_key(*t) && coverage.ticks[*t].contains(psc))
            .collect();
        if fresh.is_empty() {
            continue;
        }
        for t in fresh {
            covered.insert(t.clone(), psc.clone());
        }
        selected.push(psc.clone());
    }
    let uncovered: Vec<String> = needy
        .iter()
        .filter(|t| !covered.contains_key(**t))
        .map(|t| t.to_string())
        .collect();
    // report in trace order
    let covered_by = needy
        .iter()
        .filter_map(|t| covered.get(*t).map(|p| ((*t).clone(), p.clone())))
        .collect();
    Ok(PscSelection {
        catalog: PscCatalog::from_ids(&selected)?,
        covered_by,
        uncovered,
    })
}

/// Trace columns of the shipped ten-PSC tick table.
pub const REFERENCE_TRACES: [&str; 20] = [
    "638.imagick_s-10316B",
    "649.fotonik3d_s-1176B",
    "607.cactuBSSN_s-2421B",
    "625.x264_s-18B",
    "648.exchange2_s-1699B",
    "654.roms_s-842B",
    "600.perlbench_s-210B",
    "628.pop2_s-17B",
    "644.nab_s-5853B",
    "603.bwaves_s-3699",
    "627.cam4_s-573B",
    "621.wrf_s-575B",
    "631.deepsjeng_s-928B",
    "657.xz_s-3167B",
    "602.gcc_s-734B",
    "641.leela_s-800B",
    "623.xalancbmk_s-700B",
    "619.lbm_s-4268B",
    "605.mcf_s-665B",
    "620.omnetpp_s-874B",
];

/// Column indices (into [`REFERENCE_TRACES`]) ticked by each reference PSC,
/// in [`crate::types::REFERENCE_PSCS`] order.
pub const REFERENCE_TICKS: [&[usize]; 10] = [
    &[1, 2, 3, 4, 7, 8, 9, 10, 12, 14],
    &[1, 4, 6, 7, 12, 15, 19],
    &[1, 4, 6, 7, 15, 17],
    &[1, 3, 7, 8, 10, 12, 14],
    &[2, 3, 4, 7, 8, 9, 10, 12, 14],
    &[1, 6, 7, 15, 17, 19],
    &[1, 12, 15, 16, 19],
    &[1, 18],
    &[16, 18],
    &[16, 18],
];

pub const REFERENCE_AGNOSTIC: [&str; 3] = [
    "638.imagick_s-10316B",
    "654.roms_s-842B",
    "657.xz_s-3167B",
];

/// The ten-PSC by twenty-trace tick matrix that accompanies the reference
/// catalog, as a coverage table.
pub fn reference_tick_table() -> CoverageTable {
    let pscs: Vec<String> = crate::types::REFERENCE_PSCS.iter().map(|s| s.to_string()).collect();
    let ticks = REFERENCE_TRACES
        .iter()
        .enumerate()
        .map(|(col, trace)| {
            let ticked = pscs
                .iter()
                .zip(REFERENCE_TICKS)
                .filter(|(_, cols)| cols.contains(&col))
                .map(|(p, _)| p.clone())
                .collect();
            (trace.to_string(), ticked)
        })
        .collect();
    CoverageTable {
        pscs,
        ticks,
        agnostic_traces: REFERENCE_AGNOSTIC.iter().map(|s| s.to_string()).collect(),
    }
}
