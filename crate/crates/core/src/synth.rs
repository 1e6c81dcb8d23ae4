//! Synthetic phase-structured datasets with a known best PSC per window.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::types::{
    compute_epti, Dataset, EventCatalog, PscCatalog, WindowRecord, DEFAULT_WINDOW_INSTRUCTIONS,
    REFERENCE_EVENTS, REFERENCE_PSCS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub length_windows: usize,
    /// Per-event E-PTI centre.
    pub epti_mean: Vec<f64>,
    /// Per-event half-width of the uniform noise around the centre.
    pub epti_noise: Vec<f64>,
    pub best_psc: usize,
    pub ipc_best: f64,
    pub ipc_other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub events: Vec<String>,
    pub pscs: Vec<String>,
    /// Number of traces; trace `t` plays the phases rotated left by `t`.
    #[serde(default = "one")]
    pub traces: usize,
    pub phases: Vec<PhaseSpec>,
    #[serde(default = "default_window")]
    pub window_size_instructions: u64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn default_window() -> u64 {
    DEFAULT_WINDOW_INSTRUCTIONS
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() || self.traces == 0 {
            return Err(Error::Config("a synthetic spec needs phases and traces".into()));
        }
        let (ne, np) = (self.events.len(), self.pscs.len());
        for (i, p) in self.phases.iter().enumerate() {
            if p.epti_mean.len() != ne || p.epti_noise.len() != ne {
                return Err(Error::Config(format!("phase {i} does not describe {ne} events")));
            }
            if p.best_psc >= np {
                return Err(Error::Config(format!("phase {i} names PSC {} of {np}", p.best_psc)));
            }
            if !(p.ipc_best > p.ipc_other && p.ipc_other > 0.0) {
                return Err(Error::Config(format!("phase {i} needs ipc_best > ipc_other > 0")));
            }
            if p.length_windows == 0 {
                return Err(Error::Config(format!("phase {i} has no windows")));
            }
            if p.epti_mean.iter().chain(&p.epti_noise).any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Config(format!("phase {i} has a negative or non-finite generator")));
            }
        }
        for i in 0..self.phases.len() {
            for j in 0..i {
                let (a, b) = (&self.phases[i], &self.phases[j]);
                let apart = (0..ne).any(|e| {
                    (a.epti_mean[e] - b.epti_mean[e]).abs() > a.epti_noise[e] + b.epti_noise[e]
                });
                if !apart && a.best_psc != b.best_psc {
                    return Err(Error::Config(format!(
                        "phases {j} and {i} prefer different PSCs but their E-PTI ranges overlap"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `n_phases` phases of `length` windows over the reference catalogs;
    /// phase `p` prefers PSC `p mod 10`.
    pub fn phased(n_phases: usize, length: usize, traces: usize, seed: u64) -> SyntheticSpec {
        let phases = (0..n_phases)
            .map(|p| {
                let bits = (0..4).map(|b| if (p >> b) & 1 == 1 { 60.0 } else { 20.0 });
                PhaseSpec {
                    length_windows: length,
                    epti_mean: bits.chain([10.0 + 8.0 * p as f64, 40.0 + 3.0 * (p % 3) as f64]).collect(),
                    epti_noise: vec![4.0, 4.0, 4.0, 4.0, 2.0, 1.0],
                    best_psc: p % REFERENCE_PSCS.len(),
                    ipc_best: 1.2 + 0.05 * p as f64,
                    ipc_other: 0.8 + 0.02 * p as f64,
                }
            })
            .collect();
        SyntheticSpec {
            events: REFERENCE_EVENTS.iter().map(|s| s.to_string()).collect(),
            pscs: REFERENCE_PSCS.iter().map(|s| s.to_string()).collect(),
            traces,
            phases,
            window_size_instructions: DEFAULT_WINDOW_INSTRUCTIONS,
            seed,
        }
    }

    pub fn total_windows(&self) -> usize {
        self.traces * self.phases.iter().map(|p| p.length_windows).sum::<usize>()
    }
}

/// Deterministic in `spec.seed`; each (trace, phase) draws from its own
/// stream. Counts are rounded to whole events before normalisation.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let events = EventCatalog::new(spec.events.clone())?;
    let pscs = PscCatalog::from_ids(&spec.pscs)?;
    let ws = spec.window_size_instructions;
    let per_kilo = ws as f64 / 1000.0;
    let n_phases = spec.phases.len();
    let width = spec.traces.to_string().len();
    let mut windows = Vec::with_capacity(spec.total_windows());
    for t in 0..spec.traces {
        let trace_id = format!("synth-{t:0width$}");
        let mut index = 0u64;
        for k in 0..n_phases {
            let p = (k + t) % n_phases;
            let phase = &spec.phases[p];
            let mut r = rng::stream(spec.seed, "synth-phase", ((t as u64) << 32) | p as u64);
            for _ in 0..phase.length_windows {
                let counts: Vec<u64> = phase
                    .epti_mean
                    .iter()
                    .zip(&phase.epti_noise)
                    .map(|(&m, &n)| {
                        let v = if n > 0.0 { m + r.gen_range(-n..=n) } else { m };
                        (v.max(0.0) * per_kilo).round() as u64
                    })
                    .collect();
                let mut ipc = vec![phase.ipc_other; pscs.len()];
                ipc[phase.best_psc] = phase.ipc_best;
                windows.push(WindowRecord {
                    trace_id: trace_id.clone(),
                    window_index: index,
                    epti: compute_epti(&counts, ws)?,
                    ipc,
                });
                index += 1;
            }
        }
    }
    Dataset::new(events, pscs, windows, ws)
}
