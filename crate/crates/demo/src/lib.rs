//! wasm-bindgen front end for the static page in `www/`. Every export returns
//! JSON text; the page does the drawing.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pfsuite::hwsim::evaluate_model;
use pfsuite::ingest::split_train_test;
use pfsuite::nodemem::{compile_suite, CompiledModel};
use pfsuite::pscsel::{greedy_select, reference_tick_table};
use pfsuite::replay::{run_replay, ReplayOptions, ReplayResult};
use pfsuite::synth::{generate_synthetic, SyntheticSpec};
use pfsuite::train::{label_windows, next_window_targets, train_suite, HyperParams};
use pfsuite::{Dataset, EptiVector};

const TRAIN_FRACTION: f64 = 0.1;

/// A trained model together with the synthetic workload it was trained on.
#[wasm_bindgen]
pub struct Demo {
    dataset: Dataset,
    model: CompiledModel,
    replay: ReplayResult,
    node_count: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    features: &'a [String],
    feature_max: Vec<f64>,
    pscs: Vec<String>,
    traces: Vec<&'a String>,
    node_count: usize,
    baseline: &'a str,
    mean_adaptive_ipc: f64,
    mean_oracle_ipc: f64,
    mean_baseline_ipc: f64,
}

#[derive(Serialize)]
struct StripPoint<'a> {
    choice: &'a str,
    best: String,
    adaptive: f64,
    oracle: f64,
    baseline: f64,
}

#[derive(Serialize)]
struct Evaluation {
    psc: String,
    probability: f64,
    codes: Vec<u16>,
    comparisons: u32,
    memory_accesses: u32,
}

fn js(e: pfsuite::Error) -> JsError {
    JsError::new(&e.to_string())
}

impl Demo {
    pub fn build(seed: u64, phases: usize, phase_length: usize, traces: usize) -> pfsuite::Result<Demo> {
        let dataset = generate_synthetic(&SyntheticSpec::phased(phases, phase_length, traces, seed))?;
        let pairs = next_window_targets(&dataset);
        let (train, _) = split_train_test(&pairs, TRAIN_FRACTION, seed)?;
        let labels = label_windows(&train, pfsuite::train::DEFAULT_LABEL_EPSILON)?;
        let suite = train_suite(&train, &labels, &HyperParams::default(), seed)?;
        let model = compile_suite(&suite, &train)?;
        let first = dataset.pscs.ids()[0].clone();
        let options = ReplayOptions { baseline: first.clone(), initial: first, switch_penalty: 0.0 };
        let replay = run_replay(&dataset, &model, &options)?;
        Ok(Demo { dataset, model, replay, node_count: suite.node_count() })
    }

    pub fn summary_json(&self) -> String {
        let agg = &self.replay.aggregate;
        let summary = Summary {
            features: self.dataset.events.names(),
            feature_max: self.dataset.feature_max(),
            pscs: self.dataset.pscs.ids(),
            traces: self.replay.per_trace.keys().collect(),
            node_count: self.node_count,
            baseline: &self.replay.baseline,
            mean_adaptive_ipc: agg.mean_adaptive_ipc,
            mean_oracle_ipc: agg.mean_oracle_ipc,
            mean_baseline_ipc: agg.mean_static_ipc[&self.replay.baseline],
        };
        serde_json::to_string(&summary).expect("summary serializes")
    }

    /// Per-window IPC of the adaptive, oracle and baseline policies on one trace.
    pub fn strip_json(&self, trace: usize) -> pfsuite::Result<String> {
        let ranges = self.dataset.trace_ranges();
        let range = ranges.get(trace).cloned().ok_or_else(|| {
            pfsuite::Error::InvalidInput(format!("trace {trace} of {}", ranges.len()))
        })?;
        let windows = &self.dataset.windows[range];
        let replay = &self.replay.per_trace[&windows[0].trace_id];
        let pscs = &self.dataset.pscs;
        let base = pscs.index_of(&self.replay.baseline).expect("baseline is in the catalog");
        let points: Vec<StripPoint> = windows
            .iter()
            .zip(&replay.choices)
            .map(|(w, choice)| StripPoint {
                choice,
                best: pscs.ids()[w.best_class()].clone(),
                adaptive: w.ipc[pscs.index_of(choice).expect("choice is in the catalog")],
                oracle: w.best_ipc(),
                baseline: w.ipc[base],
            })
            .collect();
        Ok(serde_json::to_string(&points).expect("strip serializes"))
    }

    pub fn evaluate_json(&self, epti: &[f64]) -> pfsuite::Result<String> {
        let epti = EptiVector::new(epti.to_vec())?;
        let decision = evaluate_model(&self.model, &epti)?;
        let out = Evaluation {
            psc: self.model.meta.pscs.ids()[decision.class_id].clone(),
            probability: decision.probability,
            codes: self.model.meta.quantize_epti(epti.values()),
            comparisons: decision.state.comparison_count,
            memory_accesses: decision.state.memory_access_count,
        };
        Ok(serde_json::to_string(&out).expect("evaluation serializes"))
    }
}

#[wasm_bindgen]
impl Demo {
    /// Generates a phased workload and trains a suite on 10% of it.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, phases: usize, phase_length: usize, traces: usize) -> Result<Demo, JsError> {
        Demo::build(seed.into(), phases, phase_length, traces).map_err(js)
    }

    pub fn summary(&self) -> String {
        self.summary_json()
    }

    pub fn strip(&self, trace: usize) -> Result<String, JsError> {
        self.strip_json(trace).map_err(js)
    }

    /// Runs the hardware model on one E-PTI vector.
    pub fn evaluate(&self, epti: &[f64]) -> Result<String, JsError> {
        self.evaluate_json(epti).map_err(js)
    }
}

/// Greedy PSC selection over the reference tick table.
pub fn select_reference_json(max_candidates: usize) -> pfsuite::Result<String> {
    let table = reference_tick_table();
    let sel = greedy_select(&table, max_candidates)?;
    let ticks: Vec<(&String, &Vec<String>)> = table.ticks.iter().collect();
    Ok(serde_json::json!({
        "selected": sel.catalog.ids(),
        "covered_by": sel.covered_by,
        "uncovered": sel.uncovered,
        "agnostic": table.agnostic_traces,
        "pscs": table.pscs,
        "ticks": ticks,
    })
    .to_string())
}

#[wasm_bindgen(js_name = selectReference)]
pub fn select_reference(max_candidates: usize) -> Result<String, JsError> {
    select_reference_json(max_candidates).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn demo_round_trip() {
        let demo = Demo::build(7, 4, 30, 2).unwrap();
        let summary: Value = serde_json::from_str(&demo.summary_json()).unwrap();
        assert_eq!(summary["traces"].as_array().unwrap().len(), 2);
        assert!(summary["node_count"].as_u64().unwrap() <= 2250);

        let strip: Value = serde_json::from_str(&demo.strip_json(1).unwrap()).unwrap();
        let strip = strip.as_array().unwrap();
        assert_eq!(strip.len(), 120);
        assert!(strip.iter().all(|p| p["adaptive"].as_f64() <= p["oracle"].as_f64()));
        assert!(demo.strip_json(2).is_err());

        let max: Vec<f64> = serde_json::from_value(summary["feature_max"].clone()).unwrap();
        let eval: Value = serde_json::from_str(&demo.evaluate_json(&max).unwrap()).unwrap();
        assert!(eval["codes"].as_array().unwrap().iter().all(|c| c == 65535));
        assert!(demo.evaluate_json(&[1.0]).is_err());
    }

    #[test]
    fn reference_selection() {
        let sel: Value = serde_json::from_str(&select_reference_json(5).unwrap()).unwrap();
        assert_eq!(sel["selected"].as_array().unwrap().len(), 5);
        assert_eq!(sel["selected"][0], "nl-mlop-kpcp-nl");
    }
}
