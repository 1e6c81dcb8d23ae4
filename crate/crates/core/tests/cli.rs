use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use pfsuite::cart::{Node, Tree};
use pfsuite::ingest::write_jsonl;
use pfsuite::pscsel::{REFERENCE_AGNOSTIC, REFERENCE_TICKS, REFERENCE_TRACES};
use pfsuite::synth::SyntheticSpec;
use pfsuite::train::{Forest, HyperParams, Suite};
use pfsuite::types::REFERENCE_PSCS;
use pfsuite::{Dataset, EptiVector, EventCatalog, PscCatalog, WindowRecord};

fn pfsuite(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfsuite"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = pfsuite(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn smoke_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let spec = SyntheticSpec::phased(2, 50, 2, 5);
    fs::write(dir.join("two-phase.json"), serde_json::to_string(&spec).unwrap()).unwrap();

    let s = ok(dir, &["synth", "--spec", "two-phase.json", "--out", "ds.jsonl"]);
    assert_eq!(s["windows"], 200);
    let t = ok(dir, &[
        "--seed", "3", "train", "--dataset", "ds.jsonl", "--out", "suite.json", "--train-out",
        "train.jsonl", "--folds", "3", "--train-fraction", "0.5",
    ]);
    assert!(t["node_count"].as_u64().unwrap() <= 2250);
    assert!(t["cross_validation"]["settings"].is_array());
    let q = ok(dir, &["quantize", "--suite", "suite.json", "--train", "train.jsonl", "--out", "model"]);
    let nodes = q["nodes"].as_u64().unwrap();
    assert_eq!(q["logical_bytes"].as_u64().unwrap(), (nodes * 44).div_ceil(8));
    assert!(dir.join("model/model.nodemem").exists() && dir.join("model/model.meta.json").exists());

    let r = ok(dir, &[
        "simulate", "--dataset", "ds.jsonl", "--model", "model", "--baseline", REFERENCE_PSCS[1],
        "--out", "replay.json",
    ]);
    let agg = &r["aggregate"];
    assert!(agg["mean_adaptive_ipc"].as_f64().unwrap() > agg["mean_static_ipc"][REFERENCE_PSCS[0]].as_f64().unwrap());
    assert!(agg["mean_adaptive_ipc"].as_f64().unwrap() >= 0.95 * agg["mean_oracle_ipc"].as_f64().unwrap());

    let rep = ok(dir, &["report", "--replay", "replay.json", "--k", "1", "--out", "fig.csv"]);
    let csv = fs::read_to_string(dir.join("fig.csv")).unwrap();
    assert_eq!(csv, rep["csv"].as_str().unwrap());
    assert_eq!(csv.lines().next(), Some("trace_id,policy,gain"));
    assert_eq!(csv.lines().count(), 3);

    let first = &spec.phases[0].epti_mean;
    let e = ok(dir, &["--json", "eval", "--model", "model", "--epti", &serde_json::to_string(first).unwrap()]);
    assert!(e["comparison_count"].as_u64().unwrap() <= 500);
    assert!(e["psc"].is_string());
}

#[test]
fn pipeline_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let spec = SyntheticSpec::phased(3, 30, 2, 0);
    fs::write(dir.join("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
    let cfg = r#"{"seed": 17, "train": {"folds": 2, "train_fraction": 0.3}}"#;
    fs::write(dir.join("cfg.json"), cfg).unwrap();
    for run in ["a", "b"] {
        let base = ["--config", "cfg.json"];
        let ds = format!("{run}.jsonl");
        let suite = format!("{run}-suite.json");
        let train = format!("{run}-train.jsonl");
        let model = format!("{run}-model");
        ok(dir, &[&base[..], &["synth", "--spec", "spec.json", "--out", &ds]].concat());
        ok(dir, &[&base[..], &["train", "--dataset", &ds, "--out", &suite, "--train-out", &train]].concat());
        ok(dir, &[&base[..], &["quantize", "--suite", &suite, "--train", &train, "--out", &model]].concat());
        ok(dir, &[&base[..], &["simulate", "--dataset", &ds, "--model", &model, "--out", &format!("{run}-replay.json")]].concat());
    }
    for (a, b) in [
        ("a.jsonl", "b.jsonl"),
        ("a-suite.json", "b-suite.json"),
        ("a-model/model.nodemem", "b-model/model.nodemem"),
        ("a-model/model.meta.json", "b-model/model.meta.json"),
        ("a-replay.json", "b-replay.json"),
    ] {
        assert_eq!(fs::read(dir.join(a)).unwrap(), fs::read(dir.join(b)).unwrap(), "{a} vs {b}");
    }
}

#[test]
fn oversized_suite_is_a_capacity_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // 1150 splits down a right spine + 1151 leaves = 2301 nodes
    let nodes: Vec<Node> = (0..1150)
        .flat_map(|i| {
            [
                Node::Split { feature: 0, threshold: 1.0, left: 2 * i + 1, right: 2 * i + 2 },
                Node::Leaf { probability: 0.0 },
            ]
        })
        .chain([Node::Leaf { probability: 1.0 }])
        .collect();
    let suite = Suite {
        pscs: PscCatalog::from_ids(&REFERENCE_PSCS[..1]).unwrap(),
        features: EventCatalog::new(vec!["e".into()]).unwrap(),
        hyperparams: HyperParams::default(),
        seed: 0,
        forests: vec![Forest { class_index: 0, trees: vec![Tree::from_nodes(nodes).unwrap()] }],
    };
    assert!(suite.node_count() >= 2300);
    fs::write(dir.join("big.json"), serde_json::to_string(&suite).unwrap()).unwrap();
    let ds = Dataset::new(
        EventCatalog::new(vec!["e".into()]).unwrap(),
        PscCatalog::from_ids(&REFERENCE_PSCS[..1]).unwrap(),
        vec![WindowRecord {
            trace_id: "t".into(),
            window_index: 0,
            epti: EptiVector::new(vec![3.0]).unwrap(),
            ipc: vec![1.0],
        }],
        1_000_000,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_jsonl(&ds, &mut buf).unwrap();
    fs::write(dir.join("train.jsonl"), buf).unwrap();

    let out = pfsuite(dir, &["quantize", "--suite", "big.json", "--train", "train.jsonl", "--out", "m"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2250"));
    assert!(!dir.join("m").exists());
}

#[test]
fn exit_codes_by_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(pfsuite(dir, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(pfsuite(dir, &["train", "--out", "s.json"]).status.code(), Some(1));
    assert_eq!(pfsuite(dir, &["--config", "missing.json", "report", "--replay", "r.json"]).status.code(), Some(1));
    assert_eq!(pfsuite(dir, &["train", "--dataset", "missing.jsonl", "--out", "s.json"]).status.code(), Some(2));
    fs::write(dir.join("bad.jsonl"), "{\"trace_id\": 1}\n").unwrap();
    let out = pfsuite(dir, &["train", "--dataset", "bad.jsonl", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:1"));
    assert_eq!(pfsuite(dir, &["--help"]).status.code(), Some(0));
}

/// Every trace's IPC is 2.0 under the PSCs ticked for it and 1.0 otherwise.
fn tick_fixture() -> Dataset {
    let events = EventCatalog::reference();
    let pscs = PscCatalog::reference();
    let mut windows = Vec::new();
    for (col, trace) in REFERENCE_TRACES.iter().enumerate() {
        for w in 0..3u64 {
            windows.push(WindowRecord {
                trace_id: trace.to_string(),
                window_index: w,
                epti: EptiVector::new((0..6).map(|e| (col * 7 + e * 3 + w as usize) as f64).collect()).unwrap(),
                ipc: REFERENCE_TICKS.iter().map(|cols| if cols.contains(&col) { 2.0 } else { 1.0 }).collect(),
            });
        }
    }
    Dataset::new(events, pscs, windows, 1_000_000).unwrap()
}

#[test]
fn table_fixture_replay_reconstructs_ticks() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut buf = Vec::new();
    write_jsonl(&tick_fixture(), &mut buf).unwrap();
    fs::write(dir.join("table.jsonl"), buf).unwrap();
    ok(dir, &[
        "train", "--dataset", "table.jsonl", "--out", "suite.json", "--train-out", "train.jsonl",
        "--folds", "0", "--train-fraction", "0.5", "--min-leaf", "1",
    ]);
    ok(dir, &["quantize", "--suite", "suite.json", "--train", "train.jsonl", "--out", "model"]);
    let r = ok(dir, &["simulate", "--dataset", "table.jsonl", "--model", "model", "--baseline", "nl-mlop-kpcp-nl"]);
    assert_eq!(r["baseline"], "nl-mlop-kpcp-nl");

    let per_trace = r["per_trace"].as_object().unwrap();
    assert_eq!(per_trace.len(), 20);
    for (p, cols) in REFERENCE_PSCS.iter().zip(REFERENCE_TICKS) {
        let ticked: Vec<usize> = REFERENCE_TRACES
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let row = per_trace[**t]["static_ipc"].as_object().unwrap();
                let values: Vec<f64> = row.values().map(|v| v.as_f64().unwrap()).collect();
                let max = values.iter().copied().fold(0.0, f64::max);
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                max > min && row[*p].as_f64().unwrap() == max
            })
            .map(|(c, _)| c)
            .collect();
        assert_eq!(ticked, cols.to_vec(), "ticks of {p}");
    }
    for t in REFERENCE_AGNOSTIC {
        let row = per_trace[t]["static_ipc"].as_object().unwrap();
        assert!(row.values().all(|v| v.as_f64() == Some(1.0)));
    }
}

#[test]
fn selection_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let table = serde_json::json!({
        "a": {"nl-mlop-kpcp-nl": 1.0, "nl-bingo-spp-nl": 2.0, "no-bingo-ipcp-no": 1.5},
        "b": {"nl-mlop-kpcp-nl": 3.0, "nl-bingo-spp-nl": 1.0, "no-bingo-ipcp-no": 1.0},
        "c": {"nl-mlop-kpcp-nl": 1.0, "nl-bingo-spp-nl": 1.0, "no-bingo-ipcp-no": 1.0},
    });
    fs::write(dir.join("table.json"), table.to_string()).unwrap();
    let s = ok(dir, &["select-psc", "--table", "table.json", "--top-k", "1", "--out", "catalog.json"]);
    assert_eq!(s["agnostic"], serde_json::json!(["c"]));
    assert_eq!(s["uncovered"], serde_json::json!([]));
    let catalog: Vec<String> = serde_json::from_str(&fs::read_to_string(dir.join("catalog.json")).unwrap()).unwrap();
    assert_eq!(catalog.len(), 2);

    let per_psc = serde_json::json!({
        "events": ["steady", "moving"],
        "per_psc": {
            "nl-mlop-kpcp-nl": [[10.0, 1.0], [12.0, 1.0]],
            "nl-bingo-spp-nl": [[10.0, 5.0], [12.0, 5.0]],
        }
    });
    fs::write(dir.join("epti.json"), per_psc.to_string()).unwrap();
    let f = ok(dir, &["select-features", "--input", "epti.json", "--out", "features.json"]);
    assert_eq!(f["selected"], serde_json::json!(["steady"]));
    assert_eq!(f["invariance"]["per_event"][1]["invariant"], false);
}
