//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pfsuite::cart::{best_split, Node, Sample, Tree};
use pfsuite::featsel::{invariance_filter, PerPscEpti};
use pfsuite::hwsim::{conformance_guard, evaluate_model, evaluate_suite, reference_evaluate};
use pfsuite::ingest::split_train_test;
use pfsuite::nodemem::{
    compile_suite, compile_with_scales, decode_image, from_bytes, quantize_threshold, to_bytes,
    CompiledModel, NodeMemImage, NODE_MEM_CAPACITY,
};
use pfsuite::pscsel::{
    build_coverage, greedy_select, reference_tick_table, TraceIpcTable, REFERENCE_AGNOSTIC,
    REFERENCE_TRACES,
};
use pfsuite::replay::{choice_accuracy, oracle_policy, run_replay, ReplayOptions, ReplayResult};
use pfsuite::synth::{generate_synthetic, SyntheticSpec};
use pfsuite::train::{
    cross_validate, label_windows, next_window_targets, train_suite, CvReport, Forest, HyperParams,
    Suite,
};
use pfsuite::{Dataset, EptiVector, EventCatalog, PscCatalog, WindowRecord};

const SEED: u64 = 2024;
const BASELINE: &str = "nl-mlop-kpcp-nl";

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- pipeline

struct PipelineRun {
    dataset: Dataset,
    train: Dataset,
    cv: CvReport,
    suite: Suite,
    model: CompiledModel,
    bundle: Vec<u8>,
    meta_json: String,
    replay: ReplayResult,
    replay_json: String,
    elapsed: Duration,
}

fn run_pipeline(seed: u64) -> PipelineRun {
    let start = Instant::now();
    let dataset = generate_synthetic(&SyntheticSpec::phased(10, 50, 4, seed)).unwrap();
    let pairs = next_window_targets(&dataset);
    let (train, _) = split_train_test(&pairs, 0.1, seed).unwrap();
    let labels = label_windows(&train, 0.005).unwrap();
    let grid = [
        HyperParams::default(),
        HyperParams { total_node_budget: 1000, ..HyperParams::default() },
    ];
    let cv = cross_validate(&train, &labels, 10, &grid, seed).unwrap();
    let suite = train_suite(&train, &labels, &cv.best, seed).unwrap();
    let model = compile_suite(&suite, &train).unwrap();
    let options = ReplayOptions {
        baseline: BASELINE.into(),
        initial: BASELINE.into(),
        switch_penalty: 0.0,
    };
    let replay = run_replay(&dataset, &model, &options).unwrap();
    let elapsed = start.elapsed();
    PipelineRun {
        bundle: to_bytes(&model.image, &model.rit),
        meta_json: serde_json::to_string_pretty(&model.meta).unwrap(),
        replay_json: serde_json::to_string_pretty(&replay).unwrap(),
        dataset,
        train,
        cv,
        suite,
        model,
        replay,
        elapsed,
    }
}

// ---------------------------------------------------------------- 1

fn gini_oracle(pos: usize, n: usize) -> f64 {
    let p = pos as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Weighted child Gini of splitting at `x[f] < t`, or `None` if a side has
/// fewer than `min_leaf` samples.
fn weighted_gini(x: &[Vec<f64>], y: &[bool], f: usize, t: f64, min_leaf: usize) -> Option<f64> {
    let (mut nl, mut pl, mut nr, mut pr) = (0, 0, 0, 0);
    for (row, &label) in x.iter().zip(y) {
        if row[f] < t {
            nl += 1;
            pl += usize::from(label);
        } else {
            nr += 1;
            pr += usize::from(label);
        }
    }
    if nl < min_leaf || nr < min_leaf || nl == 0 || nr == 0 {
        return None;
    }
    let n = (nl + nr) as f64;
    Some(nl as f64 / n * gini_oracle(pl, nl) + nr as f64 / n * gini_oracle(pr, nr))
}

fn brute_force_min(x: &[Vec<f64>], y: &[bool], min_leaf: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            if let Some(g) = weighted_gini(x, y, f, t, min_leaf) {
                best = Some(best.map_or(g, |b: f64| b.min(g)));
            }
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut splits = 0;
    for _ in 0..1000 {
        let n_features = r.gen_range(1..=4);
        let min_leaf = r.gen_range(1..=5);
        let n = r.gen_range(2 * min_leaf..=200);
        let levels = r.gen_range(2..=40);
        let bias = r.gen_range(0.05..0.95);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n_features).map(|_| r.gen_range(0..levels) as f64 * 0.25).collect())
            .collect();
        let y: Vec<bool> = (0..n).map(|_| r.gen_bool(bias)).collect();
        let samples: Vec<Sample> =
            x.iter().zip(&y).map(|(f, &l)| Sample { features: f, label: l }).collect();
        let features: Vec<usize> = (0..n_features).collect();
        let parent = gini_oracle(y.iter().filter(|&&b| b).count(), n);
        let oracle = brute_force_min(&x, &y, min_leaf).filter(|g| *g < parent - 1e-12);
        match (best_split(&samples, &features, min_leaf), oracle) {
            (Some(s), Some(g)) => {
                splits += 1;
                let own = weighted_gini(&x, &y, s.feature, s.threshold, min_leaf).unwrap_or(f64::NAN);
                let d = (s.weighted_gini - g).abs().max((own - g).abs());
                worst = worst.max(d);
                // NaN counts as a failure
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(d <= 1e-12) {
                    failures += 1;
                }
            }
            (None, None) => {}
            (Some(s), None) => {
                // acceptable only if the reported split does not beat the parent
                if s.weighted_gini < parent - 1e-12 {
                    failures += 1;
                }
            }
            (None, Some(_)) => failures += 1,
        }
    }
    let t = start.elapsed();
    check(
        failures == 0 && t < Duration::from_secs(30),
        format!(
            "split oracle: 1000 fixtures ({splits} with a split), {failures} mismatches, max |dGini| = {worst:.1e}, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2 and 3

fn random_vectors(train: &Dataset, n: usize, seed: u64) -> Vec<EptiVector> {
    let max = train.feature_max();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| EptiVector::new(max.iter().map(|&m| r.gen_range(0.0..=m)).collect()).unwrap())
        .collect()
}

fn criterion_2(run: &PipelineRun) -> Outcome {
    let labels = label_windows(&run.train, 0.005).unwrap();
    let suite = train_suite(&run.train, &labels, &HyperParams::default(), SEED).unwrap();
    let model = compile_suite(&suite, &run.train).unwrap();
    let vectors = random_vectors(&run.train, 10_000, SEED + 2);
    let mut guarded_out = 0;
    let mut disagreements = 0;
    for x in &vectors {
        if !conformance_guard(&suite, &model.meta.scales, x).passes() {
            guarded_out += 1;
            continue;
        }
        let hw = evaluate_model(&model, x).unwrap().class_id;
        let float = reference_evaluate(&suite, x).unwrap().0;
        if hw != float {
            disagreements += 1;
        }
    }
    let frac = guarded_out as f64 / vectors.len() as f64;
    // For information: windows from fresh traces of the same workload model.
    let fresh = generate_synthetic(&SyntheticSpec::phased(10, 50, 5, SEED + 20)).unwrap();
    let fresh_out = fresh
        .windows
        .iter()
        .filter(|w| !conformance_guard(&suite, &model.meta.scales, &w.epti).passes())
        .count();
    check(
        disagreements == 0 && frac < 0.05,
        format!(
            "quantized conformance: {} nodes, {} of {} guarded vectors disagree, {guarded_out} of 10000 uniform-box vectors guarded out ({:.2}%, limit 5%); fresh workload windows guarded out: {fresh_out}/{}",
            suite.node_count(),
            disagreements,
            vectors.len() - guarded_out,
            100.0 * frac,
            fresh.len()
        ),
    )
}

/// A suite that fills Node MEM exactly: 10 forests x 5 trees x 45 nodes,
/// each tree a depth-10 spine with a balanced top.
fn full_capacity_suite(n_features: usize, seed: u64) -> Suite {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut forests = Vec::new();
    for c in 0..10 {
        let trees = (0..5)
            .map(|_| {
                let mut nodes = Vec::new();
                let mut budget = 45;
                grow(&mut nodes, &mut r, n_features, 0, &mut budget, true);
                Tree::from_nodes(nodes).unwrap()
            })
            .collect();
        forests.push(Forest { class_index: c, trees });
    }
    Suite {
        pscs: PscCatalog::reference(),
        features: EventCatalog::reference(),
        hyperparams: HyperParams::default(),
        seed,
        forests,
    }
}

/// Pre-order random tree. With `exhaust`, splits whenever budget and depth
/// allow so the tree uses its budget exactly (odd budgets only).
fn grow(
    nodes: &mut Vec<Node>,
    r: &mut ChaCha8Rng,
    n_features: usize,
    depth: usize,
    budget: &mut usize,
    exhaust: bool,
) -> usize {
    let at = nodes.len();
    let can_split = *budget >= 3 && depth < 10;
    let split = can_split && (exhaust || r.gen_bool(0.6));
    if !split {
        *budget -= 1;
        nodes.push(Node::Leaf { probability: r.gen_range(0.0..=1.0) });
        return at;
    }
    *budget -= 1;
    nodes.push(Node::Leaf { probability: 0.0 });
    // reserve one node for the right subtree before growing the left
    *budget -= 1;
    let left = grow(nodes, r, n_features, depth + 1, budget, exhaust);
    *budget += 1;
    let right = grow(nodes, r, n_features, depth + 1, budget, exhaust);
    nodes[at] = Node::Split {
        feature: r.gen_range(0..n_features),
        threshold: r.gen_range(0.0..100.0),
        left,
        right,
    };
    at
}

fn criterion_3(run: &PipelineRun) -> Outcome {
    let full = full_capacity_suite(6, SEED);
    let max = [100.0; 6];
    let scales: Vec<f64> = max.iter().map(|m| m / 65535.0).collect();
    let full_model = compile_with_scales(&full, scales).unwrap();
    let mut worst = 0;
    let mut decisions = 0;
    let mut r = ChaCha8Rng::seed_from_u64(SEED + 3);
    for _ in 0..10_000 {
        let codes: Vec<u16> = (0..6).map(|_| r.gen()).collect();
        let d = evaluate_suite(&full_model.image, &full_model.rit, &codes).unwrap();
        worst = worst.max(d.state.comparison_count);
        decisions += 1;
    }
    for w in &run.dataset.windows {
        let d = evaluate_model(&run.model, &w.epti).unwrap();
        worst = worst.max(d.state.comparison_count);
        decisions += 1;
    }
    let depth_ok = full.max_depth() <= 10 && run.suite.max_depth() <= 10;
    let nodes = full_model.image.len();
    let logical = full_model.image.logical_bytes();
    let dense = full_model.image.pack_dense().len();
    check(
        worst <= 500 && depth_ok && nodes == NODE_MEM_CAPACITY && logical == 12_375 && dense == 12_375,
        format!(
            "hardware bounds: max {worst} comparisons over {decisions} decisions (limit 500); {nodes} nodes pack to {dense} logical bytes ({} with file padding)",
            full_model.image.padded_bytes()
        ),
    )
}

// ---------------------------------------------------------------- 4

fn random_suite(r: &mut ChaCha8Rng) -> (Suite, Vec<f64>) {
    let n_classes = r.gen_range(1..=10);
    let n_features = r.gen_range(1..=8);
    let per_tree = NODE_MEM_CAPACITY / (n_classes * 5);
    let forests = (0..n_classes)
        .map(|c| Forest {
            class_index: c,
            trees: (0..r.gen_range(1..=5))
                .map(|_| {
                    let mut nodes = Vec::new();
                    let mut budget = r.gen_range(1..=per_tree.min(45));
                    grow(&mut nodes, r, n_features, 0, &mut budget, false);
                    Tree::from_nodes(nodes).unwrap()
                })
                .collect(),
        })
        .collect();
    let scales = (0..n_features).map(|_| r.gen_range(0.5..200.0) / 65535.0).collect();
    let suite = Suite {
        pscs: PscCatalog::from_ids(&pfsuite::types::REFERENCE_PSCS[..n_classes]).unwrap(),
        features: EventCatalog::new((0..n_features).map(|i| format!("E{i}")).collect()).unwrap(),
        hyperparams: HyperParams::default(),
        seed: r.gen(),
        forests,
    };
    (suite, scales)
}

fn criterion_4() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut mismatches = 0;
    let mut corruptions = 0;
    let mut rejected = 0;
    for _ in 0..10_000 {
        let (suite, scales) = random_suite(&mut r);
        let m = compile_with_scales(&suite, scales.clone()).unwrap();
        let bytes = to_bytes(&m.image, &m.rit);
        let (image, rit) = from_bytes(&bytes, m.rit.slots_per_class).unwrap();
        let decoded = decode_image(&image, &rit, &m.meta).unwrap();
        let again = compile_with_scales(&decoded, scales.clone()).unwrap();
        let same_topology = suite.forests.iter().zip(&decoded.forests).all(|(a, b)| {
            a.trees.len() == b.trees.len()
                && a.trees.iter().zip(&b.trees).all(|(ta, tb)| {
                    ta.nodes().len() == tb.nodes().len()
                        && ta.nodes().iter().zip(tb.nodes()).all(|(na, nb)| match (na, nb) {
                            (
                                Node::Split { feature: fa, threshold: xa, left: la, right: ra },
                                Node::Split { feature: fb, threshold: xb, left: lb, right: rb },
                            ) => {
                                fa == fb
                                    && la == lb
                                    && ra == rb
                                    && quantize_threshold(*xa, scales[*fa]) == quantize_threshold(*xb, scales[*fb])
                            }
                            (Node::Leaf { .. }, Node::Leaf { .. }) => true,
                            _ => false,
                        })
                })
        });
        if to_bytes(&again.image, &again.rit) != bytes || again.meta != m.meta || !same_topology {
            mismatches += 1;
        }

        let internal: Vec<usize> =
            (0..m.image.len()).filter(|&i| !m.image.entries()[i].leaf).collect();
        if internal.is_empty() {
            continue;
        }
        corruptions += 1;
        let at = internal[r.gen_range(0..internal.len())];
        let mut entries = m.image.entries().to_vec();
        let target = r.gen_range(0..=at) as u16;
        if r.gen_bool(0.5) {
            entries[at].lnv = target;
        } else {
            entries[at].rnv = target;
        }
        let bad = NodeMemImage::new(entries).unwrap();
        let first = decode_image(&bad, &m.rit, &m.meta).map(|_| ()).map_err(|e| e.to_string());
        let second = decode_image(&bad, &m.rit, &m.meta).map(|_| ()).map_err(|e| e.to_string());
        let expected = format!("corrupt model image at node {at}:");
        if first == second && first.as_ref().is_err_and(|e| e.starts_with(&expected)) {
            rejected += 1;
        }
    }
    check(
        mismatches == 0 && rejected == corruptions,
        format!(
            "codec: {} of 10000 random suites round-trip bit-exact; {rejected} of {corruptions} back-link corruptions rejected at the corrupted node",
            10_000 - mismatches
        ),
    )
}

// ---------------------------------------------------------------- 5

fn min_cover_size(coverage: &pfsuite::pscsel::CoverageTable) -> Option<usize> {
    let needy: Vec<&String> = coverage.ticks.keys().filter(|t| coverage.requires_cover(t)).collect();
    let n = coverage.pscs.len();
    (0u32..(1 << n))
        .filter(|mask| {
            needy.iter().all(|t| {
                (0..n).any(|p| mask & (1 << p) != 0 && coverage.ticks[*t].contains(&coverage.pscs[p]))
            })
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

fn criterion_5() -> Outcome {
    let table = reference_tick_table();
    let sel = greedy_select(&table, 10).unwrap();
    let non_agnostic = REFERENCE_TRACES.len() - REFERENCE_AGNOSTIC.len();
    let fixture_ok = sel.catalog.len() <= 10 && sel.covered_by.len() == non_agnostic;

    let mut r = ChaCha8Rng::seed_from_u64(SEED + 5);
    let pscs = &pfsuite::types::REFERENCE_PSCS[..8];
    let (mut equal, mut max_gap, mut incomplete) = (0, 0usize, 0);
    for _ in 0..200 {
        let rows: IndexMap<String, IndexMap<String, f64>> = (0..5)
            .map(|t| {
                (
                    format!("t{t}"),
                    pscs.iter().map(|p| (p.to_string(), r.gen_range(0.5..1.5))).collect(),
                )
            })
            .collect();
        let coverage = build_coverage(&TraceIpcTable { rows }, 3, 0.005).unwrap();
        let greedy = greedy_select(&coverage, 8).unwrap();
        let best = min_cover_size(&coverage).unwrap_or(usize::MAX);
        if !greedy.is_complete() {
            incomplete += 1;
            continue;
        }
        equal += usize::from(greedy.catalog.len() == best);
        max_gap = max_gap.max(greedy.catalog.len() - best);
    }
    let random_ok = equal >= 190 && max_gap <= 1 && incomplete == 0;
    check(
        fixture_ok && random_ok,
        format!(
            "PSC pruning: fixture selects {} PSCs covering {} of {non_agnostic} non-agnostic traces (uncovered: {}); random 5-trace instances: {equal}/200 match the exhaustive minimum, max gap {max_gap}",
            sel.catalog.len(),
            sel.covered_by.len(),
            if sel.uncovered.is_empty() { "none".to_string() } else { sel.uncovered.join(", ") },
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED + 6);
    let n_events = 180;
    let n_windows = 20;
    let planted: BTreeSet<usize> = sample(&mut r, n_events, 59).into_iter().collect();
    let pscs = pfsuite::types::REFERENCE_PSCS;
    let mut per_psc: IndexMap<String, Vec<Vec<f64>>> =
        pscs.iter().map(|p| (p.to_string(), vec![Vec::new(); n_windows])).collect();
    for e in 0..n_events {
        let mean = r.gen_range(1.0..100.0);
        let dev = if planted.contains(&e) { r.gen_range(0.0..0.095) } else { r.gen_range(0.105..0.8) };
        let noise = 0.05 * mean;
        for (p, rows) in per_psc.values_mut().enumerate() {
            let shift = match p {
                0 => 1.0,
                1 => -1.0,
                _ => 0.0,
            };
            let centre = mean * (1.0 + dev * shift);
            for (w, row) in rows.iter_mut().enumerate() {
                row.push(centre + if w % 2 == 0 { noise } else { -noise });
            }
        }
    }
    let input = PerPscEpti {
        events: EventCatalog::new((0..n_events).map(|i| format!("EV{i:03}")).collect()).unwrap(),
        per_psc: per_psc
            .into_iter()
            .map(|(p, rows)| (p, rows.into_iter().map(|v| EptiVector::new(v).unwrap()).collect()))
            .collect(),
    };
    let report = invariance_filter(&input, 0.10).unwrap();
    let retained: BTreeSet<usize> = report.retained.iter().map(|e| e.index).collect();
    check(
        retained == planted,
        format!(
            "feature filter: {} of {n_events} events retained, planted {}, symmetric difference {}",
            retained.len(),
            planted.len(),
            retained.symmetric_difference(&planted).count()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7(run: &PipelineRun) -> Outcome {
    let agg = &run.replay.aggregate;
    let ratio = agg.mean_adaptive_ipc / agg.mean_oracle_ipc;
    let (best_static, best_static_ipc) = agg
        .mean_static_ipc
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(p, v)| (p.clone(), *v))
        .unwrap();
    let beats_static = agg.mean_static_ipc.values().all(|&s| agg.mean_adaptive_ipc > s);
    let accuracy = choice_accuracy(&run.dataset, &run.replay, true).unwrap();
    let all_windows = choice_accuracy(&run.dataset, &run.replay, false).unwrap();
    check(
        ratio >= 0.95 && beats_static && accuracy >= 0.90 && run.elapsed < Duration::from_secs(120),
        format!(
            "end-to-end: {} windows, {} training pairs, CV budget {}, adaptive IPC {:.4} = {:.2}% of oracle, best static {best_static} {:.4}, post-transition accuracy {:.2}% ({:.2}% incl. phase changes), {:.1} s",
            run.dataset.len(),
            run.train.len(),
            run.cv.best.total_node_budget,
            agg.mean_adaptive_ipc,
            100.0 * ratio,
            best_static_ipc,
            100.0 * accuracy,
            100.0 * all_windows,
            run.elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8(run: &PipelineRun) -> Outcome {
    let mut agnostic = run.dataset.clone();
    for w in &mut agnostic.windows {
        let v = w.ipc.iter().copied().fold(0.0, f64::max);
        w.ipc = vec![v; w.ipc.len()];
    }
    let mut zero = true;
    for baseline in agnostic.pscs.ids() {
        let options = ReplayOptions { baseline: baseline.clone(), initial: BASELINE.into(), switch_penalty: 0.0 };
        let res = run_replay(&agnostic, &run.model, &options).unwrap();
        zero &= res.per_trace.values().all(|t| t.gain == 0.0) && res.aggregate.mean_gain_vs_baseline == 0.0;
    }
    let swing_ds = Dataset::new(
        EventCatalog::new(vec!["E0".into()]).unwrap(),
        PscCatalog::from_ids(&[BASELINE, "no-bingo-ipcp-no"]).unwrap(),
        vec![WindowRecord {
            trace_id: "swing".into(),
            window_index: 0,
            epti: EptiVector::new(vec![1.0]).unwrap(),
            ipc: vec![0.1, 0.742],
        }],
        1_000_000,
    )
    .unwrap();
    let swing = 100.0 * oracle_policy(&swing_ds).unwrap().swing;
    check(
        zero && (swing - 642.0).abs() <= 0.1,
        format!(
            "degeneracy: agnostic gain exactly 0 against all {} baselines: {zero}; swing fixture {swing:.3}%",
            agnostic.pscs.len()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_9(first: &PipelineRun) -> Outcome {
    let second = run_pipeline(SEED);
    let same_bundle = first.bundle == second.bundle && first.meta_json == second.meta_json;
    let same_replay = first.replay_json == second.replay_json;
    check(
        same_bundle && same_replay,
        format!(
            "determinism: bundle {} bytes identical: {same_bundle}; replay JSON {} bytes identical: {same_replay}",
            first.bundle.len(),
            first.replay_json.len()
        ),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let run = run_pipeline(SEED);
    let criteria: Vec<(&str, Check)> = vec![
        ("1", Box::new(criterion_1)),
        ("2", Box::new(|| criterion_2(&run))),
        ("3", Box::new(|| criterion_3(&run))),
        ("4", Box::new(criterion_4)),
        ("5", Box::new(criterion_5)),
        ("6", Box::new(criterion_6)),
        ("7", Box::new(|| criterion_7(&run))),
        ("8", Box::new(|| criterion_8(&run))),
        ("9", Box::new(|| criterion_9(&run))),
    ];
    let mut failed = Vec::new();
    for (id, f) in &criteria {
        let o = f();
        println!("criterion {id} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(*id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria fail ({})", failed.len(), criteria.len(), failed.join(", "));
        std::process::exit(1);
    }
}
