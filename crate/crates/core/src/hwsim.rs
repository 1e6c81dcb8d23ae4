//! Integer-only model of the decision datapath: a controller walks each tree
//! in Node MEM, a comparator picks the branch, and a best-class register keeps
//! the forest with the highest summed probability code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodemem::{decode_probability, CompiledModel, NodeMemEntry, NodeMemImage, RootIndexTable, PROBABILITY_MAX};
use crate::train::Suite;
use crate::types::EptiVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestClass {
    pub class_id: usize,
    /// Sum of the forest's tree probability codes.
    pub probability_code: u32,
    pub trees: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HwState {
    pub node_register: Option<NodeMemEntry>,
    pub epti_register: u16,
    pub best_class: Option<BestClass>,
    pub comparison_count: u32,
    pub memory_access_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub class_id: usize,
    pub probability: f64,
    pub state: HwState,
}

/// Walks one tree from `root` and returns the leaf's probability code.
pub fn traverse_tree(
    image: &NodeMemImage,
    root: usize,
    codes: &[u16],
    state: &mut HwState,
) -> Result<u16> {
    let mut at = root;
    loop {
        let entry = image.get(at)?;
        state.memory_access_count += 1;
        state.node_register = Some(entry);
        if entry.leaf {
            return Ok(entry.lnv);
        }
        let hpc = usize::from(entry.hpc_id);
        state.epti_register = *codes.get(hpc).ok_or_else(|| Error::Corruption {
            index: at,
            reason: format!("HPC ID {hpc} has no E-PTI input"),
        })?;
        state.comparison_count += 1;
        let next = usize::from(if state.epti_register < entry.threshold { entry.lnv } else { entry.rnv });
        if next <= at {
            return Err(Error::Corruption {
                index: at,
                reason: format!("link to {next} does not point forward"),
            });
        }
        at = next;
    }
}

/// Runs every valid tree and returns the winning class. Forests are compared
/// by summed codes (cross-multiplied by tree count, so no division is
/// needed); a later forest replaces the best only if strictly better.
pub fn evaluate_suite(image: &NodeMemImage, rit: &RootIndexTable, codes: &[u16]) -> Result<Decision> {
    let mut state = HwState::default();
    for class in 0..rit.n_classes() {
        let mut sum = 0u32;
        let mut trees = 0u32;
        for slot in rit.class_slots(class).iter().filter(|s| s.valid) {
            sum += u32::from(traverse_tree(image, usize::from(slot.root), codes, &mut state)?);
            trees += 1;
        }
        if trees == 0 {
            continue;
        }
        let better = match state.best_class {
            None => true,
            Some(b) => u64::from(sum) * u64::from(b.trees) > u64::from(b.probability_code) * u64::from(trees),
        };
        if better {
            state.best_class = Some(BestClass {
                class_id: class,
                probability_code: sum,
                trees,
            });
        }
    }
    let best = state
        .best_class
        .ok_or_else(|| Error::InvalidInput("root index table has no valid entries".into()))?;
    Ok(Decision {
        class_id: best.class_id,
        probability: f64::from(best.probability_code) / (f64::from(best.trees) * f64::from(PROBABILITY_MAX)),
        state,
    })
}

/// Quantizes `epti` with the model's scales and evaluates it.
pub fn evaluate_model(model: &CompiledModel, epti: &EptiVector) -> Result<Decision> {
    if epti.len() != model.meta.features.len() {
        return Err(Error::InvalidInput(format!(
            "E-PTI vector has {} values for {} model features",
            epti.len(),
            model.meta.features.len()
        )));
    }
    evaluate_suite(&model.image, &model.rit, &model.meta.quantize_epti(epti.values()))
}

/// Floating-point argmax of forest mean probabilities; ties keep the lower
/// class.
pub fn reference_evaluate(suite: &Suite, epti: &EptiVector) -> Result<(usize, f64)> {
    let probs = suite.forest_probabilities(epti);
    let mut best: Option<(usize, f64)> = None;
    for (c, &p) in probs.iter().enumerate() {
        if suite.forests[c].trees.is_empty() {
            continue;
        }
        if best.is_none_or(|(_, b)| p > b) {
            best = Some((c, p));
        }
    }
    best.ok_or_else(|| Error::InvalidInput("suite has no trees".into()))
}

/// Whether an input is far enough from every decision boundary that the
/// quantized and float paths must agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardCheck {
    /// Gap between the two highest float forest averages.
    pub margin: f64,
    /// A traversed split whose threshold lies within one scale unit of the
    /// input.
    pub near_threshold: bool,
}

impl GuardCheck {
    pub fn passes(&self) -> bool {
        self.margin > 2.0 / f64::from(PROBABILITY_MAX) && !self.near_threshold
    }
}

pub fn conformance_guard(suite: &Suite, scales: &[f64], epti: &EptiVector) -> GuardCheck {
    let mut probs = suite.forest_probabilities(epti);
    probs.sort_by(|a, b| b.total_cmp(a));
    let margin = if probs.len() < 2 { f64::INFINITY } else { probs[0] - probs[1] };
    let x = epti.values();
    let near_threshold = suite.forests.iter().flat_map(|f| &f.trees).any(|t| {
        t.decision_path(x)
            .iter()
            .any(|&(f, thr)| (x[f] - thr).abs() <= scales[f])
    });
    GuardCheck {
        margin,
        near_threshold,
    }
}

/// Mean leaf probability of each forest as the hardware sees it.
pub fn forest_codes(image: &NodeMemImage, rit: &RootIndexTable, codes: &[u16]) -> Result<Vec<f64>> {
    let mut state = HwState::default();
    (0..rit.n_classes())
        .map(|class| {
            let slots: Vec<_> = rit.class_slots(class).iter().filter(|s| s.valid).collect();
            let mut sum = 0.0;
            for s in &slots {
                sum += decode_probability(traverse_tree(image, usize::from(s.root), codes, &mut state)?);
            }
            Ok(if slots.is_empty() { 0.0 } else { sum / slots.len() as f64 })
        })
        .collect()
}
