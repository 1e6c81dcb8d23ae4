//! Multi-label training of one random forest per PSC.
//!
//! A window is labelled suitable for every PSC whose IPC is within
//! `epsilon` of the window's best. Forest `c` is a binary classifier for
//! "PSC `c` is suitable for the next window"; at decision time the PSC whose
//! forest reports the highest mean probability wins.

use serde::{Deserialize, Serialize};

use crate::cart::{grow_tree, Tree, TreeConfig};
use crate::error::{Error, Result};
use crate::replay::{score_pairs, PairScore};
use crate::rng;
use crate::types::{Dataset, EptiVector, EventCatalog, PscCatalog, WindowRecord};

pub const DEFAULT_LABEL_EPSILON: f64 = 0.005;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMatrix {
    pub epsilon: f64,
    pub n_classes: usize,
    bits: Vec<bool>,
}

impl LabelMatrix {
    pub fn len(&self) -> usize {
        self.bits.len().checked_div(self.n_classes).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn row(&self, window: usize) -> &[bool] {
        &self.bits[window * self.n_classes..(window + 1) * self.n_classes]
    }

    pub fn get(&self, window: usize, class: usize) -> bool {
        self.bits[window * self.n_classes + class]
    }

    pub fn column(&self, class: usize) -> Vec<bool> {
        (0..self.len()).map(|w| self.get(w, class)).collect()
    }

    pub fn subset(&self, windows: &[usize]) -> LabelMatrix {
        LabelMatrix {
            epsilon: self.epsilon,
            n_classes: self.n_classes,
            bits: windows.iter().flat_map(|&w| self.row(w).iter().copied()).collect(),
        }
    }
}

/// `label[w][c] = ipc[w][c] >= (1 - epsilon) * max_c ipc[w][c]`
pub fn label_windows(dataset: &Dataset, epsilon: f64) -> Result<LabelMatrix> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot label an empty dataset".into()));
    }
    let n_classes = dataset.pscs.len();
    let mut bits = Vec::with_capacity(dataset.len() * n_classes);
    for w in &dataset.windows {
        let cut = (1.0 - epsilon) * w.best_ipc();
        bits.extend(w.ipc.iter().map(|&v| v >= cut));
    }
    Ok(LabelMatrix {
        epsilon,
        n_classes,
        bits,
    })
}

/// Pairs each window's features with the IPCs of the window that follows it
/// in the same trace. The last window of every trace, and any window whose
/// successor index is missing, produce no pair.
pub fn next_window_targets(dataset: &Dataset) -> Dataset {
    let mut windows = Vec::with_capacity(dataset.len());
    for range in dataset.trace_ranges() {
        let trace = &dataset.windows[range];
        for pair in trace.windows(2) {
            if pair[1].window_index == pair[0].window_index + 1 {
                windows.push(WindowRecord {
                    trace_id: pair[0].trace_id.clone(),
                    window_index: pair[0].window_index,
                    epti: pair[0].epti.clone(),
                    ipc: pair[1].ipc.clone(),
                });
            }
        }
    }
    Dataset {
        events: dataset.events.clone(),
        pscs: dataset.pscs.clone(),
        windows,
        window_size_instructions: dataset.window_size_instructions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub total_node_budget: usize,
    pub min_leaf_samples: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            n_estimators: 5,
            max_depth: 10,
            total_node_budget: 2250,
            min_leaf_samples: 5,
        }
    }
}

impl HyperParams {
    /// Nodes available to each tree when the budget is shared evenly by
    /// `n_classes` forests of `n_estimators` trees.
    pub fn nodes_per_tree(&self, n_classes: usize) -> usize {
        if n_classes == 0 || self.n_estimators == 0 {
            return 0;
        }
        self.total_node_budget / n_classes / self.n_estimators
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub class_index: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn node_count(&self) -> usize {
        self.trees.iter().map(Tree::node_count).sum()
    }

    /// Mean of the tree probabilities for `x`.
    pub fn probability(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// The float reference model: one forest per catalog PSC, over `features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub pscs: PscCatalog,
    pub features: EventCatalog,
    pub hyperparams: HyperParams,
    pub seed: u64,
    pub forests: Vec<Forest>,
}

impl Suite {
    pub fn node_count(&self) -> usize {
        self.forests.iter().map(Forest::node_count).sum()
    }

    pub fn max_depth(&self) -> usize {
        self.forests
            .iter()
            .flat_map(|f| &f.trees)
            .map(Tree::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn forest_probabilities(&self, epti: &EptiVector) -> Vec<f64> {
        self.forests.iter().map(|f| f.probability(epti.values())).collect()
    }
}

fn features_per_split(n_features: usize) -> usize {
    (n_features as f64).sqrt().ceil() as usize
}

fn train_forest(
    x: &[&[f64]],
    labels: &[bool],
    class: usize,
    hp: &HyperParams,
    per_tree: usize,
    seed: u64,
) -> Forest {
    let n = x.len();
    let forest_seed = rng::derive_seed(seed, "forest", class as u64);
    let config = TreeConfig {
        max_depth: hp.max_depth,
        min_leaf_samples: hp.min_leaf_samples,
        max_nodes: per_tree,
        features_per_split: features_per_split(x.first().map_or(0, |r| r.len())),
    };
    let trees = (0..hp.n_estimators)
        .map(|t| {
            let mut r = rng::stream(forest_seed, "tree", t as u64);
            let bootstrap: Vec<usize> = (0..n).map(|_| rand::Rng::gen_range(&mut r, 0..n)).collect();
            grow_tree(x, labels, bootstrap, &config, &mut r)
        })
        .collect();
    Forest {
        class_index: class,
        trees,
    }
}

pub fn train_suite(
    train: &Dataset,
    labels: &LabelMatrix,
    hyperparams: &HyperParams,
    seed: u64,
) -> Result<Suite> {
    if train.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if labels.len() != train.len() || labels.n_classes != train.pscs.len() {
        return Err(Error::InvalidInput(format!(
            "label matrix is {}x{} but the training set is {}x{}",
            labels.len(),
            labels.n_classes,
            train.len(),
            train.pscs.len()
        )));
    }
    if hyperparams.n_estimators == 0 {
        return Err(Error::Config("at least one estimator per forest is required".into()));
    }
    let per_tree = hyperparams.nodes_per_tree(train.pscs.len());
    if per_tree < 1 {
        return Err(Error::Config(format!(
            "node budget {} cannot give every one of {} trees a node",
            hyperparams.total_node_budget,
            train.pscs.len() * hyperparams.n_estimators
        )));
    }

    let x: Vec<&[f64]> = train.windows.iter().map(|w| w.epti.values()).collect();
    let columns: Vec<Vec<bool>> = (0..train.pscs.len()).map(|c| labels.column(c)).collect();
    let build = |c: usize| train_forest(&x, &columns[c], c, hyperparams, per_tree, seed);

    #[cfg(feature = "parallel")]
    let forests = {
        use rayon::prelude::*;
        (0..train.pscs.len()).into_par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let forests = (0..train.pscs.len()).map(build).collect();

    Ok(Suite {
        pscs: train.pscs.clone(),
        features: train.events.clone(),
        hyperparams: *hyperparams,
        seed,
        forests,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingScore {
    pub hyperparams: HyperParams,
    pub mean_ipc: f64,
    pub mean_accuracy: f64,
    pub fold_ipc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub best: HyperParams,
    pub settings: Vec<SettingScore>,
}

/// Index of the setting with the highest mean held-out IPC; ties go to the
/// smaller node budget, then to the earlier setting. Label accuracy is not
/// consulted.
pub fn pick_best(scores: &[SettingScore]) -> Option<usize> {
    (0..scores.len()).reduce(|best, i| {
        let (a, b) = (&scores[i], &scores[best]);
        let better = a.mean_ipc > b.mean_ipc
            || (a.mean_ipc == b.mean_ipc
                && a.hyperparams.total_node_budget < b.hyperparams.total_node_budget);
        if better {
            i
        } else {
            best
        }
    })
}

/// Fold assignment: a seeded shuffle dealt round-robin into `folds` parts.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "cv", 0));
    let mut out = vec![Vec::new(); folds];
    for (i, w) in order.into_iter().enumerate() {
        out[i % folds].push(w);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// k-fold model selection scored by the IPC the policy would achieve on the
/// held-out windows.
pub fn cross_validate(
    train: &Dataset,
    labels: &LabelMatrix,
    folds: usize,
    grid: &[HyperParams],
    seed: u64,
) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    if train.len() < folds {
        return Err(Error::InvalidInput(format!(
            "{} windows cannot be split into {folds} folds",
            train.len()
        )));
    }
    let parts = fold_indices(train.len(), folds, seed);
    let mut settings = Vec::with_capacity(grid.len());
    for hp in grid {
        let mut fold_ipc = Vec::with_capacity(folds);
        let mut accuracy = 0.0;
        for (f, held) in parts.iter().enumerate() {
            let fit: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            let suite = train_suite(
                &train.subset(&fit),
                &labels.subset(&fit),
                hp,
                rng::derive_seed(seed, "cv-fold", f as u64),
            )?;
            let PairScore { mean_ipc, mean_accuracy, .. } =
                score_pairs(&train.subset(held), Some(&labels.subset(held)), &suite)?;
            fold_ipc.push(mean_ipc);
            accuracy += mean_accuracy.unwrap_or(0.0);
        }
        settings.push(SettingScore {
            hyperparams: *hp,
            mean_ipc: fold_ipc.iter().sum::<f64>() / folds as f64,
            mean_accuracy: accuracy / folds as f64,
            fold_ipc,
        });
    }
    let best = settings[pick_best(&settings).expect("grid is non-empty")].hyperparams;
    Ok(CvReport {
        folds,
        best,
        settings,
    })
}
