//! Gradient-boosted regression trees for binary logistic loss.
//!
//! Trees are grown level-wise with exact greedy split search over pre-sorted
//! feature columns, using first and second order gradients of the log-loss.
//! A split of node statistics `(G, H)` into `(G_L, H_L)` and `(G_R, H_R)` has
//! gain `0.5 * (G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)) - gamma`
//! and a leaf gets weight `-G / (H + lambda)`.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sigmoid, LearnError, MODEL_FORMAT_VERSION};
use crate::dataset::{stratified_split, LabeledDataset};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        Self {
            patience: 20,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    /// Fraction of rows sampled (without replacement) per tree.
    pub subsample: f64,
    /// Fraction of features sampled per tree.
    pub colsample: f64,
    pub early_stopping: Option<EarlyStopping>,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            max_depth: 6,
            eta: 0.2,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample: 1.0,
            early_stopping: Some(EarlyStopping::default()),
            seed: 0,
        }
    }
}

impl GbdtConfig {
    /// Settings used for the topic-only classifier.
    pub fn topic_variant() -> Self {
        Self {
            max_depth: 5,
            eta: 0.3,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), LearnError> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !frac(self.subsample) || !frac(self.colsample) {
            return Err(LearnError::InvalidConfig("subsample and colsample must lie in (0, 1]".into()));
        }
        if !(self.eta >= 0.0 && self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return Err(LearnError::InvalidConfig("eta, lambda, gamma, min_child_weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        cover: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn add_gains(&self, acc: &mut [f64]) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            acc[*feature] += gain;
            left.add_gains(acc);
            right.add_gains(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTreesModel {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub config: GbdtConfig,
    pub base_score: f64,
    pub eta: f64,
    pub max_depth: usize,
    pub trees: Vec<TreeNode>,
    /// Mean training log-loss after each kept round.
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    pub warnings: Vec<String>,
}

impl BoostedTreesModel {
    pub fn margin(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.feature_names.len() {
            return Err(LearnError::LengthMismatch {
                expected: self.feature_names.len(),
                got: x.len(),
            });
        }
        Ok(self.base_score + self.eta * self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        self.margin(x).map(sigmoid)
    }

    /// Total split gain per feature.
    pub fn gain_importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.feature_names.len()];
        for t in &self.trees {
            t.add_gains(&mut acc);
        }
        acc
    }

    /// Gain importances scaled to sum to one (all zero if no split was made).
    pub fn normalized_importance(&self) -> Vec<f64> {
        let raw = self.gain_importance();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            raw.into_iter().map(|g| g / total).collect()
        } else {
            raw
        }
    }
}

fn log_loss(margins: &[f64], labels: &[bool], rows: &[usize]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|&i| {
            let m = margins[i];
            let sp = m.max(0.0) + (-m.abs()).exp().ln_1p();
            if labels[i] {
                sp - m
            } else {
                sp
            }
        })
        .sum();
    total / rows.len() as f64
}

/// Column-major copy with each feature's row order sorted by value.
struct Columns {
    values: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
}

impl Columns {
    fn new(rows: &[Vec<f64>], d: usize) -> Self {
        let values: Vec<Vec<f64>> = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let sorted = values
            .par_iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { values, sorted }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a> {
    cols: &'a Columns,
    grad: &'a [f64],
    hess: &'a [f64],
    cfg: &'a GbdtConfig,
}

/// Arena node used while growing.
enum Proto {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        cover: f64,
        left: usize,
        right: usize,
    },
}

impl Builder<'_> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.cfg.lambda)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.cfg.lambda)
    }

    /// Best split per open node for one feature.
    fn scan_feature(&self, j: usize, node_of: &[i32], stats: &[(f64, f64)]) -> Vec<Option<Candidate>> {
        let k = stats.len();
        let mut gl = vec![0.0; k];
        let mut hl = vec![0.0; k];
        let mut last = vec![f64::NAN; k];
        let mut best: Vec<Option<Candidate>> = vec![None; k];
        let col = &self.cols.values[j];
        let mcw = self.cfg.min_child_weight;
        for &i in &self.cols.sorted[j] {
            let i = i as usize;
            let n = node_of[i];
            if n < 0 {
                continue;
            }
            let n = n as usize;
            let v = col[i];
            if !last[n].is_nan() && v > last[n] {
                let (g, h) = stats[n];
                let (gr, hr) = (g - gl[n], h - hl[n]);
                if hl[n] >= mcw && hr >= mcw {
                    let gain = 0.5 * (self.score(gl[n], hl[n]) + self.score(gr, hr) - self.score(g, h)) - self.cfg.gamma;
                    if best[n].is_none_or(|b| gain > b.gain) {
                        let mut threshold = 0.5 * (last[n] + v);
                        if threshold <= last[n] {
                            threshold = v;
                        }
                        best[n] = Some(Candidate {
                            gain,
                            feature: j,
                            threshold,
                        });
                    }
                }
            }
            gl[n] += self.grad[i];
            hl[n] += self.hess[i];
            last[n] = v;
        }
        best
    }

    fn grow(&self, rows: &[usize], features: &[usize], n_total: usize) -> TreeNode {
        let mut arena: Vec<Proto> = Vec::new();
        let mut node_of = vec![-1i32; n_total];
        for &i in rows {
            node_of[i] = 0;
        }
        // open nodes at the current level: (arena slot, G, H)
        let (g0, h0) = rows
            .iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + self.grad[i], h + self.hess[i]));
        arena.push(Proto::Leaf(self.leaf_value(g0, h0)));
        let mut open: Vec<(usize, f64, f64)> = vec![(0, g0, h0)];
        for _depth in 0..self.cfg.max_depth {
            if open.is_empty() {
                break;
            }
            let stats: Vec<(f64, f64)> = open.iter().map(|&(_, g, h)| (g, h)).collect();
            let per_feature: Vec<Vec<Option<Candidate>>> = features
                .par_iter()
                .map(|&j| self.scan_feature(j, &node_of, &stats))
                .collect();
            let mut next_open = Vec::new();
            let mut remap = vec![-1i32; open.len() * 2];
            let mut chosen: Vec<Option<Candidate>> = vec![None; open.len()];
            for (n, slot) in chosen.iter_mut().enumerate() {
                // features are scanned in ascending order; strict > keeps the lowest index on ties
                for cands in &per_feature {
                    if let Some(c) = cands[n] {
                        if c.gain >= 0.0 && slot.is_none_or(|b| c.gain > b.gain) {
                            *slot = Some(c);
                        }
                    }
                }
            }
            let mut child_stats = vec![(0.0, 0.0); open.len() * 2];
            for &i in rows {
                let n = node_of[i];
                if n < 0 {
                    continue;
                }
                let n = n as usize;
                match chosen[n] {
                    Some(c) => {
                        let side = usize::from(self.cols.values[c.feature][i] >= c.threshold);
                        let child = 2 * n + side;
                        child_stats[child].0 += self.grad[i];
                        child_stats[child].1 += self.hess[i];
                        node_of[i] = child as i32;
                    }
                    None => node_of[i] = -1,
                }
            }
            for (n, &(slot, _, h)) in open.iter().enumerate() {
                let Some(c) = chosen[n] else { continue };
                let mut kids = [0usize; 2];
                for (side, kid) in kids.iter_mut().enumerate() {
                    let (g, h) = child_stats[2 * n + side];
                    *kid = arena.len();
                    arena.push(Proto::Leaf(self.leaf_value(g, h)));
                    remap[2 * n + side] = next_open.len() as i32;
                    next_open.push((*kid, g, h));
                }
                arena[slot] = Proto::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    gain: c.gain,
                    cover: h,
                    left: kids[0],
                    right: kids[1],
                };
            }
            for &i in rows {
                if node_of[i] >= 0 {
                    node_of[i] = remap[node_of[i] as usize];
                }
            }
            open = next_open;
        }
        fn build(arena: &[Proto], at: usize) -> TreeNode {
            match arena[at] {
                Proto::Leaf(value) => TreeNode::Leaf { value },
                Proto::Split {
                    feature,
                    threshold,
                    gain,
                    cover,
                    left,
                    right,
                } => TreeNode::Split {
                    feature,
                    threshold,
                    gain,
                    cover,
                    left: Box::new(build(arena, left)),
                    right: Box::new(build(arena, right)),
                },
            }
        }
        build(&arena, 0)
    }
}

fn sample_fraction(rng: &mut seed::Rng, n: usize, frac: f64) -> Vec<usize> {
    if frac >= 1.0 {
        return (0..n).collect();
    }
    let k = ((n as f64 * frac).round() as usize).clamp(1, n);
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Fits boosted trees on `ds`. With early stopping configured, a stratified
/// validation fold is held out and the ensemble is truncated to the round
/// with the lowest validation loss.
pub fn train_gbdt(ds: &LabeledDataset, cfg: &GbdtConfig) -> Result<BoostedTreesModel, LearnError> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(LearnError::EmptyInput("training set is empty".into()));
    }
    if !ds.both_classes() {
        return Err(LearnError::SingleClass);
    }
    if !ds.all_finite() {
        return Err(LearnError::NonFinite("training features".into()));
    }
    let n = ds.len();
    let d = ds.dim();

    let (fit_rows, valid_rows) = match cfg.early_stopping {
        Some(es) if es.validation_fraction > 0.0 => {
            let (tr, va) = stratified_split(&ds.labels, es.validation_fraction, seed::derive(cfg.seed, u64::MAX));
            let ok = |rows: &[usize]| {
                let pos = rows.iter().filter(|&&i| ds.labels[i]).count();
                pos > 0 && pos < rows.len()
            };
            if ok(&tr) && ok(&va) {
                (tr, va)
            } else {
                ((0..n).collect(), Vec::new())
            }
        }
        _ => ((0..n).collect(), Vec::new()),
    };

    let pos = fit_rows.iter().filter(|&&i| ds.labels[i]).count() as f64;
    let rate = (pos / fit_rows.len() as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (rate / (1.0 - rate)).ln();

    let cols = Columns::new(&ds.rows, d);
    let mut margins = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut model = BoostedTreesModel {
        format: "veriscope-gbdt".into(),
        version: MODEL_FORMAT_VERSION,
        feature_names: ds.feature_names.clone(),
        config: *cfg,
        base_score,
        eta: cfg.eta,
        max_depth: cfg.max_depth,
        trees: Vec::new(),
        train_loss: Vec::new(),
        valid_loss: Vec::new(),
        warnings: Vec::new(),
    };
    let mut best = (f64::INFINITY, 0usize);
    let mut stalled_roots = 0usize;

    for round in 0..cfg.n_rounds {
        for &i in &fit_rows {
            let p = sigmoid(margins[i]);
            grad[i] = p - if ds.labels[i] { 1.0 } else { 0.0 };
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let mut rng = seed::rng(seed::derive(cfg.seed, round as u64));
        let rows: Vec<usize> = sample_fraction(&mut rng, fit_rows.len(), cfg.subsample)
            .into_iter()
            .map(|k| fit_rows[k])
            .collect();
        let features = sample_fraction(&mut rng, d, cfg.colsample);
        let builder = Builder {
            cols: &cols,
            grad: &grad,
            hess: &hess,
            cfg,
        };
        let tree = builder.grow(&rows, &features, n);
        if matches!(tree, TreeNode::Leaf { .. }) {
            stalled_roots += 1;
        }
        for (m, row) in margins.iter_mut().zip(&ds.rows) {
            *m += cfg.eta * tree.predict(row);
        }
        model.trees.push(tree);
        model.train_loss.push(log_loss(&margins, &ds.labels, &fit_rows));
        if !valid_rows.is_empty() {
            let vl = log_loss(&margins, &ds.labels, &valid_rows);
            model.valid_loss.push(vl);
            if vl < best.0 {
                best = (vl, round);
            }
            if let Some(es) = cfg.early_stopping {
                if round - best.1 >= es.patience {
                    break;
                }
            }
        }
    }
    if !valid_rows.is_empty() {
        let keep = best.1 + 1;
        model.trees.truncate(keep);
        model.train_loss.truncate(keep);
    }
    if stalled_roots > 0 {
        model.warnings.push(format!(
            "{stalled_roots} of {} rounds found no valid root split",
            cfg.n_rounds.min(model.valid_loss.len().max(model.trees.len()))
        ));
    }
    Ok(model)
}
