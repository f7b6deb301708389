//! Gain (impurity-reduction) importance averaged over hyperparameter-varied
//! retrains.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbdt::{train_gbdt, GbdtConfig};
use super::LearnError;
use crate::dataset::LabeledDataset;
use crate::seed;

/// Values drawn from (uniformly, independently) for each retrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub colsample: Vec<f64>,
    pub subsample: Vec<f64>,
    pub min_child_weight: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            colsample: vec![0.5, 0.7, 0.9, 1.0],
            subsample: vec![0.6, 0.8, 1.0],
            min_child_weight: vec![1.0, 3.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean_importance: f64,
    pub mean_rank: f64,
    /// Number of retrains in which this feature ranked first.
    pub rank_one: usize,
}

/// Ranks (1 = most important) with ties broken by lower column index.
pub fn ranks(importance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    let mut r = vec![0; importance.len()];
    for (pos, &j) in order.iter().enumerate() {
        r[j] = pos + 1;
    }
    r
}

/// Retrains `n_repeats` boosted models with hyperparameters drawn from `grid`
/// and returns per-feature mean normalized importance and mean rank, sorted
/// by mean importance (descending).
pub fn gini_importance(
    ds: &LabeledDataset,
    base: &GbdtConfig,
    grid: &HyperGrid,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>, LearnError> {
    if grid.colsample.is_empty() || grid.subsample.is_empty() || grid.min_child_weight.is_empty() {
        return Err(LearnError::EmptyGrid);
    }
    if n_repeats == 0 {
        return Err(LearnError::InvalidConfig("n_repeats must be positive".into()));
    }
    let runs: Vec<Vec<f64>> = (0..n_repeats)
        .into_par_iter()
        .map(|r| {
            let run_seed = seed::derive(seed, r as u64);
            let mut rng = seed::rng(run_seed);
            let cfg = GbdtConfig {
                colsample: *grid.colsample.choose(&mut rng).expect("non-empty"),
                subsample: *grid.subsample.choose(&mut rng).expect("non-empty"),
                min_child_weight: *grid.min_child_weight.choose(&mut rng).expect("non-empty"),
                seed: run_seed,
                ..*base
            };
            train_gbdt(ds, &cfg).map(|m| m.normalized_importance())
        })
        .collect::<Result<_, _>>()?;

    let d = ds.dim();
    let n = n_repeats as f64;
    let mut out: Vec<FeatureImportance> = ds
        .feature_names
        .iter()
        .map(|f| FeatureImportance {
            feature: f.clone(),
            mean_importance: 0.0,
            mean_rank: 0.0,
            rank_one: 0,
        })
        .collect();
    for imp in &runs {
        let r = ranks(imp);
        for j in 0..d {
            out[j].mean_importance += imp[j] / n;
            out[j].mean_rank += r[j] as f64 / n;
            if r[j] == 1 {
                out[j].rank_one += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| out[b].mean_importance.total_cmp(&out[a].mean_importance).then(a.cmp(&b)));
    Ok(order.into_iter().map(|j| out[j].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_break_ties_by_index() {
        assert_eq!(ranks(&[0.2, 0.5, 0.2, 0.1]), vec![2, 1, 3, 4]);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let ds = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0]], vec![false, true]);
        let grid = HyperGrid {
            subsample: vec![],
            ..Default::default()
        };
        assert!(matches!(
            gini_importance(&ds, &GbdtConfig::default(), &grid, 3, 0),
            Err(LearnError::EmptyGrid)
        ));
    }
}
