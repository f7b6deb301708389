//! All-relevant feature selection against shuffled shadow features.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use super::gbdt::{train_gbdt, GbdtConfig};
use super::LearnError;
use crate::dataset::LabeledDataset;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub n_iter: usize,
    pub alpha: f64,
    pub gbdt: GbdtConfig,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            n_iter: 100,
            alpha: 0.05,
            gbdt: GbdtConfig {
                n_rounds: 50,
                early_stopping: None,
                ..GbdtConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Confirmed,
    Tentative,
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Confirmed => "confirmed",
            Status::Tentative => "tentative",
            Status::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionVerdict {
    pub features: Vec<String>,
    pub status: Vec<Status>,
    pub hits: Vec<usize>,
    pub n_iter: usize,
    /// Mean normalized importance of each real feature across iterations.
    pub mean_importance: Vec<f64>,
}

impl SelectionVerdict {
    pub fn confirmed(&self) -> Vec<usize> {
        (0..self.features.len())
            .filter(|&j| self.status[j] == Status::Confirmed)
            .collect()
    }
}

/// Status from `hits` successes in `n` trials against p = 1/2, each tail
/// tested at `alpha / 2`.
pub fn classify_hits(hits: usize, n: usize, alpha: f64) -> Status {
    let b = Binomial::new(0.5, n as u64).expect("valid binomial");
    let h = hits as u64;
    let upper = if h == 0 { 1.0 } else { b.sf(h - 1) };
    let lower = b.cdf(h);
    if upper <= alpha / 2.0 {
        Status::Confirmed
    } else if lower <= alpha / 2.0 {
        Status::Rejected
    } else {
        Status::Tentative
    }
}

pub fn all_relevant_select(ds: &LabeledDataset, cfg: &SelectConfig, seed: u64) -> Result<SelectionVerdict, LearnError> {
    if cfg.n_iter < 5 {
        return Err(LearnError::TooFewIterations(cfg.n_iter));
    }
    let d = ds.dim();
    if d == 0 {
        return Err(LearnError::EmptyInput("no features to select from".into()));
    }
    let iterations: Vec<Vec<f64>> = (0..cfg.n_iter)
        .into_par_iter()
        .map(|it| {
            let it_seed = seed::derive(seed, it as u64);
            let mut rng = seed::rng(it_seed);
            let mut rows = ds.rows.clone();
            for j in 0..d {
                let mut col = ds.column(j);
                col.shuffle(&mut rng);
                for (r, v) in rows.iter_mut().zip(col) {
                    r.push(v);
                }
            }
            let mut aug = LabeledDataset::from_rows(rows, ds.labels.clone());
            aug.ids = ds.ids.clone();
            let gcfg = GbdtConfig {
                seed: it_seed,
                ..cfg.gbdt
            };
            train_gbdt(&aug, &gcfg).map(|m| m.normalized_importance())
        })
        .collect::<Result<_, _>>()?;

    let mut hits = vec![0usize; d];
    let mut mean_importance = vec![0.0; d];
    for imp in &iterations {
        let shadow_max = imp[d..].iter().copied().fold(0.0, f64::max);
        for j in 0..d {
            if imp[j] > shadow_max {
                hits[j] += 1;
            }
            mean_importance[j] += imp[j] / cfg.n_iter as f64;
        }
    }
    let status = hits.iter().map(|&h| classify_hits(h, cfg.n_iter, cfg.alpha)).collect();
    Ok(SelectionVerdict {
        features: ds.feature_names.clone(),
        status,
        hits,
        n_iter: cfg.n_iter,
        mean_importance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_thresholds() {
        assert_eq!(classify_hits(100, 100, 0.05), Status::Confirmed);
        assert_eq!(classify_hits(0, 100, 0.05), Status::Rejected);
        assert_eq!(classify_hits(50, 100, 0.05), Status::Tentative);
        // P(X >= 61 | n=100) ~= 0.0176 < 0.025, P(X >= 60) ~= 0.0284
        assert_eq!(classify_hits(61, 100, 0.05), Status::Confirmed);
        assert_eq!(classify_hits(60, 100, 0.05), Status::Tentative);
        assert_eq!(classify_hits(39, 100, 0.05), Status::Rejected);
    }

    #[test]
    fn too_few_iterations() {
        let ds = LabeledDataset::from_rows(vec![vec![0.0], vec![1.0]], vec![false, true]);
        let cfg = SelectConfig {
            n_iter: 4,
            ..Default::default()
        };
        assert!(matches!(all_relevant_select(&ds, &cfg, 0), Err(LearnError::TooFewIterations(4))));
    }
}
