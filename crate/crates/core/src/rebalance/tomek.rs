//! Tomek links and the SMOTE + Tomek hybrid.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::knn::knn;
use super::smote::synthesize;
use super::{minority_label, synthetic_id, ResampleConfig, ResampleError};
use crate::dataset::{LabeledDataset, Provenance, Standardizer};

/// Cross-class mutual nearest neighbours among `points`, as `(i, j)` with
/// `i < j`.
pub(crate) fn links_in(points: &[Vec<f64>], labels: &[bool]) -> Vec<(usize, usize)> {
    if points.len() < 2 {
        return Vec::new();
    }
    let all: Vec<usize> = (0..points.len()).collect();
    let nn: Vec<usize> = knn(points, labels, &all, 1, false)
        .expect("k = 1 with at least two points")
        .into_iter()
        .map(|v| v[0])
        .collect();
    (0..points.len())
        .filter_map(|i| {
            let j = nn[i];
            (i < j && nn[j] == i && labels[i] != labels[j]).then_some((i, j))
        })
        .collect()
}

/// Tomek links of a dataset in standardized feature space.
pub fn tomek_links(ds: &LabeledDataset) -> Vec<(usize, usize)> {
    let z = Standardizer::fit(&ds.rows).transform(&ds.rows);
    links_in(&z, &ds.labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteTomekReport {
    pub minority_label: bool,
    pub generated: usize,
    pub links: usize,
    pub removed: usize,
    pub removed_ids: Vec<String>,
}

/// SMOTE to full balance, then drop the majority member of every Tomek link
/// found in the augmented set (one pass).
pub fn smote_tomek(
    ds: &LabeledDataset,
    cfg: &ResampleConfig,
) -> Result<(LabeledDataset, SmoteTomekReport), ResampleError> {
    cfg.validate()?;
    let minority = minority_label(ds)?;
    let min_idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == minority).collect();
    let m_s = min_idx.len();
    let m_l = ds.len() - m_s;
    let n_needed = m_l - m_s;

    let scaler = Standardizer::fit(&ds.rows);
    let mut out = ds.clone();
    if n_needed > 0 {
        if cfg.k >= m_s {
            return Err(ResampleError::KTooLarge {
                k: cfg.k,
                available: m_s - 1,
            });
        }
        let z = scaler.transform(&ds.rows);
        let neighbors = knn(&z, &ds.labels, &min_idx, cfg.k, true)?;
        let counts: Vec<usize> = (0..m_s).map(|i| n_needed / m_s + usize::from(i < n_needed % m_s)).collect();
        let start = out.len();
        for (n, s) in synthesize(&ds.rows, &min_idx, &neighbors, &counts, cfg.seed)
            .into_iter()
            .enumerate()
        {
            out.ids.push(synthetic_id(start + n));
            out.rows.push(s.row);
            out.labels.push(minority);
            out.provenance.push(Provenance::Synthetic);
        }
    }
    let generated = out.len() - ds.len();

    let z = scaler.transform(&out.rows);
    let links = links_in(&z, &out.labels);
    let drop: BTreeSet<usize> = links
        .iter()
        .map(|&(i, j)| if out.labels[i] == minority { j } else { i })
        .collect();
    let keep: Vec<usize> = (0..out.len()).filter(|i| !drop.contains(i)).collect();
    let removed_ids = drop.iter().map(|&i| out.ids[i].clone()).collect();
    let cleaned = out.subset(&keep);
    Ok((
        cleaned,
        SmoteTomekReport {
            minority_label: minority,
            generated,
            links: links.len(),
            removed: drop.len(),
            removed_ids,
        },
    ))
}
