//! SMOTE interpolation and ADASYN allocation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::knn::knn;
use super::{minority_label, scaled, synthetic_id, ResampleConfig, ResampleError};
use crate::dataset::{LabeledDataset, Provenance};
use crate::seed;

/// A generated row together with the two originals it interpolates.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub row: Vec<f64>,
    pub base: usize,
    pub partner: usize,
    pub lambda: f64,
}

/// Generates `counts[i]` rows around each base row `i`. Neighbour lists index
/// into `rows`; row `i` draws from its own child stream so the output does not
/// depend on how work is scheduled. Output is round-robin over base rows.
pub(crate) fn synthesize(
    rows: &[Vec<f64>],
    bases: &[usize],
    neighbors: &[Vec<usize>],
    counts: &[usize],
    seed: u64,
) -> Vec<Synthetic> {
    let mut streams: Vec<seed::Rng> = bases
        .iter()
        .map(|&b| seed::rng(seed::derive(seed, seed::hash_row(&rows[b]))))
        .collect();
    let mut remaining = counts.to_vec();
    let total: usize = counts.iter().sum();
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        for (slot, &base) in bases.iter().enumerate() {
            if remaining[slot] == 0 {
                continue;
            }
            remaining[slot] -= 1;
            let rng = &mut streams[slot];
            let nb = &neighbors[slot];
            let partner = nb[rng.gen_range(0..nb.len())];
            let lambda: f64 = rng.gen_range(0.0..=1.0);
            let row = rows[base]
                .iter()
                .zip(&rows[partner])
                .map(|(a, b)| a + lambda * (b - a))
                .collect();
            out.push(Synthetic {
                row,
                base,
                partner,
                lambda,
            });
        }
    }
    out
}

fn round_robin_counts(m: usize, n_needed: usize) -> Vec<usize> {
    (0..m).map(|i| n_needed / m + usize::from(i < n_needed % m)).collect()
}

/// SMOTE over a set of minority rows: each synthetic row lies on the segment
/// between a minority row (chosen round-robin) and one of its `k` nearest
/// minority neighbours. Distances are measured on the rows as given.
pub fn smote_sample(
    minority: &[Vec<f64>],
    k: usize,
    n_needed: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ResampleError> {
    if minority.len() <= k {
        return Err(ResampleError::KTooLarge {
            k,
            available: minority.len().saturating_sub(1),
        });
    }
    if n_needed == 0 {
        return Ok(Vec::new());
    }
    let labels = vec![true; minority.len()];
    let bases: Vec<usize> = (0..minority.len()).collect();
    let neighbors = knn(minority, &labels, &bases, k, true)?;
    let counts = round_robin_counts(minority.len(), n_needed);
    Ok(synthesize(minority, &bases, &neighbors, &counts, seed)
        .into_iter()
        .map(|s| s.row)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdasynReport {
    pub minority_label: bool,
    pub minority_count: usize,
    pub majority_count: usize,
    /// Target number of synthetic rows, `(m_l - m_s) * beta`.
    pub target: usize,
    pub generated: usize,
    pub uniform_fallback: bool,
    /// Normalised difficulty ratio per minority row.
    pub ratios: Vec<f64>,
    pub allocation: Vec<usize>,
}

/// Normalised ratios `r_i / sum(r)` and rounded allocations of `target` rows
/// given majority-neighbour counts. Falls back to uniform when every count is
/// zero.
pub fn adasyn_allocation(majority_neighbors: &[usize], k: usize, target: usize) -> (Vec<f64>, Vec<usize>, bool) {
    let r: Vec<f64> = majority_neighbors.iter().map(|&d| d as f64 / k as f64).collect();
    let sum: f64 = r.iter().sum();
    let m = r.len() as f64;
    let (ratios, fallback) = if sum > 0.0 {
        (r.iter().map(|x| x / sum).collect::<Vec<_>>(), false)
    } else {
        (vec![1.0 / m; r.len()], true)
    };
    let alloc = ratios.iter().map(|x| (x * target as f64).round() as usize).collect();
    (ratios, alloc, fallback)
}

/// ADASYN oversampling. Returns the input rows followed by synthetic minority
/// rows.
pub fn adasyn(ds: &LabeledDataset, cfg: &ResampleConfig) -> Result<(LabeledDataset, AdasynReport), ResampleError> {
    cfg.validate()?;
    let minority = minority_label(ds)?;
    let min_idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == minority).collect();
    let m_s = min_idx.len();
    let m_l = ds.len() - m_s;
    if cfg.k >= m_s {
        return Err(ResampleError::KTooLarge {
            k: cfg.k,
            available: m_s - 1,
        });
    }
    let target = ((m_l - m_s) as f64 * cfg.beta).round() as usize;
    let z = scaled(ds)?;

    let any = knn(&z, &ds.labels, &min_idx, cfg.k, false)?;
    let delta: Vec<usize> = any
        .iter()
        .map(|nb| nb.iter().filter(|&&j| ds.labels[j] != minority).count())
        .collect();
    let (ratios, allocation, uniform_fallback) = adasyn_allocation(&delta, cfg.k, target);

    let same = knn(&z, &ds.labels, &min_idx, cfg.k, true)?;
    let samples = synthesize(&ds.rows, &min_idx, &same, &allocation, cfg.seed);

    let mut out = ds.clone();
    let start = out.len();
    for (n, s) in samples.into_iter().enumerate() {
        out.ids.push(synthetic_id(start + n));
        out.rows.push(s.row);
        out.labels.push(minority);
        out.provenance.push(Provenance::Synthetic);
    }
    let report = AdasynReport {
        minority_label: minority,
        minority_count: m_s,
        majority_count: m_l,
        target,
        generated: out.len() - start,
        uniform_fallback,
        ratios,
        allocation,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_minority_stays_on_segment() {
        let minority = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let out = smote_sample(&minority, 1, 25, 3).unwrap();
        assert_eq!(out.len(), 25);
        for r in out {
            assert_eq!(r[0], r[1]);
            assert!((0.0..=1.0).contains(&r[0]));
        }
    }

    #[test]
    fn zero_needed_is_empty() {
        let minority = vec![vec![0.0], vec![1.0]];
        assert!(smote_sample(&minority, 1, 0, 3).unwrap().is_empty());
    }

    #[test]
    fn smote_is_deterministic() {
        let minority: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        assert_eq!(
            smote_sample(&minority, 2, 17, 9).unwrap(),
            smote_sample(&minority, 2, 17, 9).unwrap()
        );
        assert_ne!(
            smote_sample(&minority, 2, 17, 9).unwrap(),
            smote_sample(&minority, 2, 17, 10).unwrap()
        );
    }

    #[test]
    fn smote_needs_more_rows_than_k() {
        let minority = vec![vec![0.0], vec![1.0]];
        assert!(smote_sample(&minority, 2, 5, 0).is_err());
    }

    #[test]
    fn allocation_examples() {
        let (r, g, fb) = adasyn_allocation(&[0, 0, 0, 0], 5, 90);
        assert!(fb);
        assert_eq!(r, vec![0.25; 4]);
        assert_eq!(g.iter().sum::<usize>(), 92); // 22.5 rounds up
        let (r, g, fb) = adasyn_allocation(&[1, 3, 0, 4], 5, 80);
        assert!(!fb);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g, vec![10, 30, 0, 40]);
    }

    #[test]
    fn target_follows_class_gap() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            rows.push(vec![i as f64, (i % 7) as f64]);
            labels.push(false);
        }
        for i in 0..10 {
            rows.push(vec![i as f64 + 0.5, 3.0]);
            labels.push(true);
        }
        let ds = LabeledDataset::from_rows(rows, labels);
        let (out, rep) = adasyn(&ds, &ResampleConfig::default()).unwrap();
        assert_eq!(rep.target, 90);
        assert!(rep.minority_label);
        let (neg, pos) = out.class_counts();
        assert_eq!(neg, 100);
        assert!((pos as i64 - neg as i64).unsigned_abs() as usize <= 10);
    }
}
