//! K-Means++ clustering of accounts and per-cluster profiles.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{LabeledDataset, Standardizer};
use crate::learn::{roc_auc, LearnError, Model};
use crate::seed;

pub mod pca;

pub use pca::pca2d;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} exceeds the {distinct} distinct points")]
    KTooLarge { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no points to cluster")]
    Empty,
    #[error("choose_k needs at least 3 ascending candidate values")]
    TooFewCandidates,
    #[error("expected {expected} rows, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    ZScore,
    UnitNorm,
}

/// Rescales rows for clustering: z-scored columns, or rows scaled to unit
/// Euclidean length (zero rows stay zero).
pub fn normalize(rows: &[Vec<f64>], mode: Normalization) -> Vec<Vec<f64>> {
    match mode {
        Normalization::ZScore => Standardizer::fit(rows).transform(rows),
        Normalization::UnitNorm => rows
            .iter()
            .map(|r| {
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    r.iter().map(|v| v / norm).collect()
                } else {
                    r.clone()
                }
            })
            .collect(),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// K-Means++ seeding: first centroid uniform, each later one drawn with
/// probability proportional to squared distance to the nearest chosen one.
pub fn kmeanspp_init(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>, ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::Empty);
    }
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(ClusterError::KTooLarge { k, distinct });
    }
    let mut rng = seed::rng(seed);
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.par_iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let c = points[pick.expect("a positive-distance point exists while k <= distinct")].clone();
        d2.par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(d, p)| *d = d.min(sq_dist(p, &c)));
        centroids.push(c);
    }
    Ok(centroids)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub populations: Vec<usize>,
    /// Inertia after each assignment step.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points.par_iter().map(|p| nearest(p, centroids)).unzip()
}

/// Means of each cluster summed in row order; `None` for empty clusters.
fn cluster_means(points: &[Vec<f64>], assignment: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.into_iter().map(|v| v / n as f64).collect()))
        .collect()
}

/// Lloyd refinement. Stops when the assignment no longer changes, when the
/// relative inertia improvement drops below `tol`, or after `max_iter`
/// assignment steps. An empty cluster is re-seeded at the point farthest
/// from its centroid.
pub fn lloyd(points: &[Vec<f64>], init: Vec<Vec<f64>>, tol: f64, max_iter: usize) -> ClusteringResult {
    let k = init.len();
    let mut centroids = init;
    let (mut assignment, mut dists) = assign(points, &centroids);
    let mut trace = vec![dists.iter().sum::<f64>()];
    let mut iterations = 1;
    while iterations < max_iter {
        let means = cluster_means(points, &assignment, k);
        let mut taken = vec![false; points.len()];
        for (c, m) in means.into_iter().enumerate() {
            match m {
                Some(m) => centroids[c] = m,
                None => {
                    // farthest point not already used for a repair; ties to lower index
                    let far = (0..points.len())
                        .filter(|&i| !taken[i])
                        .fold(None::<usize>, |b, i| match b {
                            Some(j) if dists[j] >= dists[i] => Some(j),
                            _ => Some(i),
                        })
                        .expect("k <= n");
                    taken[far] = true;
                    dists[far] = 0.0;
                    centroids[c] = points[far].clone();
                }
            }
        }
        let (next, next_d) = assign(points, &centroids);
        iterations += 1;
        let inertia: f64 = next_d.iter().sum();
        let prev = *trace.last().expect("non-empty");
        let unchanged = next == assignment;
        trace.push(inertia);
        assignment = next;
        dists = next_d;
        if unchanged || prev - inertia <= tol * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let mut populations = vec![0usize; k];
    for &c in &assignment {
        populations[c] += 1;
    }
    ClusteringResult {
        k,
        centroids,
        inertia: *trace.last().expect("non-empty"),
        assignment,
        populations,
        inertia_trace: trace,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 8,
            restarts: 10,
            tol: 1e-6,
            max_iter: 300,
        }
    }
}

/// Best (lowest inertia, then lowest restart index) of seeded restarts.
pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig, seed: u64) -> Result<ClusteringResult, ClusterError> {
    let restarts = cfg.restarts.max(1);
    let runs: Vec<ClusteringResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let init = kmeanspp_init(points, cfg.k, seed::derive(seed, r as u64))?;
            Ok(lloyd(points, init, cfg.tol, cfg.max_iter))
        })
        .collect::<Result<_, ClusterError>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("at least one restart"))
}

pub fn total_sum_of_squares(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    points.iter().map(|p| sq_dist(p, &mean)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeReport {
    pub ks: Vec<usize>,
    pub inertia: Vec<f64>,
    pub variance_explained: Vec<f64>,
    /// Second differences at interior candidates (aligned with `ks[1..n-1]`).
    pub second_difference: Vec<f64>,
    pub recommended: usize,
    /// Largest second difference divided by the runner-up.
    pub knee_ratio: f64,
    pub clear_knee: bool,
}

/// Knee ratio at or above which the recommendation is considered clear.
pub const CLEAR_KNEE_RATIO: f64 = 3.0;

pub fn choose_k(points: &[Vec<f64>], ks: &[usize], seeds: usize, seed: u64) -> Result<KneeReport, ClusterError> {
    if ks.len() < 3 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ClusterError::TooFewCandidates);
    }
    if points.is_empty() {
        return Err(ClusterError::Empty);
    }
    let tss = total_sum_of_squares(points);
    let mut inertia = Vec::with_capacity(ks.len());
    for &k in ks {
        let cfg = KMeansConfig {
            k,
            restarts: seeds,
            ..Default::default()
        };
        inertia.push(kmeans(points, &cfg, seed::derive(seed, k as u64))?.inertia);
    }
    let second_difference: Vec<f64> = inertia.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let (best, best_val) = second_difference
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let runner_up = second_difference
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let knee_ratio = if runner_up > 0.0 {
        best_val / runner_up
    } else if best_val > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(KneeReport {
        ks: ks.to_vec(),
        variance_explained: inertia
            .iter()
            .map(|&i| if tss > 0.0 { 1.0 - i / tss } else { 0.0 })
            .collect(),
        inertia,
        second_difference,
        recommended: ks[best + 1],
        knee_ratio,
        clear_knee: knee_ratio >= CLEAR_KNEE_RATIO,
    })
}

/// Indices of the `m` features with the best (lowest) mean rank, ordered by
/// rank so that the input column order does not matter. `mean_rank` is
/// aligned with `feature_names`; unknown names are skipped.
pub fn top_features(feature_names: &[String], ranked: &[(String, f64)], m: usize) -> Vec<usize> {
    let mut ranked: Vec<&(String, f64)> = ranked.iter().collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .filter_map(|(name, _)| feature_names.iter().position(|f| f == name))
        .take(m)
        .collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub population: usize,
    pub feature_names: Vec<String>,
    pub feature_means: Vec<f64>,
    pub feature_medians: Vec<f64>,
    pub verified_fraction: f64,
    /// Predicted-probability quantiles at 0, 0.1, ..., 1.
    pub probability_deciles: Vec<f64>,
    pub held_out: usize,
    pub accuracy: Option<f64>,
    pub roc_auc: Option<f64>,
    /// Set when fewer than 10 held-out members were available or the
    /// held-out members were all of one class (AUC only).
    pub metrics_suppressed: bool,
}

pub const MIN_HELD_OUT: usize = 10;

/// Profiles each cluster of `ds` (rows in original units, aligned with
/// `result.assignment`). Accuracy and AUC use only rows flagged `held_out`.
pub fn characterize(
    result: &ClusteringResult,
    ds: &LabeledDataset,
    model: &Model,
    held_out: &[bool],
    threshold: f64,
) -> Result<Vec<ClusterProfile>, ClusterError> {
    if result.assignment.len() != ds.len() || held_out.len() != ds.len() {
        return Err(ClusterError::LengthMismatch {
            expected: ds.len(),
            got: result.assignment.len().min(held_out.len()),
        });
    }
    // profiles cover every column of `ds`; the model sees only its own
    let probs = model.predict_all(&model.project(ds)?.rows)?;
    let profiles = (0..result.k)
        .map(|c| {
            let members: Vec<usize> = (0..ds.len()).filter(|&i| result.assignment[i] == c).collect();
            let mut means = Vec::with_capacity(ds.dim());
            let mut medians = Vec::with_capacity(ds.dim());
            for j in 0..ds.dim() {
                let col = sorted(members.iter().map(|&i| ds.rows[i][j]).collect());
                if col.is_empty() {
                    means.push(f64::NAN);
                    medians.push(f64::NAN);
                } else {
                    means.push(col.iter().sum::<f64>() / col.len() as f64);
                    medians.push(quantile(&col, 0.5));
                }
            }
            let verified = members.iter().filter(|&&i| ds.labels[i]).count();
            let p = sorted(members.iter().map(|&i| probs[i]).collect());
            let deciles = if p.is_empty() {
                Vec::new()
            } else {
                (0..=10).map(|q| quantile(&p, q as f64 / 10.0)).collect()
            };
            let ho: Vec<usize> = members.iter().copied().filter(|&i| held_out[i]).collect();
            let (accuracy, auc, suppressed) = if ho.len() < MIN_HELD_OUT {
                (None, None, true)
            } else {
                let correct = ho.iter().filter(|&&i| (probs[i] >= threshold) == ds.labels[i]).count();
                let scores: Vec<f64> = ho.iter().map(|&i| probs[i]).collect();
                let labels: Vec<bool> = ho.iter().map(|&i| ds.labels[i]).collect();
                let auc = roc_auc(&scores, &labels).ok();
                (Some(correct as f64 / ho.len() as f64), auc, auc.is_none())
            };
            ClusterProfile {
                cluster: c,
                population: members.len(),
                feature_names: ds.feature_names.clone(),
                feature_means: means,
                feature_medians: medians,
                verified_fraction: if members.is_empty() {
                    0.0
                } else {
                    verified as f64 / members.len() as f64
                },
                probability_deciles: deciles,
                held_out: ho.len(),
                accuracy,
                roc_auc: auc,
                metrics_suppressed: suppressed,
            }
        })
        .collect();
    Ok(profiles)
}
