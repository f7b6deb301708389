//! Exact k-nearest-neighbour search by exhaustive scan.

use rayon::prelude::*;

use super::ResampleError;

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` candidates nearest to `query`, ordered by distance then index.
pub fn nearest_among(points: &[Vec<f64>], query: usize, candidates: &[usize], k: usize) -> Vec<usize> {
    let q = &points[query];
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .filter(|&&i| i != query)
        .map(|&i| (squared_distance(q, &points[i]), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Neighbour lists for each query row. With `same_class_only`, candidates are
/// restricted to rows sharing the query's label. The query row itself is
/// never its own neighbour.
pub fn knn(
    points: &[Vec<f64>],
    labels: &[bool],
    queries: &[usize],
    k: usize,
    same_class_only: bool,
) -> Result<Vec<Vec<usize>>, ResampleError> {
    if k == 0 {
        return Err(ResampleError::InvalidConfig("k must be at least 1".into()));
    }
    let all: Vec<usize> = (0..points.len()).collect();
    let by_class: [Vec<usize>; 2] = [
        all.iter().copied().filter(|&i| !labels[i]).collect(),
        all.iter().copied().filter(|&i| labels[i]).collect(),
    ];
    for &q in queries {
        let pool = if same_class_only { &by_class[usize::from(labels[q])] } else { &all };
        let available = pool.len() - usize::from(pool.binary_search(&q).is_ok());
        if k > available {
            return Err(ResampleError::KTooLarge { k, available });
        }
    }
    Ok(queries
        .par_iter()
        .map(|&q| {
            let pool = if same_class_only { &by_class[usize::from(labels[q])] } else { &all };
            nearest_among(points, q, pool, k)
        })
        .collect())
}
