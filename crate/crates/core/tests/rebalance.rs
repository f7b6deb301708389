use std::collections::BTreeSet;

use rand::Rng;
use veriscope_core::rebalance::{adasyn, smote_tomek, tomek_links, ResampleConfig};
use veriscope_core::{seed, LabeledDataset, Provenance, Standardizer};

fn imbalanced(n_min: usize, n_maj: usize, d: usize, seed: u64) -> LabeledDataset {
    let mut rng = seed::rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n_min + n_maj {
        let y = i < n_min;
        let shift = if y { 1.0 } else { 0.0 };
        rows.push((0..d).map(|_| rng.gen_range(0.0..2.0) + shift).collect());
        labels.push(y);
    }
    LabeledDataset::from_rows(rows, labels)
}

/// True when `p` lies on the segment between two minority originals.
fn on_minority_segment(p: &[f64], minority: &[&Vec<f64>]) -> bool {
    for a in minority {
        for b in minority {
            let ab: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| y - x).collect();
            let len2: f64 = ab.iter().map(|v| v * v).sum();
            let lambda = if len2 == 0.0 {
                0.0
            } else {
                p.iter().zip(a.iter()).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum::<f64>() / len2
            };
            if !(-1e-12..=1.0 + 1e-12).contains(&lambda) {
                continue;
            }
            let resid = p
                .iter()
                .zip(a.iter())
                .zip(&ab)
                .map(|((pi, ai), d)| (pi - ai - lambda * d).abs())
                .fold(0.0, f64::max);
            if resid <= 1e-9 {
                return true;
            }
        }
    }
    false
}

#[test]
fn adasyn_balances_and_interpolates() {
    for s in 0..20 {
        let ds = imbalanced(15, 60, 3, s);
        let (out, rep) = adasyn(&ds, &ResampleConfig { seed: s, ..Default::default() }).unwrap();
        let (neg, pos) = out.class_counts();
        assert!(neg.abs_diff(pos) <= rep.minority_count, "{neg} vs {pos}");
        let minority: Vec<&Vec<f64>> = ds.rows.iter().zip(&ds.labels).filter(|(_, &y)| y).map(|(r, _)| r).collect();
        for (r, p) in out.rows.iter().zip(&out.provenance) {
            if *p == Provenance::Synthetic {
                assert!(on_minority_segment(r, &minority));
            }
        }
        assert_eq!(&out.rows[..ds.len()], &ds.rows[..]);
    }
}

fn tomek_oracle(ds: &LabeledDataset) -> Vec<(usize, usize)> {
    let z = Standardizer::fit(&ds.rows).transform(&ds.rows);
    let d2 = |a: usize, b: usize| z[a].iter().zip(&z[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let n = z.len();
    let nn: Vec<usize> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .fold(None::<usize>, |b, j| match b {
                    Some(k) if d2(i, k) <= d2(i, j) => Some(k),
                    _ => Some(j),
                })
                .unwrap()
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if ds.labels[i] != ds.labels[j] && nn[i] == j && nn[j] == i {
                out.push((i, j));
            }
        }
    }
    out
}

#[test]
fn tomek_links_match_brute_force() {
    for s in 0..50 {
        let mut rng = seed::rng(500 + s);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 3 == 0 || rng.gen_bool(0.2)).collect();
        let ds = LabeledDataset::from_rows(rows, labels);
        assert_eq!(tomek_links(&ds), tomek_oracle(&ds), "dataset {s}");
    }
}

#[test]
fn smote_tomek_keeps_minority_originals() {
    for s in 0..20 {
        let ds = imbalanced(12, 50, 2, 40 + s);
        let (out, rep) = smote_tomek(&ds, &ResampleConfig { seed: s, ..Default::default() }).unwrap();
        let kept: BTreeSet<&str> = out.ids.iter().map(String::as_str).collect();
        for (id, &y) in ds.ids.iter().zip(&ds.labels) {
            if y {
                assert!(kept.contains(id.as_str()), "minority {id} removed");
            }
        }
        assert_eq!(out.len(), ds.len() + rep.generated - rep.removed);
    }
}

#[test]
fn resampling_is_deterministic() {
    let ds = imbalanced(10, 40, 3, 1);
    let cfg = ResampleConfig { seed: 3, ..Default::default() };
    assert_eq!(adasyn(&ds, &cfg).unwrap().0, adasyn(&ds, &cfg).unwrap().0);
    assert_eq!(smote_tomek(&ds, &cfg).unwrap().0, smote_tomek(&ds, &cfg).unwrap().0);
}
