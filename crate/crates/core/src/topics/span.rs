//! Per-user topical span: the number of mixture components a user's text
//! supports under a Dirichlet-process mixture of unigrams.
//!
//! Each tweet of the user is one observation. Observations are seated at
//! tables by a Chinese restaurant process with concentration `gamma`; each
//! table owns a unigram distribution drawn from a symmetric Dirichlet(`beta`)
//! over the vocabulary, integrated out. The span is the most frequent number
//! of occupied tables over the second half of the sweeps.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::docs::UserDocument;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanConfig {
    pub gamma: f64,
    pub beta: f64,
    pub n_iter: usize,
    pub min_tokens: usize,
}

impl Default for SpanConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            beta: 0.1,
            n_iter: 200,
            min_tokens: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanEstimate {
    pub user_id: String,
    pub span: usize,
    pub low_confidence: bool,
    /// Occupied-table count after each sweep.
    pub trace: Vec<usize>,
}

struct Table {
    members: usize,
    tokens: usize,
    counts: BTreeMap<u32, usize>,
}

/// Word counts of one segment, sorted by word id.
fn segment_counts(seg: &[u32]) -> Vec<(u32, usize)> {
    let mut out: Vec<(u32, usize)> = Vec::new();
    for &w in seg {
        match out.last_mut() {
            Some((last, c)) if *last == w => *c += 1,
            _ => out.push((w, 1)),
        }
    }
    out
}

/// log predictive probability of a segment given a table's counts.
fn log_predictive(seg: &[(u32, usize)], len: usize, table: Option<&Table>, beta: f64, vbeta: f64) -> f64 {
    let (n, counts) = match table {
        Some(t) => (t.tokens as f64, Some(&t.counts)),
        None => (0.0, None),
    };
    let mut lp = 0.0;
    for &(w, c) in seg {
        let base = counts.and_then(|m| m.get(&w)).copied().unwrap_or(0) as f64 + beta;
        for j in 0..c {
            lp += (base + j as f64).ln();
        }
    }
    for i in 0..len {
        lp -= (n + vbeta + i as f64).ln();
    }
    lp
}

fn sample_log(weights: &[f64], rng: &mut seed::Rng) -> usize {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let probs: Vec<f64> = weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if acc > u {
            return i;
        }
    }
    probs.len() - 1
}

fn add(table: &mut Table, seg: &[(u32, usize)], len: usize) {
    table.members += 1;
    table.tokens += len;
    for &(w, c) in seg {
        *table.counts.entry(w).or_insert(0) += c;
    }
}

fn remove(table: &mut Table, seg: &[(u32, usize)], len: usize) {
    table.members -= 1;
    table.tokens -= len;
    for &(w, c) in seg {
        let e = table.counts.get_mut(&w).expect("segment counted at its table");
        *e -= c;
        if *e == 0 {
            table.counts.remove(&w);
        }
    }
}

/// Seats each segment in turn, then resamples every seating for
/// `cfg.n_iter` sweeps. `vocab_size` is the size of the shared vocabulary.
pub fn topical_span(doc: &UserDocument, vocab_size: usize, cfg: &SpanConfig, seed: u64) -> SpanEstimate {
    if doc.total() < cfg.min_tokens || doc.segments.is_empty() {
        return SpanEstimate {
            user_id: doc.user_id.clone(),
            span: 1,
            low_confidence: true,
            trace: Vec::new(),
        };
    }
    let mut rng = seed::rng(seed);
    let vbeta = vocab_size.max(1) as f64 * cfg.beta;
    let segs: Vec<Vec<(u32, usize)>> = doc.segments.iter().map(|s| segment_counts(s)).collect();
    let lens: Vec<usize> = doc.segments.iter().map(Vec::len).collect();
    let mut tables: Vec<Table> = Vec::new();
    let mut seat = vec![usize::MAX; segs.len()];
    let mut weights = Vec::new();

    let mut place = |i: usize, tables: &mut Vec<Table>, seat: &mut Vec<usize>, rng: &mut seed::Rng| {
        weights.clear();
        for t in tables.iter() {
            weights.push(if t.members == 0 {
                f64::NEG_INFINITY
            } else {
                (t.members as f64).ln() + log_predictive(&segs[i], lens[i], Some(t), cfg.beta, vbeta)
            });
        }
        weights.push(cfg.gamma.ln() + log_predictive(&segs[i], lens[i], None, cfg.beta, vbeta));
        let mut k = sample_log(&weights, rng);
        if k == tables.len() {
            // reuse an empty slot if any, keeping table ids compact
            k = tables.iter().position(|t| t.members == 0).unwrap_or_else(|| {
                tables.push(Table {
                    members: 0,
                    tokens: 0,
                    counts: BTreeMap::new(),
                });
                tables.len() - 1
            });
        }
        add(&mut tables[k], &segs[i], lens[i]);
        seat[i] = k;
    };

    for i in 0..segs.len() {
        place(i, &mut tables, &mut seat, &mut rng);
    }
    let mut trace = Vec::with_capacity(cfg.n_iter);
    for _ in 0..cfg.n_iter {
        for i in 0..segs.len() {
            remove(&mut tables[seat[i]], &segs[i], lens[i]);
            place(i, &mut tables, &mut seat, &mut rng);
        }
        trace.push(tables.iter().filter(|t| t.members > 0).count());
    }
    let tail = &trace[trace.len() / 2..];
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in tail {
        *freq.entry(k).or_insert(0) += 1;
    }
    // mode; ties resolve to the smaller count
    let span = freq
        .iter()
        .fold((1, 0), |best, (&k, &n)| if n > best.1 { (k, n) } else { best })
        .0;
    SpanEstimate {
        user_id: doc.user_id.clone(),
        span,
        low_confidence: doc.flagged,
        trace,
    }
}
