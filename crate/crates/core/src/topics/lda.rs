//! Latent Dirichlet allocation by collapsed Gibbs sampling.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::docs::{UserDocument, Vocabulary};
use super::TopicError;
use crate::featurize::TopicBlock;
use crate::seed;

/// Document-topic prior.
///
/// The default is `50 / T`, which keeps the sum of the prior (`T * alpha`)
/// constant across topic counts. `T / 50` is available for runs that want the
/// alternative reading; at T = 100 it gives alpha = 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    #[default]
    FiftyOverT,
    TOverFifty,
    Fixed(f64),
}

impl AlphaMode {
    pub fn alpha(self, topics: usize) -> f64 {
        match self {
            AlphaMode::FiftyOverT => 50.0 / topics as f64,
            AlphaMode::TOverFifty => topics as f64 / 50.0,
            AlphaMode::Fixed(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: AlphaMode,
    pub beta: f64,
    pub n_iter: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 100,
            alpha: AlphaMode::default(),
            beta: 0.01,
            n_iter: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub topics: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    /// T x V.
    pub phi: Vec<Vec<f64>>,
    /// D x T, rows aligned with `doc_ids`.
    pub theta: Vec<Vec<f64>>,
    pub doc_ids: Vec<String>,
    pub z: Vec<Vec<u32>>,
    pub iterations: usize,
    /// `(sweep, log P(w, z))` every 10 sweeps and after the last one.
    pub log_likelihood: Vec<(usize, f64)>,
    pub tokens: usize,
}

impl TopicModel {
    /// Final joint log-likelihood divided by the token count.
    pub fn per_token_log_likelihood(&self) -> f64 {
        self.log_likelihood.last().map_or(f64::NAN, |&(_, ll)| ll / self.tokens as f64)
    }

    /// Top `n` words per topic by phi (ties by lower word id).
    pub fn top_words(&self, vocab: &Vocabulary, n: usize) -> Vec<Vec<String>> {
        self.phi
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..row.len()).collect();
                idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                idx.into_iter().take(n).map(|w| vocab.words[w].clone()).collect()
            })
            .collect()
    }
}

/// Collapsed Gibbs state for one chain.
pub struct GibbsLda {
    t: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    n_dt: Vec<Vec<u32>>,
    /// Word-major: `n_wt[w * t + k]`.
    n_wt: Vec<u32>,
    n_t: Vec<u64>,
    rng: seed::Rng,
    probs: Vec<f64>,
}

impl GibbsLda {
    /// Random initial assignment. `docs` hold word ids below `vocab_size`.
    pub fn new(docs: Vec<Vec<u32>>, vocab_size: usize, topics: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut n_dt = vec![vec![0u32; topics]; docs.len()];
        let mut n_wt = vec![0u32; vocab_size * topics];
        let mut n_t = vec![0u64; topics];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let k = rng.gen_range(0..topics);
                        n_dt[d][k] += 1;
                        n_wt[w as usize * topics + k] += 1;
                        n_t[k] += 1;
                        k as u32
                    })
                    .collect()
            })
            .collect();
        Self {
            t: topics,
            v: vocab_size,
            alpha,
            beta,
            docs,
            z,
            n_dt,
            n_wt,
            n_t,
            rng,
            probs: vec![0.0; topics],
        }
    }

    /// One pass resampling every token's topic in document order.
    pub fn sweep(&mut self) {
        let t = self.t;
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_dt[d][old] -= 1;
                self.n_wt[w * t + old] -= 1;
                self.n_t[old] -= 1;
                let row = &self.n_wt[w * t..(w + 1) * t];
                let mut total = 0.0;
                for (k, &nw) in row.iter().enumerate() {
                    total += (self.n_dt[d][k] as f64 + self.alpha) * (nw as f64 + self.beta)
                        / (self.n_t[k] as f64 + vbeta);
                    self.probs[k] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.probs.iter().position(|&c| c > u).unwrap_or(t - 1);
                self.z[d][i] = new as u32;
                self.n_dt[d][new] += 1;
                self.n_wt[w * t + new] += 1;
                self.n_t[new] += 1;
            }
        }
    }

    /// Checks that the count tables agree with the assignments.
    pub fn counts_consistent(&self) -> bool {
        let t = self.t;
        let mut n_wt = vec![0u32; self.v * t];
        let mut n_t = vec![0u64; t];
        for (d, doc) in self.docs.iter().enumerate() {
            let mut n_dt = vec![0u32; t];
            for (&w, &k) in doc.iter().zip(&self.z[d]) {
                n_dt[k as usize] += 1;
                n_wt[w as usize * t + k as usize] += 1;
                n_t[k as usize] += 1;
            }
            if n_dt != self.n_dt[d] || n_dt.iter().map(|&c| c as usize).sum::<usize>() != doc.len() {
                return false;
            }
        }
        let doc_total: u64 = self.n_dt.iter().flatten().map(|&c| c as u64).sum();
        n_wt == self.n_wt && n_t == self.n_t && n_t.iter().sum::<u64>() == doc_total
    }

    /// log P(w, z) under the collapsed model.
    pub fn log_joint(&self) -> f64 {
        let (t, v) = (self.t as f64, self.v as f64);
        let mut ll = t * ln_gamma(v * self.beta);
        let lg_beta = ln_gamma(self.beta);
        for k in 0..self.t {
            let mut s = 0.0;
            for w in 0..self.v {
                let c = self.n_wt[w * self.t + k];
                if c > 0 {
                    s += ln_gamma(c as f64 + self.beta) - lg_beta;
                }
            }
            ll += s - ln_gamma(self.n_t[k] as f64 + v * self.beta);
        }
        let lg_alpha = ln_gamma(self.alpha);
        for (d, doc) in self.docs.iter().enumerate() {
            ll += ln_gamma(t * self.alpha) - ln_gamma(doc.len() as f64 + t * self.alpha);
            for &c in &self.n_dt[d] {
                if c > 0 {
                    ll += ln_gamma(c as f64 + self.alpha) - lg_alpha;
                }
            }
        }
        ll
    }

    fn add_estimates(&self, phi: &mut [Vec<f64>], theta: &mut [Vec<f64>]) {
        let vbeta = self.v as f64 * self.beta;
        for (k, row) in phi.iter_mut().enumerate() {
            let denom = self.n_t[k] as f64 + vbeta;
            for (w, p) in row.iter_mut().enumerate() {
                *p += (self.n_wt[w * self.t + k] as f64 + self.beta) / denom;
            }
        }
        let talpha = self.t as f64 * self.alpha;
        for (d, row) in theta.iter_mut().enumerate() {
            let denom = self.docs[d].len() as f64 + talpha;
            for (k, p) in row.iter_mut().enumerate() {
                *p += (self.n_dt[d][k] as f64 + self.alpha) / denom;
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }
}

fn normalize_rows(rows: &mut [Vec<f64>]) {
    for r in rows {
        let s: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= s);
    }
}

/// Runs `cfg.n_iter` sweeps. Phi and theta are averaged over the final quarter
/// of sweeps; documents with no tokens are skipped.
pub fn lda_gibbs(docs: &[UserDocument], vocab_size: usize, cfg: &LdaConfig) -> Result<TopicModel, TopicError> {
    lda_gibbs_observed(docs, vocab_size, cfg, |_| {})
}

/// As [`lda_gibbs`], calling `observe` after every sweep.
pub fn lda_gibbs_observed(
    docs: &[UserDocument],
    vocab_size: usize,
    cfg: &LdaConfig,
    mut observe: impl FnMut(&GibbsLda),
) -> Result<TopicModel, TopicError> {
    if cfg.topics == 0 {
        return Err(TopicError::TooFewTopics(cfg.topics));
    }
    let alpha = cfg.alpha.alpha(cfg.topics);
    if !(alpha > 0.0 && cfg.beta > 0.0) {
        return Err(TopicError::InvalidConfig("alpha and beta must be positive".into()));
    }
    if cfg.n_iter == 0 {
        return Err(TopicError::InvalidConfig("n_iter must be positive".into()));
    }
    let kept: Vec<&UserDocument> = docs.iter().filter(|d| d.total() > 0).collect();
    if kept.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    let tokens: Vec<Vec<u32>> = kept.iter().map(|d| d.tokens()).collect();
    let n_tokens = tokens.iter().map(Vec::len).sum();
    let mut chain = GibbsLda::new(tokens, vocab_size, cfg.topics, alpha, cfg.beta, cfg.seed);
    let mut phi = vec![vec![0.0; vocab_size]; cfg.topics];
    let mut theta = vec![vec![0.0; cfg.topics]; kept.len()];
    let average_from = cfg.n_iter - (cfg.n_iter / 4).max(1);
    let mut trace = Vec::new();
    for sweep in 1..=cfg.n_iter {
        chain.sweep();
        observe(&chain);
        if sweep % 10 == 0 || sweep == cfg.n_iter {
            trace.push((sweep, chain.log_joint()));
        }
        if sweep > average_from {
            chain.add_estimates(&mut phi, &mut theta);
        }
    }
    normalize_rows(&mut phi);
    normalize_rows(&mut theta);
    Ok(TopicModel {
        topics: cfg.topics,
        vocab_size,
        alpha,
        beta: cfg.beta,
        phi,
        theta,
        doc_ids: kept.iter().map(|d| d.user_id.clone()).collect(),
        z: chain.z,
        iterations: cfg.n_iter,
        log_likelihood: trace,
        tokens: n_tokens,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub topics: usize,
    pub alpha: f64,
    pub log_likelihood: f64,
    pub per_token: f64,
}

#[derive(Debug, Clone)]
pub struct TopicSelection {
    pub chosen: usize,
    pub table: Vec<CandidateFit>,
    pub model: TopicModel,
}

/// Fits every candidate topic count (in parallel) and keeps the one with the
/// highest per-token joint log-likelihood (ties to the smaller count).
pub fn select_t(
    docs: &[UserDocument],
    vocab_size: usize,
    candidates: &[usize],
    base: &LdaConfig,
) -> Result<TopicSelection, TopicError> {
    if candidates.is_empty() {
        return Err(TopicError::NoCandidates);
    }
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let fits: Vec<TopicModel> = sorted
        .par_iter()
        .map(|&t| {
            let cfg = LdaConfig {
                topics: t,
                seed: seed::derive(base.seed, t as u64),
                ..*base
            };
            lda_gibbs(docs, vocab_size, &cfg)
        })
        .collect::<Result<_, _>>()?;
    let table: Vec<CandidateFit> = fits
        .iter()
        .map(|m| CandidateFit {
            topics: m.topics,
            alpha: m.alpha,
            log_likelihood: m.log_likelihood.last().map_or(f64::NAN, |x| x.1),
            per_token: m.per_token_log_likelihood(),
        })
        .collect();
    let best = (0..table.len())
        .reduce(|b, i| if table[i].per_token > table[b].per_token { i } else { b })
        .expect("non-empty");
    Ok(TopicSelection {
        chosen: table[best].topics,
        table,
        model: fits.into_iter().nth(best).expect("index in range"),
    })
}

/// Theta for an unseen document by Gibbs sampling its topic assignments
/// with phi held fixed; averaged over the second half of `sweeps`.
pub fn fold_in(model: &TopicModel, tokens: &[u32], sweeps: usize, seed: u64) -> Vec<f64> {
    let t = model.topics;
    if tokens.is_empty() {
        return vec![1.0 / t as f64; t];
    }
    let mut rng = seed::rng(seed);
    let mut n_dt = vec![0u32; t];
    let mut z: Vec<usize> = tokens
        .iter()
        .map(|_| {
            let k = rng.gen_range(0..t);
            n_dt[k] += 1;
            k
        })
        .collect();
    let mut probs = vec![0.0; t];
    let mut acc = vec![0.0; t];
    let sweeps = sweeps.max(2);
    let denom = tokens.len() as f64 + t as f64 * model.alpha;
    for s in 0..sweeps {
        for (i, &w) in tokens.iter().enumerate() {
            n_dt[z[i]] -= 1;
            let mut total = 0.0;
            for k in 0..t {
                total += (n_dt[k] as f64 + model.alpha) * model.phi[k][w as usize];
                probs[k] = total;
            }
            let u = rng.gen::<f64>() * total;
            let new = probs.iter().position(|&c| c > u).unwrap_or(t - 1);
            z[i] = new;
            n_dt[new] += 1;
        }
        if s >= sweeps / 2 {
            for k in 0..t {
                acc[k] += (n_dt[k] as f64 + model.alpha) / denom;
            }
        }
    }
    let s: f64 = acc.iter().sum();
    acc.into_iter().map(|v| v / s).collect()
}

pub const FOLD_IN_SWEEPS: usize = 50;

/// Per-user topic vectors: theta rows for training documents, fold-in for
/// documents the model has not seen, and a masked uniform vector for users
/// with no in-vocabulary tokens.
pub fn topic_features(model: &TopicModel, docs: &[UserDocument], seed: u64) -> TopicBlock {
    let row_of: BTreeMap<&str, usize> = model.doc_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let uniform = vec![1.0 / model.topics as f64; model.topics];
    let results: Vec<(String, Vec<f64>, bool)> = docs
        .par_iter()
        .map(|d| {
            if d.total() == 0 {
                (d.user_id.clone(), uniform.clone(), true)
            } else if let Some(&r) = row_of.get(d.user_id.as_str()) {
                (d.user_id.clone(), model.theta[r].clone(), false)
            } else {
                let s = seed::derive_str(seed, &d.user_id);
                (d.user_id.clone(), fold_in(model, &d.tokens(), FOLD_IN_SWEEPS, s), false)
            }
        })
        .collect();
    let mut block = TopicBlock::default();
    let mut masked = BTreeSet::new();
    for (id, v, m) in results {
        if m {
            masked.insert(id.clone());
        }
        block.vectors.insert(id, v);
    }
    block.masked = masked;
    block
}
