//! Acceptance criteria. Runs as a plain binary (no libtest harness) so every
//! criterion prints exactly one PASS/FAIL line.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use veriscope_core::cluster::{choose_k, kmeanspp_init, lloyd};
use veriscope_core::demo::{generate_demo, DemoConfig};
use veriscope_core::featurize::content::char_entropy;
use veriscope_core::featurize::sentiment::normalize_compound;
use veriscope_core::featurize::{assemble_features, FeatureRegistry, ImputationStats, Lexicons, SentimentLexicon};
use veriscope_core::learn::logistic::loss_and_gradient;
use veriscope_core::learn::{
    all_relevant_select, gini_importance, roc_auc, train_gbdt, train_logistic, GbdtConfig, HyperGrid, LogisticConfig,
    SelectConfig, Status,
};
use veriscope_core::rebalance::{adasyn, smote_tomek, tomek_links, ResampleConfig};
use veriscope_core::topics::{
    build_user_docs, lda_gibbs, lda_gibbs_observed, select_t, topic_features, topical_span, AlphaMode, LdaConfig,
    SpanConfig, UserDocument, VocabConfig,
};
use veriscope_core::{seed, Corpus, FeatureVector, LabeledDataset, Provenance, Standardizer};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_veriscope")
}

fn run_cli(args: &[&str]) -> Result<Duration, String> {
    let start = Instant::now();
    let out = Command::new(bin())
        .args(args)
        .env("VERISCOPE_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(start.elapsed())
}

/// Shared end-to-end fixture: a 2,000-user demo corpus and one full run.
struct Demo {
    dir: PathBuf,
    first_run: Result<Duration, String>,
}

fn demo_fixture(root: &Path) -> Demo {
    let dir = root.join("demo");
    let d = dir.to_string_lossy().to_string();
    let first_run = run_cli(&["generate-demo", "--out", &d, "--users", "2000"]).and_then(|_| {
        run_cli(&[
            "all",
            "--config",
            &format!("{d}/veriscope.toml"),
            "--threads",
            "1",
            "--out",
            &format!("{d}/run1"),
        ])
    });
    Demo { dir, first_run }
}

fn c1_separability(demo: &Demo) -> Outcome {
    let elapsed = demo.first_run.clone()?;
    let text = std::fs::read_to_string(demo.dir.join("run1/metrics.json")).map_err(|e| e.to_string())?;
    let m: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let rows = m["table2"].as_array().ok_or("metrics.json has no table2")?;
    let mut parts = Vec::new();
    let mut ok = elapsed < Duration::from_secs(300);
    for dataset in ["Original imbalanced data", "ADASYN class rebalancing", "SMOTETomek class rebalancing"] {
        let auc = |classifier: &str| {
            rows.iter()
                .find(|r| r["Dataset"] == dataset && r["Classifier"] == classifier)
                .and_then(|r| r["ROC AUC Score"].as_f64())
        };
        let (Some(gb), Some(lr)) = (auc("Gradient Boosted Trees"), auc("Logistic Regression")) else {
            return Err(format!("missing AUC rows for {dataset}"));
        };
        ok &= gb >= 0.95 && gb >= lr;
        parts.push(format!("{dataset}: GBDT {gb:.4} vs LR {lr:.4}"));
    }
    check(ok, format!("{}; `all` single-threaded {:.1}s (limit 300s)", parts.join("; "), elapsed.as_secs_f64()))
}

fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn c2_auc_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..200 {
        let mut rng = seed::rng(s);
        let n = rng.gen_range(2..80);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..12) as f64 / 11.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let got = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((got - auc_oracle(&scores, &labels)).abs());
    }
    check(worst <= 1e-9, format!("max |roc_auc - pairwise| over 200 sets = {worst:e}"))
}

fn imbalanced(n_min: usize, n_maj: usize, d: usize, s: u64) -> LabeledDataset {
    let mut rng = seed::rng(s);
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

/// Distance from `p` to the closest segment between two minority rows.
fn segment_distance(p: &[f64], minority: &[&Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for a in minority {
        for b in minority {
            let ab: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| y - x).collect();
            let len2: f64 = ab.iter().map(|v| v * v).sum();
            let t = if len2 == 0.0 {
                0.0
            } else {
                (p.iter().zip(a.iter()).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
            };
            let dist = p
                .iter()
                .zip(a.iter())
                .zip(&ab)
                .map(|((pi, ai), d)| (pi - ai - t * d).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(dist);
        }
    }
    best
}

fn tomek_oracle(ds: &LabeledDataset) -> Vec<(usize, usize)> {
    let z = Standardizer::fit(&ds.rows).transform(&ds.rows);
    let d2 = |a: usize, b: usize| z[a].iter().zip(&z[b]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let n = z.len();
    let nn: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = usize::MAX;
            for j in 0..n {
                if j != i && (best == usize::MAX || d2(i, j) < d2(i, best)) {
                    best = j;
                }
            }
            best
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

fn c3_resamplers() -> Outcome {
    let mut worst_gap_excess = 0i64;
    let mut worst_dist = 0.0f64;
    for s in 0..20 {
        let ds = imbalanced(15, 60, 3, s);
        let (out, rep) = adasyn(&ds, &ResampleConfig { seed: s, ..Default::default() }).map_err(|e| e.to_string())?;
        let (neg, pos) = out.class_counts();
        worst_gap_excess = worst_gap_excess.max(neg.abs_diff(pos) as i64 - rep.minority_count as i64);
        let minority: Vec<&Vec<f64>> = ds.rows.iter().zip(&ds.labels).filter(|(_, &y)| y).map(|(r, _)| r).collect();
        for (r, p) in out.rows.iter().zip(&out.provenance) {
            if *p == Provenance::Synthetic {
                worst_dist = worst_dist.max(segment_distance(r, &minority));
            }
        }
    }
    let mut tomek_mismatch = 0;
    for s in 0..50 {
        let mut rng = seed::rng(900 + s);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 3 == 0 || rng.gen_bool(0.2)).collect();
        let ds = LabeledDataset::from_rows(rows, labels);
        if tomek_links(&ds) != tomek_oracle(&ds) {
            tomek_mismatch += 1;
        }
    }
    let mut minority_removed = 0;
    for s in 0..20 {
        let ds = imbalanced(12, 50, 2, 70 + s);
        let (out, _) = smote_tomek(&ds, &ResampleConfig { seed: s, ..Default::default() }).map_err(|e| e.to_string())?;
        let kept: BTreeSet<&String> = out.ids.iter().collect();
        minority_removed += ds.ids.iter().zip(&ds.labels).filter(|(id, &y)| y && !kept.contains(id)).count();
    }
    check(
        worst_gap_excess <= 0 && worst_dist <= 1e-9 && tomek_mismatch == 0 && minority_removed == 0,
        format!(
            "ADASYN gap minus minority <= {worst_gap_excess}; max segment distance {worst_dist:e}; \
             Tomek mismatches {tomek_mismatch}/50; minority originals removed {minority_removed}"
        ),
    )
}

fn planted(n: usize, d: usize, strength: f64, s: u64) -> LabeledDataset {
    let mut rng = seed::rng(s);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.gen_bool(0.5);
        let mut r: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
        r[0] += if y { strength } else { -strength };
        rows.push(r);
        labels.push(y);
    }
    LabeledDataset::from_rows(rows, labels)
}

fn c4_models() -> Outcome {
    let ds = planted(100, 4, 0.8, 31);
    let rows = Standardizer::fit(&ds.rows).transform(&ds.rows);
    let mut rng = seed::rng(32);
    let mut worst_rel = 0.0f64;
    for _ in 0..10 {
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (_, g) = loss_and_gradient(&p, &rows, &ds.labels, 0.1);
        for j in 0..p.len() {
            let h = 1e-5;
            let mut up = p.clone();
            let mut dn = p.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (loss_and_gradient(&up, &rows, &ds.labels, 0.1).0 - loss_and_gradient(&dn, &rows, &ds.labels, 0.1).0)
                / (2.0 * h);
            worst_rel = worst_rel.max((fd - g[j]).abs() / g[j].abs().max(1.0));
        }
    }
    let mut xr = Vec::new();
    let mut xl = Vec::new();
    for _ in 0..100 {
        for (a, b, y) in [(0.0, 0.0, false), (1.0, 1.0, false), (0.0, 1.0, true), (1.0, 0.0, true)] {
            xr.push(vec![a, b]);
            xl.push(y);
        }
    }
    let xor = LabeledDataset::from_rows(xr, xl);
    let cfg = GbdtConfig {
        n_rounds: 30,
        early_stopping: None,
        ..Default::default()
    };
    let gb = train_gbdt(&xor, &cfg).map_err(|e| e.to_string())?;
    let lr = train_logistic(&xor, &LogisticConfig::default()).map_err(|e| e.to_string())?;
    let acc = |f: &dyn Fn(&[f64]) -> f64| {
        xor.rows.iter().zip(&xor.labels).filter(|(x, &y)| (f(x) >= 0.5) == y).count() as f64 / xor.len() as f64
    };
    let gb_acc = acc(&|x| gb.predict_proba(x).unwrap());
    let lr_acc = acc(&|x| lr.predict_proba(x).unwrap());
    let mut loss_ok = gb.train_loss.windows(2).all(|w| w[1] <= w[0]);
    let noisy = train_gbdt(&planted(400, 5, 0.5, 33), &cfg).map_err(|e| e.to_string())?;
    loss_ok &= noisy.train_loss.windows(2).all(|w| w[1] <= w[0]);
    check(
        worst_rel <= 1e-5 && loss_ok && gb_acc == 1.0 && lr_acc <= 0.55,
        format!(
            "max relative gradient error {worst_rel:e}; loss non-increasing {loss_ok}; XOR accuracy GBDT {gb_acc} LR {lr_acc}"
        ),
    )
}

fn c5_importance_selection() -> Outcome {
    let ds = planted(500, 10, 1.0, 41);
    let base = GbdtConfig {
        n_rounds: 30,
        early_stopping: None,
        ..Default::default()
    };
    let imp = gini_importance(&ds, &base, &HyperGrid::default(), 100, 42).map_err(|e| e.to_string())?;
    let rank_one = imp.iter().find(|f| f.feature == "f0").map_or(0, |f| f.rank_one);

    let runs = 10;
    let mut copy_confirmed = 0;
    let mut noise_rejected = 0;
    let mut noise_total = 0;
    for s in 0..runs {
        let mut ds = planted(2000, 4, 0.7, 300 + s);
        for (r, &y) in ds.rows.iter_mut().zip(&ds.labels) {
            r.push(if y { 1.0 } else { 0.0 });
        }
        ds.feature_names.push("label_copy".into());
        let cfg = SelectConfig {
            n_iter: 100,
            alpha: 0.05,
            gbdt: GbdtConfig {
                n_rounds: 10,
                early_stopping: None,
                ..Default::default()
            },
        };
        let v = all_relevant_select(&ds, &cfg, s).map_err(|e| e.to_string())?;
        copy_confirmed += usize::from(v.status[4] == Status::Confirmed);
        for j in 1..4 {
            noise_total += 1;
            noise_rejected += usize::from(v.status[j] == Status::Rejected);
        }
    }
    check(
        rank_one >= 95 && copy_confirmed == runs as usize && noise_rejected * 10 >= noise_total * 9,
        format!(
            "planted feature ranked first in {rank_one}/100 retrains; label copy confirmed {copy_confirmed}/{runs}; \
             noise rejected {noise_rejected}/{noise_total}"
        ),
    )
}

fn gaussian_blobs(centers: &[Vec<f64>], per: usize, sd: f64, s: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(s);
    let noise = Normal::new(0.0, sd).unwrap();
    centers
        .iter()
        .flat_map(|c| {
            (0..per)
                .map(|_| c.iter().map(|v| v + noise.sample(&mut rng)).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        })
        .collect()
}

fn c6_clustering() -> Outcome {
    let mut monotone = 0;
    for inst in 0..100u64 {
        let mut rng = seed::rng(5000 + inst);
        let n = rng.gen_range(20..80);
        let d = rng.gen_range(1..5);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let k = rng.gen_range(2..8);
        let init = kmeanspp_init(&pts, k, inst).map_err(|e| e.to_string())?;
        let r = lloyd(&pts, init, 0.0, 300);
        monotone += usize::from(r.inertia_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
    let centres: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            let mut c = vec![0.0; 10];
            c[i] = 10.0;
            c
        })
        .collect();
    let ks: Vec<usize> = (2..=12).collect();
    let mut hits = 0;
    for s in 0..10 {
        let pts = gaussian_blobs(&centres, 60, 1.0, 700 + s);
        let rep = choose_k(&pts, &ks, 10, s).map_err(|e| e.to_string())?;
        hits += usize::from(rep.recommended == 8);
    }
    check(
        monotone == 100 && hits >= 9,
        format!("Lloyd inertia non-increasing on {monotone}/100 instances; knee at k=8 in {hits}/10 seeds"),
    )
}

fn planted_corpus(topics: usize, words: usize, docs: usize, tokens: usize, per_doc: usize, s: u64) -> Vec<UserDocument> {
    let mut rng = seed::rng(s);
    (0..docs)
        .map(|d| {
            let mut ks: Vec<usize> = (0..topics).collect();
            ks.shuffle(&mut rng);
            ks.truncate(per_doc);
            let toks: Vec<u32> = (0..tokens)
                .map(|_| (*ks.choose(&mut rng).unwrap() * words + rng.gen_range(0..words)) as u32)
                .collect();
            UserDocument::from_segments(format!("d{d:04}"), vec![toks], 0)
        })
        .collect()
}

fn c7_topics() -> Outcome {
    let words = 20;
    let docs = planted_corpus(2, words, 60, 80, 1, 51);
    let cfg = LdaConfig {
        topics: 2,
        n_iter: 200,
        seed: 52,
        ..Default::default()
    };
    let mut consistent = true;
    let m = lda_gibbs_observed(&docs, 2 * words, &cfg, |c| consistent &= c.counts_consistent()).map_err(|e| e.to_string())?;
    // purity of each learned topic's top-10 words under the better of the two
    // topic-to-planted matchings
    let top = |k: usize| {
        let mut idx: Vec<usize> = (0..2 * words).collect();
        idx.sort_by(|&a, &b| m.phi[k][b].total_cmp(&m.phi[k][a]).then(a.cmp(&b)));
        idx.truncate(10);
        idx
    };
    let purity = |k: usize, p: usize| top(k).iter().filter(|&&w| w / words == p).count() as f64 / 10.0;
    let best = ((purity(0, 0) + purity(1, 1)) / 2.0).max((purity(0, 1) + purity(1, 0)) / 2.0);
    let worst_row = m
        .phi
        .iter()
        .chain(&m.theta)
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);

    let docs10 = planted_corpus(10, 20, 200, 100, 2, 53);
    let base = LdaConfig {
        n_iter: 300,
        seed: 54,
        alpha: AlphaMode::FiftyOverT,
        ..Default::default()
    };
    let sel = select_t(&docs10, 200, &[2, 10, 50], &base).map_err(|e| e.to_string())?;
    let worst10 = sel
        .model
        .phi
        .iter()
        .chain(&sel.model.theta)
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    check(
        best >= 0.9 && sel.chosen == 10 && worst_row.max(worst10) <= 1e-9 && consistent,
        format!(
            "two-topic purity {best:.3}; select_T chose {} from [2, 10, 50]; max |row sum - 1| {:e}; \
             counts consistent after every sweep: {consistent}",
            sel.chosen,
            worst_row.max(worst10)
        ),
    )
}

fn c8_span() -> Outcome {
    let words = 20;
    let mut hits = 0;
    for s in 0..50u64 {
        let mut rng = seed::rng(8000 + s);
        let mut segments = Vec::new();
        let mut left = 500;
        while left > 0 {
            let len = rng.gen_range(8..=12).min(left);
            let k = rng.gen_range(0..5);
            segments.push((0..len).map(|_| (k * words + rng.gen_range(0..words)) as u32).collect());
            left -= len;
        }
        let doc = UserDocument::from_segments("u", segments, 10);
        hits += usize::from(topical_span(&doc, 1000, &SpanConfig::default(), s).span.abs_diff(5) <= 1);
    }
    let single = UserDocument::from_segments("u", (0..40).map(|_| vec![3u32; 10]).collect(), 10);
    let one = (0..10).all(|s| topical_span(&single, 1000, &SpanConfig::default(), s).span == 1);
    check(
        hits >= 40 && one,
        format!("modal span within 5 +/- 1 in {hits}/50 runs; single-type documents give span 1: {one}"),
    )
}

fn extract(corpus: &Corpus) -> Vec<FeatureVector> {
    let (docs, vocab) = build_user_docs(corpus, &VocabConfig::default()).unwrap();
    let cfg = LdaConfig {
        topics: 4,
        n_iter: 40,
        seed: 3,
        ..Default::default()
    };
    let model = lda_gibbs(&docs, vocab.len(), &cfg).unwrap();
    let block = topic_features(&model, &docs, 5);
    let registry = FeatureRegistry::standard().with_topics(4);
    let train: Vec<&str> = corpus.user_ids().step_by(2).collect();
    let imputation = ImputationStats::from_training(corpus, train);
    assemble_features(corpus, &registry, &Lexicons::default(), Some(&block), &imputation).unwrap()
}

fn c9_features() -> Outcome {
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyz0123456789".chars().collect();
    let mut rng = seed::rng(90);
    let mut worst_entropy = 0.0f64;
    for k in 1..=alphabet.len() {
        let reps = rng.gen_range(1..5);
        let mut chars: Vec<char> = alphabet[..k].iter().flat_map(|&c| std::iter::repeat_n(c, reps)).collect();
        chars.shuffle(&mut rng);
        let s: String = chars.into_iter().collect();
        worst_entropy = worst_entropy.max((char_entropy([s.as_str()]) - (k as f64).log2()).abs());
    }

    let lex = SentimentLexicon::default();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/sentiment.tsv"))
        .map_err(|e| e.to_string())?;
    let mut pool: Vec<String> = src
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    pool.extend(["the", "account", "today"].map(String::from));
    let mut worst_sum = 0.0f64;
    let mut compound_in_range = true;
    for _ in 0..2000 {
        let n = rng.gen_range(1..30);
        let words: Vec<String> = (0..n).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
        let sc = lex.score_words(&words);
        worst_sum = worst_sum.max((sc.positive + sc.negative + sc.neutral - 1.0).abs());
        compound_in_range &= sc.compound > -1.0 && sc.compound < 1.0;
    }
    let zero = normalize_compound(0.0) == 0.0
        && lex.score_words(&["the", "account", "posted"].map(String::from)).compound == 0.0;

    let corpus = generate_demo(&DemoConfig {
        users: 120,
        ..Default::default()
    });
    let mut erased = corpus.clone();
    for p in erased.profiles.values_mut() {
        p.verified = !p.verified;
    }
    let a = extract(&corpus);
    let b = extract(&erased);
    let blind = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| {
            x.user_id == y.user_id
                && x.missing == y.missing
                && x.values.iter().map(|v| v.to_bits()).eq(y.values.iter().map(|v| v.to_bits()))
        });
    check(
        worst_entropy <= 1e-9 && worst_sum <= 1e-9 && compound_in_range && zero && blind,
        format!(
            "max |H - log2 k| {worst_entropy:e}; max |pos+neg+neu - 1| {worst_sum:e}; compound in (-1,1): \
             {compound_in_range}; zero valence gives 0: {zero}; bit-identical after label flip: {blind}"
        ),
    )
}

fn c10_determinism(demo: &Demo) -> Outcome {
    demo.first_run.clone()?;
    let d = demo.dir.to_string_lossy().to_string();
    run_cli(&[
        "all",
        "--config",
        &format!("{d}/veriscope.toml"),
        "--threads",
        "3",
        "--out",
        &format!("{d}/run2"),
    ])?;
    let a = demo.dir.join("run1");
    let b = demo.dir.join("run2");
    let mut files = Vec::new();
    for sub in ["", "models"] {
        for e in std::fs::read_dir(a.join(sub)).map_err(|e| e.to_string())? {
            let e = e.map_err(|e| e.to_string())?;
            if e.file_type().map_err(|e| e.to_string())?.is_file() {
                files.push(Path::new(sub).join(e.file_name()));
            }
        }
    }
    files.sort();
    let mut differing = Vec::new();
    let mut compared = 0;
    for f in &files {
        if f == Path::new("manifest.json") {
            continue;
        }
        compared += 1;
        if std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() {
            differing.push(f.display().to_string());
        }
    }
    check(
        differing.is_empty() && compared >= 20,
        format!(
            "{compared} artifacts compared across runs with 1 and 3 threads; differing: {}",
            if differing.is_empty() { "none".to_string() } else { differing.join(", ") }
        ),
    )
}

fn main() {
    let root = tempfile::tempdir().expect("temp dir");
    let demo = demo_fixture(root.path());
    let criteria: Vec<Criterion> = vec![
        ("1 end-to-end separability and runtime", Box::new(|| c1_separability(&demo))),
        ("2 AUC oracle", Box::new(c2_auc_oracle)),
        ("3 resampler correctness", Box::new(c3_resamplers)),
        ("4 model correctness", Box::new(c4_models)),
        ("5 importance and selection", Box::new(c5_importance_selection)),
        ("6 clustering", Box::new(c6_clustering)),
        ("7 topics", Box::new(c7_topics)),
        ("8 span estimator", Box::new(c8_span)),
        ("9 feature extraction", Box::new(c9_features)),
        ("10 determinism", Box::new(|| c10_determinism(&demo))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
