//! Pipeline stages. Each stage reads earlier artifacts from the output
//! directory, writes only its own files and returns their relative paths.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use veriscope_core::cluster::{characterize, choose_k, kmeans, normalize, pca2d, top_features, KMeansConfig};
use veriscope_core::corpus::load_corpus;
use veriscope_core::dataset::stratified_split;
use veriscope_core::featurize::{
    assemble_features, topic_feature_name, FeatureFamily, ImputationStats, Lexicons, TopicBlock,
};
use veriscope_core::learn::{
    all_relevant_select, evaluate, gini_importance, train_gbdt, train_logistic, EvalMetrics, GbdtConfig, Model,
};
use veriscope_core::rebalance::{adasyn, smote_tomek, Method};
use veriscope_core::topics::{build_user_docs, select_t, topic_features, topical_span, Vocabulary};
use veriscope_core::{seed, Corpus, FeatureRegistry, IngestionReport};

use crate::config::RunConfig;
use crate::error::{runtime, CliError, Result};
use crate::manifest::RunManifest;
use crate::table::{
    bit, read_json, read_rows, read_split, write_json, write_records, write_rows, write_split, FeatureTable,
};

pub const INGEST_REPORT: &str = "ingest_report.json";
pub const VOCAB: &str = "vocab.txt";
pub const PHI: &str = "phi.csv";
pub const THETA: &str = "theta.csv";
pub const TOP_WORDS: &str = "topics_top_words.json";
pub const TOPIC_SELECTION: &str = "topic_selection.csv";
pub const TOPIC_TRACE: &str = "topic_trace.csv";
pub const FEATURES: &str = "features.csv";
pub const REGISTRY: &str = "registry.json";
pub const SPLIT: &str = "split.csv";
pub const IMPUTATION: &str = "imputation.json";
pub const SELECTION: &str = "selection.csv";
pub const REBALANCE_REPORT: &str = "rebalance_report.json";
pub const METRICS: &str = "metrics.json";
pub const IMPORTANCE: &str = "importance.csv";
pub const CLUSTERS: &str = "clusters.csv";
pub const CLUSTER_PROFILES: &str = "cluster_profiles.json";
pub const CLUSTER_MATRIX: &str = "cluster_matrix.csv";
pub const CLUSTER_KNEE: &str = "cluster_knee.json";
pub const PCA2D: &str = "pca2d.csv";
pub const SPAN: &str = "span.csv";
pub const SCORES: &str = "scores.csv";
pub const REPORT: &str = "report.json";
pub const TOPIC_MODEL: &str = "models/gbdt_topics.json";

pub fn train_file(m: Method) -> String {
    format!("train_{}.csv", m.as_str())
}

pub fn model_file(kind: &str, m: Method) -> String {
    format!("models/{kind}_{}.json", m.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Topics,
    Featurize,
    Select,
    Rebalance,
    Train,
    Evaluate,
    Importance,
    Cluster,
    Span,
    Score,
    Report,
}

/// Order used by `all`. Selection runs before training so models see only
/// confirmed features.
pub const PIPELINE: [Stage; 12] = [
    Stage::Validate,
    Stage::Topics,
    Stage::Featurize,
    Stage::Select,
    Stage::Rebalance,
    Stage::Train,
    Stage::Evaluate,
    Stage::Importance,
    Stage::Cluster,
    Stage::Span,
    Stage::Score,
    Stage::Report,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Topics => "topics",
            Stage::Featurize => "featurize",
            Stage::Select => "select",
            Stage::Rebalance => "rebalance",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Importance => "importance",
            Stage::Cluster => "cluster",
            Stage::Span => "span",
            Stage::Score => "score",
            Stage::Report => "report",
        }
    }

    /// Whether the stage reads the raw input files.
    pub fn needs_input(self) -> bool {
        matches!(self, Stage::Validate | Stage::Topics | Stage::Featurize | Stage::Span)
    }

    fn run(self, ctx: &Ctx) -> Result<Vec<String>> {
        match self {
            Stage::Validate => validate(ctx),
            Stage::Topics => topics(ctx),
            Stage::Featurize => featurize(ctx),
            Stage::Select => select(ctx),
            Stage::Rebalance => rebalance(ctx),
            Stage::Train => train(ctx),
            Stage::Evaluate => evaluate_models(ctx),
            Stage::Importance => importance(ctx),
            Stage::Cluster => cluster(ctx),
            Stage::Span => span(ctx),
            Stage::Score => score(ctx),
            Stage::Report => report(ctx),
        }
    }
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        let out = cfg.output_dir.clone();
        Self { cfg, out }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    /// Path of an upstream artifact, or an error naming its producer.
    fn require(&self, rel: &str, producer: &'static str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingArtifact {
                artifact: rel.to_string(),
                dir: self.out.clone(),
                producer,
            })
        }
    }

    fn seed(&self, label: &str) -> u64 {
        seed::derive_str(self.cfg.seed(), label)
    }

    fn corpus(&self) -> Result<Corpus> {
        self.require(INGEST_REPORT, "validate")?;
        let (corpus, _) = load_corpus(&self.cfg.corpus_paths(), self.cfg.dates()?).map_err(runtime)?;
        Ok(corpus)
    }
}

/// Runs one stage and records its outputs in the manifest.
pub fn run_stage(ctx: &Ctx, stage: Stage) -> Result<()> {
    fs::create_dir_all(ctx.out.join("models")).map_err(runtime)?;
    let start = Instant::now();
    info!("stage {}", stage.name());
    let outputs = stage.run(ctx)?;
    let secs = start.elapsed().as_secs_f64();
    info!("stage {} done in {secs:.2}s", stage.name());
    let mut manifest = RunManifest::load_or_new(&ctx.out, &ctx.cfg.hash())?;
    manifest.record(&ctx.out, stage.name(), secs, &outputs)
}

fn validate(ctx: &Ctx) -> Result<Vec<String>> {
    let (corpus, report) = load_corpus(&ctx.cfg.corpus_paths(), ctx.cfg.dates()?).map_err(runtime)?;
    info!(
        "{} users ({} verified), {} tweets retained",
        corpus.len(),
        report.verified_users,
        report.tweets_retained
    );
    if corpus.is_empty() {
        return Err(runtime(anyhow!("no valid profiles in the input")));
    }
    write_json(&ctx.path(INGEST_REPORT), &report)?;
    Ok(vec![INGEST_REPORT.into()])
}

#[derive(Debug, Serialize, Deserialize)]
struct TopicSelectionRow {
    topics: usize,
    alpha: f64,
    log_likelihood: f64,
    per_token: f64,
    chosen: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopWords {
    topic: String,
    words: Vec<String>,
}

fn topics(ctx: &Ctx) -> Result<Vec<String>> {
    let tc = &ctx.cfg.topics;
    if !tc.enabled {
        info!("topics disabled; nothing to do");
        return Ok(vec![]);
    }
    let corpus = ctx.corpus()?;
    let (docs, vocab) = build_user_docs(&corpus, &tc.vocab()).map_err(runtime)?;
    info!("{} documents, vocabulary of {}", docs.len(), vocab.len());
    let sel = select_t(&docs, vocab.len(), &tc.candidates, &tc.lda(ctx.seed("topics"))).map_err(runtime)?;
    info!("chose T = {}", sel.chosen);
    let model = &sel.model;

    fs::write(ctx.path(VOCAB), vocab.words.iter().map(|w| format!("{w}\n")).collect::<String>()).map_err(runtime)?;
    let mut header = vec!["topic".to_string()];
    header.extend((0..vocab.len()).map(|w| w.to_string()));
    write_records(
        &ctx.path(PHI),
        &header,
        model.phi.iter().enumerate().map(|(k, row)| {
            std::iter::once(topic_feature_name(k))
                .chain(row.iter().map(f64::to_string))
                .collect()
        }),
    )?;

    let block = topic_features(model, &docs, ctx.seed("fold_in"));
    let mut header = vec!["user_id".to_string(), "masked".to_string()];
    header.extend((0..model.topics).map(topic_feature_name));
    write_records(
        &ctx.path(THETA),
        &header,
        block.vectors.iter().map(|(id, v)| {
            [id.clone(), bit(block.masked.contains(id)).to_string()]
                .into_iter()
                .chain(v.iter().map(f64::to_string))
                .collect()
        }),
    )?;

    let top: Vec<TopWords> = model
        .top_words(&vocab, tc.top_words)
        .into_iter()
        .enumerate()
        .map(|(k, words)| TopWords {
            topic: topic_feature_name(k),
            words,
        })
        .collect();
    write_json(&ctx.path(TOP_WORDS), &top)?;
    write_rows(
        &ctx.path(TOPIC_SELECTION),
        sel.table.iter().map(|c| TopicSelectionRow {
            topics: c.topics,
            alpha: c.alpha,
            log_likelihood: c.log_likelihood,
            per_token: c.per_token,
            chosen: bit(c.topics == sel.chosen),
        }),
    )?;
    write_records(
        &ctx.path(TOPIC_TRACE),
        &["sweep".to_string(), "log_likelihood".to_string()],
        model
            .log_likelihood
            .iter()
            .map(|(s, ll)| vec![s.to_string(), ll.to_string()]),
    )?;
    Ok([VOCAB, PHI, THETA, TOP_WORDS, TOPIC_SELECTION, TOPIC_TRACE].map(String::from).to_vec())
}

fn read_theta(ctx: &Ctx) -> Result<TopicBlock> {
    let path = ctx.require(THETA, "topics")?;
    let mut r = csv::Reader::from_path(&path).map_err(runtime)?;
    let mut block = TopicBlock::default();
    for rec in r.records() {
        let rec = rec.map_err(runtime)?;
        let id = rec[0].to_string();
        if &rec[1] == "1" {
            block.masked.insert(id.clone());
        }
        let v = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(runtime)?;
        block.vectors.insert(id, v);
    }
    Ok(block)
}

fn featurize(ctx: &Ctx) -> Result<Vec<String>> {
    ctx.require(INGEST_REPORT, "validate")?;
    let block = if ctx.cfg.topics.enabled {
        Some(read_theta(ctx)?)
    } else {
        None
    };
    let corpus = ctx.corpus()?;
    let n_topics = block
        .as_ref()
        .and_then(|b| b.vectors.values().next())
        .map_or(0, Vec::len);
    let registry = FeatureRegistry::standard().with_topics(n_topics);

    let ids: Vec<String> = corpus.user_ids().map(String::from).collect();
    let labels: Vec<bool> = corpus.profiles.values().map(|p| p.verified).collect();
    let (_, test_idx) = stratified_split(&labels, ctx.cfg.split.test_fraction, ctx.seed("split"));
    let mut is_test = vec![false; ids.len()];
    for i in test_idx {
        is_test[i] = true;
    }
    let train_ids = ids.iter().zip(&is_test).filter(|(_, &t)| !t).map(|(id, _)| id.as_str());
    let imputation = ImputationStats::from_training(&corpus, train_ids);
    let vectors = assemble_features(&corpus, &registry, &Lexicons::default(), block.as_ref(), &imputation)
        .map_err(runtime)?;
    FeatureTable::from_vectors(registry.names(), &vectors).write(&ctx.path(FEATURES))?;
    write_json(&ctx.path(REGISTRY), &registry)?;
    write_split(&ctx.path(SPLIT), &ids, &is_test)?;
    write_json(&ctx.path(IMPUTATION), &imputation)?;
    info!("{} users x {} features", vectors.len(), registry.len());
    Ok([FEATURES, REGISTRY, SPLIT, IMPUTATION].map(String::from).to_vec())
}

/// Feature table plus the train/test partition.
fn features_and_split(ctx: &Ctx) -> Result<(FeatureTable, BTreeMap<String, bool>)> {
    let table = FeatureTable::read(&ctx.require(FEATURES, "featurize")?)?;
    let split = read_split(&ctx.require(SPLIT, "featurize")?)?;
    Ok((table, split))
}

fn training_rows(table: &FeatureTable, split: &BTreeMap<String, bool>) -> FeatureTable {
    table.filter(|id| split.get(id) == Some(&false))
}

#[derive(Debug, Serialize, Deserialize)]
struct SelectionRow {
    feature: String,
    status: String,
    hits: usize,
    n_iter: usize,
    mean_importance: f64,
}

fn select(ctx: &Ctx) -> Result<Vec<String>> {
    if !ctx.cfg.select.enabled {
        info!("selection disabled; models use every feature");
        return Ok(vec![]);
    }
    let (table, split) = features_and_split(ctx)?;
    let train = training_rows(&table, &split).dataset();
    let cfg = ctx.cfg.select.to_core(&ctx.cfg.model.gbdt);
    let v = all_relevant_select(&train, &cfg, ctx.seed("select")).map_err(runtime)?;
    info!("{} of {} features confirmed", v.confirmed().len(), v.features.len());
    write_rows(
        &ctx.path(SELECTION),
        (0..v.features.len()).map(|j| SelectionRow {
            feature: v.features[j].clone(),
            status: v.status[j].as_str().to_string(),
            hits: v.hits[j],
            n_iter: v.n_iter,
            mean_importance: v.mean_importance[j],
        }),
    )?;
    Ok(vec![SELECTION.into()])
}

#[derive(Debug, Serialize)]
struct ResampledSet {
    method: Method,
    file: String,
    rows: usize,
    positives: usize,
    negatives: usize,
    synthetic: usize,
    details: serde_json::Value,
}

#[derive(Debug, Serialize)]
struct RebalanceReport {
    primary: Method,
    k: usize,
    beta: f64,
    sets: Vec<ResampledSet>,
}

fn rebalance(ctx: &Ctx) -> Result<Vec<String>> {
    let (table, split) = features_and_split(ctx)?;
    let train = training_rows(&table, &split);
    let masks: BTreeMap<String, String> = train.ids.iter().cloned().zip(train.missing.iter().cloned()).collect();
    let ds = train.dataset();
    let cfg = veriscope_core::rebalance::ResampleConfig {
        seed: ctx.seed("rebalance"),
        ..ctx.cfg.resample()
    };
    let mut outputs = Vec::new();
    let mut sets = Vec::new();
    for m in ctx.cfg.rebalance.methods() {
        let (out, details) = match m {
            Method::None => (ds.clone(), serde_json::Value::Null),
            Method::Adasyn => {
                let (d, r) = adasyn(&ds, &cfg).map_err(runtime)?;
                (d, serde_json::to_value(r).map_err(runtime)?)
            }
            Method::Smotetomek => {
                let (d, r) = smote_tomek(&ds, &cfg).map_err(runtime)?;
                (d, serde_json::to_value(r).map_err(runtime)?)
            }
        };
        let file = train_file(m);
        FeatureTable::from_resampled(&out, &masks).write(&ctx.path(&file))?;
        let (neg, pos) = out.class_counts();
        sets.push(ResampledSet {
            method: m,
            file: file.clone(),
            rows: out.len(),
            positives: pos,
            negatives: neg,
            synthetic: out
                .provenance
                .iter()
                .filter(|p| **p == veriscope_core::Provenance::Synthetic)
                .count(),
            details,
        });
        info!("{}: {} rows ({pos} verified, {neg} not)", m.as_str(), out.len());
        outputs.push(file);
    }
    write_json(
        &ctx.path(REBALANCE_REPORT),
        &RebalanceReport {
            primary: ctx.cfg.rebalance.method,
            k: ctx.cfg.rebalance.k,
            beta: ctx.cfg.rebalance.beta,
            sets,
        },
    )?;
    outputs.push(REBALANCE_REPORT.into());
    Ok(outputs)
}

/// Confirmed feature names, or every feature when selection is off or
/// confirmed nothing.
fn model_features(ctx: &Ctx, table: &FeatureTable) -> Result<Vec<String>> {
    if !ctx.cfg.select.enabled {
        return Ok(table.names.clone());
    }
    let rows: Vec<SelectionRow> = read_rows(&ctx.require(SELECTION, "select")?)?;
    let confirmed: Vec<String> = rows
        .into_iter()
        .filter(|r| r.status == "confirmed")
        .map(|r| r.feature)
        .collect();
    if confirmed.is_empty() {
        warn!("selection confirmed no features; training on all of them");
        return Ok(table.names.clone());
    }
    Ok(confirmed)
}

fn columns(names: &[String], wanted: &[String]) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|w| {
            names
                .iter()
                .position(|n| n == w)
                .ok_or_else(|| runtime(anyhow!("feature {w:?} missing from the feature table")))
        })
        .collect()
}

fn save_model(ctx: &Ctx, rel: &str, model: &Model) -> Result<()> {
    write_json(&ctx.path(rel), model)
}

fn load_model(ctx: &Ctx, rel: &str) -> Result<Model> {
    read_json(&ctx.require(rel, "train")?)
}

fn gbdt_config(ctx: &Ctx) -> GbdtConfig {
    ctx.cfg.model.gbdt.to_core(ctx.seed("gbdt"))
}

fn topic_columns(ctx: &Ctx, table: &FeatureTable, selected: &[String]) -> Result<Vec<String>> {
    let registry: FeatureRegistry = read_json(&ctx.require(REGISTRY, "featurize")?)?;
    let all: Vec<String> = registry
        .indices_of(FeatureFamily::Topic)
        .into_iter()
        .map(|j| registry.features[j].name.clone())
        .filter(|n| table.names.contains(n))
        .collect();
    let kept: Vec<String> = all.iter().filter(|n| selected.contains(n)).cloned().collect();
    Ok(if kept.is_empty() || !ctx.cfg.select.enabled {
        all
    } else {
        kept
    })
}

fn train(ctx: &Ctx) -> Result<Vec<String>> {
    let (table, _) = features_and_split(ctx)?;
    let mut sets = Vec::new();
    for m in ctx.cfg.rebalance.methods() {
        sets.push((m, FeatureTable::read(&ctx.require(&train_file(m), "rebalance")?)?));
    }
    let selected = model_features(ctx, &table)?;
    info!("training on {} features", selected.len());
    let mut outputs = Vec::new();
    for (m, set) in &sets {
        let ds = set.dataset().select_columns(&columns(&set.names, &selected)?);
        let lr = train_logistic(&ds, &ctx.cfg.model.logistic.to_core()).map_err(runtime)?;
        let gb = train_gbdt(&ds, &gbdt_config(ctx)).map_err(runtime)?;
        for w in &gb.warnings {
            warn!("{}: {w}", m.as_str());
        }
        for (kind, model) in [("logistic", Model::Logistic(lr)), ("gbdt", Model::Gbdt(gb))] {
            let rel = model_file(kind, *m);
            save_model(ctx, &rel, &model)?;
            outputs.push(rel);
        }
    }
    if ctx.cfg.topics.enabled {
        let (_, primary) = sets
            .iter()
            .find(|(m, _)| *m == ctx.cfg.rebalance.method)
            .expect("primary method is always materialised");
        let topic_cols = topic_columns(ctx, primary, &selected)?;
        if topic_cols.is_empty() {
            warn!("no topic features; skipping the topic-only model");
        } else {
            let ds = primary.dataset().select_columns(&columns(&primary.names, &topic_cols)?);
            let cfg = ctx.cfg.model.topic_gbdt.to_core(ctx.seed("topic_gbdt"));
            let gb = train_gbdt(&ds, &cfg).map_err(runtime)?;
            save_model(ctx, TOPIC_MODEL, &Model::Gbdt(gb))?;
            outputs.push(TOPIC_MODEL.into());
        }
    }
    Ok(outputs)
}

fn dataset_label(m: Method) -> &'static str {
    match m {
        Method::None => "Original imbalanced data",
        Method::Adasyn => "ADASYN class rebalancing",
        Method::Smotetomek => "SMOTETomek class rebalancing",
    }
}

fn classifier_label(model: &Model) -> &'static str {
    match model {
        Model::Logistic(_) => "Logistic Regression",
        Model::Gbdt(_) => "Gradient Boosted Trees",
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsRow {
    #[serde(rename = "Dataset")]
    dataset: String,
    #[serde(rename = "Classifier")]
    classifier: String,
    model_file: String,
    features: usize,
    #[serde(flatten)]
    metrics: EvalMetrics,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsReport {
    threshold: f64,
    test_size: usize,
    test_verified: usize,
    /// Full feature set, one row per training set and classifier.
    table2: Vec<MetricsRow>,
    /// Topic features only.
    table4: Vec<MetricsRow>,
}

fn evaluate_models(ctx: &Ctx) -> Result<Vec<String>> {
    let (table, split) = features_and_split(ctx)?;
    let test = table.filter(|id| split.get(id) == Some(&true)).dataset();
    let threshold = ctx.cfg.model.threshold;
    let row = |rel: &str, dataset: &str| -> Result<MetricsRow> {
        let model = load_model(ctx, rel)?;
        let input = model.project(&test).map_err(runtime)?;
        let metrics = evaluate(&model, &input, threshold).map_err(runtime)?;
        Ok(MetricsRow {
            dataset: dataset.to_string(),
            classifier: classifier_label(&model).to_string(),
            model_file: rel.to_string(),
            features: model.feature_names().len(),
            metrics,
        })
    };
    let mut table2 = Vec::new();
    for m in ctx.cfg.rebalance.methods() {
        for kind in ["logistic", "gbdt"] {
            let r = row(&model_file(kind, m), dataset_label(m))?;
            info!(
                "{} / {}: accuracy {:.3}, AUC {}",
                r.dataset,
                r.classifier,
                r.metrics.accuracy,
                r.metrics.roc_auc.map_or("n/a".into(), |a| format!("{a:.3}"))
            );
            table2.push(r);
        }
    }
    let mut table4 = Vec::new();
    if ctx.cfg.topics.enabled && ctx.path(TOPIC_MODEL).is_file() {
        table4.push(row(TOPIC_MODEL, "Topic features")?);
    }
    write_json(
        &ctx.path(METRICS),
        &MetricsReport {
            threshold,
            test_size: test.len(),
            test_verified: test.labels.iter().filter(|&&y| y).count(),
            table2,
            table4,
        },
    )?;
    Ok(vec![METRICS.into()])
}

#[derive(Debug, Serialize, Deserialize)]
struct ImportanceRow {
    feature: String,
    mean_importance: f64,
    mean_rank: f64,
    rank_one: usize,
}

fn importance(ctx: &Ctx) -> Result<Vec<String>> {
    ctx.require(FEATURES, "featurize")?;
    let primary = ctx.cfg.rebalance.method;
    let set = FeatureTable::read(&ctx.require(&train_file(primary), "rebalance")?)?;
    let ic = &ctx.cfg.importance;
    let base = GbdtConfig {
        n_rounds: ic.n_rounds,
        early_stopping: None,
        ..gbdt_config(ctx)
    };
    let ranked = gini_importance(&set.dataset(), &base, &ic.grid(), ic.repeats, ctx.seed("importance"))
        .map_err(runtime)?;
    write_rows(
        &ctx.path(IMPORTANCE),
        ranked.into_iter().map(|f| ImportanceRow {
            feature: f.feature,
            mean_importance: f.mean_importance,
            mean_rank: f.mean_rank,
            rank_one: f.rank_one,
        }),
    )?;
    Ok(vec![IMPORTANCE.into()])
}

#[derive(Debug, Serialize)]
struct ClusterArtifact {
    k: usize,
    inertia: f64,
    iterations: usize,
    normalization: veriscope_core::cluster::Normalization,
    clustering_features: Vec<String>,
    profiles: Vec<veriscope_core::cluster::ClusterProfile>,
}

fn cluster(ctx: &Ctx) -> Result<Vec<String>> {
    let (table, split) = features_and_split(ctx)?;
    let ranked: Vec<ImportanceRow> = read_rows(&ctx.require(IMPORTANCE, "importance")?)?;
    let model = load_model(ctx, &model_file("gbdt", ctx.cfg.rebalance.method))?;
    let cc = &ctx.cfg.cluster;
    let ranked: Vec<(String, f64)> = ranked.into_iter().map(|r| (r.feature, r.mean_rank)).collect();
    let top = top_features(&table.names, &ranked, cc.top_features);
    let ds = table.dataset();
    let picked = ds.select_columns(&top);
    let points = normalize(&picked.rows, cc.normalization);
    let kcfg = KMeansConfig {
        k: cc.k,
        restarts: cc.restarts,
        ..KMeansConfig::default()
    };
    let result = kmeans(&points, &kcfg, ctx.seed("cluster")).map_err(runtime)?;
    let held_out: Vec<bool> = ds.ids.iter().map(|id| split.get(id) == Some(&true)).collect();
    let profiles = characterize(&result, &ds, &model, &held_out, ctx.cfg.model.threshold).map_err(runtime)?;
    info!("k = {}, inertia {:.3}", result.k, result.inertia);

    let mut outputs = Vec::new();
    write_records(
        &ctx.path(CLUSTERS),
        &["user_id".to_string(), "cluster".to_string()],
        ds.ids
            .iter()
            .zip(&result.assignment)
            .map(|(id, c)| vec![id.clone(), c.to_string()]),
    )?;
    outputs.push(CLUSTERS.to_string());
    write_json(
        &ctx.path(CLUSTER_PROFILES),
        &ClusterArtifact {
            k: result.k,
            inertia: result.inertia,
            iterations: result.iterations,
            normalization: cc.normalization,
            clustering_features: picked.feature_names.clone(),
            profiles,
        },
    )?;
    outputs.push(CLUSTER_PROFILES.to_string());

    let mut header = vec!["user_id".to_string(), "cluster".to_string()];
    header.extend(picked.feature_names.iter().cloned());
    write_records(
        &ctx.path(CLUSTER_MATRIX),
        &header,
        ds.ids.iter().zip(&result.assignment).zip(&points).map(|((id, c), p)| {
            [id.clone(), c.to_string()]
                .into_iter()
                .chain(p.iter().map(f64::to_string))
                .collect()
        }),
    )?;
    outputs.push(CLUSTER_MATRIX.to_string());

    let proj = pca2d(&points);
    write_records(
        &ctx.path(PCA2D),
        &["user_id", "cluster", "pc1", "pc2"].map(String::from),
        ds.ids
            .iter()
            .zip(&result.assignment)
            .zip(&proj)
            .map(|((id, c), p)| vec![id.clone(), c.to_string(), p[0].to_string(), p[1].to_string()]),
    )?;
    outputs.push(PCA2D.to_string());

    if !cc.candidates.is_empty() {
        let knee = choose_k(&points, &cc.candidates, cc.restarts, ctx.seed("choose_k")).map_err(runtime)?;
        info!("inertia knee at k = {} (clear: {})", knee.recommended, knee.clear_knee);
        write_json(&ctx.path(CLUSTER_KNEE), &knee)?;
        outputs.push(CLUSTER_KNEE.to_string());
    }
    Ok(outputs)
}

#[derive(Debug, Serialize, Deserialize)]
struct SpanRow {
    user_id: String,
    span: usize,
    low_confidence: u8,
}

fn span(ctx: &Ctx) -> Result<Vec<String>> {
    if !ctx.cfg.topics.enabled {
        info!("topics disabled; no span estimates");
        return Ok(vec![]);
    }
    let stored = fs::read_to_string(ctx.require(VOCAB, "topics")?).map_err(runtime)?;
    let corpus = ctx.corpus()?;
    let tc = &ctx.cfg.topics;
    let (docs, vocab) = build_user_docs(&corpus, &tc.vocab()).map_err(runtime)?;
    let stored = Vocabulary::new(stored.lines().map(String::from).collect());
    if stored != vocab {
        return Err(runtime(anyhow!("{VOCAB} does not match the current corpus; re-run topics")));
    }
    let cfg = ctx.cfg.span.to_core(tc.min_tokens);
    let base = ctx.seed("span");
    let rows: Vec<SpanRow> = docs
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let est = topical_span(d, vocab.len(), &cfg, seed::derive(base, i as u64));
            SpanRow {
                user_id: est.user_id,
                span: est.span,
                low_confidence: bit(est.low_confidence),
            }
        })
        .collect();
    write_rows(&ctx.path(SPAN), rows)?;
    Ok(vec![SPAN.into()])
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    user_id: String,
    label: u8,
    partition: String,
    probability: f64,
}

fn score(ctx: &Ctx) -> Result<Vec<String>> {
    let (table, split) = features_and_split(ctx)?;
    let model = load_model(ctx, &model_file("gbdt", ctx.cfg.rebalance.method))?;
    let ds = model.project(&table.dataset()).map_err(runtime)?;
    let probs = model.predict_all(&ds.rows).map_err(runtime)?;
    write_rows(
        &ctx.path(SCORES),
        ds.ids.iter().zip(&ds.labels).zip(probs).map(|((id, &y), p)| ScoreRow {
            user_id: id.clone(),
            label: bit(y),
            partition: if split.get(id) == Some(&true) { "test" } else { "train" }.into(),
            probability: p,
        }),
    )?;
    Ok(vec![SCORES.into()])
}

#[derive(Debug, Serialize)]
struct Table3Row {
    cluster: String,
    population: usize,
    verified_fraction: f64,
    held_out: usize,
    #[serde(rename = "Accuracy")]
    accuracy: Option<f64>,
    #[serde(rename = "ROC AUC Score")]
    roc_auc: Option<f64>,
    metrics_suppressed: bool,
}

#[derive(Debug, Default, Serialize)]
struct SelectionSummary {
    confirmed: usize,
    tentative: usize,
    rejected: usize,
    confirmed_topics: usize,
    topic_features: usize,
}

#[derive(Debug, Serialize)]
struct SpanSummary {
    users: usize,
    low_confidence: usize,
    mean_span_verified: Option<f64>,
    mean_span_non_verified: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Report {
    config_hash: String,
    seed: u64,
    users: usize,
    verified_users: usize,
    table2: serde_json::Value,
    table3: Vec<Table3Row>,
    table4: serde_json::Value,
    top_features: Vec<String>,
    selection: Option<SelectionSummary>,
    topic_count: Option<usize>,
    recommended_k: Option<usize>,
    clear_knee: Option<bool>,
    span: Option<SpanSummary>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn report(ctx: &Ctx) -> Result<Vec<String>> {
    let metrics: serde_json::Value = read_json(&ctx.require(METRICS, "evaluate")?)?;
    let ingest: IngestionReport = read_json(&ctx.require(INGEST_REPORT, "validate")?)?;
    let profiles: serde_json::Value = read_json(&ctx.require(CLUSTER_PROFILES, "cluster")?)?;
    let table3 = profiles["profiles"]
        .as_array()
        .map(|ps| {
            ps.iter()
                .map(|p| Table3Row {
                    cluster: format!("C{}", p["cluster"]),
                    population: p["population"].as_u64().unwrap_or(0) as usize,
                    verified_fraction: p["verified_fraction"].as_f64().unwrap_or(f64::NAN),
                    held_out: p["held_out"].as_u64().unwrap_or(0) as usize,
                    accuracy: p["accuracy"].as_f64(),
                    roc_auc: p["roc_auc"].as_f64(),
                    metrics_suppressed: p["metrics_suppressed"].as_bool().unwrap_or(true),
                })
                .collect()
        })
        .unwrap_or_default();
    let importance: Vec<ImportanceRow> = read_rows(&ctx.require(IMPORTANCE, "importance")?)?;
    let selection = if ctx.cfg.select.enabled {
        let rows: Vec<SelectionRow> = read_rows(&ctx.require(SELECTION, "select")?)?;
        let mut s = SelectionSummary::default();
        for r in &rows {
            let is_topic = r.feature.starts_with("topic_");
            s.topic_features += usize::from(is_topic);
            match r.status.as_str() {
                "confirmed" => {
                    s.confirmed += 1;
                    s.confirmed_topics += usize::from(is_topic);
                }
                "tentative" => s.tentative += 1,
                _ => s.rejected += 1,
            }
        }
        Some(s)
    } else {
        None
    };
    let topic_count = if ctx.cfg.topics.enabled {
        let rows: Vec<TopicSelectionRow> = read_rows(&ctx.require(TOPIC_SELECTION, "topics")?)?;
        rows.iter().find(|r| r.chosen == 1).map(|r| r.topics)
    } else {
        None
    };
    let knee: Option<serde_json::Value> = if ctx.path(CLUSTER_KNEE).is_file() {
        Some(read_json(&ctx.path(CLUSTER_KNEE))?)
    } else {
        None
    };
    let span = if ctx.cfg.topics.enabled {
        let rows: Vec<SpanRow> = read_rows(&ctx.require(SPAN, "span")?)?;
        let (table, _) = features_and_split(ctx)?;
        let verified: BTreeSet<&str> = table
            .ids
            .iter()
            .zip(&table.labels)
            .filter(|(_, &y)| y)
            .map(|(id, _)| id.as_str())
            .collect();
        let confident = || rows.iter().filter(|r| r.low_confidence == 0);
        let v: Vec<f64> = confident()
            .filter(|r| verified.contains(r.user_id.as_str()))
            .map(|r| r.span as f64)
            .collect();
        let nv: Vec<f64> = confident()
            .filter(|r| !verified.contains(r.user_id.as_str()))
            .map(|r| r.span as f64)
            .collect();
        Some(SpanSummary {
            users: rows.len(),
            low_confidence: rows.iter().filter(|r| r.low_confidence == 1).count(),
            mean_span_verified: mean(&v),
            mean_span_non_verified: mean(&nv),
        })
    } else {
        None
    };
    let report = Report {
        config_hash: ctx.cfg.hash(),
        seed: ctx.cfg.seed(),
        users: ingest.users,
        verified_users: ingest.verified_users,
        table2: metrics["table2"].clone(),
        table3,
        table4: metrics["table4"].clone(),
        top_features: importance.into_iter().take(10).map(|r| r.feature).collect(),
        selection,
        topic_count,
        recommended_k: knee.as_ref().and_then(|k| k["recommended"].as_u64()).map(|k| k as usize),
        clear_knee: knee.as_ref().and_then(|k| k["clear_knee"].as_bool()),
        span,
    };
    write_json(&ctx.path(REPORT), &report)?;
    Ok(vec![REPORT.into()])
}
