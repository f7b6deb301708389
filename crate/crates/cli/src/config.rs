//! Run configuration: one TOML file, `VERISCOPE_*` environment overrides, then
//! command-line overrides. Later sources win.

use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use veriscope_core::cluster::Normalization;
use veriscope_core::corpus::CorpusPaths;
use veriscope_core::learn::{EarlyStopping, GbdtConfig, HyperGrid, LogisticConfig, SelectConfig};
use veriscope_core::rebalance::{Method, ResampleConfig};
use veriscope_core::topics::{AlphaMode, LdaConfig, SpanConfig, VocabConfig};
use veriscope_core::CorpusDates;

use crate::error::CliError;

pub const ENV_PREFIX: &str = "VERISCOPE_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Required; there is no clock-derived default.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// 0 lets the thread pool pick. Not part of the config hash.
    pub threads: usize,
    pub input: InputConfig,
    pub window: WindowConfig,
    pub split: SplitConfig,
    pub rebalance: RebalanceConfig,
    pub model: ModelConfig,
    pub importance: ImportanceConfig,
    pub select: SelectionConfig,
    pub topics: TopicsConfig,
    pub cluster: ClusterConfig,
    pub span: SpanSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: PathBuf::from("out"),
            threads: 0,
            input: InputConfig::default(),
            window: WindowConfig::default(),
            split: SplitConfig::default(),
            rebalance: RebalanceConfig::default(),
            model: ModelConfig::default(),
            importance: ImportanceConfig::default(),
            select: SelectionConfig::default(),
            topics: TopicsConfig::default(),
            cluster: ClusterConfig::default(),
            span: SpanSection::default(),
        }
    }
}

/// Either a directory holding the four standard file names, or explicit
/// paths (which take precedence per file).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub dir: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub timeseries: Option<PathBuf>,
    pub external_scores: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub snapshot: DateTime<Utc>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            start: Utc.with_ymd_and_hms(2017, 6, 1, 0, 0, 0).unwrap(),
            end: Utc.with_ymd_and_hms(2018, 5, 31, 23, 59, 59).unwrap(),
            snapshot: Utc.with_ymd_and_hms(2018, 6, 1, 0, 0, 0).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RebalanceConfig {
    /// Training set used by the main model (scores, clusters).
    pub method: Method,
    /// Every training set to build; the main method is always included.
    pub compare: Vec<Method>,
    pub k: usize,
    pub beta: f64,
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        Self {
            method: Method::Adasyn,
            compare: Method::ALL.to_vec(),
            k: 5,
            beta: 1.0,
        }
    }
}

impl RebalanceConfig {
    /// Methods to materialise, in canonical order.
    pub fn methods(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| *m == self.method || self.compare.contains(m))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostingConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample: f64,
    /// Rounds without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for BoostingConfig {
    fn default() -> Self {
        Self::from(GbdtConfig::default())
    }
}

impl From<GbdtConfig> for BoostingConfig {
    fn from(g: GbdtConfig) -> Self {
        let es = g.early_stopping;
        Self {
            n_rounds: g.n_rounds,
            max_depth: g.max_depth,
            eta: g.eta,
            lambda: g.lambda,
            gamma: g.gamma,
            min_child_weight: g.min_child_weight,
            subsample: g.subsample,
            colsample: g.colsample,
            patience: es.map_or(0, |e| e.patience),
            validation_fraction: es.map_or(EarlyStopping::default().validation_fraction, |e| e.validation_fraction),
        }
    }
}

impl BoostingConfig {
    pub fn to_core(&self, seed: u64) -> GbdtConfig {
        GbdtConfig {
            n_rounds: self.n_rounds,
            max_depth: self.max_depth,
            eta: self.eta,
            lambda: self.lambda,
            gamma: self.gamma,
            min_child_weight: self.min_child_weight,
            subsample: self.subsample,
            colsample: self.colsample,
            early_stopping: (self.patience > 0).then_some(EarlyStopping {
                patience: self.patience,
                validation_fraction: self.validation_fraction,
            }),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub threshold: f64,
    pub logistic: LogisticSection,
    pub gbdt: BoostingConfig,
    /// Classifier over topic features only.
    pub topic_gbdt: BoostingConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            logistic: LogisticSection::default(),
            gbdt: BoostingConfig::default(),
            topic_gbdt: BoostingConfig::from(GbdtConfig::topic_variant()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticSection {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2: f64,
    pub tolerance: f64,
}

impl Default for LogisticSection {
    fn default() -> Self {
        let c = LogisticConfig::default();
        Self {
            learning_rate: c.learning_rate,
            max_epochs: c.max_epochs,
            l2: c.l2,
            tolerance: c.tolerance,
        }
    }
}

impl LogisticSection {
    pub fn to_core(&self) -> LogisticConfig {
        LogisticConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            l2: self.l2,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportanceConfig {
    pub repeats: usize,
    pub n_rounds: usize,
    pub colsample: Vec<f64>,
    pub subsample: Vec<f64>,
    pub min_child_weight: Vec<f64>,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        let g = HyperGrid::default();
        Self {
            repeats: 100,
            n_rounds: 50,
            colsample: g.colsample,
            subsample: g.subsample,
            min_child_weight: g.min_child_weight,
        }
    }
}

impl ImportanceConfig {
    pub fn grid(&self) -> HyperGrid {
        HyperGrid {
            colsample: self.colsample.clone(),
            subsample: self.subsample.clone(),
            min_child_weight: self.min_child_weight.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// When false, models train on every registry feature.
    pub enabled: bool,
    pub n_iter: usize,
    pub alpha: f64,
    pub n_rounds: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let c = SelectConfig::default();
        Self {
            enabled: true,
            n_iter: c.n_iter,
            alpha: c.alpha,
            n_rounds: c.gbdt.n_rounds,
        }
    }
}

impl SelectionConfig {
    pub fn to_core(&self, gbdt: &BoostingConfig) -> SelectConfig {
        SelectConfig {
            n_iter: self.n_iter,
            alpha: self.alpha,
            gbdt: GbdtConfig {
                n_rounds: self.n_rounds,
                early_stopping: None,
                ..gbdt.to_core(0)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub enabled: bool,
    /// Candidate topic counts; the best by per-token likelihood is kept.
    pub candidates: Vec<usize>,
    // The paper prints T/50 but also says the hyperparameter sum is held
    // constant, which only 50/T does. 50/T is the default; "t_over_fifty"
    // gives the printed value.
    pub alpha: AlphaMode,
    pub beta: f64,
    pub n_iter: usize,
    pub min_df: usize,
    pub min_tokens: usize,
    pub top_words: usize,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        let lda = LdaConfig::default();
        let vocab = VocabConfig::default();
        Self {
            enabled: true,
            candidates: vec![30, 50, 100, 150, 300],
            alpha: lda.alpha,
            beta: lda.beta,
            n_iter: lda.n_iter,
            min_df: vocab.min_df,
            min_tokens: vocab.min_tokens,
            top_words: 10,
        }
    }
}

impl TopicsConfig {
    pub fn vocab(&self) -> VocabConfig {
        VocabConfig {
            min_df: self.min_df,
            min_tokens: self.min_tokens,
            ..VocabConfig::default()
        }
    }

    pub fn lda(&self, seed: u64) -> LdaConfig {
        LdaConfig {
            topics: self.candidates.first().copied().unwrap_or(0),
            alpha: self.alpha,
            beta: self.beta,
            n_iter: self.n_iter,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub k: usize,
    pub restarts: usize,
    /// Number of top-ranked features clustered on.
    pub top_features: usize,
    pub normalization: Normalization,
    /// Candidate k values for the inertia-curve report; empty skips it.
    pub candidates: Vec<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 8,
            restarts: 10,
            top_features: 30,
            normalization: Normalization::default(),
            candidates: (2..=12).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanSection {
    pub gamma: f64,
    pub beta: f64,
    pub n_iter: usize,
}

impl Default for SpanSection {
    fn default() -> Self {
        let c = SpanConfig::default();
        Self {
            gamma: c.gamma,
            beta: c.beta,
            n_iter: c.n_iter,
        }
    }
}

impl SpanSection {
    pub fn to_core(&self, min_tokens: usize) -> SpanConfig {
        SpanConfig {
            gamma: self.gamma,
            beta: self.beta,
            n_iter: self.n_iter,
            min_tokens,
        }
    }
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn corpus_paths(&self) -> CorpusPaths {
        let base = CorpusPaths::in_dir(self.input.dir.as_deref().unwrap_or(Path::new(".")));
        CorpusPaths {
            profiles: self.input.profiles.clone().unwrap_or(base.profiles),
            tweets: self.input.tweets.clone().unwrap_or(base.tweets),
            series: self.input.timeseries.clone().unwrap_or(base.series),
            external: self.input.external_scores.clone().unwrap_or(base.external),
        }
    }

    pub fn dates(&self) -> Result<CorpusDates, CliError> {
        CorpusDates::new(self.window.snapshot, self.window.start, self.window.end)
            .map_err(|e| CliError::Config(vec![e.to_string()]))
    }

    pub fn resample(&self) -> ResampleConfig {
        ResampleConfig {
            k: self.rebalance.k,
            beta: self.rebalance.beta,
            seed: self.seed(),
        }
    }

    /// SHA-256 over the canonical JSON form, leaving out fields that do not
    /// change results (thread count, output location).
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("threads");
            obj.remove("output_dir");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    /// Every problem at once; `needs_input` adds existence checks on the
    /// four input files.
    pub fn validate(&self, needs_input: bool) -> Result<(), CliError> {
        let mut errs = Vec::new();
        if self.seed.is_none() {
            errs.push("seed is required (set `seed`, VERISCOPE_SEED or --seed)".to_string());
        }
        if let Err(e) = CorpusDates::new(self.window.snapshot, self.window.start, self.window.end) {
            errs.push(e.to_string());
        }
        if needs_input {
            let p = self.corpus_paths();
            for (key, path) in [
                ("profiles", &p.profiles),
                ("tweets", &p.tweets),
                ("timeseries", &p.series),
                ("external_scores", &p.external),
            ] {
                if !path.is_file() {
                    errs.push(format!("input.{key}: {} does not exist", path.display()));
                }
            }
        }
        let frac = self.split.test_fraction;
        if !(frac > 0.0 && frac < 1.0) {
            errs.push(format!("split.test_fraction must lie in (0, 1), got {frac}"));
        }
        if let Err(e) = self.resample_unseeded().validate() {
            errs.push(format!("rebalance: {e}"));
        }
        let t = self.model.threshold;
        if !(0.0..=1.0).contains(&t) {
            errs.push(format!("model.threshold must lie in [0, 1], got {t}"));
        }
        for (name, b) in [("model.gbdt", &self.model.gbdt), ("model.topic_gbdt", &self.model.topic_gbdt)] {
            check_boosting(name, b, &mut errs);
        }
        if self.model.logistic.max_epochs == 0 || self.model.logistic.learning_rate <= 0.0 || self.model.logistic.l2 < 0.0 {
            errs.push("model.logistic needs max_epochs >= 1, learning_rate > 0 and l2 >= 0".into());
        }
        let imp = &self.importance;
        if imp.repeats == 0 || imp.n_rounds == 0 {
            errs.push("importance.repeats and importance.n_rounds must be at least 1".into());
        }
        if imp.colsample.is_empty() || imp.subsample.is_empty() || imp.min_child_weight.is_empty() {
            errs.push("importance grid axes must be non-empty".into());
        }
        if imp.colsample.iter().chain(&imp.subsample).any(|&f| !(f > 0.0 && f <= 1.0)) {
            errs.push("importance sampling fractions must lie in (0, 1]".into());
        }
        if self.select.enabled {
            if self.select.n_iter < 5 {
                errs.push(format!("select.n_iter must be at least 5, got {}", self.select.n_iter));
            }
            if !(self.select.alpha > 0.0 && self.select.alpha < 1.0) {
                errs.push(format!("select.alpha must lie in (0, 1), got {}", self.select.alpha));
            }
            if self.select.n_rounds == 0 {
                errs.push("select.n_rounds must be at least 1".into());
            }
        }
        let tp = &self.topics;
        if tp.enabled {
            if tp.candidates.is_empty() || tp.candidates.iter().any(|&c| c < 2) {
                errs.push("topics.candidates must be non-empty with every count >= 2".into());
            }
            if tp.n_iter == 0 || tp.beta <= 0.0 {
                errs.push("topics needs n_iter >= 1 and beta > 0".into());
            }
            if let AlphaMode::Fixed(a) = tp.alpha {
                if a <= 0.0 {
                    errs.push(format!("topics.alpha must be positive, got {a}"));
                }
            }
            if tp.top_words == 0 {
                errs.push("topics.top_words must be at least 1".into());
            }
            if self.span.gamma <= 0.0 || self.span.beta <= 0.0 || self.span.n_iter == 0 {
                errs.push("span needs gamma > 0, beta > 0 and n_iter >= 1".into());
            }
        }
        let cl = &self.cluster;
        if cl.k == 0 || cl.top_features == 0 || cl.restarts == 0 {
            errs.push("cluster.k, cluster.restarts and cluster.top_features must be at least 1".into());
        }
        if !cl.candidates.is_empty() && (cl.candidates.len() < 3 || cl.candidates.windows(2).any(|w| w[0] >= w[1]) || cl.candidates[0] == 0) {
            errs.push("cluster.candidates must be empty or at least 3 strictly increasing positive values".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }

    fn resample_unseeded(&self) -> ResampleConfig {
        ResampleConfig {
            k: self.rebalance.k,
            beta: self.rebalance.beta,
            seed: 0,
        }
    }
}

fn check_boosting(name: &str, b: &BoostingConfig, errs: &mut Vec<String>) {
    if b.n_rounds == 0 || b.max_depth == 0 {
        errs.push(format!("{name}: n_rounds and max_depth must be at least 1"));
    }
    if !(b.eta >= 0.0 && b.lambda >= 0.0 && b.gamma >= 0.0 && b.min_child_weight >= 0.0) {
        errs.push(format!("{name}: eta, lambda, gamma and min_child_weight must be non-negative"));
    }
    if !(b.subsample > 0.0 && b.subsample <= 1.0 && b.colsample > 0.0 && b.colsample <= 1.0) {
        errs.push(format!("{name}: subsample and colsample must lie in (0, 1]"));
    }
    if b.patience > 0 && !(b.validation_fraction > 0.0 && b.validation_fraction < 1.0) {
        errs.push(format!("{name}: validation_fraction must lie in (0, 1)"));
    }
}

/// Parses a raw override value as a TOML value, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets a dotted key path, creating intermediate tables.
fn set_path(root: &mut toml::Table, path: &[&str], value: toml::Value) -> Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut table = root;
    for p in parents {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| format!("{p} is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Layered loader. Overrides are `(dotted.key, raw value)` pairs.
pub fn load(
    file: Option<&Path>,
    env: impl IntoIterator<Item = (String, String)>,
    flags: &[(String, String)],
) -> Result<RunConfig, CliError> {
    let mut root = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))?
        }
        None => toml::Table::new(),
    };
    let mut errs = Vec::new();
    let mut env: Vec<(String, String)> = env
        .into_iter()
        .filter_map(|(k, v)| {
            let key = k.strip_prefix(ENV_PREFIX)?;
            (key != "CONFIG" && key != "LOG").then(|| (key.to_ascii_lowercase().replace("__", "."), v))
        })
        .collect();
    env.sort();
    for (key, raw) in env.iter().chain(flags) {
        let path: Vec<&str> = key.split('.').collect();
        if let Err(e) = set_path(&mut root, &path, parse_value(raw)) {
            errs.push(format!("override {key}: {e}"));
        }
    }
    if !errs.is_empty() {
        return Err(CliError::Config(errs));
    }
    toml::Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(vec![e.to_string()]))
}
