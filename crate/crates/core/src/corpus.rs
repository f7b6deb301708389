//! Ingestion of the four JSON Lines inputs into an immutable [`Corpus`].
//!
//! Malformed lines are skipped and counted; duplicate keys abort the load.
//! Every file produces a [`FileReport`] whose counters satisfy
//! `retained + dropped + malformed == total`. Blank lines are ignored and do
//! not count towards `total`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate user_id {user_id:?} in {file}")]
    DuplicateKey { file: &'static str, user_id: String },
    #[error("profile {user_id:?} created at {created_at} after snapshot date {snapshot}")]
    CreatedAfterSnapshot {
        user_id: String,
        created_at: DateTime<Utc>,
        snapshot: DateTime<Utc>,
    },
    #[error("{file} references user_id {user_id:?} which has no profile")]
    MissingProfile { file: &'static str, user_id: String },
    #[error("invalid corpus dates: {0}")]
    InvalidDates(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub verified: bool,
    pub followers_count: u64,
    pub friends_count: u64,
    pub statuses_count: u64,
    pub listed_count: u64,
    pub created_at: DateTime<Utc>,
    pub lang: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub user_id: String,
    pub tweet_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub is_retweet: bool,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
}

/// Input form of a tweet: entity fields and the retweet flag are optional and
/// derived from the text when absent.
#[derive(Debug, Deserialize)]
struct TweetLine {
    user_id: String,
    tweet_id: String,
    created_at: DateTime<Utc>,
    text: String,
    is_retweet: Option<bool>,
    hashtags: Option<Vec<String>>,
    mentions: Option<Vec<String>>,
    urls: Option<Vec<String>>,
}

impl TweetLine {
    fn into_record(self) -> Option<TweetRecord> {
        let needs_parse = self.hashtags.is_none() || self.mentions.is_none() || self.urls.is_none();
        let parsed = if needs_parse {
            text::extract_entities(&self.text)
        } else {
            text::Entities::default()
        };
        let hashtags = self.hashtags.unwrap_or(parsed.hashtags);
        let mentions = self.mentions.unwrap_or(parsed.mentions);
        let urls = self.urls.unwrap_or(parsed.urls);
        if [&hashtags, &mentions, &urls]
            .iter()
            .any(|list| list.iter().any(String::is_empty))
        {
            return None;
        }
        let is_retweet = self
            .is_retweet
            .unwrap_or_else(|| text::is_retweet_text(&self.text));
        Some(TweetRecord {
            user_id: self.user_id,
            tweet_id: self.tweet_id,
            created_at: self.created_at,
            text: self.text,
            is_retweet,
            hashtags,
            mentions,
            urls,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatPoint {
    pub timestamp: DateTime<Utc>,
    pub followers: u64,
    pub friends: u64,
    pub statuses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTimeSeries {
    pub user_id: String,
    pub points: Vec<StatPoint>,
}

impl StatTimeSeries {
    fn is_valid(&self) -> bool {
        self.points.windows(2).all(|w| {
            w[0].timestamp < w[1].timestamp && w[0].statuses <= w[1].statuses
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScores {
    pub user_id: String,
    pub liwc_analytic: f64,
    pub liwc_clout: f64,
    pub liwc_authentic: f64,
    pub liwc_tone: f64,
    pub cap_score: f64,
    pub network_score: f64,
    pub content_score: f64,
    pub temporal_score: f64,
}

impl ExternalScores {
    pub const NAMES: [&'static str; 8] = [
        "liwc_analytic",
        "liwc_clout",
        "liwc_authentic",
        "liwc_tone",
        "cap_score",
        "network_score",
        "content_score",
        "temporal_score",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.liwc_analytic,
            self.liwc_clout,
            self.liwc_authentic,
            self.liwc_tone,
            self.cap_score,
            self.network_score,
            self.content_score,
            self.temporal_score,
        ]
    }

    fn is_valid(&self) -> bool {
        let v = self.values();
        v[..4].iter().all(|x| (0.0..=100.0).contains(x))
            && v[4..].iter().all(|x| (0.0..=1.0).contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDates {
    pub snapshot: DateTime<Utc>,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
}

impl CorpusDates {
    pub fn new(
        snapshot: DateTime<Utc>,
        window_start: DateTime<Utc>,
        window_end: DateTime<Utc>,
    ) -> Result<Self> {
        if window_start >= window_end {
            return Err(CorpusError::InvalidDates(format!(
                "window start {window_start} is not before window end {window_end}"
            )));
        }
        if window_end > snapshot {
            return Err(CorpusError::InvalidDates(format!(
                "window end {window_end} is after snapshot {snapshot}"
            )));
        }
        Ok(Self {
            snapshot,
            window_start,
            window_end,
        })
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.window_start <= t && t <= self.window_end
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileReport {
    pub total: usize,
    pub retained: usize,
    pub dropped: usize,
    pub malformed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestionReport {
    pub profiles: FileReport,
    pub tweets: FileReport,
    pub series: FileReport,
    pub external: FileReport,
    pub users: usize,
    pub verified_users: usize,
    pub tweets_retained: usize,
    pub users_without_tweets: usize,
    pub missing_series: Vec<String>,
    pub missing_external: Vec<String>,
    /// Fraction of non-verified users whose follower count lies within 2% of
    /// some verified user's follower count.
    pub follower_overlap: f64,
}

/// Immutable, validated corpus keyed by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub dates: CorpusDates,
    pub profiles: BTreeMap<String, UserProfile>,
    pub tweets: BTreeMap<String, Vec<TweetRecord>>,
    pub series: BTreeMap<String, StatTimeSeries>,
    pub external: BTreeMap<String, ExternalScores>,
}

impl Corpus {
    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    pub fn tweets_of(&self, user_id: &str) -> &[TweetRecord] {
        self.tweets.get(user_id).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Paths of the four input files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusPaths {
    pub profiles: PathBuf,
    pub tweets: PathBuf,
    pub series: PathBuf,
    pub external: PathBuf,
}

impl CorpusPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            profiles: dir.join("profiles.jsonl"),
            tweets: dir.join("tweets.jsonl"),
            series: dir.join("timeseries.jsonl"),
            external: dir.join("external_scores.jsonl"),
        }
    }
}

enum LineOutcome {
    Retained,
    Dropped,
    Malformed,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Streams a JSON Lines file, handing each parsed record to `accept`.
fn read_jsonl<T, F>(path: &Path, mut accept: F) -> Result<FileReport>
where
    T: DeserializeOwned,
    F: FnMut(T) -> Result<LineOutcome>,
{
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut report = FileReport::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        let Ok(line) = std::str::from_utf8(&buf) else {
            report.total += 1;
            report.malformed += 1;
            continue;
        };
        if line.trim().is_empty() {
            continue;
        }
        report.total += 1;
        let outcome = match serde_json::from_str::<T>(line) {
            Ok(record) => accept(record)?,
            Err(_) => LineOutcome::Malformed,
        };
        match outcome {
            LineOutcome::Retained => report.retained += 1,
            LineOutcome::Dropped => report.dropped += 1,
            LineOutcome::Malformed => report.malformed += 1,
        }
    }
    Ok(report)
}

pub fn load_profiles(
    path: &Path,
    snapshot: DateTime<Utc>,
) -> Result<(BTreeMap<String, UserProfile>, FileReport)> {
    let mut out = BTreeMap::new();
    let report = read_jsonl(path, |p: UserProfile| {
        if p.user_id.is_empty() {
            return Ok(LineOutcome::Malformed);
        }
        if p.created_at > snapshot {
            return Err(CorpusError::CreatedAfterSnapshot {
                user_id: p.user_id,
                created_at: p.created_at,
                snapshot,
            });
        }
        if out.contains_key(&p.user_id) {
            return Err(CorpusError::DuplicateKey {
                file: "profiles",
                user_id: p.user_id,
            });
        }
        out.insert(p.user_id.clone(), p);
        Ok(LineOutcome::Retained)
    })?;
    Ok((out, report))
}

pub fn load_tweets(
    path: &Path,
    dates: &CorpusDates,
) -> Result<(BTreeMap<String, Vec<TweetRecord>>, FileReport)> {
    let mut out: BTreeMap<String, Vec<TweetRecord>> = BTreeMap::new();
    let report = read_jsonl(path, |line: TweetLine| {
        let Some(tweet) = line.into_record() else {
            return Ok(LineOutcome::Malformed);
        };
        if !dates.contains(tweet.created_at) {
            return Ok(LineOutcome::Dropped);
        }
        out.entry(tweet.user_id.clone()).or_default().push(tweet);
        Ok(LineOutcome::Retained)
    })?;
    for list in out.values_mut() {
        list.sort_by(|a, b| {
            (a.created_at, &a.tweet_id, &a.text).cmp(&(b.created_at, &b.tweet_id, &b.text))
        });
    }
    Ok((out, report))
}

pub fn load_series(path: &Path) -> Result<(BTreeMap<String, StatTimeSeries>, FileReport)> {
    let mut out = BTreeMap::new();
    let report = read_jsonl(path, |s: StatTimeSeries| {
        if !s.is_valid() {
            return Ok(LineOutcome::Malformed);
        }
        if out.contains_key(&s.user_id) {
            return Err(CorpusError::DuplicateKey {
                file: "timeseries",
                user_id: s.user_id,
            });
        }
        out.insert(s.user_id.clone(), s);
        Ok(LineOutcome::Retained)
    })?;
    Ok((out, report))
}

pub fn load_external(path: &Path) -> Result<(BTreeMap<String, ExternalScores>, FileReport)> {
    let mut out = BTreeMap::new();
    let report = read_jsonl(path, |e: ExternalScores| {
        if !e.is_valid() {
            return Ok(LineOutcome::Malformed);
        }
        if out.contains_key(&e.user_id) {
            return Err(CorpusError::DuplicateKey {
                file: "external_scores",
                user_id: e.user_id,
            });
        }
        out.insert(e.user_id.clone(), e);
        Ok(LineOutcome::Retained)
    })?;
    Ok((out, report))
}

/// Per-file reports gathered while loading, passed on to [`assemble_corpus`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadReports {
    pub profiles: FileReport,
    pub tweets: FileReport,
    pub series: FileReport,
    pub external: FileReport,
}

fn follower_overlap(profiles: &BTreeMap<String, UserProfile>) -> f64 {
    let mut verified: Vec<u64> = profiles
        .values()
        .filter(|p| p.verified)
        .map(|p| p.followers_count)
        .collect();
    verified.sort_unstable();
    let others: Vec<u64> = profiles
        .values()
        .filter(|p| !p.verified)
        .map(|p| p.followers_count)
        .collect();
    if others.is_empty() || verified.is_empty() {
        return 0.0;
    }
    let matched = others
        .iter()
        .filter(|&&f| {
            let lo = (f as f64 * 0.98).ceil() as u64;
            let hi = (f as f64 * 1.02).floor() as u64;
            let i = verified.partition_point(|&v| v < lo);
            i < verified.len() && verified[i] <= hi
        })
        .count();
    matched as f64 / others.len() as f64
}

pub fn assemble_corpus(
    dates: CorpusDates,
    profiles: BTreeMap<String, UserProfile>,
    tweets: BTreeMap<String, Vec<TweetRecord>>,
    series: BTreeMap<String, StatTimeSeries>,
    external: BTreeMap<String, ExternalScores>,
    reports: LoadReports,
) -> Result<(Corpus, IngestionReport)> {
    let check = |file: &'static str, keys: &mut dyn Iterator<Item = &String>| {
        for key in keys {
            if !profiles.contains_key(key) {
                return Err(CorpusError::MissingProfile {
                    file,
                    user_id: key.clone(),
                });
            }
        }
        Ok(())
    };
    check("tweets", &mut tweets.keys())?;
    check("timeseries", &mut series.keys())?;
    check("external_scores", &mut external.keys())?;

    let users_with_tweets: BTreeSet<&String> =
        tweets.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| k).collect();
    let report = IngestionReport {
        profiles: reports.profiles,
        tweets: reports.tweets,
        series: reports.series,
        external: reports.external,
        users: profiles.len(),
        verified_users: profiles.values().filter(|p| p.verified).count(),
        tweets_retained: tweets.values().map(Vec::len).sum(),
        users_without_tweets: profiles.len() - users_with_tweets.len(),
        missing_series: profiles
            .keys()
            .filter(|k| !series.contains_key(*k))
            .cloned()
            .collect(),
        missing_external: profiles
            .keys()
            .filter(|k| !external.contains_key(*k))
            .cloned()
            .collect(),
        follower_overlap: follower_overlap(&profiles),
    };
    let corpus = Corpus {
        dates,
        profiles,
        tweets,
        series,
        external,
    };
    Ok((corpus, report))
}

/// Loads and assembles all four files. The files are read in parallel.
pub fn load_corpus(paths: &CorpusPaths, dates: CorpusDates) -> Result<(Corpus, IngestionReport)> {
    let ((profiles, tweets), (series, external)) = rayon::join(
        || {
            rayon::join(
                || load_profiles(&paths.profiles, dates.snapshot),
                || load_tweets(&paths.tweets, &dates),
            )
        },
        || rayon::join(|| load_series(&paths.series), || load_external(&paths.external)),
    );
    let (profiles, pr) = profiles?;
    let (tweets, tr) = tweets?;
    let (series, sr) = series?;
    let (external, er) = external?;
    assemble_corpus(
        dates,
        profiles,
        tweets,
        series,
        external,
        LoadReports {
            profiles: pr,
            tweets: tr,
            series: sr,
            external: er,
        },
    )
}

fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("corpus records serialize");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the corpus back out in the input schema.
pub fn write_corpus(corpus: &Corpus, paths: &CorpusPaths) -> Result<()> {
    write_jsonl(&paths.profiles, corpus.profiles.values())?;
    write_jsonl(&paths.tweets, corpus.tweets.values().flatten())?;
    write_jsonl(&paths.series, corpus.series.values())?;
    write_jsonl(&paths.external, corpus.external.values())
}
