//! Synthetic corpus with class-conditional structure.
//!
//! Verified accounts get a heavy-tailed listed count, older accounts, more
//! links and mentions, higher clout-style scores, lower automation scores and
//! text spread over more topics. Follower counts share one distribution across
//! classes. `separation` scales every class shift; at 0 the classes are
//! exchangeable.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusDates, ExternalScores, StatPoint, StatTimeSeries, TweetRecord, UserProfile};
use crate::seed;
use crate::text::extract_entities;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub users: usize,
    pub verified_fraction: f64,
    pub separation: f64,
    pub topics: usize,
    pub tweets_per_user: usize,
    pub words_per_topic: usize,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            users: 2000,
            verified_fraction: 0.4,
            separation: 0.4,
            topics: 10,
            tweets_per_user: 16,
            words_per_topic: 25,
            seed: 7,
        }
    }
}

pub fn demo_dates() -> CorpusDates {
    CorpusDates::new(
        Utc.with_ymd_and_hms(2018, 6, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2017, 6, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2018, 5, 31, 23, 59, 59).unwrap(),
    )
    .expect("fixed dates are ordered")
}

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "vu", "ze", "ba", "do", "fi", "gu", "he", "jo", "ki", "lu", "ma", "ne",
];

/// Word `j` of planted topic `k`.
pub fn topic_word(k: usize, j: usize) -> String {
    let mut w = format!("{}{}{}", SYLLABLES[k % 20], SYLLABLES[j % 20], SYLLABLES[(j / 20) % 20]);
    if k >= 20 {
        w.push_str(&SYLLABLES[(k / 20) % 20].repeat(2));
    }
    w
}

const FILLER: [&str; 12] = ["the", "and", "is", "we", "this", "for", "with", "on", "at", "it", "to", "of"];
const POSITIVE: [&str; 6] = ["good", "great", "love", "best", "amazing", "happy"];
const NEGATIVE: [&str; 5] = ["bad", "awful", "angry", "boring", "broken"];

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

struct UserPlan {
    verified: bool,
    topics: Vec<usize>,
}

fn tweet_text(rng: &mut seed::Rng, plan: &UserPlan, cfg: &DemoConfig, s: f64, n_users: usize) -> String {
    let k = *plan.topics.choose(rng).expect("at least one topic");
    let n_words = rng.gen_range(6..=12);
    let mut words: Vec<String> = Vec::with_capacity(n_words + 4);
    for _ in 0..n_words {
        let r: f64 = rng.gen();
        if r < 0.25 {
            words.push(FILLER.choose(rng).unwrap().to_string());
        } else if r < 0.32 {
            let pos_bias = if plan.verified { 0.5 + 0.2 * s.min(1.0) } else { 0.5 };
            let pool: &[&str] = if rng.gen_bool(pos_bias) { &POSITIVE } else { &NEGATIVE };
            words.push(pool.choose(rng).unwrap().to_string());
        } else {
            // Zipf-like pick inside the topic vocabulary
            let j = ((rng.gen::<f64>().powi(2)) * cfg.words_per_topic as f64) as usize;
            words.push(topic_word(k, j.min(cfg.words_per_topic - 1)));
        }
    }
    let mut text = words.join(" ");
    if rng.gen_bool(0.5) {
        text.push('.');
    }
    let (p_url, p_mention, p_tag, p_rt) = if plan.verified {
        (0.2 + 0.3 * s.min(1.0), 0.3 + 0.2 * s.min(1.0), 0.3, 0.1)
    } else {
        (0.2, 0.3, 0.3, 0.1 + 0.2 * s.min(1.0))
    };
    if rng.gen_bool(p_mention) {
        text.push_str(&format!(" @user{:05}", rng.gen_range(0..n_users)));
    }
    if rng.gen_bool(p_tag) {
        text.push_str(&format!(" #{}", topic_word(k, 0)));
    }
    if rng.gen_bool(p_url) {
        text.push_str(&format!(" https://example.org/{}", rng.gen_range(0..100_000)));
    }
    if rng.gen_bool(clamp(p_rt, 0.0, 1.0)) {
        text = format!("RT @user{:05}: {text}", rng.gen_range(0..n_users));
    }
    text
}

/// Generates a corpus deterministically from `cfg.seed`. Each user draws from
/// its own derived stream, so users do not influence each other's records.
pub fn generate_demo(cfg: &DemoConfig) -> Corpus {
    let dates = demo_dates();
    let n = cfg.users;
    let s = cfg.separation;
    let n_verified = (n as f64 * cfg.verified_fraction).round() as usize;
    let mut labels: Vec<bool> = (0..n).map(|i| i < n_verified).collect();
    labels.shuffle(&mut seed::rng(seed::derive_str(cfg.seed, "labels")));
    let topics = cfg.topics.max(1);
    let window_secs = (dates.window_end - dates.window_start).num_seconds();

    let mut profiles = BTreeMap::new();
    let mut tweets = BTreeMap::new();
    let mut series = BTreeMap::new();
    let mut external = BTreeMap::new();
    let followers_dist = LogNormal::<f64>::new(7.0, 1.5).unwrap();
    let unit = Normal::new(0.0, 1.0).unwrap();

    for (i, &verified) in labels.iter().enumerate() {
        let user_id = format!("user{i:05}");
        let mut rng = seed::rng(seed::derive(cfg.seed, i as u64));
        let sign = if verified { 1.0 } else { -1.0 };

        let followers = followers_dist.sample(&mut rng).round() as u64;
        let friends = LogNormal::new(5.5 - 0.3 * s * sign, 1.0).unwrap().sample(&mut rng).round() as u64;
        let listed_log = (followers as f64 + 1.0).ln() - 4.5 + 1.6 * s * sign + 0.8 * unit.sample(&mut rng);
        let listed = listed_log.exp().floor() as u64;
        let statuses = LogNormal::new(7.5 + 0.3 * s * sign, 1.0).unwrap().sample(&mut rng).round() as u64 + 50;
        let age_days = clamp(1800.0 + 500.0 * s * sign + 700.0 * unit.sample(&mut rng), 30.0, 4000.0);
        let created_at = dates.snapshot - Duration::seconds((age_days * 86_400.0) as i64);
        profiles.insert(
            user_id.clone(),
            UserProfile {
                user_id: user_id.clone(),
                verified,
                followers_count: followers,
                friends_count: friends,
                statuses_count: statuses,
                listed_count: listed,
                created_at,
                lang: "en".into(),
            },
        );

        // verified users write about more topics and lean to the first half
        let span = if verified {
            rng.gen_range(4.min(topics)..=topics.min(8))
        } else {
            rng.gen_range(1..=topics.min(4))
        };
        let half = topics.div_ceil(2);
        let lean = 0.35 * s.min(1.0);
        let mut keyed: Vec<(f64, usize)> = (0..topics)
            .map(|k| {
                let preferred = (k < half) == verified;
                (rng.gen::<f64>() - if preferred { lean } else { 0.0 }, k)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let plan = UserPlan {
            verified,
            topics: keyed.into_iter().take(span).map(|(_, k)| k).collect(),
        };

        let n_tweets = rng.gen_range(cfg.tweets_per_user / 2..=cfg.tweets_per_user * 3 / 2);
        let mut offsets: Vec<i64> = (0..n_tweets).map(|_| rng.gen_range(0..window_secs)).collect();
        offsets.sort_unstable();
        let records: Vec<TweetRecord> = offsets
            .iter()
            .enumerate()
            .map(|(j, &off)| {
                let text = tweet_text(&mut rng, &plan, cfg, s, n);
                let e = extract_entities(&text);
                TweetRecord {
                    user_id: user_id.clone(),
                    tweet_id: format!("{user_id}-{j:04}"),
                    created_at: dates.window_start + Duration::seconds(off),
                    is_retweet: text.starts_with("RT @"),
                    text,
                    hashtags: e.hashtags,
                    mentions: e.mentions,
                    urls: e.urls,
                }
            })
            .collect();
        if !records.is_empty() {
            tweets.insert(user_id.clone(), records);
        }

        if rng.gen_bool(0.97) {
            series.insert(user_id.clone(), stat_series(&mut rng, &user_id, &dates, followers, friends, statuses, s * sign));
        }
        if rng.gen_bool(0.97) {
            let noise = |rng: &mut seed::Rng, sd: f64| sd * unit.sample(rng);
            external.insert(
                user_id.clone(),
                ExternalScores {
                    user_id: user_id.clone(),
                    liwc_analytic: clamp(60.0 + 5.0 * s * sign + noise(&mut rng, 15.0), 0.0, 100.0),
                    liwc_clout: clamp(55.0 + 15.0 * s * sign + noise(&mut rng, 12.0), 0.0, 100.0),
                    liwc_authentic: clamp(40.0 + noise(&mut rng, 15.0), 0.0, 100.0),
                    liwc_tone: clamp(50.0 + 5.0 * s * sign + noise(&mut rng, 20.0), 0.0, 100.0),
                    cap_score: clamp(0.2 - 0.1 * s * sign + noise(&mut rng, 0.1), 0.0, 1.0),
                    network_score: clamp(0.4 - 0.05 * s * sign + noise(&mut rng, 0.15), 0.0, 1.0),
                    content_score: clamp(0.4 + noise(&mut rng, 0.15), 0.0, 1.0),
                    temporal_score: clamp(0.4 + noise(&mut rng, 0.15), 0.0, 1.0),
                },
            );
        }
    }
    Corpus {
        dates,
        profiles,
        tweets,
        series,
        external,
    }
}

fn stat_series(
    rng: &mut seed::Rng,
    user_id: &str,
    dates: &CorpusDates,
    followers: u64,
    friends: u64,
    statuses: u64,
    shift: f64,
) -> StatTimeSeries {
    let weeks = (dates.window_end - dates.window_start).num_weeks();
    // growth fraction over the window
    let growth = clamp(0.1 + 0.08 * shift + 0.05 * rng.gen::<f64>(), 0.0, 0.5);
    let start_f = followers as f64 / (1.0 + growth);
    let start_s = statuses as f64 * 0.85;
    let mut last_statuses = 0u64;
    let points = (0..=weeks)
        .map(|w| {
            let frac = w as f64 / weeks as f64;
            let timestamp: DateTime<Utc> = dates.window_start + Duration::weeks(w);
            let st = ((start_s + frac * 0.15 * statuses as f64) as u64).max(last_statuses);
            last_statuses = st;
            StatPoint {
                timestamp,
                followers: (start_f * (1.0 + growth * frac)).round() as u64,
                friends: friends.saturating_sub(rng.gen_range(0..3)),
                statuses: st,
            }
        })
        .collect();
    StatTimeSeries {
        user_id: user_id.to_string(),
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = DemoConfig {
            users: 30,
            ..Default::default()
        };
        assert_eq!(generate_demo(&cfg).profiles, generate_demo(&cfg).profiles);
        assert_eq!(generate_demo(&cfg).tweets, generate_demo(&cfg).tweets);
    }

    #[test]
    fn verified_fraction_is_exact() {
        let cfg = DemoConfig {
            users: 50,
            verified_fraction: 0.3,
            ..Default::default()
        };
        let c = generate_demo(&cfg);
        assert_eq!(c.profiles.values().filter(|p| p.verified).count(), 15);
    }

    #[test]
    fn topic_words_are_distinct() {
        let mut all: Vec<String> = (0..30).flat_map(|k| (0..25).map(move |j| topic_word(k, j))).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }
}
