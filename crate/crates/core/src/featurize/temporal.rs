//! Account trajectory features from follower/friend/status time series.
//!
//! Values between observations are carried forward from the last observation;
//! before the first observation the first observed value is used.

use chrono::{DateTime, Duration, Utc};

use crate::corpus::{CorpusDates, StatPoint, StatTimeSeries};

pub const NAMES: [&str; 10] = [
    "avg_followers",
    "avg_friends",
    "avg_statuses",
    "followers_gain_30d",
    "friends_gain_30d",
    "statuses_gain_30d",
    "followers_gain_90d",
    "friends_gain_90d",
    "statuses_gain_90d",
    "avg_days_between_statuses",
];

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy)]
enum Component {
    Followers,
    Friends,
    Statuses,
}

const COMPONENTS: [Component; 3] = [Component::Followers, Component::Friends, Component::Statuses];

fn component(p: &StatPoint, c: Component) -> f64 {
    match c {
        Component::Followers => p.followers as f64,
        Component::Friends => p.friends as f64,
        Component::Statuses => p.statuses as f64,
    }
}

/// Last observation at or before `t`.
fn point_at(points: &[StatPoint], t: DateTime<Utc>) -> &StatPoint {
    let i = points.partition_point(|p| p.timestamp <= t);
    &points[i.saturating_sub(1)]
}

fn value_at(points: &[StatPoint], t: DateTime<Utc>, c: Component) -> f64 {
    component(point_at(points, t), c)
}

fn seconds(d: Duration) -> f64 {
    d.num_milliseconds() as f64 / 1000.0
}

/// Time-weighted mean of the step function over `[start, end]`.
fn window_mean(points: &[StatPoint], start: DateTime<Utc>, end: DateTime<Utc>, c: Component) -> f64 {
    let mut cuts = vec![start];
    cuts.extend(
        points
            .iter()
            .map(|p| p.timestamp)
            .filter(|&t| t > start && t < end),
    );
    cuts.push(end);
    let total = seconds(end - start);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        acc += value_at(points, w[0], c) * seconds(w[1] - w[0]);
    }
    acc / total
}

/// Share of the end-of-window value gained over the final `days` days,
/// clamped to `[0, 1]`.
fn proportion_gained(points: &[StatPoint], end: DateTime<Utc>, days: i64, c: Component) -> f64 {
    let now = value_at(points, end, c);
    let then = value_at(points, end - Duration::days(days), c);
    ((now - then) / now.max(1.0)).clamp(0.0, 1.0)
}

/// Values aligned with [`NAMES`], or `None` for an empty series.
pub fn temporal_features(series: &StatTimeSeries, dates: &CorpusDates) -> Option<Vec<f64>> {
    let points = series.points.as_slice();
    if points.is_empty() {
        return None;
    }
    let (start, end) = (dates.window_start, dates.window_end);
    let mut out = Vec::with_capacity(NAMES.len());
    for c in COMPONENTS {
        out.push(window_mean(points, start, end, c));
    }
    for days in [30, 90] {
        for c in COMPONENTS {
            out.push(proportion_gained(points, end, days, c));
        }
    }
    let authored = value_at(points, end, Component::Statuses) - value_at(points, start, Component::Statuses);
    let window_days = seconds(end - start) / SECONDS_PER_DAY;
    out.push(window_days / authored.max(1.0));
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: i64) -> DateTime<Utc> {
        "2017-06-01T00:00:00Z".parse::<DateTime<Utc>>().unwrap() + Duration::days(n)
    }

    fn dates(len_days: i64) -> CorpusDates {
        CorpusDates::new(day(len_days + 1), day(0), day(len_days)).unwrap()
    }

    fn pt(d: i64, followers: u64, friends: u64, statuses: u64) -> StatPoint {
        StatPoint {
            timestamp: day(d),
            followers,
            friends,
            statuses,
        }
    }

    fn series(points: Vec<StatPoint>) -> StatTimeSeries {
        StatTimeSeries {
            user_id: "u".into(),
            points,
        }
    }

    #[test]
    fn constant_series() {
        let s = series(vec![pt(0, 100, 5, 10), pt(100, 100, 5, 10), pt(300, 100, 5, 10)]);
        let v = temporal_features(&s, &dates(364)).unwrap();
        assert_eq!(v[0], 100.0);
        assert_eq!(v[1], 5.0);
        assert_eq!(&v[3..9], &[0.0; 6]);
    }

    #[test]
    fn growth_inside_last_month_is_full_proportion() {
        let s = series(vec![pt(0, 0, 0, 0), pt(350, 100, 0, 0)]);
        let v = temporal_features(&s, &dates(364)).unwrap();
        assert_eq!(v[3], 1.0);
        assert_eq!(v[6], 1.0);
    }

    #[test]
    fn decline_is_clamped() {
        let s = series(vec![pt(0, 100, 0, 0), pt(350, 50, 0, 0)]);
        let v = temporal_features(&s, &dates(364)).unwrap();
        assert_eq!(v[3], 0.0);
    }

    #[test]
    fn average_days_between_statuses() {
        let s = series(vec![pt(0, 1, 1, 0), pt(364, 1, 1, 52)]);
        let v = temporal_features(&s, &dates(364)).unwrap();
        assert!((v[9] - 7.0).abs() < 1e-12);
        let quiet = series(vec![pt(0, 1, 1, 3)]);
        assert_eq!(temporal_features(&quiet, &dates(364)).unwrap()[9], 364.0);
    }

    #[test]
    fn window_mean_is_time_weighted() {
        // 0 for the first quarter, 100 afterwards
        let s = series(vec![pt(0, 0, 0, 0), pt(100, 100, 0, 0)]);
        let v = temporal_features(&s, &dates(400)).unwrap();
        assert!((v[0] - 75.0).abs() < 1e-9);
    }

    #[test]
    fn first_observation_is_backfilled() {
        let s = series(vec![pt(200, 10, 0, 0)]);
        let v = temporal_features(&s, &dates(400)).unwrap();
        assert_eq!(v[0], 10.0);
    }

    #[test]
    fn empty_series_is_none() {
        assert!(temporal_features(&series(vec![]), &dates(10)).is_none());
    }
}
