//! Positive-interaction rules and the interaction-count filters.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::raw::RawBehaviorRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositiveRuleConfig {
    /// A play counts when `play_progress` is strictly above this.
    pub progress_threshold: f64,
    /// ...or when `watch_time` is strictly above this many seconds.
    pub time_threshold_secs: f64,
    pub min_user_interactions: usize,
    pub min_video_interactions: usize,
    pub min_vlogger_videos: usize,
    /// A user likes a vlogger after positives on strictly more than this many of its videos.
    pub uvlogger_min_videos: usize,
    pub uvlogger_min_interactions: usize,
}

impl Default for PositiveRuleConfig {
    fn default() -> Self {
        PositiveRuleConfig::wechat()
    }
}

impl PositiveRuleConfig {
    /// Loop-count style logs.
    pub fn wechat() -> Self {
        PositiveRuleConfig {
            progress_threshold: 1.5,
            time_threshold_secs: 60.0,
            min_user_interactions: 5,
            min_video_interactions: 5,
            min_vlogger_videos: 3,
            uvlogger_min_videos: 2,
            uvlogger_min_interactions: 5,
        }
    }

    /// Completion-rate style logs.
    pub fn takatak() -> Self {
        PositiveRuleConfig {
            progress_threshold: 1.8,
            time_threshold_secs: 15.0,
            ..PositiveRuleConfig::wechat()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.progress_threshold > 0.0) || !(self.time_threshold_secs > 0.0) {
            return Err(Error::InvalidConfig(
                "rule thresholds must be positive".into(),
            ));
        }
        let counts = [
            self.min_user_interactions,
            self.min_video_interactions,
            self.min_vlogger_videos,
            self.uvlogger_min_videos,
            self.uvlogger_min_interactions,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidConfig(
                "rule thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoPositive {
    pub user: String,
    pub video: String,
    pub timestamp: i64,
}

pub fn is_video_positive(r: &RawBehaviorRecord, rules: &PositiveRuleConfig) -> bool {
    r.video_feedback()
        || r.play_progress > rules.progress_threshold
        || r.watch_time > rules.time_threshold_secs
}

/// Positive user–video pairs, one per pair at its earliest timestamp,
/// in chronological order (input order on ties).
pub fn derive_video_positives(
    records: &[RawBehaviorRecord],
    rules: &PositiveRuleConfig,
) -> Vec<VideoPositive> {
    let mut first: HashMap<(&str, &str), usize> = HashMap::new();
    let mut out: Vec<VideoPositive> = Vec::new();
    for r in records.iter().filter(|r| is_video_positive(r, rules)) {
        match first.get(&(r.user.as_str(), r.video.as_str())) {
            Some(&i) => {
                if r.timestamp < out[i].timestamp {
                    out[i].timestamp = r.timestamp;
                }
            }
            None => {
                first.insert((&r.user, &r.video), out.len());
                out.push(VideoPositive {
                    user: r.user.clone(),
                    video: r.video.clone(),
                    timestamp: r.timestamp,
                });
            }
        }
    }
    // stable: ties keep first-appearance order
    out.sort_by_key(|p| p.timestamp);
    out
}

/// Video → publisher over all records.
pub fn publishers(records: &[RawBehaviorRecord]) -> Result<BTreeMap<String, String>> {
    let mut seen: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        seen.entry(&r.video).or_default().insert(&r.vlogger);
    }
    seen.into_iter()
        .map(|(v, ps)| {
            if ps.len() == 1 {
                Ok((v.to_string(), ps.into_iter().next().unwrap().to_string()))
            } else {
                Err(Error::MalformedPublishing {
                    video: v.to_string(),
                    publishers: ps.len(),
                })
            }
        })
        .collect()
}

/// Positives and publishing edges that survive the count filters.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub positives: Vec<VideoPositive>,
    /// Publisher of every surviving video.
    pub publisher: BTreeMap<String, String>,
}

/// Drops users and videos with too few positives and vloggers with too few
/// surviving videos, repeating until nothing changes.
pub fn filter_graph(
    positives: &[VideoPositive],
    publisher: &BTreeMap<String, String>,
    rules: &PositiveRuleConfig,
) -> Result<Filtered> {
    for p in positives {
        if !publisher.contains_key(&p.video) {
            return Err(Error::MalformedPublishing {
                video: p.video.clone(),
                publishers: 0,
            });
        }
    }
    let mut cur: Vec<&VideoPositive> = positives.iter().collect();
    loop {
        let mut per_user: HashMap<&str, usize> = HashMap::new();
        let mut per_video: HashMap<&str, usize> = HashMap::new();
        for p in &cur {
            *per_user.entry(&p.user).or_default() += 1;
            *per_video.entry(&p.video).or_default() += 1;
        }
        let mut per_vlogger: HashMap<&str, usize> = HashMap::new();
        for v in per_video.keys() {
            *per_vlogger.entry(&publisher[*v]).or_default() += 1;
        }
        let before = cur.len();
        cur.retain(|p| {
            per_user[p.user.as_str()] >= rules.min_user_interactions
                && per_video[p.video.as_str()] >= rules.min_video_interactions
                && per_vlogger[publisher[&p.video].as_str()] >= rules.min_vlogger_videos
        });
        if cur.len() == before {
            break;
        }
    }
    if cur.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let videos: BTreeSet<&str> = cur.iter().map(|p| p.video.as_str()).collect();
    Ok(Filtered {
        publisher: videos
            .into_iter()
            .map(|v| (v.to_string(), publisher[v].clone()))
            .collect(),
        positives: cur.into_iter().cloned().collect(),
    })
}

/// User–vlogger positives over the filtered data: an explicit follow or
/// homepage visit, or positives on more than `uvlogger_min_videos` of the
/// vlogger's videos. Users and vloggers left with fewer than
/// `uvlogger_min_interactions` such pairs lose them, to a fixpoint.
/// Sorted by (user, vlogger).
pub fn derive_vlogger_positives(
    records: &[RawBehaviorRecord],
    filtered: &Filtered,
    rules: &PositiveRuleConfig,
) -> Vec<(String, String)> {
    let users: BTreeSet<&str> = filtered.positives.iter().map(|p| p.user.as_str()).collect();
    let vloggers: BTreeSet<&str> = filtered.publisher.values().map(String::as_str).collect();

    let mut pairs: BTreeSet<(&str, &str)> = records
        .iter()
        .filter(|r| {
            r.vlogger_feedback()
                && users.contains(r.user.as_str())
                && vloggers.contains(r.vlogger.as_str())
        })
        .map(|r| (r.user.as_str(), r.vlogger.as_str()))
        .collect();

    let mut videos_of: HashMap<(&str, &str), BTreeSet<&str>> = HashMap::new();
    for p in &filtered.positives {
        let vl = filtered.publisher[&p.video].as_str();
        videos_of.entry((&p.user, vl)).or_default().insert(&p.video);
    }
    pairs.extend(
        videos_of
            .into_iter()
            .filter(|(_, vs)| vs.len() > rules.uvlogger_min_videos)
            .map(|(k, _)| k),
    );

    loop {
        let mut per_user: HashMap<&str, usize> = HashMap::new();
        let mut per_vlogger: HashMap<&str, usize> = HashMap::new();
        for &(u, p) in &pairs {
            *per_user.entry(u).or_default() += 1;
            *per_vlogger.entry(p).or_default() += 1;
        }
        let before = pairs.len();
        pairs.retain(|(u, p)| {
            per_user[u] >= rules.uvlogger_min_interactions
                && per_vlogger[p] >= rules.uvlogger_min_interactions
        });
        if pairs.len() == before {
            break;
        }
    }
    pairs
        .into_iter()
        .map(|(u, p)| (u.to_string(), p.to_string()))
        .collect()
}
