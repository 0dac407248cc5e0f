//! Planted-structure datasets: each user prefers a few vloggers and mostly
//! watches their videos.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::raw::RawBehaviorRecord;
use super::{build_dataset, Dataset, PositiveRuleConfig};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_vloggers: usize,
    pub videos_per_vlogger: usize,
    /// Chance that an interaction goes to a preferred vlogger's video.
    pub affinity: f64,
    /// Chance, per interaction, of an extra follow on a uniformly random vlogger.
    pub noise: f64,
    pub interactions_per_user: usize,
    pub preferred_per_user: usize,
    /// Set from the run's root seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_users: 500,
            n_vloggers: 40,
            videos_per_vlogger: 25,
            affinity: 0.9,
            noise: 0.0,
            interactions_per_user: 40,
            preferred_per_user: 5,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0
            || self.n_vloggers == 0
            || self.videos_per_vlogger == 0
            || self.interactions_per_user == 0
            || self.preferred_per_user == 0
        {
            return Err(Error::InvalidConfig(
                "synthetic sizes must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.affinity) || !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::InvalidConfig(
                "affinity and noise must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn n_videos(&self) -> usize {
        self.n_vloggers * self.videos_per_vlogger
    }
}

/// Draws attempted per interaction before a user is declared saturated.
const DRAWS_PER_INTERACTION: usize = 100;

fn record(user: usize, video: usize, vlogger: usize, t: i64) -> RawBehaviorRecord {
    RawBehaviorRecord {
        user: format!("u{user}"),
        video: format!("v{video}"),
        vlogger: format!("p{vlogger}"),
        timestamp: t,
        comment: false,
        read_comment: false,
        like: false,
        share: false,
        follow: false,
        homepage: false,
        watch_time: 0.0,
        play_progress: 0.0,
    }
}

/// Raw log of the planted world. Watched videos carry a like; noise
/// follows carry only the follow flag. Timestamps increase record by record.
pub fn synthetic_records(cfg: &SyntheticConfig) -> Result<Vec<RawBehaviorRecord>> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, Stream::Synthetic);
    let vpp = cfg.videos_per_vlogger;
    let n_videos = cfg.n_videos();
    let mut out = Vec::with_capacity(cfg.n_users * cfg.interactions_per_user);
    let mut t = 0i64;
    for u in 0..cfg.n_users {
        let preferred = index::sample(
            &mut rng,
            cfg.n_vloggers,
            cfg.preferred_per_user.min(cfg.n_vloggers),
        )
        .into_vec();
        let mut watched = HashSet::new();
        let mut draws = 0;
        while watched.len() < cfg.interactions_per_user
            && draws < DRAWS_PER_INTERACTION * cfg.interactions_per_user
        {
            draws += 1;
            let video = if rng.random_bool(cfg.affinity) {
                let p = preferred[rng.random_range(0..preferred.len())];
                p * vpp + rng.random_range(0..vpp)
            } else {
                rng.random_range(0..n_videos)
            };
            if !watched.insert(video) {
                continue;
            }
            out.push(RawBehaviorRecord {
                like: true,
                ..record(u, video, video / vpp, t)
            });
            t += 1;
            if cfg.noise > 0.0 && rng.random_bool(cfg.noise) {
                let p = rng.random_range(0..cfg.n_vloggers);
                let v = p * vpp + rng.random_range(0..vpp);
                out.push(RawBehaviorRecord {
                    follow: true,
                    ..record(u, v, p, t)
                });
                t += 1;
            }
        }
    }
    Ok(out)
}

/// Synthetic records run through the standard preprocessing rules.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    build_dataset(&synthetic_records(cfg)?, &PositiveRuleConfig::wechat())
}
