//! Length-3 meta-path walks across the tripartite graph.
//!
//! Video-view walks start at a user, step to a followed vlogger with
//! probability `q1`, then to another follower of that vlogger (probability
//! `q2`) or to one of its videos (probability `1 - q2`). Vlogger-view walks
//! start at a user, step (again gated by `q1`) to a watched video and then to
//! another viewer of it; the endpoint is attributed to one vlogger drawn from
//! the walker's followed set.
//!
//! Every draw is uniform over the current neighbor list. Walks that hit an
//! empty list are dropped.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TripartiteGraph;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaPathConfig {
    /// Probability of leaving the start user at all.
    pub q1: f64,
    /// Probability of the vlogger → user step (else vlogger → video).
    pub q2: f64,
    pub walks_per_user: usize,
    pub vlogger_view_walks_per_user: usize,
    /// Set from the run's root seed.
    #[serde(skip)]
    pub seed: u64,
    /// Whether user–vlogger–user endpoints join the video-view user sets.
    pub uvu_in_video_view: bool,
}

impl Default for MetaPathConfig {
    fn default() -> Self {
        MetaPathConfig {
            q1: 0.5,
            q2: 0.5,
            walks_per_user: 10,
            vlogger_view_walks_per_user: 10,
            seed: 0,
            uvu_in_video_view: true,
        }
    }
}

impl MetaPathConfig {
    /// No walks at all: propagation sees only the base bipartite relations.
    pub fn disabled() -> Self {
        MetaPathConfig {
            walks_per_user: 0,
            vlogger_view_walks_per_user: 0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, q) in [("q1", self.q1), ("q2", self.q2)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidConfig(format!("{name} = {q} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Outcome of one successful walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Walk {
    UserVloggerUser {
        user: u32,
        vlogger: u32,
        other: u32,
    },
    UserVloggerVideo {
        user: u32,
        vlogger: u32,
        video: u32,
    },
    /// `attributed` is the vlogger whose follower set gains `other`.
    UserVideoUser {
        user: u32,
        video: u32,
        other: u32,
        attributed: u32,
    },
}

/// Deduplicated endpoint edges of all successful walks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkSamples {
    /// Unordered user pairs `(a, b)` with `a < b`, from user–vlogger–user walks.
    pub user_user: Vec<(u32, u32)>,
    /// `(user, video)` from user–vlogger–video walks.
    pub user_video: Vec<(u32, u32)>,
    /// `(vlogger, user)` from user–video–user walks.
    pub vlogger_user: Vec<(u32, u32)>,
}

impl WalkSamples {
    pub fn is_empty(&self) -> bool {
        self.user_user.is_empty() && self.user_video.is_empty() && self.vlogger_user.is_empty()
    }
}

pub struct MetaPathSampler<'g> {
    graph: &'g TripartiteGraph,
    cfg: MetaPathConfig,
}

impl<'g> MetaPathSampler<'g> {
    pub fn new(graph: &'g TripartiteGraph, cfg: MetaPathConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(MetaPathSampler { graph, cfg })
    }

    /// One user → vlogger → {user | video} attempt.
    pub fn walk_video_view<R: Rng>(&self, user: u32, rng: &mut R) -> Option<Walk> {
        if rng.random::<f64>() >= self.cfg.q1 {
            return None;
        }
        let vlogger = *pick(self.graph.user_vloggers(user), rng)?;
        if rng.random::<f64>() < self.cfg.q2 {
            let other = pick_excluding(self.graph.vlogger_users(vlogger), user, rng)?;
            Some(Walk::UserVloggerUser {
                user,
                vlogger,
                other,
            })
        } else {
            let video = *pick(self.graph.vlogger_videos(vlogger), rng)?;
            Some(Walk::UserVloggerVideo {
                user,
                vlogger,
                video,
            })
        }
    }

    /// One user → video → user attempt, attributed to a followed vlogger.
    pub fn walk_vlogger_view<R: Rng>(&self, user: u32, rng: &mut R) -> Option<Walk> {
        if rng.random::<f64>() >= self.cfg.q1 {
            return None;
        }
        let video = *pick(self.graph.user_videos(user), rng)?;
        let other = pick_excluding(self.graph.video_users(video), user, rng)?;
        let attributed = *pick(self.graph.user_vloggers(user), rng)?;
        Some(Walk::UserVideoUser {
            user,
            video,
            other,
            attributed,
        })
    }

    /// Every attempt in canonical order: users ascending, video-view walks
    /// before vlogger-view walks. `None` marks an aborted attempt.
    pub fn attempts<'s, R: Rng>(
        &'s self,
        rng: &'s mut R,
    ) -> impl Iterator<Item = Option<Walk>> + 's {
        let (a, b) = (
            self.cfg.walks_per_user,
            self.cfg.vlogger_view_walks_per_user,
        );
        (0..self.graph.n_users() as u32)
            .flat_map(move |u| (0..a + b).map(move |i| (u, i < a)))
            .map(move |(u, video_view)| {
                if video_view {
                    self.walk_video_view(u, rng)
                } else {
                    self.walk_vlogger_view(u, rng)
                }
            })
    }
}

/// Samples all walks for the graph with the seed in `cfg` and collects their
/// deduplicated endpoint edges.
pub fn sample_meta_paths(graph: &TripartiteGraph, cfg: &MetaPathConfig) -> Result<WalkSamples> {
    sample_with_rng(graph, cfg, &mut rng::stream(cfg.seed, Stream::Walks))
}

pub(crate) fn sample_with_rng<R: Rng>(
    graph: &TripartiteGraph,
    cfg: &MetaPathConfig,
    rng: &mut R,
) -> Result<WalkSamples> {
    let sampler = MetaPathSampler::new(graph, *cfg)?;
    let mut out = WalkSamples::default();
    for walk in sampler.attempts(rng).flatten() {
        match walk {
            Walk::UserVloggerUser { user, other, .. } => {
                if cfg.uvu_in_video_view {
                    out.user_user.push((user.min(other), user.max(other)));
                }
            }
            Walk::UserVloggerVideo { user, video, .. } => out.user_video.push((user, video)),
            Walk::UserVideoUser {
                other, attributed, ..
            } => out.vlogger_user.push((attributed, other)),
        }
    }
    for edges in [
        &mut out.user_user,
        &mut out.user_video,
        &mut out.vlogger_user,
    ] {
        edges.sort_unstable();
        edges.dedup();
    }
    Ok(out)
}

fn pick<'a, T, R: Rng>(items: &'a [T], rng: &mut R) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.random_range(0..items.len())])
    }
}

/// Uniform draw from sorted `items` with `skip` removed.
fn pick_excluding<R: Rng>(items: &[u32], skip: u32, rng: &mut R) -> Option<u32> {
    match items.binary_search(&skip) {
        Ok(pos) => {
            if items.len() < 2 {
                return None;
            }
            let i = rng.random_range(0..items.len() - 1);
            Some(items[if i >= pos { i + 1 } else { i }])
        }
        Err(_) => pick(items, rng).copied(),
    }
}
