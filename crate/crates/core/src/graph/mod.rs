//! The user–video–vlogger tripartite graph and its meta-path augmentation.
//!
//! [`TripartiteGraph`] holds the three binary relations (user watches video,
//! user follows vlogger, vlogger publishes video) as symmetric CSR
//! adjacencies over dense per-class indices. [`metapath`] samples short typed
//! walks across the relations and [`neighborhoods`] folds the walk endpoints
//! into the neighbor sets consumed by propagation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod io;
pub mod metapath;
pub mod neighborhoods;

pub use metapath::{sample_meta_paths, MetaPathConfig, MetaPathSampler, Walk, WalkSamples};
pub use neighborhoods::{
    build_augmented_neighborhoods, AugmentedNeighborhoods, ViewGraph, ViewNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    User,
    Video,
    Vlogger,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::User => "user",
            EntityKind::Video => "video",
            EntityKind::Vlogger => "vlogger",
        }
    }
}

/// A node of the tripartite graph: entity class plus dense index within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub kind: EntityKind,
    pub index: u32,
}

/// Bijective map between raw external ids and dense indices, assigned in
/// order of first insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    raw: Vec<String>,
    index: HashMap<String, u32>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `raw`, inserting it if unseen.
    pub fn intern(&mut self, raw: &str) -> u32 {
        if let Some(&i) = self.index.get(raw) {
            return i;
        }
        let i = self.raw.len() as u32;
        self.raw.push(raw.to_owned());
        self.index.insert(raw.to_owned(), i);
        i
    }

    pub fn get(&self, raw: &str) -> Option<u32> {
        self.index.get(raw).copied()
    }

    pub fn raw(&self, index: u32) -> &str {
        &self.raw[index as usize]
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.raw
            .iter()
            .enumerate()
            .map(|(i, r)| (i as u32, r.as_str()))
    }
}

impl<S: AsRef<str>> FromIterator<S> for IdMap {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut map = IdMap::new();
        for s in iter {
            map.intern(s.as_ref());
        }
        map
    }
}

/// Number of nodes per entity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub users: usize,
    pub videos: usize,
    pub vloggers: usize,
}

/// Compressed sparse rows: `neighbors(i)` is sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Adjacency {
    /// Builds rows `0..n_rows` from `(row, target)` pairs; duplicates collapse.
    pub fn from_pairs(n_rows: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut pairs: Vec<(u32, u32)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n_rows + 1];
        for &(r, _) in &pairs {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..n_rows {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, t)| t).collect();
        Adjacency { offsets, targets }
    }

    pub fn neighbors(&self, row: u32) -> &[u32] {
        let r = row as usize;
        &self.targets[self.offsets[r]..self.offsets[r + 1]]
    }

    pub fn degree(&self, row: u32) -> usize {
        let r = row as usize;
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn contains(&self, row: u32, target: u32) -> bool {
        self.neighbors(row).binary_search(&target).is_ok()
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n_rows() as u32).flat_map(move |r| self.neighbors(r).iter().map(move |&t| (r, t)))
    }
}

/// Immutable tripartite graph over dense indices.
///
/// Every relation is stored in both directions, so e.g. `user_videos` and
/// `video_users` describe the same edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripartiteGraph {
    counts: EntityCounts,
    user_videos: Adjacency,
    video_users: Adjacency,
    user_vloggers: Adjacency,
    vlogger_users: Adjacency,
    vlogger_videos: Adjacency,
    publisher: Vec<u32>,
}

impl TripartiteGraph {
    /// Builds the graph from dense edge lists. Duplicate edges are dropped.
    ///
    /// Every video in `0..counts.videos` must have exactly one publisher
    /// among `vlogger_video`.
    pub fn new(
        counts: EntityCounts,
        user_video: &[(u32, u32)],
        user_vlogger: &[(u32, u32)],
        vlogger_video: &[(u32, u32)],
    ) -> Result<Self> {
        if user_video.is_empty() {
            return Err(Error::EmptyGraph);
        }
        check_bounds("user-video", user_video, counts.users, counts.videos)?;
        check_bounds("user-vlogger", user_vlogger, counts.users, counts.vloggers)?;
        check_bounds(
            "vlogger-video",
            vlogger_video,
            counts.vloggers,
            counts.videos,
        )?;

        let publisher =
            unique_publishers(counts, vlogger_video).map_err(|(video, publishers)| {
                Error::MalformedPublishing {
                    video: video.to_string(),
                    publishers,
                }
            })?;

        Ok(TripartiteGraph {
            counts,
            user_videos: Adjacency::from_pairs(counts.users, user_video.iter().copied()),
            video_users: Adjacency::from_pairs(
                counts.videos,
                user_video.iter().map(|&(u, v)| (v, u)),
            ),
            user_vloggers: Adjacency::from_pairs(counts.users, user_vlogger.iter().copied()),
            vlogger_users: Adjacency::from_pairs(
                counts.vloggers,
                user_vlogger.iter().map(|&(u, p)| (p, u)),
            ),
            vlogger_videos: Adjacency::from_pairs(counts.vloggers, vlogger_video.iter().copied()),
            publisher,
        })
    }

    /// Builds the graph from raw-id edge lists, assigning dense indices in
    /// order of first appearance (users, then videos, then vloggers as they
    /// occur in `user_video`, `user_vlogger`, `vlogger_video`).
    pub fn from_raw<S: AsRef<str>>(
        user_video: &[(S, S)],
        user_vlogger: &[(S, S)],
        vlogger_video: &[(S, S)],
    ) -> Result<(Self, GraphIds)> {
        if user_video.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut ids = GraphIds::default();
        let uv: Vec<(u32, u32)> = user_video
            .iter()
            .map(|(u, v)| (ids.users.intern(u.as_ref()), ids.videos.intern(v.as_ref())))
            .collect();
        let up: Vec<(u32, u32)> = user_vlogger
            .iter()
            .map(|(u, p)| {
                (
                    ids.users.intern(u.as_ref()),
                    ids.vloggers.intern(p.as_ref()),
                )
            })
            .collect();
        let pv: Vec<(u32, u32)> = vlogger_video
            .iter()
            .map(|(p, v)| {
                (
                    ids.vloggers.intern(p.as_ref()),
                    ids.videos.intern(v.as_ref()),
                )
            })
            .collect();
        let counts = EntityCounts {
            users: ids.users.len(),
            videos: ids.videos.len(),
            vloggers: ids.vloggers.len(),
        };
        if let Err((video, publishers)) = unique_publishers(counts, &pv) {
            return Err(Error::MalformedPublishing {
                video: ids.videos.raw(video).to_owned(),
                publishers,
            });
        }
        Self::new(counts, &uv, &up, &pv).map(|g| (g, ids))
    }

    pub fn counts(&self) -> EntityCounts {
        self.counts
    }

    pub fn n_users(&self) -> usize {
        self.counts.users
    }

    pub fn n_videos(&self) -> usize {
        self.counts.videos
    }

    pub fn n_vloggers(&self) -> usize {
        self.counts.vloggers
    }

    /// Videos watched by `user` (V_u).
    pub fn user_videos(&self, user: u32) -> &[u32] {
        self.user_videos.neighbors(user)
    }

    /// Users who watched `video` (U_v).
    pub fn video_users(&self, video: u32) -> &[u32] {
        self.video_users.neighbors(video)
    }

    /// Vloggers followed by `user` (P_u).
    pub fn user_vloggers(&self, user: u32) -> &[u32] {
        self.user_vloggers.neighbors(user)
    }

    /// Followers of `vlogger` (U_p).
    pub fn vlogger_users(&self, vlogger: u32) -> &[u32] {
        self.vlogger_users.neighbors(vlogger)
    }

    /// Videos published by `vlogger` (V_p).
    pub fn vlogger_videos(&self, vlogger: u32) -> &[u32] {
        self.vlogger_videos.neighbors(vlogger)
    }

    pub fn publisher_of(&self, video: u32) -> u32 {
        self.publisher[video as usize]
    }

    pub fn publishers(&self) -> &[u32] {
        &self.publisher
    }

    pub fn user_video_adjacency(&self) -> &Adjacency {
        &self.user_videos
    }

    pub fn video_user_adjacency(&self) -> &Adjacency {
        &self.video_users
    }

    pub fn user_vlogger_adjacency(&self) -> &Adjacency {
        &self.user_vloggers
    }

    pub fn vlogger_video_adjacency(&self) -> &Adjacency {
        &self.vlogger_videos
    }

    /// Degree of `node` in the given relation (the neighbor class).
    pub fn degree(&self, node: NodeId, relation: EntityKind) -> usize {
        use EntityKind::*;
        let i = node.index;
        match (node.kind, relation) {
            (User, Video) => self.user_videos.degree(i),
            (User, Vlogger) => self.user_vloggers.degree(i),
            (Video, User) => self.video_users.degree(i),
            (Video, Vlogger) => 1,
            (Vlogger, User) => self.vlogger_users.degree(i),
            (Vlogger, Video) => self.vlogger_videos.degree(i),
            _ => 0,
        }
    }

    pub fn n_user_video_edges(&self) -> usize {
        self.user_videos.n_edges()
    }

    pub fn n_user_vlogger_edges(&self) -> usize {
        self.user_vloggers.n_edges()
    }
}

/// Raw-id tables for the three entity classes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphIds {
    pub users: IdMap,
    pub videos: IdMap,
    pub vloggers: IdMap,
}

/// Publisher per video, or the first video with a publisher count other than one.
fn unique_publishers(
    counts: EntityCounts,
    vlogger_video: &[(u32, u32)],
) -> Result<Vec<u32>, (u32, usize)> {
    let by_video = Adjacency::from_pairs(counts.videos, vlogger_video.iter().map(|&(p, v)| (v, p)));
    (0..counts.videos as u32)
        .map(|v| match by_video.neighbors(v) {
            [p] => Ok(*p),
            ps => Err((v, ps.len())),
        })
        .collect()
}

fn check_bounds(relation: &str, edges: &[(u32, u32)], n_src: usize, n_dst: usize) -> Result<()> {
    for &(a, b) in edges {
        if a as usize >= n_src || b as usize >= n_dst {
            return Err(Error::Inconsistent(format!(
                "{relation} edge ({a}, {b}) outside node counts ({n_src}, {n_dst})"
            )));
        }
    }
    Ok(())
}
