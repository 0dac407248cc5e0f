//! Raw log ingestion, positive rules, filtering, leave-one-out splits,
//! processed-dataset files and synthetic data.
//!
//! A processed dataset directory holds:
//!
//! ```text
//! users.tsv  videos.tsv  vloggers.tsv   <raw_id>\t<dense_index>
//! user_video.tsv                         <user>\t<video>, chronological
//! user_vlogger.tsv                       <user>\t<vlogger>
//! vlogger_video.tsv                      <vlogger>\t<video>
//! split.tsv                              <user>\t<video>\t<train|val|test>
//! ```

pub mod raw;
pub mod rules;
pub mod split;
pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

pub use raw::{parse_raw_log, read_raw_log, RawBehaviorRecord};
pub use rules::{
    derive_video_positives, derive_vlogger_positives, filter_graph, PositiveRuleConfig,
};
pub use split::{leave_one_out_split, Split};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use crate::graph::io::{read_edge_list, read_id_map, write_edge_list, write_file, write_id_map};
use crate::graph::{Adjacency, EntityCounts, GraphIds, IdMap, TripartiteGraph};
use crate::{Error, Result};

pub const FILES: [&str; 7] = [
    "users.tsv",
    "videos.tsv",
    "vloggers.tsv",
    "user_video.tsv",
    "user_vlogger.tsv",
    "vlogger_video.tsv",
    "split.tsv",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub user: u32,
    pub video: u32,
    pub split: Split,
}

/// A split, filtered dataset over dense ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: GraphIds,
    /// User–video positives in chronological order.
    pub interactions: Vec<Interaction>,
    /// Not time-split; all of it is training signal.
    pub user_vlogger: Vec<(u32, u32)>,
    /// `(vlogger, video)`, one per video, by video index.
    pub publishing: Vec<(u32, u32)>,
}

/// Rules, filters, vlogger positives and the leave-one-out split, in that order.
pub fn build_dataset(records: &[RawBehaviorRecord], rules: &PositiveRuleConfig) -> Result<Dataset> {
    rules.validate()?;
    let positives = derive_video_positives(records, rules);
    let publishers = rules::publishers(records)?;
    let filtered = filter_graph(&positives, &publishers, rules)?;
    let up = derive_vlogger_positives(records, &filtered, rules);

    let mut ids = GraphIds::default();
    let mut pairs = Vec::with_capacity(filtered.positives.len());
    for p in &filtered.positives {
        pairs.push((ids.users.intern(&p.user), ids.videos.intern(&p.video)));
    }
    let publishing: Vec<(u32, u32)> = (0..ids.videos.len() as u32)
        .map(|v| {
            (
                ids.vloggers.intern(&filtered.publisher[ids.videos.raw(v)]),
                v,
            )
        })
        .collect();
    let mut user_vlogger: Vec<(u32, u32)> = up
        .iter()
        .map(|(u, p)| {
            (
                ids.users.get(u).expect("filtered user"),
                ids.vloggers.get(p).expect("filtered vlogger"),
            )
        })
        .collect();
    user_vlogger.sort_unstable();

    let keyed: Vec<(u32, i64)> = pairs
        .iter()
        .zip(&filtered.positives)
        .map(|(&(u, _), p)| (u, p.timestamp))
        .collect();
    let splits = leave_one_out_split(&keyed);
    let interactions = pairs
        .into_iter()
        .zip(splits)
        .map(|((user, video), split)| Interaction { user, video, split })
        .collect();
    let ds = Dataset {
        ids,
        interactions,
        user_vlogger,
        publishing,
    };
    ds.validate()?;
    Ok(ds)
}

impl Dataset {
    pub fn counts(&self) -> EntityCounts {
        EntityCounts {
            users: self.ids.users.len(),
            videos: self.ids.videos.len(),
            vloggers: self.ids.vloggers.len(),
        }
    }

    /// Training user–video edges plus all follow and publishing edges.
    pub fn train_graph(&self) -> Result<TripartiteGraph> {
        let uv: Vec<(u32, u32)> = self.pairs(Split::Train).collect();
        TripartiteGraph::new(self.counts(), &uv, &self.user_vlogger, &self.publishing)
    }

    fn pairs(&self, split: Split) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.interactions
            .iter()
            .filter(move |i| i.split == split)
            .map(|i| (i.user, i.video))
    }

    /// `(user, video)` pairs of a split, in chronological order.
    pub fn targets(&self, split: Split) -> Vec<(u32, u32)> {
        self.pairs(split).collect()
    }

    /// Items hidden from each user when ranking `split`: training positives
    /// for validation, training and validation positives for test.
    pub fn exclusions(&self, split: Split) -> Adjacency {
        let hidden: &[Split] = match split {
            Split::Train => &[],
            Split::Val => &[Split::Train],
            Split::Test => &[Split::Train, Split::Val],
        };
        Adjacency::from_pairs(
            self.counts().users,
            self.interactions
                .iter()
                .filter(|i| hidden.contains(&i.split))
                .map(|i| (i.user, i.video)),
        )
    }

    /// Users that have a target in `split`.
    pub fn evaluable_users(&self, split: Split) -> usize {
        self.pairs(split)
            .map(|(u, _)| u)
            .collect::<HashSet<_>>()
            .len()
    }

    /// Partition and per-user split invariants.
    pub fn validate(&self) -> Result<()> {
        let c = self.counts();
        let bad = |m: String| Err(Error::Inconsistent(m));
        let mut seen = HashSet::new();
        let mut per_user: BTreeMap<u32, [usize; 3]> = BTreeMap::new();
        for i in &self.interactions {
            if i.user as usize >= c.users || i.video as usize >= c.videos {
                return bad(format!(
                    "interaction ({}, {}) out of range",
                    i.user, i.video
                ));
            }
            if !seen.insert((i.user, i.video)) {
                return bad(format!("duplicate interaction ({}, {})", i.user, i.video));
            }
            per_user.entry(i.user).or_default()[i.split as usize] += 1;
        }
        for (u, [_, val, test]) in per_user {
            if val > 1 || test > 1 || val != test {
                return bad(format!(
                    "user {u} has {val} validation and {test} test interactions"
                ));
            }
        }
        if self.publishing.len() != c.videos
            || self
                .publishing
                .iter()
                .enumerate()
                .any(|(i, &(_, v))| v as usize != i)
        {
            return bad("publishing must list one publisher per video in index order".into());
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let ids = &self.ids;
        write_id_map(&dir.join("users.tsv"), &ids.users)?;
        write_id_map(&dir.join("videos.tsv"), &ids.videos)?;
        write_id_map(&dir.join("vloggers.tsv"), &ids.vloggers)?;
        write_edge_list(
            &dir.join("user_video.tsv"),
            self.interactions
                .iter()
                .map(|i| (ids.users.raw(i.user), ids.videos.raw(i.video))),
        )?;
        write_edge_list(
            &dir.join("user_vlogger.tsv"),
            self.user_vlogger
                .iter()
                .map(|&(u, p)| (ids.users.raw(u), ids.vloggers.raw(p))),
        )?;
        write_edge_list(
            &dir.join("vlogger_video.tsv"),
            self.publishing
                .iter()
                .map(|&(p, v)| (ids.vloggers.raw(p), ids.videos.raw(v))),
        )?;
        let mut s = String::new();
        for i in &self.interactions {
            s.push_str(&format!(
                "{}\t{}\t{}\n",
                ids.users.raw(i.user),
                ids.videos.raw(i.video),
                i.split.as_str()
            ));
        }
        write_file(&dir.join("split.tsv"), s.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Dataset> {
        let ids = GraphIds {
            users: read_id_map(&dir.join("users.tsv"))?,
            videos: read_id_map(&dir.join("videos.tsv"))?,
            vloggers: read_id_map(&dir.join("vloggers.tsv"))?,
        };
        let lookup = |map: &IdMap, raw: &str, what: &str, file: &str| {
            map.get(raw)
                .ok_or_else(|| Error::Inconsistent(format!("{file}: unknown {what} `{raw}`")))
        };
        let edges = |name: &str,
                     a: &'static str,
                     b: &'static str,
                     ma: &IdMap,
                     mb: &IdMap|
         -> Result<Vec<(u32, u32)>> {
            read_edge_list(&dir.join(name))?
                .iter()
                .map(|(x, y)| Ok((lookup(ma, x, a, name)?, lookup(mb, y, b, name)?)))
                .collect()
        };
        let user_vlogger = edges(
            "user_vlogger.tsv",
            "user",
            "vlogger",
            &ids.users,
            &ids.vloggers,
        )?;
        let mut publishing = edges(
            "vlogger_video.tsv",
            "vlogger",
            "video",
            &ids.vloggers,
            &ids.videos,
        )?;
        publishing.sort_by_key(|&(_, v)| v);
        let uv = edges("user_video.tsv", "user", "video", &ids.users, &ids.videos)?;

        let split_path = dir.join("split.tsv");
        let text = std::fs::read_to_string(&split_path).map_err(|e| Error::io(&split_path, e))?;
        let file = split_path.display().to_string();
        let mut interactions = Vec::new();
        for (n, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let parse_err = |m: String| Error::Parse {
                file: file.clone(),
                line: n + 1,
                message: m,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [u, v, s] = cols[..] else {
                return Err(parse_err("expected user, video and split".into()));
            };
            interactions.push(Interaction {
                user: lookup(&ids.users, u, "user", "split.tsv")?,
                video: lookup(&ids.videos, v, "video", "split.tsv")?,
                split: s
                    .parse()
                    .map_err(|_| parse_err(format!("unknown split `{s}`")))?,
            });
        }
        let listed: Vec<(u32, u32)> = interactions.iter().map(|i| (i.user, i.video)).collect();
        if listed != uv {
            return Err(Error::Inconsistent(
                "split.tsv and user_video.tsv list different interactions".into(),
            ));
        }
        let ds = Dataset {
            ids,
            interactions,
            user_vlogger,
            publishing,
        };
        ds.validate()?;
        Ok(ds)
    }
}
