//! Per-view neighbor sets widened with meta-path endpoints.
//!
//! Each view is one undirected graph over a joint index space: users occupy
//! `0..n_users`, the view's item class (videos or vloggers) follows at
//! `n_users..`. The video view may hold user–user edges from
//! user–vlogger–user walks, so a user's video-view set can mix users and
//! videos. All edges are stored in both directions.

use super::{Adjacency, TripartiteGraph, WalkSamples};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewNode {
    User(u32),
    Item(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewGraph {
    n_users: usize,
    n_items: usize,
    adj: Adjacency,
}

impl ViewGraph {
    fn build(n_users: usize, n_items: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let both = edges.into_iter().flat_map(|(a, b)| [(a, b), (b, a)]);
        ViewGraph {
            n_users,
            n_items,
            adj: Adjacency::from_pairs(n_users + n_items, both),
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_items
    }

    pub fn user_node(&self, user: u32) -> u32 {
        user
    }

    pub fn item_node(&self, item: u32) -> u32 {
        self.n_users as u32 + item
    }

    pub fn decode(&self, node: u32) -> ViewNode {
        if (node as usize) < self.n_users {
            ViewNode::User(node)
        } else {
            ViewNode::Item(node - self.n_users as u32)
        }
    }

    /// Neighbors of a joint-index node, as joint indices.
    pub fn neighbors(&self, node: u32) -> &[u32] {
        self.adj.neighbors(node)
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adj.degree(node)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adj
    }

    pub fn user_neighbors(&self, user: u32) -> impl Iterator<Item = ViewNode> + '_ {
        self.neighbors(self.user_node(user))
            .iter()
            .map(|&n| self.decode(n))
    }

    pub fn item_neighbors(&self, item: u32) -> impl Iterator<Item = ViewNode> + '_ {
        self.neighbors(self.item_node(item))
            .iter()
            .map(|&n| self.decode(n))
    }
}

/// Augmented neighbor sets for both propagation views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedNeighborhoods {
    /// Users and videos.
    pub video_view: ViewGraph,
    /// Users and vloggers.
    pub vlogger_view: ViewGraph,
}

impl AugmentedNeighborhoods {
    /// Plain bipartite neighborhoods, no walk endpoints.
    pub fn base(graph: &TripartiteGraph) -> Self {
        build_augmented_neighborhoods(graph, &WalkSamples::default())
            .expect("empty walk set is always consistent")
    }

    /// V_u: videos watched plus co-follower users reached by walks.
    pub fn video_view_user_nbrs(&self, user: u32) -> impl Iterator<Item = ViewNode> + '_ {
        self.video_view.user_neighbors(user)
    }

    /// U_v: viewers plus walk start users.
    pub fn video_view_video_nbrs(&self, video: u32) -> impl Iterator<Item = ViewNode> + '_ {
        self.video_view.item_neighbors(video)
    }

    /// P_u: followed vloggers plus vloggers that gained this user as an
    /// attributed walk endpoint.
    pub fn vlogger_view_user_nbrs(&self, user: u32) -> impl Iterator<Item = ViewNode> + '_ {
        self.vlogger_view.user_neighbors(user)
    }

    /// U_p: followers plus attributed walk endpoints.
    pub fn vlogger_view_vlogger_nbrs(&self, vlogger: u32) -> impl Iterator<Item = ViewNode> + '_ {
        self.vlogger_view.item_neighbors(vlogger)
    }
}

/// Folds walk endpoints into the bipartite relations of `graph`.
pub fn build_augmented_neighborhoods(
    graph: &TripartiteGraph,
    walks: &WalkSamples,
) -> Result<AugmentedNeighborhoods> {
    let (nu, nv, np) = (graph.n_users(), graph.n_videos(), graph.n_vloggers());
    for &(a, b) in &walks.user_user {
        if a as usize >= nu || b as usize >= nu || a == b {
            return Err(Error::Inconsistent(format!(
                "user-user walk edge ({a}, {b})"
            )));
        }
    }
    for &(u, v) in &walks.user_video {
        if u as usize >= nu || v as usize >= nv {
            return Err(Error::Inconsistent(format!(
                "user-video walk edge ({u}, {v})"
            )));
        }
    }
    for &(p, u) in &walks.vlogger_user {
        if p as usize >= np || u as usize >= nu {
            return Err(Error::Inconsistent(format!(
                "vlogger-user walk edge ({p}, {u})"
            )));
        }
    }

    let off_v = nu as u32;
    let video_edges = graph
        .user_video_adjacency()
        .iter()
        .chain(walks.user_video.iter().copied())
        .map(|(u, v)| (u, off_v + v))
        .chain(walks.user_user.iter().copied());
    let vlogger_edges = graph
        .user_vlogger_adjacency()
        .iter()
        .chain(walks.vlogger_user.iter().map(|&(p, u)| (u, p)))
        .map(|(u, p)| (u, off_v + p));

    Ok(AugmentedNeighborhoods {
        video_view: ViewGraph::build(nu, nv, video_edges),
        vlogger_view: ViewGraph::build(nu, np, vlogger_edges),
    })
}
