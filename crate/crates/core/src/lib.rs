//! Vlogger-augmented graph recommendation for micro-video platforms.
//!
//! Users, videos and vloggers form a tripartite graph. The model learns two
//! embeddings per node: one by LightGCN-style propagation over user-video
//! edges (the *video view*), one over user-vlogger follow edges (the
//! *vlogger view*). Both views are widened with endpoints of sampled
//! meta-path walks that cross between the relations, aligned by a
//! cross-view InfoNCE loss, and concatenated. A user-video score blends the
//! user's preference for the video with the preference for its publisher
//! through a learned sigmoid gate.
//!
//! Module map:
//!
//! - [`graph`]: tripartite graph, meta-path walk sampling, augmented neighbor sets
//! - [`propagation`]: symmetric-normalized message passing for both views
//! - [`objective`]: scores, gate, BPR, InfoNCE and the weighted total loss
//! - [`training`]: parameters, exact gradients, Adam, training loop, checkpoints
//! - [`data`]: raw log ingestion, positive rules, filtering, splits, synthetic data
//! - [`eval`]: full-catalog ranking, Recall@K / NDCG@K, ablation suite
//! - [`pipeline`]: end-to-end commands driven by a [`config::RunConfig`]
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod objective;
pub mod pipeline;
pub mod propagation;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
