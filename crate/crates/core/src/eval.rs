//! Full-catalog ranking with watched-item exclusion, Recall@K / NDCG@K, and
//! the ablation suite.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::graph::Adjacency;
use crate::propagation::Table;
use crate::training::{self, Embeddings, Model, TrainConfig, Variant};
use crate::{Error, Result};

pub const DEFAULT_KS: [usize; 3] = [10, 20, 50];

/// Anything that can score every item for a user.
pub trait Scorer: Sync {
    fn n_items(&self) -> usize;
    /// Scores indexed by item.
    fn scores(&self, user: u32) -> Vec<f64>;
}

impl Scorer for Embeddings {
    fn n_items(&self) -> usize {
        self.n_videos()
    }

    fn scores(&self, user: u32) -> Vec<f64> {
        self.score_all(user)
    }
}

/// A precomputed `users × items` score matrix.
impl Scorer for Table {
    fn n_items(&self) -> usize {
        self.ncols()
    }

    fn scores(&self, user: u32) -> Vec<f64> {
        self.row(user as usize).to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    pub user: u32,
    /// Non-excluded items, best first.
    pub order: Vec<u32>,
    /// 1-based rank of the target, `None` when there is no target.
    pub target_rank: Option<usize>,
}

/// Descending score, ascending index on ties.
fn ranks_before(scores: &[f64], a: u32, b: u32) -> Ordering {
    scores[b as usize]
        .total_cmp(&scores[a as usize])
        .then(a.cmp(&b))
}

fn check_target(user: u32, excluded: &[u32], target: Option<u32>) -> Result<()> {
    match target {
        Some(t) if excluded.binary_search(&t).is_ok() => {
            Err(Error::SplitLeakage { user, video: t })
        }
        _ => Ok(()),
    }
}

/// Sorts every non-excluded item for `user`. `excluded` must be sorted.
pub fn rank_for_user<S: Scorer + ?Sized>(
    scorer: &S,
    user: u32,
    excluded: &[u32],
    target: Option<u32>,
) -> Result<RankingResult> {
    check_target(user, excluded, target)?;
    let scores = scorer.scores(user);
    let mut order: Vec<u32> = (0..scorer.n_items() as u32)
        .filter(|i| excluded.binary_search(i).is_err())
        .collect();
    if order.is_empty() {
        return Err(Error::EmptyCandidates { user });
    }
    order.sort_by(|&a, &b| ranks_before(&scores, a, b));
    let target_rank = target.and_then(|t| order.iter().position(|&i| i == t).map(|p| p + 1));
    Ok(RankingResult {
        user,
        order,
        target_rank,
    })
}

/// Rank of `target` among the non-excluded items, without a full sort.
pub fn target_rank<S: Scorer + ?Sized>(
    scorer: &S,
    user: u32,
    excluded: &[u32],
    target: u32,
) -> Result<usize> {
    check_target(user, excluded, Some(target))?;
    if target as usize >= scorer.n_items() {
        return Err(Error::Inconsistent(format!(
            "target {target} outside the catalog"
        )));
    }
    let scores = scorer.scores(user);
    let ahead = (0..scorer.n_items() as u32)
        .filter(|&i| i != target && excluded.binary_search(&i).is_err())
        .filter(|&i| ranks_before(&scores, i, target) == Ordering::Less)
        .count();
    Ok(ahead + 1)
}

pub fn recall_at_k(rank: Option<usize>, k: usize) -> f64 {
    match rank {
        Some(r) if r <= k => 1.0,
        _ => 0.0,
    }
}

pub fn ndcg_at_k(rank: Option<usize>, k: usize) -> f64 {
    match rank {
        Some(r) if r <= k => 1.0 / ((r + 1) as f64).log2(),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAtK {
    pub k: usize,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub users: usize,
    pub at: Vec<MetricAtK>,
}

impl SplitMetrics {
    pub fn recall(&self, k: usize) -> Option<f64> {
        self.at.iter().find(|m| m.k == k).map(|m| m.recall)
    }

    pub fn ndcg(&self, k: usize) -> Option<f64> {
        self.at.iter().find(|m| m.k == k).map(|m| m.ndcg)
    }
}

/// Mean Recall@K and NDCG@K over `(user, target)` pairs; `exclusions[user]`
/// lists items never recommended to the user.
pub fn evaluate<S: Scorer + ?Sized>(
    scorer: &S,
    targets: &[(u32, u32)],
    exclusions: &Adjacency,
    ks: &[usize],
) -> Result<SplitMetrics> {
    if targets.is_empty() {
        return Err(Error::NoEvaluableUsers("no targets".into()));
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::InvalidConfig("K must be >= 1".into()));
    }
    let ranks: Vec<usize> = targets
        .par_iter()
        .map(|&(u, t)| {
            let excluded = if (u as usize) < exclusions.n_rows() {
                exclusions.neighbors(u)
            } else {
                &[]
            };
            target_rank(scorer, u, excluded, t)
        })
        .collect::<Result<_>>()?;
    let n = ranks.len() as f64;
    let at = ks
        .iter()
        .map(|&k| MetricAtK {
            k,
            recall: ranks.iter().map(|&r| recall_at_k(Some(r), k)).sum::<f64>() / n,
            ndcg: ranks.iter().map(|&r| ndcg_at_k(Some(r), k)).sum::<f64>() / n,
        })
        .collect();
    Ok(SplitMetrics {
        users: ranks.len(),
        at,
    })
}

/// Metrics for one split plus the run metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: Split,
    pub variant: Variant,
    pub seed: u64,
    pub config_digest: String,
    pub metrics: SplitMetrics,
}

impl MetricsReport {
    /// One `key=value` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "split={}", self.split.as_str()).unwrap();
        writeln!(s, "variant={}", self.variant.label()).unwrap();
        writeln!(s, "seed={}", self.seed).unwrap();
        writeln!(s, "config_digest={}", self.config_digest).unwrap();
        writeln!(s, "users={}", self.metrics.users).unwrap();
        for m in &self.metrics.at {
            writeln!(s, "recall@{}={:.6}", m.k, m.recall).unwrap();
        }
        for m in &self.metrics.at {
            writeln!(s, "ndcg@{}={:.6}", m.k, m.ndcg).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data") + "\n"
    }
}

/// Trains `variant` on the dataset's training split and evaluates `split`.
pub fn train_and_evaluate(
    dataset: &Dataset,
    base: &TrainConfig,
    variant: Variant,
    split: Split,
    ks: &[usize],
    digest: &str,
) -> Result<(MetricsReport, training::TrainOutcome)> {
    let cfg = variant.apply(base);
    let graph = dataset.train_graph()?;
    let outcome = training::train(&graph, &dataset.targets(Split::Val), &cfg, |_| {})?;
    let aug =
        training::neighborhoods_for_round(&graph, &cfg.seeded_metapath(), outcome.best.walk_round)?;
    let model = Model::new(&graph, &aug, cfg.model)?;
    let emb = model.forward(&outcome.best.params)?;
    let metrics = evaluate(
        &emb,
        &dataset.targets(split),
        &dataset.exclusions(split),
        ks,
    )?;
    let report = MetricsReport {
        split,
        variant,
        seed: cfg.seed,
        config_digest: digest.to_string(),
        metrics,
    };
    Ok((report, outcome))
}

/// Trains and tests each variant from `base`, in order.
pub fn run_ablation_suite(
    dataset: &Dataset,
    base: &TrainConfig,
    variants: &[Variant],
    ks: &[usize],
    digest: &str,
) -> Result<Vec<MetricsReport>> {
    variants
        .iter()
        .map(|&v| train_and_evaluate(dataset, base, v, Split::Test, ks, digest).map(|(r, _)| r))
        .collect()
}

/// Tab-separated comparison table, one row per report.
pub fn ablation_table(reports: &[MetricsReport]) -> String {
    let mut s = String::from("variant");
    if let Some(first) = reports.first() {
        for m in &first.metrics.at {
            write!(s, "\trecall@{}", m.k).unwrap();
        }
        for m in &first.metrics.at {
            write!(s, "\tndcg@{}", m.k).unwrap();
        }
    }
    s.push('\n');
    for r in reports {
        s.push_str(r.variant.label());
        for m in &r.metrics.at {
            write!(s, "\t{:.6}", m.recall).unwrap();
        }
        for m in &r.metrics.at {
            write!(s, "\t{:.6}", m.ndcg).unwrap();
        }
        s.push('\n');
    }
    s
}
