// Shared by several test targets; each uses a different subset.
#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vlogrec::graph::{EntityCounts, MetaPathConfig, TripartiteGraph, ViewGraph};
use vlogrec::objective::LossWeights;
use vlogrec::propagation::Table;
use vlogrec::training::{
    init_params, Batch, ContrastiveMode, Model, ModelConfig, ModelParams, TrainConfig, Triple,
    Variant,
};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/preprocess")
}

/// Random graph with at most 30 nodes; every video has a publisher.
pub fn random_graph(rng: &mut ChaCha8Rng) -> TripartiteGraph {
    let nu = rng.random_range(2..=10);
    let nv = rng.random_range(2..=12);
    let np = rng.random_range(1..=(30 - nu - nv).min(6));
    let mut uv = Vec::new();
    for u in 0..nu as u32 {
        for v in 0..nv as u32 {
            if rng.random_bool(0.35) {
                uv.push((u, v));
            }
        }
    }
    if uv.is_empty() {
        uv.push((0, 0));
    }
    let mut up = Vec::new();
    for u in 0..nu as u32 {
        for p in 0..np as u32 {
            if rng.random_bool(0.4) {
                up.push((u, p));
            }
        }
    }
    let pv: Vec<(u32, u32)> = (0..nv as u32)
        .map(|v| (rng.random_range(0..np as u32), v))
        .collect();
    let counts = EntityCounts {
        users: nu,
        videos: nv,
        vloggers: np,
    };
    TripartiteGraph::new(counts, &uv, &up, &pv).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Table {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// `D^-1/2 A D^-1/2` of a view, built entry by entry.
pub fn dense_operator(view: &ViewGraph) -> Table {
    let n = view.n_nodes();
    let mut a = Table::zeros((n, n));
    for i in 0..n {
        for &j in view.neighbors(i as u32) {
            a[[i, j as usize]] = 1.0;
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    for i in 0..n {
        for j in 0..n {
            if a[[i, j]] != 0.0 {
                a[[i, j]] /= (deg[i] * deg[j]).sqrt();
            }
        }
    }
    a
}

/// `[op^0 x, op^1 x, ..., op^layers x]` by repeated dense products.
pub fn dense_powers(op: &Table, x: &Table, layers: usize) -> Vec<Table> {
    let mut out = vec![x.clone()];
    for l in 0..layers {
        out.push(op.dot(&out[l]));
    }
    out
}

/// Row `g` is the mean of the `src` rows listed for `g`; empty groups are zero.
pub fn dense_mean(groups: &[Vec<u32>], src: &Table) -> Table {
    let mut out = Table::zeros((groups.len(), src.ncols()));
    for (g, members) in groups.iter().enumerate() {
        for &m in members {
            out.row_mut(g)
                .scaled_add(1.0 / members.len() as f64, &src.row(m as usize));
        }
    }
    out
}

pub fn max_abs_diff(a: &Table, b: &Table) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Plain bipartite LightGCN written out with loops:
/// `e_u^(l+1) = sum_{v in N(u)} e_v^(l) / sqrt(|N(u)| |N(v)|)`, final
/// embedding the mean of layers `0..=layers`.
pub fn lightgcn_by_hand(
    graph: &TripartiteGraph,
    users: &Table,
    videos: &Table,
    layers: usize,
) -> (Table, Table) {
    let (mut eu, mut ev) = (users.clone(), videos.clone());
    let (mut su, mut sv) = (users.clone(), videos.clone());
    for _ in 0..layers {
        let mut nu = Table::zeros(eu.dim());
        let mut nv = Table::zeros(ev.dim());
        for u in 0..graph.n_users() as u32 {
            for &v in graph.user_videos(u) {
                let w =
                    1.0 / ((graph.user_videos(u).len() * graph.video_users(v).len()) as f64).sqrt();
                nu.row_mut(u as usize).scaled_add(w, &ev.row(v as usize));
                nv.row_mut(v as usize).scaled_add(w, &eu.row(u as usize));
            }
        }
        eu = nu;
        ev = nv;
        su += &eu;
        sv += &ev;
    }
    let n = (layers + 1) as f64;
    (su / n, sv / n)
}

/// 1-based rank of `target` by sorting all non-excluded items on
/// (score descending, index ascending).
pub fn brute_force_rank(scores: &[f64], excluded: &[u32], target: u32) -> usize {
    let mut items: Vec<usize> = (0..scores.len())
        .filter(|i| !excluded.contains(&(*i as u32)))
        .collect();
    items.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    items.iter().position(|&i| i == target as usize).unwrap() + 1
}

/// 3 users, 4 videos, 2 vloggers.
pub fn gradient_fixture() -> TripartiteGraph {
    let counts = EntityCounts {
        users: 3,
        videos: 4,
        vloggers: 2,
    };
    TripartiteGraph::new(
        counts,
        &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 3), (2, 2)],
        &[(0, 0), (1, 1), (2, 0), (2, 1)],
        &[(0, 0), (0, 1), (1, 2), (1, 3)],
    )
    .unwrap()
}

pub fn gradient_batch() -> Batch {
    let t = |user, pos, neg| Triple { user, pos, neg };
    Batch {
        video: vec![t(0, 0, 2), t(1, 2, 3), t(2, 3, 0), t(0, 1, 3)],
        vlogger: vec![t(0, 0, 1), t(1, 1, 0)],
    }
}

/// d = 3, L = 2, every loss term on.
pub fn gradient_config() -> TrainConfig {
    TrainConfig {
        model: ModelConfig {
            dim: 3,
            layers: 2,
            ..ModelConfig::default()
        },
        loss: LossWeights {
            vlogger: 5.0,
            contrastive: 0.5,
            l2: 1e-4,
            temperature: 0.5,
        },
        metapath: MetaPathConfig {
            q1: 0.8,
            walks_per_user: 3,
            vlogger_view_walks_per_user: 3,
            ..MetaPathConfig::default()
        },
        seed: 5,
        ..TrainConfig::default()
    }
}

pub struct GradientCheck {
    pub max_rel: f64,
    pub worst: String,
    pub n_checked: usize,
}

/// Relative error `|a - n| / max(|a|, |n|)`; pairs with both sides below
/// `1e-8` count as agreeing when `|a - n| <= 1e-10`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < 1e-8 {
        if diff <= 1e-10 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / scale
    }
}

/// Central differences at `h` for every parameter of `variant` on the fixture.
pub fn check_gradients(variant: Variant, mode: ContrastiveMode, h: f64) -> GradientCheck {
    check_gradients_with(&variant.apply(&gradient_config()), mode, h)
}

pub fn check_gradients_with(cfg: &TrainConfig, mode: ContrastiveMode, h: f64) -> GradientCheck {
    let graph = gradient_fixture();
    let aug =
        vlogrec::training::neighborhoods_for_round(&graph, &cfg.seeded_metapath(), 0).unwrap();
    let model = Model::new(&graph, &aug, cfg.model).unwrap();
    let params = init_params(graph.counts(), cfg.model.dim, 0.5, 17).unwrap();
    let batch = gradient_batch();
    let (_, grads) = model
        .compute_gradients(&params, &batch, &cfg.loss, mode)
        .unwrap();
    let loss = |p: &ModelParams| {
        model
            .forward_loss(p, &batch, &cfg.loss, mode)
            .unwrap()
            .total
    };

    let names = ["users", "videos", "vloggers", "gate"];
    let mut out = GradientCheck {
        max_rel: 0.0,
        worst: String::new(),
        n_checked: 0,
    };
    for (t, name) in names.iter().enumerate() {
        for idx in 0..params.tensors()[t].len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.tensors_mut()[t].as_slice_mut().unwrap()[idx] += h;
            minus.tensors_mut()[t].as_slice_mut().unwrap()[idx] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let analytic = grads.tensors()[t].as_slice().unwrap()[idx];
            let rel = relative_error(analytic, numeric);
            out.n_checked += 1;
            if rel > out.max_rel {
                out.max_rel = rel;
                out.worst = format!("{name}[{idx}] analytic {analytic:e} numeric {numeric:e}");
            }
        }
    }
    out
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
