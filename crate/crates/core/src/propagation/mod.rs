//! Symmetric-normalized message passing for the two views.
//!
//! One propagation step maps a joint `(users ++ items) × d` table `X` to
//! `S X`, where `S[i][j] = 1 / (sqrt(deg i) * sqrt(deg j))` over the view's
//! augmented neighbor sets. There are no weights or activations, so the
//! operator is linear and `S` is symmetric; the backward pass of a layer is
//! the same operator applied to the incoming gradient.
//!
//! The third entity class of each view is not propagated but mean-pooled per
//! layer: vloggers from the videos they publish (video view), videos from the
//! users who watched them (vlogger view).

use ndarray::{concatenate, s, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, AugmentedNeighborhoods, TripartiteGraph, ViewGraph};
use crate::{Error, Result};

pub mod snapshot;

/// Row-major `count × d` embedding table.
pub type Table = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum View {
    #[serde(rename = "video")]
    Video,
    #[serde(rename = "vlogger")]
    Vlogger,
}

/// Denominator used when averaging layers `0..=L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LayerAverage {
    /// `1 / L` (falls back to 1 when `L = 0`).
    #[serde(rename = "L")]
    L,
    /// `1 / (L + 1)`: the uniform mean.
    #[default]
    #[serde(rename = "L_plus_1")]
    LPlusOne,
}

impl LayerAverage {
    pub fn factor(self, layers: usize) -> f64 {
        match self {
            LayerAverage::L if layers > 0 => 1.0 / layers as f64,
            LayerAverage::L => 1.0,
            LayerAverage::LPlusOne => 1.0 / (layers + 1) as f64,
        }
    }
}

/// Per-layer tables of the two propagated classes of a view.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedLayers {
    pub users: Vec<Table>,
    pub items: Vec<Table>,
}

/// All layers and the layer-averaged tables of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewEmbeddings {
    pub view: View,
    pub users: Vec<Table>,
    pub videos: Vec<Table>,
    pub vloggers: Vec<Table>,
    pub final_users: Table,
    pub final_videos: Table,
    pub final_vloggers: Table,
}

/// `1 / sqrt(deg)` per node, 0 for isolated nodes.
pub fn inverse_sqrt_degrees(graph: &ViewGraph) -> Vec<f64> {
    (0..graph.n_nodes() as u32)
        .map(|n| match graph.degree(n) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect()
}

/// One application of the normalized adjacency to a joint table.
pub fn normalized_step(graph: &ViewGraph, inv_sqrt: &[f64], x: &Table) -> Table {
    let d = x.ncols();
    let x = x.as_standard_layout();
    let src = x.as_slice().expect("standard layout");
    let mut out = Table::zeros((graph.n_nodes(), d));
    if d == 0 {
        return out;
    }
    out.as_slice_mut()
        .expect("fresh table")
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, row)| {
            let ci = inv_sqrt[i];
            for &j in graph.neighbors(i as u32) {
                let w = ci * inv_sqrt[j as usize];
                let xj = &src[j as usize * d..(j as usize + 1) * d];
                for (o, &v) in row.iter_mut().zip(xj) {
                    *o += w * v;
                }
            }
        });
    out
}

/// Layers `0..=layers` of propagation over a joint table.
pub fn propagate(graph: &ViewGraph, base: &Table, layers: usize) -> Result<Vec<Table>> {
    if base.nrows() != graph.n_nodes() {
        return Err(Error::Shape(format!(
            "table has {} rows, view has {} nodes",
            base.nrows(),
            graph.n_nodes()
        )));
    }
    let inv_sqrt = inverse_sqrt_degrees(graph);
    let mut out = Vec::with_capacity(layers + 1);
    out.push(base.to_owned());
    for l in 1..=layers {
        let next = normalized_step(graph, &inv_sqrt, &out[l - 1]);
        ensure_finite(&next, &format!("propagation layer {l}"))?;
        out.push(next);
    }
    Ok(out)
}

fn propagate_split(
    graph: &ViewGraph,
    users: &Table,
    items: &Table,
    layers: usize,
) -> Result<PropagatedLayers> {
    if users.ncols() != items.ncols() {
        return Err(Error::Shape(format!(
            "user width {} != item width {}",
            users.ncols(),
            items.ncols()
        )));
    }
    if users.nrows() != graph.n_users() || items.nrows() != graph.n_items() {
        return Err(Error::Shape(format!(
            "tables ({}, {}) rows vs view ({}, {}) nodes",
            users.nrows(),
            items.nrows(),
            graph.n_users(),
            graph.n_items()
        )));
    }
    let joint = concatenate(Axis(0), &[users.view(), items.view()]).expect("equal widths");
    let nu = graph.n_users();
    let mut out = PropagatedLayers {
        users: Vec::new(),
        items: Vec::new(),
    };
    for t in propagate(graph, &joint, layers)? {
        out.users.push(t.slice(s![..nu, ..]).to_owned());
        out.items.push(t.slice(s![nu.., ..]).to_owned());
    }
    Ok(out)
}

/// Video-view layers for users and videos; `items` are the video tables.
pub fn propagate_video_view(
    users: &Table,
    videos: &Table,
    aug: &AugmentedNeighborhoods,
    layers: usize,
) -> Result<PropagatedLayers> {
    propagate_split(&aug.video_view, users, videos, layers)
}

/// Vlogger-view layers for users and vloggers; `items` are the vlogger tables.
pub fn propagate_vlogger_view(
    users: &Table,
    vloggers: &Table,
    aug: &AugmentedNeighborhoods,
    layers: usize,
) -> Result<PropagatedLayers> {
    propagate_split(&aug.vlogger_view, users, vloggers, layers)
}

/// Row `t` of the output is the mean of `src` rows listed in `groups[t]`;
/// empty groups give zero rows.
pub fn mean_pool(groups: &Adjacency, src: &Table) -> Table {
    let d = src.ncols();
    let mut out = Table::zeros((groups.n_rows(), d));
    for (t, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let members = groups.neighbors(t as u32);
        if members.is_empty() {
            continue;
        }
        for &m in members {
            row += &src.row(m as usize);
        }
        row /= members.len() as f64;
    }
    out
}

/// Adjoint of [`mean_pool`]: scatters each pooled gradient row back to the
/// group members, divided by the group size.
pub fn mean_pool_transpose(groups: &Adjacency, grad: &Table, n_src: usize) -> Table {
    let mut out = Table::zeros((n_src, grad.ncols()));
    for t in 0..groups.n_rows() {
        let members = groups.neighbors(t as u32);
        if members.is_empty() {
            continue;
        }
        let scale = 1.0 / members.len() as f64;
        let g = grad.row(t);
        for &m in members {
            out.row_mut(m as usize).scaled_add(scale, &g);
        }
    }
    out
}

/// Vlogger video-view layer `l` = mean of its published videos' layer `l`.
pub fn aggregate_vloggers_video_view(
    video_layers: &[Table],
    graph: &TripartiteGraph,
) -> Vec<Table> {
    video_layers
        .iter()
        .map(|t| mean_pool(graph.vlogger_video_adjacency(), t))
        .collect()
}

/// Video vlogger-view layer `l` = mean of its viewers' layer `l`.
pub fn aggregate_videos_vlogger_view(user_layers: &[Table], graph: &TripartiteGraph) -> Vec<Table> {
    user_layers
        .iter()
        .map(|t| mean_pool(graph.video_user_adjacency(), t))
        .collect()
}

/// Weighted sum of layers `0..=L` (see [`LayerAverage`]).
pub fn average_layers(layers: &[Table], avg: LayerAverage) -> Table {
    assert!(!layers.is_empty(), "layer 0 must be present");
    let mut acc = layers[0].to_owned();
    for t in &layers[1..] {
        acc += t;
    }
    acc *= avg.factor(layers.len() - 1);
    acc
}

/// `[first | second]` row-wise; widths must match.
pub fn concat_views(first: &Table, second: &Table) -> Result<Table> {
    if first.dim() != second.dim() {
        return Err(Error::Shape(format!(
            "cannot concatenate {:?} with {:?}",
            first.dim(),
            second.dim()
        )));
    }
    Ok(concatenate(Axis(1), &[first.view(), second.view()]).expect("equal rows"))
}

/// Full video view: users and videos propagated, vloggers pooled.
pub fn video_view(
    graph: &TripartiteGraph,
    aug: &AugmentedNeighborhoods,
    users: &Table,
    videos: &Table,
    layers: usize,
    avg: LayerAverage,
) -> Result<ViewEmbeddings> {
    let p = propagate_video_view(users, videos, aug, layers)?;
    let vloggers = aggregate_vloggers_video_view(&p.items, graph);
    Ok(ViewEmbeddings {
        view: View::Video,
        final_users: average_layers(&p.users, avg),
        final_videos: average_layers(&p.items, avg),
        final_vloggers: average_layers(&vloggers, avg),
        users: p.users,
        videos: p.items,
        vloggers,
    })
}

/// Full vlogger view: users and vloggers propagated, videos pooled.
pub fn vlogger_view(
    graph: &TripartiteGraph,
    aug: &AugmentedNeighborhoods,
    users: &Table,
    vloggers: &Table,
    layers: usize,
    avg: LayerAverage,
) -> Result<ViewEmbeddings> {
    let p = propagate_vlogger_view(users, vloggers, aug, layers)?;
    let videos = aggregate_videos_vlogger_view(&p.users, graph);
    Ok(ViewEmbeddings {
        view: View::Vlogger,
        final_users: average_layers(&p.users, avg),
        final_videos: average_layers(&videos, avg),
        final_vloggers: average_layers(&p.items, avg),
        users: p.users,
        videos,
        vloggers: p.items,
    })
}

/// Layer-averaged result of propagating a joint table, without keeping the
/// intermediate layers. Because the operator is symmetric this is also the
/// backward pass of [`average_layers`] ∘ [`propagate`].
pub fn propagate_average(
    graph: &ViewGraph,
    base: &Table,
    layers: usize,
    avg: LayerAverage,
) -> Result<Table> {
    let inv_sqrt = inverse_sqrt_degrees(graph);
    let mut cur = base.to_owned();
    let mut acc = base.to_owned();
    for l in 1..=layers {
        cur = normalized_step(graph, &inv_sqrt, &cur);
        ensure_finite(&cur, &format!("propagation layer {l}"))?;
        acc += &cur;
    }
    acc *= avg.factor(layers);
    Ok(acc)
}

pub(crate) fn ensure_finite(t: &Table, term: &str) -> Result<()> {
    if t.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric {
            term: term.to_owned(),
        })
    }
}
