//! Forward pass, batch loss and its exact gradient.
//!
//! Propagation, pooling and layer averaging are linear, and the propagation
//! operator is symmetric, so the backward pass of a view reuses the forward
//! operator on the incoming gradient.

use std::collections::BTreeSet;

use ndarray::{concatenate, s, Axis};
use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::graph::{AugmentedNeighborhoods, TripartiteGraph};
use crate::objective::{self, infonce_with_grad, sigmoid, softplus, LossTerms, LossWeights};
use crate::propagation::{
    self, mean_pool, mean_pool_transpose, propagate_average, LayerAverage, Table,
};
use crate::{Error, Result};

/// What a disabled view contributes to the concatenated embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewFill {
    /// The base embedding tables, unpropagated.
    #[default]
    Base,
    /// Zeros (used by the LightGCN reduction).
    Zero,
}

/// Which entities serve as contrastive candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastiveMode {
    /// Every entity of the class.
    #[default]
    Full,
    /// Only entities appearing in the batch.
    InBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub layers: usize,
    pub layer_avg_denominator: LayerAverage,
    pub video_view: bool,
    pub vlogger_view: bool,
    /// Gated blend of video and publisher scores; off means `e_u . e_v`.
    pub blend: bool,
    pub ablated_view_fill: ViewFill,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 64,
            layers: 3,
            layer_avg_denominator: LayerAverage::LPlusOne,
            video_view: true,
            vlogger_view: true,
            blend: true,
            ablated_view_fill: ViewFill::Base,
        }
    }
}

/// Layer-averaged tables of one view, each `count × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewFinals {
    pub users: Table,
    pub videos: Table,
    pub vloggers: Table,
}

impl ViewFinals {
    fn zeros_like(other: &ViewFinals) -> ViewFinals {
        ViewFinals {
            users: Table::zeros(other.users.dim()),
            videos: Table::zeros(other.videos.dim()),
            vloggers: Table::zeros(other.vloggers.dim()),
        }
    }

    fn tables_mut(&mut self) -> [&mut Table; 3] {
        [&mut self.users, &mut self.videos, &mut self.vloggers]
    }
}

/// Final embeddings of a forward pass.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub video_view: ViewFinals,
    pub vlogger_view: ViewFinals,
    /// `[video view | vlogger view]`, width `2d`.
    pub users: Table,
    pub videos: Table,
    pub vloggers: Table,
    publisher: Vec<u32>,
    /// Per-video gate weight; `None` when blending is off.
    gate_weights: Option<Vec<f64>>,
}

impl Embeddings {
    pub fn n_videos(&self) -> usize {
        self.videos.nrows()
    }

    pub fn gate_weight(&self, video: u32) -> Option<f64> {
        self.gate_weights.as_ref().map(|w| w[video as usize])
    }

    pub fn score(&self, user: u32, video: u32) -> f64 {
        let u = self.users.row(user as usize);
        let s1 = u.dot(&self.videos.row(video as usize));
        match &self.gate_weights {
            Some(w) => {
                let w = w[video as usize];
                let s2 = u.dot(&self.vloggers.row(self.publisher[video as usize] as usize));
                w * s1 + (1.0 - w) * s2
            }
            None => s1,
        }
    }

    /// Scores of `user` against every video, indexed by video.
    pub fn score_all(&self, user: u32) -> Vec<f64> {
        let u = self.users.row(user as usize);
        let s1 = self.videos.dot(&u);
        match &self.gate_weights {
            Some(w) => {
                let s2 = self.vloggers.dot(&u);
                (0..self.n_videos())
                    .map(|v| w[v] * s1[v] + (1.0 - w[v]) * s2[self.publisher[v] as usize])
                    .collect()
            }
            None => s1.to_vec(),
        }
    }
}

/// One BPR comparison: `pos` should outrank `neg` for `user`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub user: u32,
    pub pos: u32,
    pub neg: u32,
}

/// Video-task and vlogger-task triples of one optimizer step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Batch {
    pub video: Vec<Triple>,
    pub vlogger: Vec<Triple>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub terms: LossTerms,
    /// User, video and vlogger contrastive losses.
    pub contrastive_parts: [f64; 3],
    pub total: f64,
}

/// Graph artifacts plus architecture switches; cheap to build.
pub struct Model<'a> {
    graph: &'a TripartiteGraph,
    aug: &'a AugmentedNeighborhoods,
    cfg: ModelConfig,
}

impl<'a> Model<'a> {
    pub fn new(
        graph: &'a TripartiteGraph,
        aug: &'a AugmentedNeighborhoods,
        cfg: ModelConfig,
    ) -> Result<Self> {
        let vv = &aug.video_view;
        let pv = &aug.vlogger_view;
        if vv.n_users() != graph.n_users()
            || vv.n_items() != graph.n_videos()
            || pv.n_users() != graph.n_users()
            || pv.n_items() != graph.n_vloggers()
        {
            return Err(Error::Inconsistent(
                "neighborhoods were built from a different graph".into(),
            ));
        }
        if cfg.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        Ok(Model { graph, aug, cfg })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &TripartiteGraph {
        self.graph
    }

    fn fill(&self, params: &ModelParams) -> ViewFinals {
        match self.cfg.ablated_view_fill {
            ViewFill::Base => ViewFinals {
                users: params.users.clone(),
                videos: params.videos.clone(),
                vloggers: params.vloggers.clone(),
            },
            ViewFill::Zero => ViewFinals {
                users: Table::zeros(params.users.dim()),
                videos: Table::zeros(params.videos.dim()),
                vloggers: Table::zeros(params.vloggers.dim()),
            },
        }
    }

    fn video_view(&self, params: &ModelParams) -> Result<ViewFinals> {
        if !self.cfg.video_view {
            return Ok(self.fill(params));
        }
        let nu = params.users.nrows();
        let joint = stack(&params.users, &params.videos);
        let out = propagate_average(
            &self.aug.video_view,
            &joint,
            self.cfg.layers,
            self.cfg.layer_avg_denominator,
        )?;
        let videos = out.slice(s![nu.., ..]).to_owned();
        Ok(ViewFinals {
            users: out.slice(s![..nu, ..]).to_owned(),
            vloggers: mean_pool(self.graph.vlogger_video_adjacency(), &videos),
            videos,
        })
    }

    fn vlogger_view(&self, params: &ModelParams) -> Result<ViewFinals> {
        if !self.cfg.vlogger_view {
            return Ok(self.fill(params));
        }
        let nu = params.users.nrows();
        let joint = stack(&params.users, &params.vloggers);
        let out = propagate_average(
            &self.aug.vlogger_view,
            &joint,
            self.cfg.layers,
            self.cfg.layer_avg_denominator,
        )?;
        let users = out.slice(s![..nu, ..]).to_owned();
        Ok(ViewFinals {
            videos: mean_pool(self.graph.video_user_adjacency(), &users),
            vloggers: out.slice(s![nu.., ..]).to_owned(),
            users,
        })
    }

    pub fn forward(&self, params: &ModelParams) -> Result<Embeddings> {
        params.validate(self.graph.counts(), self.cfg.dim)?;
        let v1 = self.video_view(params)?;
        let v2 = self.vlogger_view(params)?;
        let users = propagation::concat_views(&v1.users, &v2.users)?;
        let videos = propagation::concat_views(&v1.videos, &v2.videos)?;
        let vloggers = propagation::concat_views(&v1.vloggers, &v2.vloggers)?;
        let publisher = self.graph.publishers().to_vec();
        let gate_weights = if self.cfg.blend {
            // row p of `qp` is Q e_p
            let qp = vloggers.dot(&params.gate.t());
            Some(
                (0..videos.nrows())
                    .map(|v| sigmoid(videos.row(v).dot(&qp.row(publisher[v] as usize))))
                    .collect(),
            )
        } else {
            None
        };
        Ok(Embeddings {
            video_view: v1,
            vlogger_view: v2,
            users,
            videos,
            vloggers,
            publisher,
            gate_weights,
        })
    }

    /// Per-layer tables of both views, for inspection and snapshots.
    pub fn layers(
        &self,
        params: &ModelParams,
    ) -> Result<(propagation::ViewEmbeddings, propagation::ViewEmbeddings)> {
        let (l, avg) = (self.cfg.layers, self.cfg.layer_avg_denominator);
        Ok((
            propagation::video_view(self.graph, self.aug, &params.users, &params.videos, l, avg)?,
            propagation::vlogger_view(
                self.graph,
                self.aug,
                &params.users,
                &params.vloggers,
                l,
                avg,
            )?,
        ))
    }

    /// Pulls gradients on both views' final tables back to the base tables.
    fn backward(&self, g1: ViewFinals, g2: ViewFinals, grads: &mut ModelParams) -> Result<()> {
        let nu = grads.users.nrows();
        let (l, avg) = (self.cfg.layers, self.cfg.layer_avg_denominator);
        let fill_base = self.cfg.ablated_view_fill == ViewFill::Base;

        if self.cfg.video_view {
            let mut gv = g1.videos;
            gv += &mean_pool_transpose(
                self.graph.vlogger_video_adjacency(),
                &g1.vloggers,
                gv.nrows(),
            );
            let back = propagate_average(&self.aug.video_view, &stack(&g1.users, &gv), l, avg)?;
            grads.users += &back.slice(s![..nu, ..]);
            grads.videos += &back.slice(s![nu.., ..]);
        } else if fill_base {
            grads.users += &g1.users;
            grads.videos += &g1.videos;
            grads.vloggers += &g1.vloggers;
        }

        if self.cfg.vlogger_view {
            let mut gu = g2.users;
            gu += &mean_pool_transpose(self.graph.video_user_adjacency(), &g2.videos, nu);
            let back =
                propagate_average(&self.aug.vlogger_view, &stack(&gu, &g2.vloggers), l, avg)?;
            grads.users += &back.slice(s![..nu, ..]);
            grads.vloggers += &back.slice(s![nu.., ..]);
        } else if fill_base {
            grads.users += &g2.users;
            grads.videos += &g2.videos;
            grads.vloggers += &g2.vloggers;
        }
        Ok(())
    }

    /// Total loss of `batch` without gradients.
    pub fn forward_loss(
        &self,
        params: &ModelParams,
        batch: &Batch,
        weights: &LossWeights,
        mode: ContrastiveMode,
    ) -> Result<LossBreakdown> {
        self.run(params, batch, weights, mode, false)
            .map(|(l, _)| l)
    }

    /// Total loss of `batch` and its gradient with respect to every parameter.
    pub fn compute_gradients(
        &self,
        params: &ModelParams,
        batch: &Batch,
        weights: &LossWeights,
        mode: ContrastiveMode,
    ) -> Result<(LossBreakdown, ModelParams)> {
        let (loss, grads) = self.run(params, batch, weights, mode, true)?;
        Ok((loss, grads.expect("requested")))
    }

    fn run(
        &self,
        params: &ModelParams,
        batch: &Batch,
        weights: &LossWeights,
        mode: ContrastiveMode,
        want_grad: bool,
    ) -> Result<(LossBreakdown, Option<ModelParams>)> {
        weights.validate()?;
        self.check_batch(batch)?;
        let emb = self.forward(params)?;
        let d = self.cfg.dim;
        let mut out = LossBreakdown::default();

        // gradients with respect to the concatenated final tables
        let mut gu = Table::zeros(emb.users.dim());
        let mut gv = Table::zeros(emb.videos.dim());
        let mut gp = Table::zeros(emb.vloggers.dim());
        let mut gq = Table::zeros(params.gate.dim());

        out.terms.video = self.video_task(
            params,
            &emb,
            &batch.video,
            want_grad,
            &mut gu,
            &mut gv,
            &mut gp,
            &mut gq,
        );
        out.terms.vlogger = vlogger_task(
            &emb,
            &batch.vlogger,
            weights.vlogger,
            want_grad,
            &mut gu,
            &mut gp,
        );

        let mut g1 = ViewFinals {
            users: split(&gu, 0, d),
            videos: split(&gv, 0, d),
            vloggers: split(&gp, 0, d),
        };
        let mut g2 = ViewFinals {
            users: split(&gu, d, d),
            videos: split(&gv, d, d),
            vloggers: split(&gp, d, d),
        };

        if weights.contrastive > 0.0 {
            let cands = self.contrastive_candidates(batch, mode);
            let scale = weights.contrastive / 3.0;
            let v1 = &emb.video_view;
            let v2 = &emb.vlogger_view;
            let pairs = [
                (&v1.users, &v2.users),
                (&v1.videos, &v2.videos),
                (&v1.vloggers, &v2.vloggers),
            ];
            let mut g1s = ViewFinals::zeros_like(&g1);
            let mut g2s = ViewFinals::zeros_like(&g2);
            for (k, (((a, b), c), (ga, gb))) in pairs
                .into_iter()
                .zip(cands.iter())
                .zip(g1s.tables_mut().into_iter().zip(g2s.tables_mut()))
                .enumerate()
            {
                if c.is_empty() {
                    continue;
                }
                let nce = infonce_with_grad(a, b, weights.temperature, c)?;
                out.contrastive_parts[k] = nce.loss;
                if want_grad {
                    ga.scaled_add(scale, &nce.grad_view1);
                    gb.scaled_add(scale, &nce.grad_view2);
                }
            }
            for (dst, src) in g1.tables_mut().into_iter().zip(g1s.tables_mut()) {
                *dst += &*src;
            }
            for (dst, src) in g2.tables_mut().into_iter().zip(g2s.tables_mut()) {
                *dst += &*src;
            }
            let [u, v, p] = out.contrastive_parts;
            out.terms.contrastive = objective::contrastive_total(u, v, p);
        }

        let touched = self.touched(batch);
        out.terms.regularization = touched.sq_norm(params, self.cfg.blend);
        out.total = objective::total_loss(&out.terms, weights);
        for (term, v) in [
            ("video BPR", out.terms.video),
            ("vlogger BPR", out.terms.vlogger),
            ("contrastive", out.terms.contrastive),
            ("regularization", out.terms.regularization),
        ] {
            if !v.is_finite() {
                return Err(Error::Numeric { term: term.into() });
            }
        }
        if !want_grad {
            return Ok((out, None));
        }

        let mut grads = params.zeros_like();
        self.backward(g1, g2, &mut grads)?;
        grads.gate += &gq;
        touched.add_reg_grad(params, weights.l2, self.cfg.blend, &mut grads);
        for (name, t) in ["user table", "video table", "vlogger table", "gate matrix"]
            .iter()
            .zip(grads.tensors())
        {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    term: format!("gradient of {name}"),
                });
            }
        }
        Ok((out, Some(grads)))
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        let (nu, nv, np) = (
            self.graph.n_users(),
            self.graph.n_videos(),
            self.graph.n_vloggers(),
        );
        let bad = batch
            .video
            .iter()
            .any(|t| t.user as usize >= nu || t.pos as usize >= nv || t.neg as usize >= nv)
            || batch
                .vlogger
                .iter()
                .any(|t| t.user as usize >= nu || t.pos as usize >= np || t.neg as usize >= np);
        if bad {
            return Err(Error::Inconsistent(
                "batch references a node outside the graph".into(),
            ));
        }
        Ok(())
    }

    /// Sum of video-task BPR terms; accumulates gradients into the
    /// concatenated-table buffers when asked.
    #[allow(clippy::too_many_arguments)]
    fn video_task(
        &self,
        params: &ModelParams,
        emb: &Embeddings,
        triples: &[Triple],
        want_grad: bool,
        gu: &mut Table,
        gv: &mut Table,
        gp: &mut Table,
        gq: &mut Table,
    ) -> f64 {
        let publisher = self.graph.publishers();
        let mut loss = 0.0;
        // accum[p] = sum over scored items of c * e_v, with
        // c = dL/dy * (s1 - s2) * w * (1 - w); gives the Q and publisher gate terms
        let mut accum = Table::zeros(emb.vloggers.dim());
        for t in triples {
            let x = emb.score(t.user, t.pos) - emb.score(t.user, t.neg);
            loss += softplus(-x);
            if !want_grad {
                continue;
            }
            let g = -sigmoid(-x);
            let e_u = emb.users.row(t.user as usize);
            for (video, dy) in [(t.pos, g), (t.neg, -g)] {
                let e_v = emb.videos.row(video as usize);
                match emb.gate_weight(video) {
                    None => {
                        gu.row_mut(t.user as usize).scaled_add(dy, &e_v);
                        gv.row_mut(video as usize).scaled_add(dy, &e_u);
                    }
                    Some(w) => {
                        let p = publisher[video as usize] as usize;
                        let e_p = emb.vloggers.row(p);
                        let s1 = e_u.dot(&e_v);
                        let s2 = e_u.dot(&e_p);
                        let c = dy * (s1 - s2) * w * (1.0 - w);
                        let mut ru = gu.row_mut(t.user as usize);
                        ru.scaled_add(dy * w, &e_v);
                        ru.scaled_add(dy * (1.0 - w), &e_p);
                        let mut rv = gv.row_mut(video as usize);
                        rv.scaled_add(dy * w, &e_u);
                        rv.scaled_add(c, &params.gate.dot(&e_p));
                        gp.row_mut(p).scaled_add(dy * (1.0 - w), &e_u);
                        accum.row_mut(p).scaled_add(c, &e_v);
                    }
                }
            }
        }
        if want_grad && self.cfg.blend {
            // d/de_p of c * e_v^T Q e_p is c * Q^T e_v; summed per publisher that is accum * Q
            *gp += &accum.dot(&params.gate);
            *gq += &accum.t().dot(&emb.vloggers);
        }
        loss
    }

    fn contrastive_candidates(&self, batch: &Batch, mode: ContrastiveMode) -> [Vec<u32>; 3] {
        match mode {
            ContrastiveMode::Full => [
                (0..self.graph.n_users() as u32).collect(),
                (0..self.graph.n_videos() as u32).collect(),
                (0..self.graph.n_vloggers() as u32).collect(),
            ],
            ContrastiveMode::InBatch => {
                let t = self.touched(batch);
                [
                    t.users.into_iter().collect(),
                    t.videos.into_iter().collect(),
                    t.vloggers.into_iter().collect(),
                ]
            }
        }
    }

    /// Base rows the batch touches directly.
    fn touched(&self, batch: &Batch) -> Touched {
        let mut t = Touched::default();
        for tr in &batch.video {
            t.users.insert(tr.user);
            t.videos.extend([tr.pos, tr.neg]);
            if self.cfg.blend {
                t.vloggers.insert(self.graph.publisher_of(tr.pos));
                t.vloggers.insert(self.graph.publisher_of(tr.neg));
            }
        }
        for tr in &batch.vlogger {
            t.users.insert(tr.user);
            t.vloggers.extend([tr.pos, tr.neg]);
        }
        t
    }
}

#[derive(Default)]
struct Touched {
    users: BTreeSet<u32>,
    videos: BTreeSet<u32>,
    vloggers: BTreeSet<u32>,
}

impl Touched {
    fn groups<'p>(&'p self, params: &'p ModelParams) -> [(&'p BTreeSet<u32>, &'p Table); 3] {
        [
            (&self.users, &params.users),
            (&self.videos, &params.videos),
            (&self.vloggers, &params.vloggers),
        ]
    }

    fn sq_norm(&self, params: &ModelParams, with_gate: bool) -> f64 {
        let mut acc = 0.0;
        for (rows, table) in self.groups(params) {
            for &r in rows {
                let row = table.row(r as usize);
                acc += row.dot(&row);
            }
        }
        if with_gate {
            acc += params.gate.iter().map(|x| x * x).sum::<f64>();
        }
        acc
    }

    fn add_reg_grad(
        &self,
        params: &ModelParams,
        l2: f64,
        with_gate: bool,
        grads: &mut ModelParams,
    ) {
        if l2 == 0.0 {
            return;
        }
        let dests = [&mut grads.users, &mut grads.videos, &mut grads.vloggers];
        for ((rows, table), dst) in self.groups(params).into_iter().zip(dests) {
            for &r in rows {
                dst.row_mut(r as usize)
                    .scaled_add(2.0 * l2, &table.row(r as usize));
            }
        }
        if with_gate {
            grads.gate.scaled_add(2.0 * l2, &params.gate);
        }
    }
}

/// Sum of vlogger-task BPR terms on `e_u . e_p`; gradient is pre-scaled by
/// `weight` and skipped entirely when the weight is zero.
fn vlogger_task(
    emb: &Embeddings,
    triples: &[Triple],
    weight: f64,
    want_grad: bool,
    gu: &mut Table,
    gp: &mut Table,
) -> f64 {
    let mut loss = 0.0;
    for t in triples {
        let e_u = emb.users.row(t.user as usize);
        let e_pos = emb.vloggers.row(t.pos as usize);
        let e_neg = emb.vloggers.row(t.neg as usize);
        let x = e_u.dot(&e_pos) - e_u.dot(&e_neg);
        loss += softplus(-x);
        if want_grad && weight != 0.0 {
            let g = -sigmoid(-x) * weight;
            let mut ru = gu.row_mut(t.user as usize);
            ru.scaled_add(g, &e_pos);
            ru.scaled_add(-g, &e_neg);
            gp.row_mut(t.pos as usize).scaled_add(g, &e_u);
            gp.row_mut(t.neg as usize).scaled_add(-g, &e_u);
        }
    }
    loss
}

fn stack(top: &Table, bottom: &Table) -> Table {
    concatenate(Axis(0), &[top.view(), bottom.view()]).expect("equal widths")
}

fn split(t: &Table, start: usize, width: usize) -> Table {
    t.slice(s![.., start..start + width]).to_owned()
}
