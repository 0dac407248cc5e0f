//! Scores and losses.
//!
//! User–vlogger preference is a plain dot product of the concatenated
//! embeddings. User–video preference blends the video score and the
//! publisher score with a gate `w = sigmoid(e_v^T Q e_p)`:
//!
//! ```text
//! y_uv = w * e_u.e_v + (1 - w) * e_u.e_p
//! ```
//!
//! Training combines two BPR losses, a cross-view InfoNCE averaged over the
//! three entity classes, and an L2 term.

use ndarray::{s, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::propagation::Table;
use crate::{Error, Result};

/// Trainable `2d × 2d` bilinear gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix(Table);

impl GateMatrix {
    pub fn new(q: Table) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::Shape(format!(
                "gate matrix must be square, got {:?}",
                q.dim()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                term: "gate matrix".into(),
            });
        }
        Ok(GateMatrix(q))
    }

    pub fn zeros(width: usize) -> Self {
        GateMatrix(Table::zeros((width, width)))
    }

    pub fn identity(width: usize) -> Self {
        GateMatrix(Array2::eye(width))
    }

    pub fn width(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Table {
        &self.0
    }

    /// `x^T Q y`.
    pub fn bilinear(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        x.dot(&self.0.dot(&y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    /// Weight of the vlogger BPR task.
    pub vlogger: f64,
    /// Weight of the cross-view contrastive loss.
    pub contrastive: f64,
    /// Weight of the L2 penalty.
    pub l2: f64,
    /// InfoNCE temperature.
    pub temperature: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            vlogger: 5.0,
            contrastive: 0.0005,
            l2: 1e-4,
            temperature: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "temperature {} must be > 0",
                self.temperature
            )));
        }
        for (name, w) in [
            ("vlogger", self.vlogger),
            ("contrastive", self.contrastive),
            ("l2", self.l2),
        ] {
            if !(w >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} weight {w} must be >= 0"
                )));
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("width {} vs {}", a.len(), b.len())));
    }
    Ok(a.dot(&b))
}

/// `e_u . e_p`.
pub fn score_user_vlogger(user: ArrayView1<f64>, vlogger: ArrayView1<f64>) -> Result<f64> {
    dot(user, vlogger)
}

/// `sigmoid(e_v^T Q e_p)` for a video and its publisher.
pub fn gate_weight(video: ArrayView1<f64>, publisher: ArrayView1<f64>, gate: &GateMatrix) -> f64 {
    sigmoid(gate.bilinear(video, publisher))
}

/// Gated blend of the video-level and publisher-level preference.
pub fn score_user_video(
    user: ArrayView1<f64>,
    video: ArrayView1<f64>,
    publisher: ArrayView1<f64>,
    gate: &GateMatrix,
) -> Result<f64> {
    if video.len() != gate.width() || publisher.len() != gate.width() {
        return Err(Error::Shape(format!(
            "gate width {} vs embeddings {}/{}",
            gate.width(),
            video.len(),
            publisher.len()
        )));
    }
    let w = gate_weight(video, publisher, gate);
    Ok(w * dot(user, video)? + (1.0 - w) * dot(user, publisher)?)
}

/// `sum_i -ln sigmoid(pos_i - neg_i)`.
pub fn bpr_loss(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.len() != neg.len() || pos.is_empty() {
        return Err(Error::Shape(format!(
            "{} positive vs {} negative scores",
            pos.len(),
            neg.len()
        )));
    }
    Ok(pos.iter().zip(neg).map(|(p, n)| softplus(n - p)).sum())
}

/// Loss and gradients of [`infonce_cross_view`]. Gradient tables have the
/// full shape of the inputs; rows outside the candidate set are zero.
#[derive(Debug, Clone)]
pub struct InfoNce {
    pub loss: f64,
    pub grad_view1: Table,
    pub grad_view2: Table,
}

/// Cross-view InfoNCE over `candidates`, each of which is also an anchor:
///
/// ```text
/// mean_i -log( exp(cos(a_i, b_i)/tau) / sum_j exp(cos(a_i, b_j)/tau) )
/// ```
///
/// `a` rows come from `view1`, `b` rows from `view2`. Zero vectors have
/// cosine 0 with everything.
pub fn infonce_cross_view(
    view1: &Table,
    view2: &Table,
    tau: f64,
    candidates: &[u32],
) -> Result<f64> {
    infonce_impl(view1, view2, tau, candidates, false).map(|r| r.loss)
}

pub fn infonce_with_grad(
    view1: &Table,
    view2: &Table,
    tau: f64,
    candidates: &[u32],
) -> Result<InfoNce> {
    infonce_impl(view1, view2, tau, candidates, true)
}

const INFONCE_BLOCK: usize = 512;

fn infonce_impl(
    view1: &Table,
    view2: &Table,
    tau: f64,
    candidates: &[u32],
    grad: bool,
) -> Result<InfoNce> {
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "temperature {tau} must be > 0"
        )));
    }
    if view1.dim() != view2.dim() {
        return Err(Error::Shape(format!(
            "views {:?} vs {:?}",
            view1.dim(),
            view2.dim()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Shape("empty candidate set".into()));
    }
    let n = candidates.len();
    let d = view1.ncols();
    let (a, a_norm) = normalized_rows(view1, candidates);
    let (b, b_norm) = normalized_rows(view2, candidates);

    let mut loss = 0.0;
    let mut grad_a = Table::zeros((n, d));
    let mut grad_b = Table::zeros((n, d));
    let scale = 1.0 / (tau * n as f64);
    for start in (0..n).step_by(INFONCE_BLOCK) {
        let end = (start + INFONCE_BLOCK).min(n);
        let a_blk = a.slice(s![start..end, ..]);
        let mut logits = a_blk.dot(&b.t());
        logits /= tau;
        for (r, mut row) in logits.axis_iter_mut(Axis(0)).enumerate() {
            let i = start + r;
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[i];
            if grad {
                row.mapv_inplace(|v| (v - lse).exp());
                row[i] -= 1.0;
                row *= scale;
            }
        }
        if grad {
            grad_a.slice_mut(s![start..end, ..]).assign(&logits.dot(&b));
            grad_b += &logits.t().dot(&a_blk);
        }
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric {
            term: "infonce".into(),
        });
    }

    let mut out = InfoNce {
        loss,
        grad_view1: Table::zeros((0, d)),
        grad_view2: Table::zeros((0, d)),
    };
    if grad {
        out.grad_view1 = unnormalize_grad(&a, &a_norm, &grad_a, candidates, view1.nrows());
        out.grad_view2 = unnormalize_grad(&b, &b_norm, &grad_b, candidates, view2.nrows());
    }
    Ok(out)
}

fn normalized_rows(t: &Table, rows: &[u32]) -> (Table, Vec<f64>) {
    let mut out = Table::zeros((rows.len(), t.ncols()));
    let mut norms = Vec::with_capacity(rows.len());
    for (k, &r) in rows.iter().enumerate() {
        let row = t.row(r as usize);
        let norm = row.dot(&row).sqrt();
        norms.push(norm);
        if norm > 0.0 {
            out.row_mut(k).assign(&(&row / norm));
        }
    }
    (out, norms)
}

/// Chain rule through `a = x / |x|`: `dx = (da - a (a.da)) / |x|`.
fn unnormalize_grad(
    unit: &Table,
    norms: &[f64],
    grad_unit: &Table,
    rows: &[u32],
    n_rows: usize,
) -> Table {
    let mut out = Table::zeros((n_rows, unit.ncols()));
    for (k, &r) in rows.iter().enumerate() {
        if norms[k] == 0.0 {
            continue;
        }
        let a = unit.row(k);
        let g = grad_unit.row(k);
        let proj = a.dot(&g);
        let mut dst = out.row_mut(r as usize);
        dst += &((&g - &(&a * proj)) / norms[k]);
    }
    out
}

/// Mean of the user, video and vlogger contrastive losses.
pub fn contrastive_total(user: f64, video: f64, vlogger: f64) -> f64 {
    (user + video + vlogger) / 3.0
}

/// Unweighted loss terms of one batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub video: f64,
    pub vlogger: f64,
    pub contrastive: f64,
    pub regularization: f64,
}

/// `video + λ1 vlogger + λ2 contrastive + λ3 regularization`.
pub fn total_loss(terms: &LossTerms, w: &LossWeights) -> f64 {
    terms.video
        + w.vlogger * terms.vlogger
        + w.contrastive * terms.contrastive
        + w.l2 * terms.regularization
}
