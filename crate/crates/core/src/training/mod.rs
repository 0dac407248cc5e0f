//! Trainable state, exact gradients, Adam and the training loop.

mod adam;
mod checkpoint;
mod model;
mod params;
mod sampling;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use model::{
    Batch, ContrastiveMode, Embeddings, LossBreakdown, Model, ModelConfig, Triple, ViewFill,
    ViewFinals,
};
pub use params::{init_params, ModelParams};
pub use sampling::{sample_negative, sample_negatives, REJECTION_ATTEMPTS};

pub mod checkpoint_format {
    //! Raw checkpoint encoding, for tools that keep checkpoints in memory.
    pub use super::checkpoint::{decode, encode, MAGIC, VERSION};
}

use crate::eval;
use crate::graph::{
    build_augmented_neighborhoods, metapath, AugmentedNeighborhoods, MetaPathConfig,
    TripartiteGraph,
};
use crate::objective::LossWeights;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub init_std: f64,
    /// Cutoff of the validation recall used for early stopping.
    pub early_stop_k: usize,
    /// Resample walks every this many epochs; 0 samples once per run.
    pub resample_walks_every: usize,
    pub contrastive_candidates: ContrastiveMode,
    /// Root seed; filled in from the run configuration.
    #[serde(skip)]
    pub seed: u64,
    pub model: ModelConfig,
    pub loss: LossWeights,
    pub metapath: MetaPathConfig,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch_size: 4096,
            negatives_per_positive: 1,
            max_epochs: 100,
            patience: 10,
            init_std: 0.1,
            early_stop_k: 10,
            resample_walks_every: 0,
            contrastive_candidates: ContrastiveMode::Full,
            seed: 0,
            model: ModelConfig::default(),
            loss: LossWeights::default(),
            metapath: MetaPathConfig::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.model.dim == 0 {
            return bad("dim must be positive".into());
        }
        if !(self.lr > 0.0) {
            return bad(format!("lr {} must be > 0", self.lr));
        }
        if self.batch_size == 0 || self.negatives_per_positive == 0 || self.early_stop_k == 0 {
            return bad(
                "batch_size, negatives_per_positive and early_stop_k must be positive".into(),
            );
        }
        if self.patience == 0 {
            return bad("patience must be >= 1".into());
        }
        if !(self.init_std >= 0.0) {
            return bad(format!("init_std {} must be >= 0", self.init_std));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !(a.eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and eps must be > 0".into());
        }
        self.loss.validate()?;
        self.metapath.validate()
    }

    /// Meta-path settings carrying the run seed.
    pub fn seeded_metapath(&self) -> MetaPathConfig {
        MetaPathConfig {
            seed: self.seed,
            ..self.metapath
        }
    }
}

/// The full model and the configurations it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    /// A: no contrastive loss.
    NoContrastive,
    /// B: no vlogger-task loss.
    NoVloggerLoss,
    /// C: video view replaced by the base tables.
    NoVideoView,
    /// D: vlogger view replaced by the base tables.
    NoVloggerView,
    /// E: score is `e_u . e_v`, no gate.
    NoBlend,
    /// Plain bipartite propagation with a dot-product score.
    #[serde(rename = "lightgcn")]
    LightGcn,
}

impl Variant {
    /// The full model followed by ablations A to E.
    pub const ABLATIONS: [Variant; 6] = [
        Variant::Full,
        Variant::NoContrastive,
        Variant::NoVloggerLoss,
        Variant::NoVideoView,
        Variant::NoVloggerView,
        Variant::NoBlend,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoContrastive => "A:no_contrastive",
            Variant::NoVloggerLoss => "B:no_vlogger_loss",
            Variant::NoVideoView => "C:no_video_view",
            Variant::NoVloggerView => "D:no_vlogger_view",
            Variant::NoBlend => "E:no_blend",
            Variant::LightGcn => "lightgcn",
        }
    }

    /// `base` with this variant's switches applied; nothing else changes.
    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let mut c = *base;
        match self {
            Variant::Full => {}
            Variant::NoContrastive => c.loss.contrastive = 0.0,
            Variant::NoVloggerLoss => c.loss.vlogger = 0.0,
            Variant::NoVideoView => c.model.video_view = false,
            Variant::NoVloggerView => c.model.vlogger_view = false,
            Variant::NoBlend => c.model.blend = false,
            Variant::LightGcn => {
                c.metapath = MetaPathConfig::disabled();
                c.model.vlogger_view = false;
                c.model.blend = false;
                c.model.ablated_view_fill = ViewFill::Zero;
                c.loss.vlogger = 0.0;
                c.loss.contrastive = 0.0;
            }
        }
        c
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    /// Accepts the snake_case name (`no_blend`) or the ablation letter (`E`).
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            ("full", "", Variant::Full),
            ("no_contrastive", "a", Variant::NoContrastive),
            ("no_vlogger_loss", "b", Variant::NoVloggerLoss),
            ("no_video_view", "c", Variant::NoVideoView),
            ("no_vlogger_view", "d", Variant::NoVloggerView),
            ("no_blend", "e", Variant::NoBlend),
            ("lightgcn", "", Variant::LightGcn),
        ];
        let lower = s.to_ascii_lowercase();
        all.iter()
            .find(|(name, letter, _)| lower == *name || (!letter.is_empty() && lower == *letter))
            .map(|t| t.2)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

/// Parameters, optimizer moments and early-stopping bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: ModelParams,
    pub adam: AdamState,
    /// Completed epochs.
    pub epoch: usize,
    pub best_recall: Option<f64>,
    pub since_improve: usize,
    /// Walk sample the parameters were trained against (0 unless walks are resampled).
    pub walk_round: u64,
}

impl TrainState {
    pub fn new(params: ModelParams) -> Self {
        TrainState {
            adam: AdamState::new(&params),
            params,
            epoch: 0,
            best_recall: None,
            since_improve: 0,
            walk_round: 0,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batches: usize,
    /// Mean per-batch total loss.
    pub loss: f64,
    pub video_loss: f64,
    pub vlogger_loss: f64,
    pub contrastive_loss: f64,
    pub regularization: f64,
    pub val_recall: Option<f64>,
    pub val_ndcg: Option<f64>,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// State with the best validation recall (the last state without validation targets).
    pub best: TrainState,
    pub log: Vec<EpochRecord>,
}

/// Samples walks for `round` and folds them into the neighbor sets.
/// Round 0 is the once-per-run sample.
pub fn neighborhoods_for_round(
    graph: &TripartiteGraph,
    cfg: &MetaPathConfig,
    round: u64,
) -> Result<AugmentedNeighborhoods> {
    let walks = if round == 0 {
        metapath::sample_meta_paths(graph, cfg)?
    } else {
        metapath::sample_with_rng(
            graph,
            cfg,
            &mut rng::stream_round(cfg.seed, Stream::Walks, round),
        )?
    };
    build_augmented_neighborhoods(graph, &walks)
}

/// Trains on the edges of `graph` (the training split), evaluating
/// `validation` targets after every epoch with training positives excluded.
pub fn train(
    graph: &TripartiteGraph,
    validation: &[(u32, u32)],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let metapath_cfg = cfg.seeded_metapath();
    let params = init_params(graph.counts(), cfg.model.dim, cfg.init_std, cfg.seed)?;
    let mut state = TrainState::new(params);
    let mut best = state.clone();
    let mut log = Vec::new();
    if cfg.max_epochs == 0 {
        return Ok(TrainOutcome { best, log });
    }

    let mut aug = neighborhoods_for_round(graph, &metapath_cfg, 0)?;
    let mut video_pos: Vec<(u32, u32)> = graph.user_video_adjacency().iter().collect();
    let mut vlogger_pos: Vec<(u32, u32)> = graph.user_vlogger_adjacency().iter().collect();
    let mut shuffle_rng = rng::stream(cfg.seed, Stream::Shuffle);
    let mut neg_rng = rng::stream(cfg.seed, Stream::Negatives);
    let k = cfg.negatives_per_positive;

    for epoch in 0..cfg.max_epochs {
        if cfg.resample_walks_every > 0 && epoch > 0 && epoch % cfg.resample_walks_every == 0 {
            state.walk_round = (epoch / cfg.resample_walks_every) as u64;
            aug = neighborhoods_for_round(graph, &metapath_cfg, state.walk_round)?;
        }
        let model = Model::new(graph, &aug, cfg.model)?;
        video_pos.shuffle(&mut shuffle_rng);
        vlogger_pos.shuffle(&mut shuffle_rng);
        let mut cursor = 0;
        let mut sums = [0.0; 5];
        let mut batches = 0;

        for (b, chunk) in video_pos.chunks(cfg.batch_size).enumerate() {
            let mut batch = Batch::default();
            let negs = sample_negatives(
                chunk,
                graph.user_video_adjacency(),
                graph.n_videos(),
                k,
                &mut neg_rng,
            )?;
            for (i, &(user, pos)) in chunk.iter().enumerate() {
                batch
                    .video
                    .extend(
                        negs[i * k..(i + 1) * k]
                            .iter()
                            .map(|&neg| Triple { user, pos, neg }),
                    );
            }
            if !vlogger_pos.is_empty() {
                let pairs: Vec<(u32, u32)> = (0..chunk.len())
                    .map(|i| vlogger_pos[(cursor + i) % vlogger_pos.len()])
                    .collect();
                cursor = (cursor + chunk.len()) % vlogger_pos.len();
                let negs = sample_negatives(
                    &pairs,
                    graph.user_vlogger_adjacency(),
                    graph.n_vloggers(),
                    k,
                    &mut neg_rng,
                )?;
                for (i, &(user, pos)) in pairs.iter().enumerate() {
                    batch
                        .vlogger
                        .extend(negs[i * k..(i + 1) * k].iter().map(|&neg| Triple {
                            user,
                            pos,
                            neg,
                        }));
                }
            }
            let (loss, grads) = model
                .compute_gradients(&state.params, &batch, &cfg.loss, cfg.contrastive_candidates)
                .map_err(|e| match e {
                    Error::Numeric { term } => Error::Numeric {
                        term: format!("{term} (epoch {epoch}, batch {b})"),
                    },
                    other => other,
                })?;
            adam_step(
                &mut state.params,
                &mut state.adam,
                &grads,
                cfg.lr,
                &cfg.adam,
            );
            let t = loss.terms;
            for (acc, v) in sums.iter_mut().zip([
                loss.total,
                t.video,
                t.vlogger,
                t.contrastive,
                t.regularization,
            ]) {
                *acc += v;
            }
            batches += 1;
        }
        state.epoch = epoch + 1;

        let (val_recall, val_ndcg) = if validation.is_empty() {
            (None, None)
        } else {
            let emb = model.forward(&state.params)?;
            let m = eval::evaluate(
                &emb,
                validation,
                graph.user_video_adjacency(),
                &[cfg.early_stop_k],
            )?;
            (Some(m.at[0].recall), Some(m.at[0].ndcg))
        };
        let improved = match (val_recall, state.best_recall) {
            (Some(r), Some(b)) => r > b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            state.best_recall = val_recall;
            state.since_improve = 0;
        } else {
            state.since_improve += 1;
        }
        if improved || validation.is_empty() {
            best = state.clone();
        }

        let n = batches.max(1) as f64;
        let record = EpochRecord {
            epoch,
            batches,
            loss: sums[0] / n,
            video_loss: sums[1] / n,
            vlogger_loss: sums[2] / n,
            contrastive_loss: sums[3] / n,
            regularization: sums[4] / n,
            val_recall,
            val_ndcg,
            improved,
        };
        on_epoch(&record);
        log.push(record);
        if !validation.is_empty() && state.since_improve >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome { best, log })
}
