mod common;

use common::*;
use vlogrec::data::{generate_synthetic, Split, SyntheticConfig};
use vlogrec::graph::MetaPathConfig;
use vlogrec::propagation::LayerAverage;
use vlogrec::training::{
    self, init_params, ContrastiveMode, Model, ModelConfig, TrainConfig, Variant, ViewFill,
};

#[test]
fn gradients_under_other_switches() {
    let base = gradient_config();
    let mut cases = vec![];
    let mut c = base;
    c.model.layer_avg_denominator = LayerAverage::L;
    cases.push(("L denominator", c));
    let mut c = base;
    c.model.layers = 0;
    cases.push(("no layers", c));
    let mut c = base;
    c.metapath.uvu_in_video_view = false;
    cases.push(("no uvu in video view", c));
    let mut c = Variant::NoVideoView.apply(&base);
    c.model.ablated_view_fill = ViewFill::Zero;
    cases.push(("video view zero-filled", c));
    let mut c = Variant::NoVloggerView.apply(&base);
    c.model.ablated_view_fill = ViewFill::Zero;
    cases.push(("vlogger view zero-filled", c));
    let mut c = base;
    c.model.dim = 2;
    c.metapath = MetaPathConfig::disabled();
    cases.push(("no walks, d=2", c));
    for (name, cfg) in cases {
        for mode in [ContrastiveMode::Full, ContrastiveMode::InBatch] {
            let r = check_gradients_with(&cfg, mode, 1e-5);
            assert!(
                r.max_rel <= 1e-4,
                "{name} {mode:?}: {} ({})",
                r.max_rel,
                r.worst
            );
        }
    }
}

#[test]
fn gate_gets_no_gradient_without_blending() {
    let graph = gradient_fixture();
    let cfg = Variant::NoBlend.apply(&gradient_config());
    let aug = training::neighborhoods_for_round(&graph, &cfg.seeded_metapath(), 0).unwrap();
    let model = Model::new(&graph, &aug, cfg.model).unwrap();
    let params = init_params(graph.counts(), 3, 0.5, 1).unwrap();
    let (loss, g) = model
        .compute_gradients(&params, &gradient_batch(), &cfg.loss, ContrastiveMode::Full)
        .unwrap();
    assert!(g.gate.iter().all(|&x| x == 0.0));
    // the penalty leaves the gate out too
    let mut moved = params.clone();
    moved.gate.fill(3.0);
    let loss2 = model
        .forward_loss(&moved, &gradient_batch(), &cfg.loss, ContrastiveMode::Full)
        .unwrap();
    assert_eq!(loss.total, loss2.total);
}

#[test]
fn zero_weight_contrastive_term_is_zero() {
    let graph = gradient_fixture();
    let base = gradient_config();
    let aug = training::neighborhoods_for_round(&graph, &base.seeded_metapath(), 0).unwrap();
    let params = init_params(graph.counts(), 3, 0.5, 1).unwrap();
    let cfg = Variant::NoContrastive.apply(&base);
    let model = Model::new(&graph, &aug, cfg.model).unwrap();
    let l = model
        .forward_loss(&params, &gradient_batch(), &cfg.loss, ContrastiveMode::Full)
        .unwrap();
    assert_eq!(l.terms.contrastive, 0.0);
    assert!(l.terms.video > 0.0 && l.terms.vlogger > 0.0);
}

fn small_dataset() -> vlogrec::data::Dataset {
    generate_synthetic(&SyntheticConfig {
        n_users: 60,
        n_vloggers: 8,
        videos_per_vlogger: 10,
        interactions_per_user: 15,
        seed: 2,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

fn small_config(seed: u64) -> TrainConfig {
    TrainConfig {
        lr: 0.01,
        batch_size: 128,
        max_epochs: 4,
        model: ModelConfig {
            dim: 8,
            layers: 2,
            ..ModelConfig::default()
        },
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let ds = small_dataset();
    let g = ds.train_graph().unwrap();
    let val = ds.targets(Split::Val);
    let a = training::train(&g, &val, &small_config(1), |_| {}).unwrap();
    let b = training::train(&g, &val, &small_config(1), |_| {}).unwrap();
    let c = training::train(&g, &val, &small_config(2), |_| {}).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.best, b.best);
    assert_ne!(a.best.params, c.best.params);
}

#[test]
fn zero_epochs_returns_the_initial_state() {
    let ds = small_dataset();
    let g = ds.train_graph().unwrap();
    let cfg = TrainConfig {
        max_epochs: 0,
        ..small_config(4)
    };
    let out = training::train(&g, &ds.targets(Split::Val), &cfg, |_| panic!("no epochs")).unwrap();
    assert!(out.log.is_empty());
    assert_eq!(out.best.epoch, 0);
    assert_eq!(
        out.best.params,
        init_params(g.counts(), 8, cfg.init_std, 4).unwrap()
    );
}

#[test]
fn without_validation_the_last_state_is_kept() {
    let ds = small_dataset();
    let g = ds.train_graph().unwrap();
    let cfg = small_config(5);
    let out = training::train(&g, &[], &cfg, |_| {}).unwrap();
    assert_eq!(out.log.len(), cfg.max_epochs);
    assert_eq!(out.best.epoch, cfg.max_epochs);
    assert!(out.log.iter().all(|r| r.val_recall.is_none()));
}

#[test]
fn early_stopping_keeps_the_best_epoch() {
    let ds = small_dataset();
    let g = ds.train_graph().unwrap();
    let cfg = TrainConfig {
        max_epochs: 40,
        patience: 2,
        lr: 0.05,
        ..small_config(6)
    };
    let out = training::train(&g, &ds.targets(Split::Val), &cfg, |_| {}).unwrap();
    let best = out
        .log
        .iter()
        .filter(|r| r.improved)
        .last()
        .expect("first epoch always improves");
    // stops once `patience` epochs in a row fail to improve
    assert!(out.log.len() <= best.epoch + 1 + cfg.patience);
    assert_eq!(out.best.best_recall, best.val_recall);
    assert_eq!(out.best.epoch, best.epoch + 1);
    // strict improvement only
    let mut running = f64::NEG_INFINITY;
    for r in &out.log {
        let v = r.val_recall.unwrap();
        assert_eq!(r.improved, v > running);
        running = running.max(v);
    }
}

#[test]
fn resampled_walks_are_recorded_in_the_state() {
    let ds = generate_synthetic(&SyntheticConfig {
        n_users: 100,
        n_vloggers: 10,
        seed: 2,
        ..SyntheticConfig::default()
    })
    .unwrap();
    assert!(!ds.user_vlogger.is_empty());
    let g = ds.train_graph().unwrap();
    let cfg = TrainConfig {
        resample_walks_every: 1,
        max_epochs: 3,
        ..small_config(7)
    };
    let out = training::train(&g, &[], &cfg, |_| {}).unwrap();
    assert_eq!(out.best.walk_round, 2);
    let round0 = training::neighborhoods_for_round(&g, &cfg.seeded_metapath(), 0).unwrap();
    let round2 = training::neighborhoods_for_round(&g, &cfg.seeded_metapath(), 2).unwrap();
    assert_ne!(round0, round2);
    assert_eq!(
        round2,
        training::neighborhoods_for_round(&g, &cfg.seeded_metapath(), 2).unwrap()
    );
}

#[test]
fn every_variant_trains_an_epoch() {
    let ds = small_dataset();
    let g = ds.train_graph().unwrap();
    let base = TrainConfig {
        max_epochs: 1,
        ..small_config(8)
    };
    for v in Variant::ABLATIONS.into_iter().chain([Variant::LightGcn]) {
        let out = training::train(&g, &ds.targets(Split::Val), &v.apply(&base), |_| {}).unwrap();
        assert!(out.log[0].loss.is_finite(), "{}", v.label());
    }
}
