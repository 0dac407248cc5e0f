//! Loss terms and gradients on a three-user toy graph.

use vlogrec::graph::{EntityCounts, TripartiteGraph};
use vlogrec::objective::{bpr_loss, infonce_cross_view, sigmoid, LossWeights};
use vlogrec::propagation::Table;
use vlogrec::training::{
    init_params, neighborhoods_for_round, Batch, ContrastiveMode, Model, ModelConfig, Triple,
};

fn main() -> vlogrec::Result<()> {
    println!(
        "BPR with equal scores: {:.6} (ln 2 = {:.6})",
        bpr_loss(&[1.0], &[1.0])?,
        2f64.ln()
    );
    let same = Table::from_elem((10, 4), 0.5);
    let ids: Vec<u32> = (0..10).collect();
    println!(
        "InfoNCE, 10 identical rows: {:.6} (ln 10 = {:.6})",
        infonce_cross_view(&same, &same, 0.5, &ids)?,
        10f64.ln()
    );
    println!("gate at zero logit: {}", sigmoid(0.0));

    let counts = EntityCounts {
        users: 3,
        videos: 4,
        vloggers: 2,
    };
    let g = TripartiteGraph::new(
        counts,
        &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 3), (2, 2)],
        &[(0, 0), (1, 1), (2, 0), (2, 1)],
        &[(0, 0), (0, 1), (1, 2), (1, 3)],
    )?;
    let cfg = ModelConfig {
        dim: 4,
        layers: 2,
        ..ModelConfig::default()
    };
    let aug = neighborhoods_for_round(&g, &Default::default(), 0)?;
    let model = Model::new(&g, &aug, cfg)?;
    let params = init_params(counts, 4, 0.3, 7)?;
    let batch = Batch {
        video: vec![
            Triple {
                user: 0,
                pos: 0,
                neg: 3,
            },
            Triple {
                user: 2,
                pos: 3,
                neg: 0,
            },
        ],
        vlogger: vec![Triple {
            user: 0,
            pos: 0,
            neg: 1,
        }],
    };
    let weights = LossWeights {
        contrastive: 0.5,
        ..LossWeights::default()
    };
    let (loss, grads) =
        model.compute_gradients(&params, &batch, &weights, ContrastiveMode::Full)?;
    println!("{:#?}", loss.terms);
    println!(
        "total {:.6}; |grad Q| = {:.6}",
        loss.total,
        grads.gate.mapv(|x| x * x).sum().sqrt()
    );
    Ok(())
}
