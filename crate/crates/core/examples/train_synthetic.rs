//! Trains the full model on a planted synthetic dataset and prints the
//! epoch log. Pass an epoch count as the first argument (default 15).

use vlogrec::data::{generate_synthetic, Split, SyntheticConfig};
use vlogrec::training::{train, TrainConfig};

fn main() -> vlogrec::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(15);
    let ds = generate_synthetic(&SyntheticConfig {
        n_users: 200,
        n_vloggers: 20,
        seed: 4,
        ..Default::default()
    })?;
    let g = ds.train_graph()?;
    println!("{:?}, {} follows", g.counts(), g.n_user_vlogger_edges());
    let cfg = TrainConfig {
        max_epochs: epochs,
        batch_size: 1024,
        lr: 0.005,
        seed: 4,
        ..TrainConfig::default()
    };
    let out = train(&g, &ds.targets(Split::Val), &cfg, |r| {
        println!(
            "epoch {:>2}  loss {:>10.3}  bpr {:>8.3}  vlogger {:>8.3}  val recall@10 {:.3}{}",
            r.epoch,
            r.loss,
            r.video_loss,
            r.vlogger_loss,
            r.val_recall.unwrap_or(f64::NAN),
            if r.improved { " *" } else { "" }
        )
    })?;
    println!(
        "kept the state after {} epochs (recall {:?})",
        out.best.epoch, out.best.best_recall
    );
    Ok(())
}
