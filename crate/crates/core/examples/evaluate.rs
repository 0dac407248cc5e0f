//! Full-catalog evaluation of a briefly trained model, written as a
//! key=value report.

use vlogrec::data::{generate_synthetic, Split, SyntheticConfig};
use vlogrec::eval::{train_and_evaluate, DEFAULT_KS};
use vlogrec::training::{TrainConfig, Variant};

fn main() -> vlogrec::Result<()> {
    let ds = generate_synthetic(&SyntheticConfig {
        n_users: 200,
        n_vloggers: 20,
        seed: 5,
        ..Default::default()
    })?;
    let cfg = TrainConfig {
        max_epochs: 10,
        batch_size: 1024,
        lr: 0.005,
        seed: 5,
        ..TrainConfig::default()
    };
    let (report, _) = train_and_evaluate(
        &ds,
        &cfg,
        Variant::Full,
        Split::Test,
        &DEFAULT_KS,
        "example",
    )?;
    print!("{}", report.to_text());
    let random = 10.0 / ds.counts().videos as f64;
    println!("# a uniform ranking would score about {random:.4} at K=10");
    Ok(())
}
