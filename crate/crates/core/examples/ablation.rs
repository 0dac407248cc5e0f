//! Trains every ablation plus the LightGCN reduction under one seed and
//! prints the comparison table.

use vlogrec::data::{generate_synthetic, SyntheticConfig};
use vlogrec::eval::{ablation_table, run_ablation_suite};
use vlogrec::training::{TrainConfig, Variant};

fn main() -> vlogrec::Result<()> {
    let ds = generate_synthetic(&SyntheticConfig {
        n_users: 150,
        n_vloggers: 15,
        seed: 6,
        ..Default::default()
    })?;
    let cfg = TrainConfig {
        max_epochs: 8,
        batch_size: 1024,
        lr: 0.005,
        seed: 6,
        ..TrainConfig::default()
    };
    let mut variants = Variant::ABLATIONS.to_vec();
    variants.push(Variant::LightGcn);
    let reports = run_ablation_suite(&ds, &cfg, &variants, &[10, 20], "example")?;
    print!("{}", ablation_table(&reports));
    Ok(())
}
