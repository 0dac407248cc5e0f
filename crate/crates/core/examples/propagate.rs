//! Runs both propagation views on random base embeddings and writes the
//! averaged user table as a binary snapshot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vlogrec::data::{generate_synthetic, SyntheticConfig};
use vlogrec::graph::MetaPathConfig;
use vlogrec::propagation::{self, snapshot, LayerAverage, Table};
use vlogrec::training::neighborhoods_for_round;

fn main() -> vlogrec::Result<()> {
    let ds = generate_synthetic(&SyntheticConfig {
        n_users: 100,
        n_vloggers: 10,
        seed: 2,
        ..Default::default()
    })?;
    let g = ds.train_graph()?;
    let aug = neighborhoods_for_round(
        &g,
        &MetaPathConfig {
            seed: 2,
            ..Default::default()
        },
        0,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let normal = Normal::new(0.0, 0.1).unwrap();
    let mut table = |rows| Table::from_shape_simple_fn((rows, 16), || normal.sample(&mut rng));
    let (users, videos, vloggers) = (
        table(g.n_users()),
        table(g.n_videos()),
        table(g.n_vloggers()),
    );

    let avg = LayerAverage::LPlusOne;
    let v1 = propagation::video_view(&g, &aug, &users, &videos, 3, avg)?;
    let v2 = propagation::vlogger_view(&g, &aug, &users, &vloggers, 3, avg)?;
    for (l, t) in v1.users.iter().enumerate() {
        println!(
            "video view layer {l}: mean |user| {:.4}",
            t.mapv(f64::abs).mean().unwrap()
        );
    }
    let joint = propagation::concat_views(&v1.final_users, &v2.final_users)?;
    println!("concatenated users: {:?}", joint.dim());

    let path = std::env::temp_dir().join("vlogrec_users.emb");
    let header = snapshot::SnapshotHeader {
        view: snapshot::SnapshotView::Video,
        layer: snapshot::AVERAGED,
        kind: vlogrec::graph::EntityKind::User,
        count: v1.final_users.nrows(),
        dim: v1.final_users.ncols(),
    };
    snapshot::write(&path, header, &v1.final_users)?;
    let (_, back) = snapshot::read(&path)?;
    assert_eq!(back, v1.final_users);
    println!("snapshot round-tripped through {}", path.display());
    Ok(())
}
