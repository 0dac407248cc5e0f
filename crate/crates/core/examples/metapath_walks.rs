//! Samples meta-path walks on a synthetic graph and shows how they widen
//! the neighbor sets of both views.

use vlogrec::data::{generate_synthetic, SyntheticConfig};
use vlogrec::graph::{
    build_augmented_neighborhoods, sample_meta_paths, AugmentedNeighborhoods, MetaPathConfig,
};

fn main() -> vlogrec::Result<()> {
    let ds = generate_synthetic(&SyntheticConfig {
        n_users: 100,
        n_vloggers: 10,
        seed: 1,
        ..Default::default()
    })?;
    let g = ds.train_graph()?;
    let cfg = MetaPathConfig {
        seed: 1,
        ..MetaPathConfig::default()
    };
    let walks = sample_meta_paths(&g, &cfg)?;
    println!(
        "walk endpoints: {} user-user, {} user-video, {} vlogger-user",
        walks.user_user.len(),
        walks.user_video.len(),
        walks.vlogger_user.len()
    );

    let base = AugmentedNeighborhoods::base(&g);
    let aug = build_augmented_neighborhoods(&g, &walks)?;
    for (name, b, a) in [
        ("video view", &base.video_view, &aug.video_view),
        ("vlogger view", &base.vlogger_view, &aug.vlogger_view),
    ] {
        println!(
            "{name}: {} -> {} directed edges",
            b.adjacency().n_edges(),
            a.adjacency().n_edges()
        );
    }
    let u = 0;
    println!(
        "user 0 video-view neighbors: {:?}",
        aug.video_view_user_nbrs(u).take(8).collect::<Vec<_>>()
    );
    Ok(())
}
