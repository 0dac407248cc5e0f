//! Builds a tripartite graph from raw-id edge lists and prints its shape.

use vlogrec::graph::{EntityKind, NodeId, TripartiteGraph};

fn main() -> vlogrec::Result<()> {
    let watches = [
        ("ana", "cat-1"),
        ("ana", "cat-2"),
        ("ben", "cat-2"),
        ("ben", "cook-1"),
        ("cy", "cook-1"),
    ];
    let follows = [("ana", "kitty_tv"), ("cy", "chef_lu")];
    let publishes = [
        ("kitty_tv", "cat-1"),
        ("kitty_tv", "cat-2"),
        ("chef_lu", "cook-1"),
    ];
    let (g, ids) = TripartiteGraph::from_raw(&watches, &follows, &publishes)?;

    println!("{:?}", g.counts());
    for (u, raw) in ids.users.iter() {
        let videos: Vec<&str> = g
            .user_videos(u)
            .iter()
            .map(|&v| ids.videos.raw(v))
            .collect();
        let vloggers: Vec<&str> = g
            .user_vloggers(u)
            .iter()
            .map(|&p| ids.vloggers.raw(p))
            .collect();
        println!("{raw}: watches {videos:?}, follows {vloggers:?}");
    }
    let cat2 = ids.videos.get("cat-2").unwrap();
    println!(
        "cat-2 published by {}",
        ids.vloggers.raw(g.publisher_of(cat2))
    );
    let node = NodeId {
        kind: EntityKind::Video,
        index: cat2,
    };
    println!("cat-2 has {} viewers", g.degree(node, EntityKind::User));
    Ok(())
}
