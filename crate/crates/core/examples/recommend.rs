//! End to end through the pipeline commands: synthesize, train, then list
//! the top videos for one user next to the publishers they come from.

use vlogrec::config::RunConfig;
use vlogrec::pipeline;

fn main() -> vlogrec::Result<()> {
    let root = std::env::temp_dir().join("vlogrec_recommend");
    let mut cfg = RunConfig::from_toml(
        "seed = 8\n[synthetic]\nn_users = 150\nn_vloggers = 15\n[train]\nmax_epochs = 10\nbatch_size = 1024\nlr = 0.005\n",
    )?;
    cfg.paths.dataset = Some(root.join("dataset"));
    cfg.paths.run_dir = Some(root.join("run"));
    pipeline::cmd_synth(&cfg, None)?;
    pipeline::cmd_train(&cfg)?;

    let run = pipeline::load_run(&root.join("dataset"), &root.join("run"))?;
    let ds = &run.dataset;
    let user = ds.ids.users.raw(0).to_string();
    let u = ds.ids.users.get(&user).unwrap();
    let mut watched: Vec<&str> = ds
        .interactions
        .iter()
        .filter(|i| i.user == u)
        .map(|i| ds.ids.vloggers.raw(ds.publishing[i.video as usize].0))
        .collect();
    watched.sort();
    watched.dedup();
    println!("{user} has watched videos from {watched:?}");
    for (video, score) in pipeline::recommend(&run, &user, 10)? {
        let v = ds.ids.videos.get(&video).unwrap();
        println!(
            "{video:>6}  {score:>8.4}  by {}",
            ds.ids.vloggers.raw(ds.publishing[v as usize].0)
        );
    }
    Ok(())
}
