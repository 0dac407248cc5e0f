mod common;

use std::path::Path;
use std::process::Command;

use vlogrec::config::RunConfig;
use vlogrec::data::{Split, SyntheticConfig};
use vlogrec::eval;
use vlogrec::training::{init_params, load_checkpoint, Variant};
use vlogrec::{pipeline, Error};

fn config(root: &Path, extra: &str) -> RunConfig {
    let mut cfg = RunConfig::from_toml(&format!(
        "seed = 3\n[synthetic]\nn_users = 80\nn_vloggers = 8\nvideos_per_vlogger = 10\ninteractions_per_user = 15\n\
         [train]\nmax_epochs = 3\nbatch_size = 128\nlr = 0.01\n[train.model]\ndim = 8\nlayers = 2\n{extra}"
    ))
    .unwrap();
    cfg.paths.dataset = Some(root.join("ds"));
    cfg.paths.run_dir = Some(root.join("run"));
    cfg.paths.reports = Some(root.join("reports"));
    cfg
}

#[test]
fn zero_epochs_writes_the_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "")
        .apply(&vlogrec::config::Overrides {
            max_epochs: Some(0),
            ..Default::default()
        })
        .unwrap();
    let ds = pipeline::cmd_synth(&cfg, None).unwrap();
    pipeline::cmd_train(&cfg).unwrap();
    let run = dir.path().join("run");
    let state = load_checkpoint(&run.join(pipeline::CHECKPOINT), None).unwrap();
    assert_eq!(
        state.params,
        init_params(ds.counts(), 8, cfg.train.init_std, 3).unwrap()
    );
    assert_eq!(
        std::fs::read_to_string(run.join(pipeline::TRAIN_LOG)).unwrap(),
        ""
    );
}

#[test]
fn outputs_carry_the_config_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "[ablation]\nvariants = [\"full\", \"lightgcn\"]\n",
    );
    pipeline::cmd_synth(&cfg, None).unwrap();
    pipeline::cmd_train(&cfg).unwrap();
    let report = pipeline::cmd_evaluate(&cfg).unwrap();
    let digest = cfg.digest();
    assert_eq!(report.config_digest, digest);
    let log = std::fs::read_to_string(dir.path().join("run").join(pipeline::TRAIN_LOG)).unwrap();
    assert_eq!(log.lines().count(), 3);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["config_digest"], digest.as_str());
    }
    let (txt, json) = pipeline::metrics_files(Split::Test);
    let reports = dir.path().join("reports");
    assert!(std::fs::read_to_string(reports.join(txt))
        .unwrap()
        .contains(&format!("config_digest={digest}")));
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(reports.join(json)).unwrap()).unwrap();
    assert_eq!(j["config_digest"], digest.as_str());

    let rows = pipeline::cmd_ablate(&cfg).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.variant).collect::<Vec<_>>(),
        [Variant::Full, Variant::LightGcn]
    );
    let table = std::fs::read_to_string(reports.join(pipeline::ABLATION_TABLE)).unwrap();
    assert!(table.starts_with(&format!("# config_digest={digest} seed=3\n")));
    assert_eq!(table.lines().count(), 4, "{table}");
}

#[test]
fn recommend_follows_the_evaluation_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    pipeline::cmd_synth(&cfg, None).unwrap();
    pipeline::cmd_train(&cfg).unwrap();
    let run = pipeline::load_run(&dir.path().join("ds"), &dir.path().join("run")).unwrap();
    let ds = &run.dataset;
    let test_ex = ds.exclusions(Split::Test);
    for (u, target) in ds.targets(Split::Test).into_iter().take(10) {
        let raw = ds.ids.users.raw(u).to_string();
        let ranking =
            eval::rank_for_user(&run.embeddings, u, test_ex.neighbors(u), Some(target)).unwrap();
        // evaluation keeps the held-out item as a candidate; recommend hides it
        let expected: Vec<String> = ranking
            .order
            .iter()
            .filter(|&&v| v != target)
            .take(20)
            .map(|&v| ds.ids.videos.raw(v).to_string())
            .collect();
        let got: Vec<String> = pipeline::recommend(&run, &raw, 20)
            .unwrap()
            .into_iter()
            .map(|r| r.0)
            .collect();
        assert_eq!(got, expected);
    }
    // K beyond the catalog returns every candidate
    let u0 = ds.ids.users.raw(0).to_string();
    let watched = ds.interactions.iter().filter(|i| i.user == 0).count();
    let all = pipeline::recommend(&run, &u0, 1_000_000).unwrap();
    assert_eq!(all.len(), ds.counts().videos - watched);
    assert!(all.windows(2).all(|w| w[0].1 >= w[1].1));
    assert!(matches!(
        pipeline::recommend(&run, "ghost", 5),
        Err(Error::NotFound(_))
    ));
}

#[test]
fn evaluation_uses_the_trained_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "");
    cfg.variant = Variant::NoBlend;
    pipeline::cmd_synth(&cfg, None).unwrap();
    pipeline::cmd_train(&cfg).unwrap();
    // evaluating with a different variant in the caller's config still
    // rebuilds the model the checkpoint was trained as
    let mut other = cfg.clone();
    other.variant = Variant::Full;
    let report = pipeline::cmd_evaluate(&other).unwrap();
    assert_eq!(report.variant, Variant::NoBlend);
    assert_eq!(report.config_digest, cfg.digest());
}

#[test]
fn cli_flags_beat_env_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let file = root.join("run.toml");
    std::fs::write(
        &file,
        format!(
            "[synthetic]\nn_users = 60\nn_vloggers = 6\nvideos_per_vlogger = 10\ninteractions_per_user = 12\n\
             [train]\nmax_epochs = 4\nbatch_size = 256\n[train.model]\ndim = 4\nlayers = 1\n[paths]\ndataset = \"{}\"\n",
            root.join("from_file").display()
        ),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_vlogrec");
    let cmd = |args: &[&str], env_ds: Option<&Path>| {
        let mut c = Command::new(bin);
        c.arg("--config")
            .arg(&file)
            .args(args)
            .env_remove("VLOGREC_DATASET")
            .env_remove("VLOGREC_RUN_DIR");
        if let Some(p) = env_ds {
            c.env("VLOGREC_DATASET", p);
        }
        let out = c.output().unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    cmd(&["synth"], None);
    assert!(root.join("from_file/split.tsv").exists());
    cmd(&["synth"], Some(&root.join("from_env")));
    assert!(root.join("from_env/split.tsv").exists());
    let flag = root.join("from_flag");
    cmd(
        &["synth", "--out", flag.to_str().unwrap()],
        Some(&root.join("ignored")),
    );
    assert!(flag.join("split.tsv").exists() && !root.join("ignored").exists());

    let run_dir = root.join("run");
    cmd(
        &[
            "--seed",
            "9",
            "train",
            "--run-dir",
            run_dir.to_str().unwrap(),
            "--epochs",
            "2",
        ],
        None,
    );
    let log = std::fs::read_to_string(run_dir.join(pipeline::TRAIN_LOG)).unwrap();
    assert_eq!(log.lines().count(), 2);
    let saved = RunConfig::load(Some(&run_dir.join(pipeline::RUN_CONFIG))).unwrap();
    assert_eq!(
        (saved.seed, saved.train.max_epochs, saved.train.model.dim),
        (9, 2, 4)
    );

    let top = cmd(
        &[
            "recommend",
            "--run-dir",
            run_dir.to_str().unwrap(),
            "--user",
            "u0",
            "--k",
            "3",
        ],
        None,
    );
    assert_eq!(top.lines().count(), 3);
}

#[test]
fn synthetic_defaults_match_the_documented_world() {
    let c = SyntheticConfig::default();
    assert_eq!(
        (
            c.n_users,
            c.n_vloggers,
            c.videos_per_vlogger,
            c.interactions_per_user
        ),
        (500, 40, 25, 40)
    );
    assert_eq!(c.affinity, 0.9);
}
