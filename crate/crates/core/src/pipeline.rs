//! End-to-end commands. Each takes a finished [`RunConfig`] and reads or
//! writes the files named by its paths.
//!
//! Run directory layout:
//!
//! ```text
//! checkpoint.bin     best-validation training state
//! run_config.toml    configuration the run was trained with
//! train_log.jsonl    one record per epoch
//! ```
//!
//! Reports directory: `metrics_<split>.txt` (key=value), `metrics_<split>.json`
//! and `ablation.tsv`.

use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{self, Dataset, Split};
use crate::eval::{self, MetricsReport};
use crate::graph::io::write_file;
use crate::training::{
    self, load_checkpoint, save_checkpoint, EpochRecord, Model, TrainOutcome, TrainState,
};
use crate::{Error, Result};

pub const CHECKPOINT: &str = "checkpoint.bin";
pub const RUN_CONFIG: &str = "run_config.toml";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const ABLATION_TABLE: &str = "ablation.tsv";

pub fn metrics_files(split: Split) -> (String, String) {
    (
        format!("metrics_{}.txt", split.as_str()),
        format!("metrics_{}.json", split.as_str()),
    )
}

/// Raw log to processed dataset files.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<Dataset> {
    let records = data::read_raw_log(cfg.paths.raw()?)?;
    let ds = data::build_dataset(&records, &cfg.rules)?;
    ds.write(cfg.paths.dataset()?)?;
    Ok(ds)
}

/// Synthetic planted dataset to processed dataset files; with `raw_out`
/// the underlying raw log is written too.
pub fn cmd_synth(cfg: &RunConfig, raw_out: Option<&Path>) -> Result<Dataset> {
    let records = data::synthetic::synthetic_records(&cfg.synthetic)?;
    if let Some(p) = raw_out {
        write_file(p, data::raw::format_raw_log(&records).as_bytes())?;
    }
    let ds = data::build_dataset(&records, &data::PositiveRuleConfig::wechat())?;
    ds.write(cfg.paths.dataset()?)?;
    Ok(ds)
}

#[derive(Serialize)]
struct LogLine<'a> {
    config_digest: &'a str,
    #[serde(flatten)]
    record: &'a EpochRecord,
}

/// Trains the configured variant; writes checkpoint, run config and log.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let ds = Dataset::read(cfg.paths.dataset()?)?;
    let run_dir = cfg.paths.run_dir()?;
    let graph = ds.train_graph()?;
    let digest = cfg.digest();
    let mut log = String::new();
    let outcome = training::train(&graph, &ds.targets(Split::Val), &cfg.train_config(), |r| {
        log.push_str(
            &serde_json::to_string(&LogLine {
                config_digest: &digest,
                record: r,
            })
            .expect("plain data"),
        );
        log.push('\n');
    })?;
    save_checkpoint(&outcome.best, &run_dir.join(CHECKPOINT))?;
    write_file(&run_dir.join(RUN_CONFIG), cfg.to_toml().as_bytes())?;
    write_file(&run_dir.join(TRAIN_LOG), log.as_bytes())?;
    Ok(outcome)
}

/// The trained model of a run directory, ready to score.
pub struct LoadedRun {
    pub config: RunConfig,
    pub dataset: Dataset,
    pub state: TrainState,
    pub embeddings: training::Embeddings,
}

/// Loads dataset, run config and checkpoint, and runs the forward pass.
pub fn load_run(dataset_dir: &Path, run_dir: &Path) -> Result<LoadedRun> {
    let config = RunConfig::load(Some(&run_dir.join(RUN_CONFIG)))?;
    let dataset = Dataset::read(dataset_dir)?;
    let tc = config.train_config();
    let graph = dataset.train_graph()?;
    let state = load_checkpoint(
        &run_dir.join(CHECKPOINT),
        Some((graph.counts(), tc.model.dim)),
    )?;
    let aug = training::neighborhoods_for_round(&graph, &tc.seeded_metapath(), state.walk_round)?;
    let embeddings = Model::new(&graph, &aug, tc.model)?.forward(&state.params)?;
    Ok(LoadedRun {
        config,
        dataset,
        state,
        embeddings,
    })
}

/// Evaluates a trained run on `cfg.eval.split` and writes both report files.
/// Model settings come from the run's own config; Ks and split from `cfg`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<MetricsReport> {
    let run = load_run(cfg.paths.dataset()?, cfg.paths.run_dir()?)?;
    let split = cfg.eval.split;
    let ds = &run.dataset;
    let metrics = eval::evaluate(
        &run.embeddings,
        &ds.targets(split),
        &ds.exclusions(split),
        &cfg.eval.ks,
    )?;
    let report = MetricsReport {
        split,
        variant: run.config.variant,
        seed: run.config.seed,
        config_digest: run.config.digest(),
        metrics,
    };
    let reports = cfg.paths.reports()?;
    let (txt, json) = metrics_files(split);
    write_file(&reports.join(txt), report.to_text().as_bytes())?;
    write_file(&reports.join(json), report.to_json().as_bytes())?;
    Ok(report)
}

/// Trains and tests every configured variant; writes the comparison table.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<MetricsReport>> {
    let ds = Dataset::read(cfg.paths.dataset()?)?;
    let digest = cfg.digest();
    let reports = eval::run_ablation_suite(
        &ds,
        &cfg.train,
        &cfg.ablation.variants,
        &cfg.eval.ks,
        &digest,
    )?;
    let table = format!(
        "# config_digest={digest} seed={}\n{}",
        cfg.seed,
        eval::ablation_table(&reports)
    );
    write_file(&cfg.paths.reports()?.join(ABLATION_TABLE), table.as_bytes())?;
    Ok(reports)
}

/// Top-`k` unwatched videos for a user given by raw id, best first.
pub fn cmd_recommend(cfg: &RunConfig, user: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let run = load_run(cfg.paths.dataset()?, cfg.paths.run_dir()?)?;
    recommend(&run, user, k)
}

/// Every video the user interacted with, in any split, is excluded.
pub fn recommend(run: &LoadedRun, user: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let ds = &run.dataset;
    let u = ds
        .ids
        .users
        .get(user)
        .ok_or_else(|| Error::NotFound(format!("user `{user}`")))?;
    let mut watched: Vec<u32> = ds
        .interactions
        .iter()
        .filter(|i| i.user == u)
        .map(|i| i.video)
        .collect();
    watched.sort_unstable();
    let ranking = eval::rank_for_user(&run.embeddings, u, &watched, None)?;
    Ok(ranking
        .order
        .iter()
        .take(k)
        .map(|&v| (ds.ids.videos.raw(v).to_string(), run.embeddings.score(u, v)))
        .collect())
}
