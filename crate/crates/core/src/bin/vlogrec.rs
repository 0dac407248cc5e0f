use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vlogrec::config::{Overrides, Paths, RunConfig};
use vlogrec::data::{PositiveRuleConfig, Split};
use vlogrec::pipeline;
use vlogrec::training::Variant;

#[derive(Parser)]
#[command(
    name = "vlogrec",
    version,
    about = "Vlogger-augmented micro-video recommendation"
)]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Wechat,
    Takatak,
}

#[derive(Args, Default)]
struct ModelFlags {
    /// ablation letter (a-e), `full`, `lightgcn` or a snake_case variant name
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Raw behavior log to a processed dataset directory.
    Preprocess {
        #[arg(long, env = "VLOGREC_RAW")]
        raw: Option<PathBuf>,
        #[arg(long, env = "VLOGREC_DATASET")]
        out: Option<PathBuf>,
        /// Positive-rule thresholds; defaults to the config's `[rules]`.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Planted synthetic dataset.
    Synth {
        #[arg(long, env = "VLOGREC_DATASET")]
        out: Option<PathBuf>,
        /// Also write the generated raw log here.
        #[arg(long)]
        raw_out: Option<PathBuf>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        vloggers: Option<usize>,
        #[arg(long)]
        videos_per_vlogger: Option<usize>,
        #[arg(long)]
        affinity: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Train one variant; writes checkpoint, run config and epoch log.
    Train {
        #[arg(long, env = "VLOGREC_DATASET")]
        dataset: Option<PathBuf>,
        #[arg(long, env = "VLOGREC_RUN_DIR")]
        run_dir: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Full-catalog Recall@K / NDCG@K of a trained run.
    Evaluate {
        #[arg(long, env = "VLOGREC_DATASET")]
        dataset: Option<PathBuf>,
        #[arg(long, env = "VLOGREC_RUN_DIR")]
        run_dir: Option<PathBuf>,
        #[arg(long, env = "VLOGREC_REPORTS")]
        reports: Option<PathBuf>,
        #[arg(long, value_parser = parse_split)]
        split: Option<Split>,
        /// Cutoff; repeat for several.
        #[arg(long = "k")]
        ks: Vec<usize>,
    },
    /// Train and test every configured variant; writes a comparison table.
    Ablate {
        #[arg(long, env = "VLOGREC_DATASET")]
        dataset: Option<PathBuf>,
        #[arg(long, env = "VLOGREC_REPORTS")]
        reports: Option<PathBuf>,
        #[arg(long = "k")]
        ks: Vec<usize>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Top-k unwatched videos for one user.
    Recommend {
        #[arg(long, env = "VLOGREC_DATASET")]
        dataset: Option<PathBuf>,
        #[arg(long, env = "VLOGREC_RUN_DIR")]
        run_dir: Option<PathBuf>,
        #[arg(long)]
        user: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: vlogrec::Error| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse()
        .map_err(|_| format!("unknown split `{s}` (val or test)"))
}

fn model_overrides(o: &mut Overrides, m: ModelFlags) {
    o.variant = m.variant;
    o.max_epochs = m.epochs;
    o.dim = m.dim;
    o.layers = m.layers;
    o.lr = m.lr;
    o.batch_size = m.batch_size;
}

fn ks(ks: Vec<usize>) -> Option<Vec<usize>> {
    (!ks.is_empty()).then_some(ks)
}

fn run(cli: Cli) -> vlogrec::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let mut o = Overrides {
        seed: cli.seed,
        ..Default::default()
    };
    match cli.cmd {
        Cmd::Preprocess { raw, out, preset } => {
            o.paths = Paths {
                raw,
                dataset: out,
                ..Default::default()
            };
            if let Some(p) = preset {
                cfg.rules = match p {
                    Preset::Wechat => PositiveRuleConfig::wechat(),
                    Preset::Takatak => PositiveRuleConfig::takatak(),
                };
            }
            let ds = pipeline::cmd_preprocess(&cfg.apply(&o)?)?;
            let c = ds.counts();
            println!(
                "users={} videos={} vloggers={} interactions={} follows={}",
                c.users,
                c.videos,
                c.vloggers,
                ds.interactions.len(),
                ds.user_vlogger.len()
            );
        }
        Cmd::Synth {
            out,
            raw_out,
            users,
            vloggers,
            videos_per_vlogger,
            affinity,
            noise,
        } => {
            o.paths = Paths {
                dataset: out,
                ..Default::default()
            };
            let s = &mut cfg.synthetic;
            s.n_users = users.unwrap_or(s.n_users);
            s.n_vloggers = vloggers.unwrap_or(s.n_vloggers);
            s.videos_per_vlogger = videos_per_vlogger.unwrap_or(s.videos_per_vlogger);
            s.affinity = affinity.unwrap_or(s.affinity);
            s.noise = noise.unwrap_or(s.noise);
            let ds = pipeline::cmd_synth(&cfg.apply(&o)?, raw_out.as_deref())?;
            let c = ds.counts();
            println!(
                "users={} videos={} vloggers={} interactions={} follows={}",
                c.users,
                c.videos,
                c.vloggers,
                ds.interactions.len(),
                ds.user_vlogger.len()
            );
        }
        Cmd::Train {
            dataset,
            run_dir,
            model,
        } => {
            o.paths = Paths {
                dataset,
                run_dir,
                ..Default::default()
            };
            model_overrides(&mut o, model);
            let cfg = cfg.apply(&o)?;
            let out = pipeline::cmd_train(&cfg)?;
            for r in &out.log {
                eprintln!(
                    "epoch {:>3} loss {:.6} val_recall {:?}",
                    r.epoch, r.loss, r.val_recall
                );
            }
            let best = out
                .best
                .best_recall
                .map_or("n/a".to_string(), |r| format!("{r:.6}"));
            println!(
                "variant={} epochs={} best_val_recall={best}",
                cfg.variant.label(),
                out.log.len()
            );
        }
        Cmd::Evaluate {
            dataset,
            run_dir,
            reports,
            split,
            ks: k,
        } => {
            o.paths = Paths {
                dataset,
                run_dir,
                reports,
                ..Default::default()
            };
            o.split = split;
            o.ks = ks(k);
            print!("{}", pipeline::cmd_evaluate(&cfg.apply(&o)?)?.to_text());
        }
        Cmd::Ablate {
            dataset,
            reports,
            ks: k,
            model,
        } => {
            o.paths = Paths {
                dataset,
                reports,
                ..Default::default()
            };
            o.ks = ks(k);
            model_overrides(&mut o, model);
            let reports = pipeline::cmd_ablate(&cfg.apply(&o)?)?;
            print!("{}", vlogrec::eval::ablation_table(&reports));
        }
        Cmd::Recommend {
            dataset,
            run_dir,
            user,
            k,
        } => {
            o.paths = Paths {
                dataset,
                run_dir,
                ..Default::default()
            };
            for (video, score) in pipeline::cmd_recommend(&cfg.apply(&o)?, &user, k)? {
                println!("{video}\t{score:.6}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
