//! Run configuration: one TOML file, overridden by command-line flags.
//! Paths may also come from environment variables (see [`ENV_PATHS`]).
//! Precedence is flags, then environment (paths only), then file, then
//! defaults.
//!
//! ```toml
//! seed = 7
//! variant = "full"
//!
//! [train]
//! lr = 0.001
//! max_epochs = 50
//!
//! [train.model]
//! dim = 64
//! layers = 3
//!
//! [train.loss]
//! contrastive = 0.0005
//!
//! [eval]
//! ks = [10, 20, 50]
//!
//! [paths]
//! dataset = "data/processed"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{PositiveRuleConfig, Split, SyntheticConfig};
use crate::eval::DEFAULT_KS;
use crate::training::{TrainConfig, Variant};
use crate::{Error, Result};

/// Environment variables consulted for paths.
pub const ENV_PATHS: [&str; 4] = [
    "VLOGREC_RAW",
    "VLOGREC_DATASET",
    "VLOGREC_RUN_DIR",
    "VLOGREC_REPORTS",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub split: Split,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: DEFAULT_KS.to_vec(),
            split: Split::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub variants: Vec<Variant>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        let mut variants = Variant::ABLATIONS.to_vec();
        variants.push(Variant::LightGcn);
        AblationConfig { variants }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw behavior log.
    pub raw: Option<PathBuf>,
    /// Processed dataset directory.
    pub dataset: Option<PathBuf>,
    /// Checkpoint, run config and training log.
    pub run_dir: Option<PathBuf>,
    /// Metric reports and comparison tables.
    pub reports: Option<PathBuf>,
}

impl Paths {
    fn require<'a>(p: &'a Option<PathBuf>, what: &str, env: &str) -> Result<&'a Path> {
        p.as_deref().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no {what} path: pass the flag, set {env}, or add it under [paths]"
            ))
        })
    }

    pub fn raw(&self) -> Result<&Path> {
        Self::require(&self.raw, "raw log", ENV_PATHS[0])
    }

    pub fn dataset(&self) -> Result<&Path> {
        Self::require(&self.dataset, "dataset", ENV_PATHS[1])
    }

    pub fn run_dir(&self) -> Result<&Path> {
        Self::require(&self.run_dir, "run directory", ENV_PATHS[2])
    }

    pub fn reports(&self) -> Result<&Path> {
        Self::require(&self.reports, "reports", ENV_PATHS[3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every random stream.
    pub seed: u64,
    pub variant: Variant,
    pub rules: PositiveRuleConfig,
    pub synthetic: SyntheticConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub ablation: AblationConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 2024,
            variant: Variant::Full,
            rules: PositiveRuleConfig::default(),
            synthetic: SyntheticConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            ablation: AblationConfig::default(),
            paths: Paths::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub max_epochs: Option<usize>,
    pub dim: Option<usize>,
    pub layers: Option<usize>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub ks: Option<Vec<usize>>,
    pub split: Option<Split>,
    pub paths: Paths,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.finish()
    }

    /// Reads `path`, or starts from defaults when `None`.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
            None => RunConfig::default().finish(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(mut self, o: &Overrides) -> Result<RunConfig> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(v) = o.variant {
            self.variant = v;
        }
        if let Some(e) = o.max_epochs {
            self.train.max_epochs = e;
        }
        if let Some(d) = o.dim {
            self.train.model.dim = d;
        }
        if let Some(l) = o.layers {
            self.train.model.layers = l;
        }
        if let Some(lr) = o.lr {
            self.train.lr = lr;
        }
        if let Some(b) = o.batch_size {
            self.train.batch_size = b;
        }
        if let Some(ks) = &o.ks {
            self.eval.ks = ks.clone();
        }
        if let Some(s) = o.split {
            self.eval.split = s;
        }
        let p = &o.paths;
        for (dst, src) in [
            (&mut self.paths.raw, &p.raw),
            (&mut self.paths.dataset, &p.dataset),
            (&mut self.paths.run_dir, &p.run_dir),
            (&mut self.paths.reports, &p.reports),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        self.finish()
    }

    /// Pushes the root seed into the sub-configs and validates everything.
    fn finish(mut self) -> Result<RunConfig> {
        self.train.seed = self.seed;
        self.synthetic.seed = self.seed;
        self.rules.validate()?;
        self.synthetic.validate()?;
        self.train.validate()?;
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(Error::InvalidConfig(
                "eval.ks must be non-empty and positive".into(),
            ));
        }
        if self.eval.split == Split::Train {
            return Err(Error::InvalidConfig(
                "eval.split must be val or test".into(),
            ));
        }
        Ok(self)
    }

    /// Training configuration with the selected variant applied.
    pub fn train_config(&self) -> TrainConfig {
        self.variant.apply(&self.train)
    }

    /// SHA-256 of everything except paths, hex encoded.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
