use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::corpus::{DEFAULT_RATIOS, DEFAULT_SPLIT_SEED};
use crate::metric::BleuSettings;
use crate::tinyformer::config::parse_kv;
use crate::tinyformer::{ModelConfig, TrainConfig};

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "STORY2PSEUDO_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Rules,
    Model,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Rules => "rules",
            Engine::Model => "model",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rules" => Ok(Engine::Rules),
            "model" => Ok(Engine::Model),
            _ => Err(PipelineError::Config(format!("unknown engine `{s}` (expected rules or model)"))),
        }
    }
}

/// Settings shared by every command. Paths are kept as written and
/// resolved against `base_dir` (the config file's directory) on use.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub engine: Engine,
    pub rules: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub index_cache: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub bleu: BleuSettings,
    pub split_seed: u64,
    pub split_ratios: [f64; 3],
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            engine: Engine::Rules,
            rules: None,
            model: None,
            index_cache: None,
            out_dir: PathBuf::from("out"),
            bleu: BleuSettings::default(),
            split_seed: DEFAULT_SPLIT_SEED,
            split_ratios: DEFAULT_RATIOS,
            model_config: ModelConfig::default(),
            train_config: TrainConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("bad value for {key}: `{value}`")))
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl PipelineConfig {
    /// Parses flat `key=value` text. Unknown keys are errors.
    pub fn from_kv(text: &str, base_dir: &Path) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig {
            base_dir: base_dir.to_path_buf(),
            ..PipelineConfig::default()
        };
        let pairs = parse_kv(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let rest = cfg.model_config.apply_kv(pairs).map_err(|e| PipelineError::Config(e.to_string()))?;
        let rest = cfg.train_config.apply_kv(rest).map_err(|e| PipelineError::Config(e.to_string()))?;
        for (k, v) in rest {
            match k {
                "corpus" => cfg.corpus = opt_path(v),
                "engine" => cfg.engine = v.parse()?,
                "rules" => cfg.rules = opt_path(v),
                "model" => cfg.model = opt_path(v),
                "index_cache" => cfg.index_cache = opt_path(v),
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                "bleu_max_n" => cfg.bleu.max_n = parse(k, v)?,
                "bleu_smoothing" => cfg.bleu.smoothing = parse(k, v)?,
                "split_seed" => cfg.split_seed = parse(k, v)?,
                "split_ratios" => {
                    let parts = v.split(',').map(|p| parse::<f64>(k, p.trim())).collect::<Result<Vec<_>, _>>()?;
                    cfg.split_ratios = parts
                        .try_into()
                        .map_err(|_| PipelineError::Config("split_ratios needs three values".into()))?;
                }
                _ => return Err(PipelineError::Config(format!("unknown config key `{k}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        PipelineConfig::from_kv(&text, base)
    }

    /// `--config` first, then the environment variable, then defaults.
    pub fn discover(explicit: Option<&Path>) -> Result<PipelineConfig, PipelineError> {
        if let Some(p) = explicit {
            return PipelineConfig::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => PipelineConfig::load(Path::new(&p)),
            _ => Ok(PipelineConfig::default()),
        }
    }

    /// Overrides every seed (split and model) with `seed`.
    pub fn set_seed(&mut self, seed: u64) {
        self.split_seed = seed;
        self.model_config.seed = seed;
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks values and that the chosen engine has what it needs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.model_config.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.train_config.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.bleu.max_n == 0 {
            return Err(PipelineError::Config("bleu_max_n must be at least 1".into()));
        }
        if self.engine == Engine::Model && self.model.is_none() {
            return Err(PipelineError::Config("engine=model needs a model path".into()));
        }
        Ok(())
    }

    /// Canonical text form, every key in a fixed order.
    pub fn to_kv(&self) -> String {
        let r = self.split_ratios;
        let mut out = format!(
            "corpus={}\nengine={}\nrules={}\nmodel={}\nindex_cache={}\nout_dir={}\nbleu_max_n={}\nbleu_smoothing={}\nsplit_seed={}\nsplit_ratios={},{},{}\n",
            show(&self.corpus),
            self.engine,
            show(&self.rules),
            show(&self.model),
            show(&self.index_cache),
            self.out_dir.display(),
            self.bleu.max_n,
            self.bleu.smoothing,
            self.split_seed,
            r[0],
            r[1],
            r[2],
        );
        out.push_str(&self.model_config.to_kv());
        let t = &self.train_config;
        out.push_str(&format!(
            "epochs={}\nlearning_rate={}\nbeta1={}\nbeta2={}\nadam_eps={}\nbatch_size={}\nmin_freq={}\n",
            t.epochs, t.learning_rate, t.beta1, t.beta2, t.adam_eps, t.batch_size, t.min_freq
        ));
        out
    }

    /// SHA-256 of [`PipelineConfig::to_kv`], hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_kv().as_bytes()))
    }
}
