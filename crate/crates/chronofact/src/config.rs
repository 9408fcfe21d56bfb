//! Experiment configuration shared by the CLI and library callers. The
//! same struct backs the TOML config file and the command-line flags; key
//! names match flag names one-to-one (flags spell underscores as hyphens),
//! and flags override file values field by field.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Mode, ModelConfig};
use crate::train::optim::{OptimKind, Schedule};
use crate::train::TrainConfig;

/// Every knob of an experiment, all optional so that a config file and a
/// flag set can be merged; unset fields fall back to the fusion mode's
/// published defaults. `resolve` produces the concrete configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    // Artifact paths.
    /// Corpus file (JSONL of claim instances).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Document-level bucket scheme file; shipped scheme when unset.
    #[arg(long)]
    pub doc_buckets: Option<PathBuf>,
    /// Content-level bucket scheme file; shipped scheme when unset.
    #[arg(long)]
    pub con_buckets: Option<PathBuf>,
    /// Checkpoint to load.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output path (artifact depends on the subcommand).
    #[arg(long)]
    pub out: Option<PathBuf>,

    // Data handling.
    /// At most this many evidence documents per claim.
    #[arg(long)]
    pub max_evidence: Option<usize>,
    /// Train/validation/test fractions, e.g. "0.7,0.15,0.15".
    #[arg(long)]
    pub split: Option<String>,
    /// Seed of the stratified splitter (independent of the train seed).
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Domain filter for fine-tuning or single-domain evaluation.
    #[arg(long)]
    pub domain: Option<String>,
    /// Which part feeds `evaluate`: train, val, test, or all.
    #[arg(long)]
    pub eval_split: Option<String>,

    // Model.
    /// Fusion mode: base, DL_loc, CL_loc, DL_glob, CL_glob, DLCL_glob.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Word embedding width.
    #[arg(long)]
    pub d1: Option<usize>,
    /// BiLSTM hidden width per direction.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Time embedding width.
    #[arg(long)]
    pub dt: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub conv_filters: Option<usize>,
    #[arg(long)]
    pub conv_kernel: Option<usize>,
    #[arg(long)]
    pub evidence_hidden: Option<usize>,
    #[arg(long)]
    pub label_hidden1: Option<usize>,
    #[arg(long)]
    pub label_hidden2: Option<usize>,
    /// Predicate-offset clipping window (rows = 2w+1).
    #[arg(long)]
    pub offset_window: Option<i64>,

    // Training.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// adam or rmsprop.
    #[arg(long)]
    pub optimizer: Option<String>,
    /// none, linear, or linear_warmup.
    #[arg(long)]
    pub scheduler: Option<String>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub epochs_pretrain: Option<usize>,
    #[arg(long)]
    pub epochs_finetune: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! take_over {
    ($base:ident, $over:ident, $($field:ident),+ $(,)?) => {
        $(if $over.$field.is_some() { $base.$field = $over.$field.clone(); })+
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Field-by-field override; set fields of `flags` win.
    pub fn merged_with(&self, flags: &ExperimentConfig) -> ExperimentConfig {
        let mut out = self.clone();
        take_over!(
            out, flags, corpus, doc_buckets, con_buckets, checkpoint, out, max_evidence,
            split, split_seed, domain, eval_split, mode, alpha, beta, gamma, d1, hidden, dt, dropout,
            conv_filters, conv_kernel, evidence_hidden, label_hidden1, label_hidden2,
            offset_window, batch_size, lr, optimizer, scheduler, weight_decay,
            epochs_pretrain, epochs_finetune, clip_norm, seed
        );
        out
    }

    pub fn mode(&self) -> Result<Mode> {
        match &self.mode {
            Some(s) => Mode::from_str(s),
            None => Ok(Mode::Base),
        }
    }

    /// Concrete model config: the mode's published weights, overridden by
    /// any explicitly set field, then validated.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let mut cfg = ModelConfig::for_mode(self.mode()?);
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.d1 {
            cfg.d1 = v;
        }
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.dropout {
            cfg.dropout = v;
        }
        if let Some(v) = self.conv_filters {
            cfg.conv_filters = v;
        }
        if let Some(v) = self.conv_kernel {
            cfg.conv_kernel = v;
        }
        if let Some(v) = self.evidence_hidden {
            cfg.evidence_hidden = v;
        }
        if let Some(v) = self.label_hidden1 {
            cfg.label_hidden1 = v;
        }
        if let Some(v) = self.label_hidden2 {
            cfg.label_hidden2 = v;
        }
        if let Some(v) = self.offset_window {
            cfg.offset_window = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::default();
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(s) = &self.optimizer {
            cfg.optimizer = OptimKind::from_str(s)?;
        }
        if let Some(s) = &self.scheduler {
            cfg.scheduler = Schedule::from_str(s)?;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.epochs_pretrain {
            cfg.epochs_pretrain = v;
        }
        if let Some(v) = self.epochs_finetune {
            cfg.epochs_finetune = v;
        }
        if let Some(v) = self.clip_norm {
            cfg.clip_norm = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn max_evidence(&self) -> usize {
        self.max_evidence.unwrap_or(10)
    }

    pub fn split_ratios(&self) -> Result<(f64, f64, f64)> {
        let text = self.split.as_deref().unwrap_or("0.7,0.15,0.15");
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "split {text:?} must be three comma-separated fractions"
            )));
        }
        let mut vals = [0.0f64; 3];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad split fraction {p:?}")))?;
        }
        Ok((vals[0], vals[1], vals[2]))
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed.unwrap_or(0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Hash of the resolved experiment: model config, train config, and
    /// data handling. Artifacts embed it so mismatched pairs are caught.
    pub fn hash(&self) -> Result<String> {
        let model = self.model_config()?;
        let train = self.train_config()?;
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&model).expect("model config serializes"));
        h.update(serde_json::to_vec(&train).expect("train config serializes"));
        h.update(self.max_evidence().to_le_bytes());
        let (a, b, c) = self.split_ratios()?;
        for v in [a, b, c] {
            h.update(v.to_le_bytes());
        }
        h.update(self.split_seed().to_le_bytes());
        Ok(hex::encode(h.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let file: ExperimentConfig =
            toml::from_str("mode = \"DL_glob\"\nlr = 0.01\nseed = 9\n").unwrap();
        let flags = ExperimentConfig { lr: Some(0.5), ..ExperimentConfig::default() };
        let merged = file.merged_with(&flags);
        assert_eq!(merged.mode().unwrap(), Mode::DlGlob);
        assert_eq!(merged.train_config().unwrap().lr, 0.5);
        assert_eq!(merged.seed(), 9);
    }

    #[test]
    fn mode_defaults_fill_unset_weights() {
        let cfg: ExperimentConfig = toml::from_str("mode = \"DLCL_glob\"").unwrap();
        let model = cfg.model_config().unwrap();
        assert_eq!((model.alpha, model.beta), (0.20, 0.40));
        let over: ExperimentConfig =
            toml::from_str("mode = \"DLCL_glob\"\nalpha = 0.3\n").unwrap();
        assert_eq!(over.model_config().unwrap().alpha, 0.3);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("no_such_key = 1\n").is_err());
        let neg: ExperimentConfig = toml::from_str("lr = -1.0").unwrap();
        assert!(matches!(neg.train_config(), Err(Error::Config(_))));
        let bad: ExperimentConfig = toml::from_str("split = \"0.5,0.5\"").unwrap();
        assert!(matches!(bad.split_ratios(), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_resolved_settings() {
        let a: ExperimentConfig = toml::from_str("mode = \"DL_glob\"").unwrap();
        let b: ExperimentConfig = toml::from_str("mode = \"DL_glob\"\nalpha = 0.10\n").unwrap();
        // alpha 0.10 is DL_glob's default, so the resolved configs agree.
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c: ExperimentConfig = toml::from_str("mode = \"DL_glob\"\nalpha = 0.9\n").unwrap();
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }
}
