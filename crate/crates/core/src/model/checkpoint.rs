//! Checkpoint directory layout:
//!
//! ```text
//! <dir>/config.json      CheckpointConfig
//! <dir>/backbone/        backbone weights (the tiny model keeps its
//!                        classification head in backbone/head.safetensors)
//! <dir>/train_log.jsonl  one EpochLog per line
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::backbone::{Backbone, BackboneSpec};
use crate::dataset::{read_json, read_jsonl, write_json};
use crate::error::{Error, Result};
use crate::knowledge::KnowledgeSource;

pub const CONFIG_FILE: &str = "config.json";
pub const BACKBONE_DIR: &str = "backbone";
pub const LOG_FILE: &str = "train_log.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a better validation score.
    pub patience: Option<usize>,
    pub generation_weight: f64,
    pub classification_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            learning_rate: 2e-5,
            max_epochs: 10,
            patience: None,
            generation_weight: 1.0,
            classification_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings that let the tiny backbone learn in a few CPU minutes.
    pub fn desk_scale() -> Self {
        TrainConfig { batch_size: 4, learning_rate: 3e-3, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::config("batch_size, max_epochs and learning_rate must be positive"));
        }
        if self.generation_weight < 0.0 || self.classification_weight < 0.0 {
            return Err(Error::config("loss weights must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Unigen,
    Mtgen,
    Integration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub model: ModelKind,
    pub knowledge: Vec<KnowledgeSource>,
    pub train: TrainConfig,
    pub backbone: BackboneSpec,
    pub backbone_id: String,
    pub best_epoch: usize,
    /// Score that selected `best_epoch`.
    pub best_score: Option<f64>,
    /// What `best_score` measures.
    pub selection: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub generation_loss: f64,
    pub classification_loss: f64,
    pub validation_score: Option<f64>,
    pub validation_ex_accuracy: Option<f64>,
    pub selected: bool,
}

pub struct Checkpoint {
    pub dir: PathBuf,
    pub config: CheckpointConfig,
    pub backbone: Box<dyn Backbone>,
}

impl Checkpoint {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let config: CheckpointConfig = read_json(dir.join(CONFIG_FILE))?;
        let backbone = config.backbone.load(&dir.join(BACKBONE_DIR))?;
        Ok(Checkpoint { dir: dir.to_owned(), config, backbone })
    }

    pub fn log(&self) -> Result<Vec<EpochLog>> {
        read_jsonl(self.dir.join(LOG_FILE))
    }

    pub(crate) fn write_config(dir: &Path, config: &CheckpointConfig) -> Result<()> {
        write_json(dir.join(CONFIG_FILE), config)
    }

    pub fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.config.model != kind {
            return Err(Error::config(format!(
                "checkpoint {} holds a {:?} model, not {:?}",
                self.dir.display(),
                self.config.model,
                kind
            )));
        }
        Ok(())
    }
}
