//! The sequence-to-sequence backbone abstraction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::external::ExternalBackbone;
use super::oracle::OracleBackbone;
use super::tiny::{TinyBackbone, TinyConfig};
use crate::error::{Error, Result};
use crate::types::Compositionality;

/// One training example. A backbone computes a generation loss when
/// `target` is set and a classification loss when `label` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainItem {
    pub input: String,
    pub target: Option<String>,
    pub label: Option<Compositionality>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub learning_rate: f64,
    pub generation_weight: f64,
    pub classification_weight: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { learning_rate: 2e-5, generation_weight: 1.0, classification_weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub total: f64,
    pub generation: f64,
    pub classification: f64,
}

pub trait Backbone: Send {
    /// Implementation name and size, recorded in checkpoints and reports.
    fn id(&self) -> String;

    /// Single-slot infill token used by zero-shot templates.
    fn mask_token(&self) -> &str {
        "<extra_id_0>"
    }

    /// Maximum input length in whitespace tokens, if bounded.
    fn context_limit(&self) -> Option<usize> {
        None
    }

    /// Encoder hidden states, one vector per input position.
    fn encode(&self, text: &str) -> Result<Vec<Vec<f32>>>;

    /// Greedy decoding.
    fn generate(&self, text: &str) -> Result<String>;

    /// (compositional, non-compositional) logits of the classification head.
    fn classify(&self, text: &str) -> Result<[f32; 2]>;

    fn train_step(&mut self, batch: &[TrainItem], options: &StepOptions) -> Result<StepLoss>;

    fn save(&self, dir: &Path) -> Result<()>;
}

/// How to build or restore a backbone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackboneSpec {
    /// Small randomly initialised encoder-decoder trained from scratch.
    Tiny(TinyConfig),
    /// Memorises answers; optionally preloaded from a dataset file.
    Oracle {
        #[serde(default)]
        answer_key: Option<PathBuf>,
    },
    /// A model served by a helper process speaking JSON lines.
    External {
        program: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default)]
        model: Option<String>,
    },
}

impl Default for BackboneSpec {
    fn default() -> Self {
        BackboneSpec::Tiny(TinyConfig::default())
    }
}

impl BackboneSpec {
    /// Fresh backbone. `corpus` is the text the model will see, used by
    /// backbones that build their vocabulary from data.
    pub fn instantiate(&self, corpus: &[String], seed: u64) -> Result<Box<dyn Backbone>> {
        Ok(match self {
            BackboneSpec::Tiny(cfg) => Box::new(TinyBackbone::new(cfg.clone(), corpus.iter().map(String::as_str), seed)?),
            BackboneSpec::Oracle { answer_key } => Box::new(match answer_key {
                Some(path) => OracleBackbone::from_dataset(path)?,
                None => OracleBackbone::default(),
            }),
            BackboneSpec::External { program, args, model } => {
                Box::new(ExternalBackbone::start(program, args, model.as_deref(), None, seed)?)
            }
        })
    }

    /// Restore a backbone saved with [`Backbone::save`].
    pub fn load(&self, dir: &Path) -> Result<Box<dyn Backbone>> {
        if !dir.is_dir() {
            return Err(Error::data(format!("no backbone directory at {}", dir.display())));
        }
        Ok(match self {
            BackboneSpec::Tiny(_) => Box::new(TinyBackbone::load(dir)?),
            BackboneSpec::Oracle { .. } => Box::new(OracleBackbone::load(dir)?),
            BackboneSpec::External { program, args, model } => {
                Box::new(ExternalBackbone::start(program, args, model.as_deref(), Some(dir), 0)?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackboneSpec::Tiny(_) => "tiny",
            BackboneSpec::Oracle { .. } => "oracle",
            BackboneSpec::External { .. } => "external",
        }
    }
}
