//! UniGen (one text-to-text model) and MtGen (classifier head gating a
//! paraphrase decoder).

use std::path::Path;

use super::backbone::{Backbone, BackboneSpec, TrainItem};
use super::checkpoint::{Checkpoint, CheckpointConfig, ModelKind, TrainConfig};
use super::target::{parse_output, serialize_target};
use super::train::{train_loop, ValidationScore};
use crate::error::{Error, Result};
use crate::eval::{combined_mean, ex_match_stats, NgramMatcher, Pair};
use crate::knowledge::{canonical_sources, stack_prompts, AugmentedInput, KnowledgeProvider, KnowledgeSource};
use crate::types::{Compositionality, DatasetExample, Interpretation, NounCompound};

/// Everything a supervised run needs besides the data.
pub struct TrainSetup<'a> {
    pub knowledge: Vec<KnowledgeSource>,
    pub provider: &'a dyn KnowledgeProvider,
    pub backbone: BackboneSpec,
    pub config: TrainConfig,
}

pub fn build_inputs(
    examples: &[DatasetExample],
    sources: &[KnowledgeSource],
    provider: &dyn KnowledgeProvider,
) -> Result<Vec<AugmentedInput>> {
    examples.iter().map(|ex| Ok(stack_prompts(&ex.compound, sources, provider)?)).collect()
}

fn train_items(kind: ModelKind, examples: &[DatasetExample], inputs: &[AugmentedInput]) -> Vec<TrainItem> {
    examples
        .iter()
        .zip(inputs)
        .map(|(ex, input)| match kind {
            ModelKind::Mtgen => TrainItem {
                input: input.text.clone(),
                target: ex.gold.paraphrase().map(str::to_owned),
                label: Some(ex.gold.label()),
            },
            _ => TrainItem { input: input.text.clone(), target: Some(serialize_target(&ex.compound, &ex.gold)), label: None },
        })
        .collect()
}

/// Predict with a bare backbone; `text` is the serialized input.
pub fn predict_with(kind: ModelKind, backbone: &dyn Backbone, nc: &NounCompound, text: &str) -> Result<Interpretation> {
    match kind {
        ModelKind::Unigen => Ok(parse_output(nc, &backbone.generate(text)?)),
        ModelKind::Mtgen => {
            let [cmp, non_cmp] = backbone.classify(text)?;
            if non_cmp > cmp {
                return Ok(Interpretation::NonCompositional);
            }
            let generated = backbone.generate(text)?;
            let generated = generated.trim();
            if generated.is_empty() {
                log::warn!("empty generation for compositional {nc}; using the compound itself");
                return Ok(Interpretation::Paraphrase(nc.text()));
            }
            Ok(Interpretation::Paraphrase(generated.to_owned()))
        }
        ModelKind::Integration => Err(Error::config("an integration model does not interpret compounds")),
    }
}

/// Sem/Ex-Match (n-gram matcher) and Ex-Match accuracy of `kind` on a set.
pub fn score_on(
    kind: ModelKind,
    backbone: &dyn Backbone,
    examples: &[DatasetExample],
    inputs: &[AugmentedInput],
) -> Result<ValidationScore> {
    let pairs = examples
        .iter()
        .zip(inputs)
        .map(|(ex, input)| Ok((ex.gold.clone(), predict_with(kind, backbone, &ex.compound, &input.text)?)))
        .collect::<Result<Vec<Pair>>>()?;
    let score = combined_mean(&pairs, &NgramMatcher)?
        .value()
        .ok_or_else(|| Error::data("validation score is undefined"))?;
    Ok(ValidationScore { score, ex_accuracy: ex_match_stats(&pairs).accuracy.value() })
}

fn train_supervised(
    kind: ModelKind,
    train: &[DatasetExample],
    val: &[DatasetExample],
    setup: &TrainSetup,
    dir: &Path,
) -> Result<Checkpoint> {
    if train.is_empty() {
        return Err(Error::data("training set is empty"));
    }
    if val.is_empty() {
        return Err(Error::data("validation set is empty"));
    }
    let train_ids: std::collections::HashSet<&str> = train.iter().map(|e| e.id.as_str()).collect();
    if let Some(dup) = val.iter().find(|e| train_ids.contains(e.id.as_str())) {
        return Err(Error::data(format!("example {} is in both the training and validation sets", dup.id)));
    }
    let train_inputs = build_inputs(train, &setup.knowledge, setup.provider)?;
    let val_inputs = build_inputs(val, &setup.knowledge, setup.provider)?;
    let items = train_items(kind, train, &train_inputs);
    let corpus: Vec<String> = items.iter().flat_map(|i| std::iter::once(i.input.clone()).chain(i.target.clone())).collect();
    let backbone = setup.backbone.instantiate(&corpus, setup.config.seed)?;
    let backbone_id = backbone.id();
    let mut validate = |b: &dyn Backbone| score_on(kind, b, val, &val_inputs);
    let outcome = train_loop(&setup.backbone, backbone, &items, &setup.config, dir, Some(&mut validate))?;
    let config = CheckpointConfig {
        model: kind,
        knowledge: canonical_sources(&setup.knowledge),
        train: setup.config.clone(),
        backbone: setup.backbone.clone(),
        backbone_id,
        best_epoch: outcome.best_epoch,
        best_score: outcome.best_score,
        selection: "validation sem/ex-match (ngram)".into(),
    };
    Checkpoint::write_config(dir, &config)?;
    Ok(Checkpoint { dir: dir.to_owned(), config, backbone: outcome.backbone })
}

pub fn unigen_train(train: &[DatasetExample], val: &[DatasetExample], setup: &TrainSetup, dir: &Path) -> Result<Checkpoint> {
    train_supervised(ModelKind::Unigen, train, val, setup, dir)
}

pub fn mtgen_train(train: &[DatasetExample], val: &[DatasetExample], setup: &TrainSetup, dir: &Path) -> Result<Checkpoint> {
    train_supervised(ModelKind::Mtgen, train, val, setup, dir)
}

fn check_sources(ckpt: &Checkpoint, input: &AugmentedInput) -> Result<()> {
    if canonical_sources(&input.sources) != ckpt.config.knowledge {
        return Err(Error::config(format!(
            "checkpoint was trained with knowledge {:?} but the input was built with {:?}",
            ckpt.config.knowledge, input.sources
        )));
    }
    Ok(())
}

pub fn unigen_predict(ckpt: &Checkpoint, nc: &NounCompound, input: &AugmentedInput) -> Result<Interpretation> {
    ckpt.expect_kind(ModelKind::Unigen)?;
    check_sources(ckpt, input)?;
    predict_with(ModelKind::Unigen, ckpt.backbone.as_ref(), nc, &input.text)
}

pub fn mtgen_predict(ckpt: &Checkpoint, nc: &NounCompound, input: &AugmentedInput) -> Result<Interpretation> {
    ckpt.expect_kind(ModelKind::Mtgen)?;
    check_sources(ckpt, input)?;
    predict_with(ModelKind::Mtgen, ckpt.backbone.as_ref(), nc, &input.text)
}

/// Anything that turns a compound into an interpretation.
pub trait Interpreter {
    fn name(&self) -> String;
    fn interpret(&self, nc: &NounCompound) -> Result<Interpretation>;
}

/// A trained checkpoint bound to the knowledge provider that builds its inputs.
pub struct Supervised<'a> {
    pub checkpoint: Checkpoint,
    pub provider: &'a dyn KnowledgeProvider,
}

impl Interpreter for Supervised<'_> {
    fn name(&self) -> String {
        let kind = match self.checkpoint.config.model {
            ModelKind::Unigen => "unigen",
            ModelKind::Mtgen => "mtgen",
            ModelKind::Integration => "integration",
        };
        format!("{kind}+{}", self.checkpoint.config.knowledge.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+"))
    }

    fn interpret(&self, nc: &NounCompound) -> Result<Interpretation> {
        let input = stack_prompts(nc, &self.checkpoint.config.knowledge, self.provider)?;
        predict_with(self.checkpoint.config.model, self.checkpoint.backbone.as_ref(), nc, &input.text)
    }
}

/// Classification accuracy of the MtGen head on a set.
pub fn head_accuracy(backbone: &dyn Backbone, examples: &[DatasetExample], inputs: &[AugmentedInput]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Undefined("head accuracy"));
    }
    let mut correct = 0usize;
    for (ex, input) in examples.iter().zip(inputs) {
        let [cmp, non_cmp] = backbone.classify(&input.text)?;
        let pred = if non_cmp > cmp { Compositionality::NonCmp } else { Compositionality::Cmp };
        correct += usize::from(pred == ex.gold.label());
    }
    Ok(correct as f64 / examples.len() as f64)
}
