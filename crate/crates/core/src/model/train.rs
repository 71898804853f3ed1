//! Epoch loop with model selection.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backbone::{Backbone, BackboneSpec, StepOptions, TrainItem};
use super::checkpoint::{EpochLog, TrainConfig, BACKBONE_DIR, LOG_FILE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationScore {
    pub score: f64,
    pub ex_accuracy: Option<f64>,
}

pub(crate) struct TrainOutcome {
    pub backbone: Box<dyn Backbone>,
    pub best_epoch: usize,
    pub best_score: Option<f64>,
}

/// Train for up to `max_epochs`, snapshotting the backbone to
/// `<dir>/backbone` whenever the selection score strictly improves, then
/// restore the best snapshot. With no validator the score is the negated
/// training loss.
pub(crate) fn train_loop(
    spec: &BackboneSpec,
    mut backbone: Box<dyn Backbone>,
    items: &[TrainItem],
    config: &TrainConfig,
    dir: &Path,
    mut validate: Option<&mut dyn FnMut(&dyn Backbone) -> Result<ValidationScore>>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if items.is_empty() {
        return Err(Error::data("training set is empty"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let log_path = dir.join(LOG_FILE);
    let mut log = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;
    let snapshot = dir.join(BACKBONE_DIR);
    let options = StepOptions {
        learning_rate: config.learning_rate,
        generation_weight: config.generation_weight,
        classification_weight: config.classification_weight,
    };
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut best: Option<(usize, f64)> = None;
    for epoch in 1..=config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(1_000_003).wrapping_add(epoch as u64));
        order.shuffle(&mut rng);
        let (mut total, mut generation, mut classification) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<TrainItem> = chunk.iter().map(|&i| items[i].clone()).collect();
            let loss = backbone.train_step(&batch, &options)?;
            total += loss.total;
            generation += loss.generation;
            classification += loss.classification;
        }
        let n = items.len() as f64;
        let val = match validate.as_mut() {
            Some(v) => Some(v(backbone.as_ref())?),
            None => None,
        };
        let score = val.map_or(-total / n, |v| v.score);
        let improved = best.is_none_or(|(_, b)| score > b);
        if improved {
            best = Some((epoch, score));
            backbone.save(&snapshot)?;
        }
        let entry = EpochLog {
            epoch,
            train_loss: total / n,
            generation_loss: generation / n,
            classification_loss: classification / n,
            validation_score: val.map(|v| v.score),
            validation_ex_accuracy: val.and_then(|v| v.ex_accuracy),
            selected: improved,
        };
        log::info!(
            "epoch {epoch}: loss {:.4}{}",
            entry.train_loss,
            entry.validation_score.map(|s| format!(", validation {s:.4}")).unwrap_or_default()
        );
        let line = serde_json::to_string(&entry).map_err(Error::data)?;
        writeln!(log, "{line}").map_err(|e| Error::io(&log_path, e))?;
        if let (Some(p), Some((b, _))) = (config.patience, best) {
            if epoch - b >= p {
                log::info!("no improvement for {p} epochs; stopping");
                break;
            }
        }
    }
    let (best_epoch, best_score) = best.expect("at least one epoch ran");
    drop(backbone);
    let backbone = spec.load(&snapshot)?;
    Ok(TrainOutcome { backbone, best_epoch, best_score: Some(best_score) })
}
