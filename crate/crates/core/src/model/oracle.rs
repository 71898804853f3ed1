//! A backbone that memorises answers. Used to check that the training and
//! evaluation harness adds no error of its own.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backbone::{Backbone, StepLoss, StepOptions, TrainItem};
use super::target::serialize_target;
use crate::dataset::{load_dataset, read_json, write_json};
use crate::error::{Error, Result};
use crate::knowledge::{split_segments, SEP};
use crate::types::Compositionality;

const FILE: &str = "oracle.json";

/// Lookup is by full input first, then by the final `[SEP]` segment, so an
/// answer key built from bare compounds also serves knowledge-augmented inputs.
/// Unknown inputs are echoed back.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OracleBackbone {
    answers: BTreeMap<String, String>,
    labels: BTreeMap<String, Compositionality>,
    #[serde(skip)]
    generate_calls: std::sync::Arc<std::sync::atomic::AtomicUsize>,
}

impl OracleBackbone {
    pub fn from_dataset(path: impl AsRef<Path>) -> Result<Self> {
        let mut oracle = OracleBackbone::default();
        for ex in load_dataset(path)? {
            oracle.remember(&ex.compound.text(), Some(&serialize_target(&ex.compound, &ex.gold)), Some(ex.gold.label()));
        }
        Ok(oracle)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        read_json(dir.join(FILE))
    }

    pub fn remember(&mut self, input: &str, target: Option<&str>, label: Option<Compositionality>) {
        if let Some(t) = target {
            self.answers.insert(input.to_owned(), t.to_owned());
        }
        if let Some(l) = label {
            self.labels.insert(input.to_owned(), l);
        }
    }

    /// Number of `generate` calls so far (shared across clones).
    pub fn generate_calls(&self) -> usize {
        self.generate_calls.load(std::sync::atomic::Ordering::SeqCst)
    }

    fn lookup<'a, T>(map: &'a BTreeMap<String, T>, input: &str) -> Option<&'a T> {
        map.get(input).or_else(|| {
            let last = split_segments(input).pop()?;
            if last.len() == input.len() {
                return None;
            }
            map.get(last)
        })
    }
}

impl Backbone for OracleBackbone {
    fn id(&self) -> String {
        format!("oracle/{}", self.answers.len())
    }

    fn encode(&self, text: &str) -> Result<Vec<Vec<f32>>> {
        // A fixed pseudo-random vector per token.
        Ok(text
            .split_whitespace()
            .map(|w| {
                let mut h: u64 = 0xcbf2_9ce4_8422_2325;
                (0..8)
                    .map(|_| {
                        for b in w.bytes() {
                            h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
                        }
                        h = h.rotate_left(13);
                        ((h >> 40) as f32 / (1u64 << 24) as f32) - 0.5
                    })
                    .collect()
            })
            .collect())
    }

    fn generate(&self, text: &str) -> Result<String> {
        self.generate_calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Ok(Self::lookup(&self.answers, text).cloned().unwrap_or_else(|| {
            text.rsplit(SEP).next().unwrap_or(text).to_owned()
        }))
    }

    fn classify(&self, text: &str) -> Result<[f32; 2]> {
        Ok(match Self::lookup(&self.labels, text) {
            Some(Compositionality::NonCmp) => [0.2, 5.0],
            Some(Compositionality::Cmp) => [5.0, 0.2],
            None => [0.0, 0.0],
        })
    }

    fn train_step(&mut self, batch: &[TrainItem], _: &StepOptions) -> Result<StepLoss> {
        let mut missed = 0usize;
        for item in batch {
            if let Some(t) = &item.target {
                if Self::lookup(&self.answers, &item.input) != Some(t) {
                    missed += 1;
                }
            }
            self.remember(&item.input, item.target.as_deref(), item.label);
        }
        Ok(StepLoss { total: missed as f64, generation: missed as f64, classification: 0.0 })
    }

    fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(dir.join(FILE), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memorises_and_falls_back_to_last_segment() {
        let mut o = OracleBackbone::default();
        let item = TrainItem { input: "Covid vaccine".into(), target: Some("Covid vaccine is a vaccine against Covid".into()), label: Some(Compositionality::Cmp) };
        o.train_step(&[item], &StepOptions::default()).unwrap();
        assert_eq!(o.generate("some sentence [SEP] Covid vaccine").unwrap(), "Covid vaccine is a vaccine against Covid");
        assert_eq!(o.classify("Covid vaccine").unwrap(), [5.0, 0.2]);
        assert_eq!(o.generate("unknown thing").unwrap(), "unknown thing");
        assert_eq!(o.generate_calls(), 2);
        let dir = tempfile::tempdir().unwrap();
        o.save(dir.path()).unwrap();
        assert_eq!(OracleBackbone::load(dir.path()).unwrap().answers, o.answers);
    }
}
