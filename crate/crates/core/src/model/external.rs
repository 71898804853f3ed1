//! Backbone served by a helper process, e.g. a pretrained text-to-text
//! transformer (`scripts/t5_backbone.py`).
//!
//! One JSON request per line, one JSON reply per line:
//!
//! | request                                              | reply                                         |
//! |------------------------------------------------------|-----------------------------------------------|
//! | `{"op":"init","model","seed","load"}`                | `{"id","mask_token","context_limit"}`         |
//! | `{"op":"encode","text"}`                             | `{"hidden": [[f32]]}`                         |
//! | `{"op":"generate","text"}`                           | `{"text"}`                                    |
//! | `{"op":"classify","text"}`                           | `{"logits": [cmp, non_cmp]}`                  |
//! | `{"op":"train_step","batch":[TrainItem],"options"}`  | `{"total","generation","classification"}`     |
//! | `{"op":"save","dir"}`                                | `{}`                                          |
//!
//! Any reply may instead carry `{"error": "..."}`.

use std::path::Path;

use serde::Deserialize;
use serde_json::json;

use super::backbone::{Backbone, StepLoss, StepOptions, TrainItem};
use crate::error::{Error, Result};
use crate::process::JsonLineProcess;

pub struct ExternalBackbone {
    process: JsonLineProcess,
    id: String,
    mask_token: String,
    context_limit: Option<usize>,
}

#[derive(Deserialize)]
struct InitReply {
    id: String,
    #[serde(default)]
    mask_token: Option<String>,
    #[serde(default)]
    context_limit: Option<usize>,
}

#[derive(Deserialize)]
struct HiddenReply {
    hidden: Vec<Vec<f32>>,
}

#[derive(Deserialize)]
struct TextReply {
    text: String,
}

#[derive(Deserialize)]
struct LogitsReply {
    logits: [f32; 2],
}

impl ExternalBackbone {
    pub fn start(program: &str, args: &[String], model: Option<&str>, load: Option<&Path>, seed: u64) -> Result<Self> {
        let process = JsonLineProcess::spawn("backbone", program, args)?;
        let init: InitReply = process.request(&json!({
            "op": "init",
            "model": model,
            "seed": seed,
            "load": load.map(|p| p.display().to_string()),
        }))?;
        Ok(ExternalBackbone {
            process,
            id: init.id,
            mask_token: init.mask_token.unwrap_or_else(|| "<extra_id_0>".into()),
            context_limit: init.context_limit,
        })
    }
}

impl Backbone for ExternalBackbone {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn mask_token(&self) -> &str {
        &self.mask_token
    }

    fn context_limit(&self) -> Option<usize> {
        self.context_limit
    }

    fn encode(&self, text: &str) -> Result<Vec<Vec<f32>>> {
        let r: HiddenReply = self.process.request(&json!({ "op": "encode", "text": text }))?;
        Ok(r.hidden)
    }

    fn generate(&self, text: &str) -> Result<String> {
        let r: TextReply = self.process.request(&json!({ "op": "generate", "text": text }))?;
        Ok(r.text)
    }

    fn classify(&self, text: &str) -> Result<[f32; 2]> {
        let r: LogitsReply = self.process.request(&json!({ "op": "classify", "text": text }))?;
        Ok(r.logits)
    }

    fn train_step(&mut self, batch: &[TrainItem], options: &StepOptions) -> Result<StepLoss> {
        let loss: StepLoss = self.process.request(&json!({ "op": "train_step", "batch": batch, "options": options }))?;
        if !loss.total.is_finite() {
            return Err(Error::Backbone(format!("non-finite training loss {}", loss.total)));
        }
        Ok(loss)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.process.request_value(&json!({ "op": "save", "dir": dir.display().to_string() }))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAKE: &str = r#"
import json, sys
for line in sys.stdin:
    r = json.loads(line)
    op = r["op"]
    if op == "init":
        out = {"id": "fake/" + str(r["model"]), "mask_token": "<X>", "context_limit": 12}
    elif op == "generate":
        out = {"text": r["text"].upper()}
    elif op == "classify":
        out = {"logits": [1.0, 2.0]}
    elif op == "encode":
        out = {"hidden": [[1.0, 0.0]] * len(r["text"].split())}
    elif op == "train_step":
        out = {"total": float(len(r["batch"])), "generation": 0.0, "classification": 0.0}
    elif op == "save":
        open(r["dir"] + "/saved", "w").write("x")
        out = {}
    else:
        out = {"error": "unknown op " + op}
    print(json.dumps(out), flush=True)
"#;

    #[test]
    fn speaks_the_line_protocol() {
        let mut b = ExternalBackbone::start("python3", &["-c".into(), FAKE.into()], Some("t5-small"), None, 0).unwrap();
        assert_eq!(b.id(), "fake/t5-small");
        assert_eq!(b.mask_token(), "<X>");
        assert_eq!(b.context_limit(), Some(12));
        assert_eq!(b.generate("abc").unwrap(), "ABC");
        assert_eq!(b.classify("abc").unwrap(), [1.0, 2.0]);
        assert_eq!(b.encode("a b").unwrap().len(), 2);
        let item = TrainItem { input: "a".into(), target: None, label: None };
        assert_eq!(b.train_step(&[item.clone(), item], &StepOptions::default()).unwrap().total, 2.0);
        let dir = tempfile::tempdir().unwrap();
        b.save(dir.path()).unwrap();
        assert!(dir.path().join("saved").exists());
    }
}
