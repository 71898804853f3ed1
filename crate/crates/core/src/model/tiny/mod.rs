//! A small pointer-generator encoder-decoder for desk-scale training.
//!
//! One pre-norm encoder layer and one decoder layer. Output logits are the
//! tied word embeddings plus pointer scores against the last `copy_window`
//! encoder states, so words can be copied from the input whether or not
//! they are in the vocabulary. Training maximises the total probability of
//! every id that spells the gold word; decoding sums probability per word.

pub mod head;
pub mod nn;
pub mod vocab;

use std::path::Path;

use candle_core::{Device, Tensor, D};
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use serde::{Deserialize, Serialize};

use super::backbone::{Backbone, StepLoss, StepOptions, TrainItem};
use crate::dataset::{read_json, write_json};
use crate::error::{Error, Result};
use head::ClassifierHead;
use nn::{causal_mask, layer_norm, linear, log_sum_exp, seed_rng, Params};
use vocab::{Vocab, BOS, EOS, MASK, PAD, SPECIALS, UNK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TinyConfig {
    pub d_model: usize,
    pub heads: usize,
    pub ffn: usize,
    /// Longer inputs keep their last `max_input` tokens.
    pub max_input: usize,
    pub max_output: usize,
    pub copy_window: usize,
    pub max_vocab: usize,
}

impl Default for TinyConfig {
    fn default() -> Self {
        TinyConfig { d_model: 96, heads: 4, ffn: 192, max_input: 320, max_output: 64, copy_window: 64, max_vocab: 30_000 }
    }
}

pub struct TinyBackbone {
    config: TinyConfig,
    vocab: Vocab,
    params: Params,
    optimizer: Option<AdamW>,
}

const WEIGHTS: &str = "weights.safetensors";
const HEAD: &str = "head.safetensors";
const VOCAB: &str = "vocab.json";
const CONFIG: &str = "tiny.json";

impl TinyBackbone {
    pub fn new<'a>(config: TinyConfig, corpus: impl IntoIterator<Item = &'a str>, seed: u64) -> Result<Self> {
        if config.d_model == 0 || config.heads == 0 || config.d_model % config.heads != 0 {
            return Err(Error::config(format!("d_model {} must be a positive multiple of heads {}", config.d_model, config.heads)));
        }
        let vocab = Vocab::build(corpus, config.max_vocab, config.copy_window);
        let mut rng = seed_rng(seed);
        let mut p = Params::default();
        let (d, f) = (config.d_model, config.ffn);
        let emb_std = 1.0 / (d as f64).sqrt();
        p.normal("emb", &[vocab.output_size(), d], emb_std, &mut rng)?;
        p.normal("enc.pos", &[config.max_input, d], emb_std, &mut rng)?;
        p.normal("enc.rpos", &[config.max_input, d], emb_std, &mut rng)?;
        p.normal("dec.pos", &[config.max_output + 1, d], emb_std, &mut rng)?;
        for attn in ["enc.attn", "dec.self", "dec.cross"] {
            for w in ["q", "k", "v", "o"] {
                p.dense(&format!("{attn}.{w}"), d, d, &mut rng)?;
            }
        }
        for ff in ["enc.ff", "dec.ff"] {
            p.dense(&format!("{ff}.w1"), d, f, &mut rng)?;
            p.constant(&format!("{ff}.b1"), &[f], 0.0)?;
            p.dense(&format!("{ff}.w2"), f, d, &mut rng)?;
            p.constant(&format!("{ff}.b2"), &[d], 0.0)?;
        }
        for ln in ["enc.ln1", "enc.ln2", "enc.lnf", "dec.ln1", "dec.ln2", "dec.ln3", "dec.lnf"] {
            p.layer_norm(ln, d)?;
        }
        p.dense("ptr", d, d, &mut rng)?;
        ClassifierHead::init(&mut p, d, &mut rng)?;
        Ok(TinyBackbone { config, vocab, params: p, optimizer: None })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config: TinyConfig = read_json(dir.join(CONFIG))?;
        let mut vocab: Vocab = read_json(dir.join(VOCAB))?;
        vocab.reindex();
        let mut params = Params::default();
        params.load_into(&dir.join(WEIGHTS))?;
        params.load_into(&dir.join(HEAD))?;
        params.require(&ClassifierHead::names())?;
        params.require(&["emb".to_owned(), "ptr".to_owned()])?;
        Ok(TinyBackbone { config, vocab, params, optimizer: None })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn p(&self, name: &str) -> &Tensor {
        self.params.get(name)
    }

    fn input_tokens<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.is_empty() {
            return vec![SPECIALS[UNK as usize]];
        }
        let start = toks.len().saturating_sub(self.config.max_input);
        toks[start..].to_vec()
    }

    fn ids(ids: &[u32]) -> Result<Tensor> {
        Ok(Tensor::new(ids, &Device::Cpu)?)
    }

    fn attention(&self, prefix: &str, x: &Tensor, kv: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let (h, d) = (self.config.heads, self.config.d_model);
        let dh = d / h;
        let split = |t: Tensor| -> Result<Tensor> {
            let n = t.dim(0)?;
            Ok(t.reshape((n, h, dh))?.transpose(0, 1)?.contiguous()?)
        };
        let q = split(x.matmul(self.p(&format!("{prefix}.q")))?)?;
        let k = split(kv.matmul(self.p(&format!("{prefix}.k")))?)?;
        let v = split(kv.matmul(self.p(&format!("{prefix}.v")))?)?;
        let mut scores = (q.matmul(&k.t()?.contiguous()?)? * (1.0 / (dh as f64).sqrt()))?;
        if let Some(m) = mask {
            scores = scores.broadcast_add(m)?;
        }
        let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
        let out = probs.matmul(&v)?.transpose(0, 1)?.contiguous()?.reshape((x.dim(0)?, d))?;
        Ok(out.matmul(self.p(&format!("{prefix}.o")))?)
    }

    fn feed_forward(&self, prefix: &str, x: &Tensor) -> Result<Tensor> {
        let h = linear(x, self.p(&format!("{prefix}.w1")), Some(self.p(&format!("{prefix}.b1"))))?.gelu()?;
        linear(&h, self.p(&format!("{prefix}.w2")), Some(self.p(&format!("{prefix}.b2"))))
    }

    fn ln(&self, prefix: &str, x: &Tensor) -> Result<Tensor> {
        layer_norm(x, self.p(&format!("{prefix}.g")), self.p(&format!("{prefix}.b")))
    }

    /// Encoder states `[n, d]`.
    fn encode_ids(&self, ids: &[u32]) -> Result<Tensor> {
        let n = ids.len();
        let rev: Vec<u32> = (0..n as u32).rev().collect();
        let x = self
            .p("emb")
            .index_select(&Self::ids(ids)?, 0)?
            .add(&self.p("enc.pos").narrow(0, 0, n)?)?
            .add(&self.p("enc.rpos").index_select(&Self::ids(&rev)?, 0)?)?;
        let a = self.ln("enc.ln1", &x)?;
        let x = (&x + self.attention("enc.attn", &a, &a, None)?)?;
        let x = (&x + self.feed_forward("enc.ff", &self.ln("enc.ln2", &x)?)?)?;
        self.ln("enc.lnf", &x)
    }

    /// Output logits `[t, words + copy_window]` for decoder inputs `dec_in`.
    fn decode_logits(&self, enc: &Tensor, dec_in: &[u32]) -> Result<Tensor> {
        let t = dec_in.len();
        let x = self.p("emb").index_select(&Self::ids(dec_in)?, 0)?.add(&self.p("dec.pos").narrow(0, 0, t)?)?;
        let a = self.ln("dec.ln1", &x)?;
        let x = (&x + self.attention("dec.self", &a, &a, Some(&causal_mask(t)?))?)?;
        let x = (&x + self.attention("dec.cross", &self.ln("dec.ln2", &x)?, enc, None)?)?;
        let x = (&x + self.feed_forward("dec.ff", &self.ln("dec.ln3", &x)?)?)?;
        let h = self.ln("dec.lnf", &x)?;

        let words = self.vocab.size();
        let word_logits = h.matmul(&self.p("emb").narrow(0, 0, words)?.t()?)?;
        let n = enc.dim(0)?;
        let m = n.min(self.config.copy_window);
        let rev: Vec<u32> = (0..m).map(|k| (n - 1 - k) as u32).collect();
        let slots = enc.index_select(&Self::ids(&rev)?, 0)?;
        let scale = 1.0 / (self.config.d_model as f64).sqrt();
        let ptr = (h.matmul(self.p("ptr"))?.matmul(&slots.t()?)? * scale)?;
        let mut parts = vec![word_logits, ptr];
        if m < self.config.copy_window {
            parts.push(Tensor::full(-1e9f32, (t, self.config.copy_window - m), &Device::Cpu)?);
        }
        Ok(Tensor::cat(&parts, 1)?)
    }

    fn generation_loss(&self, tokens: &[&str], enc: &Tensor, target: &str) -> Result<Tensor> {
        let words: Vec<&str> = target.split_whitespace().take(self.config.max_output).collect();
        let mut dec_in = vec![BOS];
        dec_in.extend(words.iter().map(|w| self.vocab.canonical_id(tokens, w)));
        let t = dec_in.len();
        let v = self.vocab.output_size();
        // Additive mask selecting the ids that spell each gold word.
        let mut mask = vec![-1e9f32; t * v];
        for (row, w) in words.iter().enumerate() {
            for id in self.vocab.valid_ids(tokens, w) {
                mask[row * v + id as usize] = 0.0;
            }
        }
        mask[(t - 1) * v + EOS as usize] = 0.0;
        let mask = Tensor::from_vec(mask, (t, v), &Device::Cpu)?;
        let log_probs = candle_nn::ops::log_softmax(&self.decode_logits(enc, &dec_in)?, D::Minus1)?;
        let gold = log_sum_exp(&log_probs.add(&mask)?)?;
        Ok(gold.mean_all()?.neg()?)
    }

    fn classification_loss(&self, enc: &Tensor, label: usize) -> Result<Tensor> {
        let logits = ClassifierHead::forward(&self.params, enc)?;
        let log_probs = candle_nn::ops::log_softmax(&logits, D::Minus1)?;
        let target = Tensor::new(&[label as u32], &Device::Cpu)?;
        Ok(candle_nn::loss::nll(&log_probs, &target)?)
    }

    fn encode_text(&self, text: &str) -> Result<(Vec<String>, Tensor)> {
        let tokens = self.input_tokens(text);
        let enc = self.encode_ids(&self.vocab.encode_input(&tokens))?;
        Ok((tokens.into_iter().map(str::to_owned).collect(), enc))
    }
}

impl Backbone for TinyBackbone {
    fn id(&self) -> String {
        let c = &self.config;
        format!("tiny-pointer-seq2seq/d{}-h{}-f{}-v{}", c.d_model, c.heads, c.ffn, self.vocab.size())
    }

    fn mask_token(&self) -> &str {
        SPECIALS[MASK as usize]
    }

    fn context_limit(&self) -> Option<usize> {
        Some(self.config.max_input)
    }

    fn encode(&self, text: &str) -> Result<Vec<Vec<f32>>> {
        Ok(self.encode_text(text)?.1.to_vec2::<f32>()?)
    }

    fn generate(&self, text: &str) -> Result<String> {
        let (tokens, enc) = self.encode_text(text)?;
        let tokens: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let words = self.vocab.size();
        let mut dec_in = vec![BOS];
        let mut out: Vec<&str> = Vec::new();
        for _ in 0..self.config.max_output {
            let logits = self.decode_logits(&enc, &dec_in)?;
            let last = logits.narrow(0, dec_in.len() - 1, 1)?.squeeze(0)?;
            let probs = candle_nn::ops::softmax(&last, 0)?.to_vec1::<f32>()?;
            // Total probability per surface word. Copy mass goes to the word id
            // when the copied word is known, otherwise to its own entry.
            let mut known = probs[..words].to_vec();
            known[PAD as usize] = f32::NEG_INFINITY;
            known[BOS as usize] = f32::NEG_INFINITY;
            let mut unknown: Vec<(&str, f32)> = Vec::new();
            let n = tokens.len();
            for k in 0..n.min(self.config.copy_window) {
                let (w, p) = (tokens[n - 1 - k], probs[words + k]);
                match self.vocab.id(w) {
                    Some(id) => known[id as usize] += p,
                    None => match unknown.iter_mut().find(|(x, _)| *x == w) {
                        Some(e) => e.1 += p,
                        None => unknown.push((w, p)),
                    },
                }
            }
            let best_known = nn::argmax(&known);
            let best_unknown = unknown.iter().fold(None::<(&str, f32)>, |acc, e| match acc {
                Some(a) if a.1 >= e.1 => Some(a),
                _ => Some(*e),
            });
            let word = match best_unknown {
                Some((w, p)) if p > known[best_known] => w,
                _ => self.vocab.word(best_known as u32).unwrap_or(SPECIALS[UNK as usize]),
            };
            if word == SPECIALS[EOS as usize] {
                break;
            }
            out.push(word);
            dec_in.push(self.vocab.canonical_id(&tokens, word));
        }
        Ok(out.join(" "))
    }

    fn classify(&self, text: &str) -> Result<[f32; 2]> {
        let (_, enc) = self.encode_text(text)?;
        ClassifierHead::logits(&self.params, &enc)
    }

    fn train_step(&mut self, batch: &[TrainItem], options: &StepOptions) -> Result<StepLoss> {
        let mut terms: Vec<Tensor> = Vec::new();
        let (mut gen_sum, mut cls_sum) = (0.0, 0.0);
        for item in batch {
            let tokens = self.input_tokens(&item.input);
            let enc = self.encode_ids(&self.vocab.encode_input(&tokens))?;
            if let (Some(target), true) = (&item.target, options.generation_weight > 0.0) {
                let loss = self.generation_loss(&tokens, &enc, target)?;
                gen_sum += loss.to_scalar::<f32>()? as f64;
                terms.push((loss * options.generation_weight)?);
            }
            if let (Some(label), true) = (item.label, options.classification_weight > 0.0) {
                let loss = self.classification_loss(&enc, label.index())?;
                cls_sum += loss.to_scalar::<f32>()? as f64;
                terms.push((loss * options.classification_weight)?);
            }
        }
        if terms.is_empty() {
            return Ok(StepLoss::default());
        }
        let total = Tensor::stack(&terms, 0)?.sum_all()?;
        let value = total.to_scalar::<f32>()? as f64;
        if !value.is_finite() {
            return Err(Error::Backbone(format!("non-finite training loss {value}")));
        }
        let lr = options.learning_rate;
        let opt = match &mut self.optimizer {
            Some(opt) => {
                opt.set_learning_rate(lr);
                opt
            }
            None => {
                let cfg = ParamsAdamW { lr, weight_decay: 0.0, ..Default::default() };
                self.optimizer.insert(AdamW::new(self.params.vars(), cfg)?)
            }
        };
        opt.backward_step(&total)?;
        Ok(StepLoss { total: value, generation: gen_sum, classification: cls_sum })
    }

    fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.params.save(&dir.join(WEIGHTS), |n| !n.starts_with(ClassifierHead::PREFIX))?;
        self.params.save(&dir.join(HEAD), |n| n.starts_with(ClassifierHead::PREFIX))?;
        write_json(dir.join(VOCAB), &self.vocab)?;
        write_json(dir.join(CONFIG), &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Compositionality;

    fn small() -> TinyConfig {
        TinyConfig { d_model: 32, heads: 2, ffn: 64, max_input: 64, max_output: 16, copy_window: 16, max_vocab: 1000 }
    }

    #[test]
    fn untrained_model_generates_something_and_finite_logits() {
        let m = TinyBackbone::new(small(), ["London theatre is a theatre in London"], 0).unwrap();
        let out = m.generate("Paris museum").unwrap();
        assert!(out.split_whitespace().count() <= 16);
        assert!(m.classify("").unwrap().iter().all(|v| v.is_finite()));
        assert_eq!(m.encode("a b c").unwrap().len(), 3);
    }

    #[test]
    fn learns_to_copy_a_pair() {
        let mut m = TinyBackbone::new(small(), ["is a in"], 1).unwrap();
        let batch = vec![
            TrainItem { input: "London theatre".into(), target: Some("London theatre is a theatre in London".into()), label: Some(Compositionality::Cmp) },
            TrainItem { input: "Paris museum".into(), target: Some("Paris museum is a museum in Paris".into()), label: Some(Compositionality::Cmp) },
        ];
        let opts = StepOptions { learning_rate: 1e-2, ..Default::default() };
        let first = m.train_step(&batch, &opts).unwrap();
        let mut last = first;
        for _ in 0..60 {
            last = m.train_step(&batch, &opts).unwrap();
        }
        assert!(last.total < first.total * 0.2, "{first:?} -> {last:?}");
        // Copy slots generalise to unseen words.
        assert_eq!(m.generate("Tokyo office").unwrap(), "Tokyo office is a office in Tokyo");
    }

    #[test]
    fn save_load_round_trip() {
        let m = TinyBackbone::new(small(), ["a b c"], 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = TinyBackbone::load(dir.path()).unwrap();
        assert_eq!(back.generate("a b").unwrap(), m.generate("a b").unwrap());
        assert_eq!(back.classify("a b").unwrap(), m.classify("a b").unwrap());
        assert_eq!(back.id(), m.id());
    }

    #[test]
    fn same_seed_same_weights() {
        let a = TinyBackbone::new(small(), ["x y"], 9).unwrap();
        let b = TinyBackbone::new(small(), ["x y"], 9).unwrap();
        assert_eq!(a.encode("x y").unwrap(), b.encode("x y").unwrap());
    }
}
