//! Open IE augmentation: rewrite a sentence so a compound's implicit
//! relation is explicit, extract from both versions, and move the relation
//! words of the rewritten object back into the relation.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{read_json, read_jsonl};
use crate::detect::{detect_pncs, ParseProvider};
use crate::error::{Error, ProviderError, Result};
use crate::http::JsonHttp;
use crate::knowledge::SEP;
use crate::model::checkpoint::{Checkpoint, CheckpointConfig, ModelKind, TrainConfig};
use crate::model::train::{train_loop, ValidationScore};
use crate::model::{Backbone, BackboneSpec, Interpreter, TrainItem};
use crate::process::JsonLineProcess;
use crate::text;
use crate::types::{Interpretation, NounCompound};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Extraction {
    pub subject: String,
    pub relation: String,
    pub object: String,
    #[serde(default)]
    pub source_sentence: String,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Extraction {
    pub fn new(subject: &str, relation: &str, object: &str, source_sentence: &str) -> Result<Self> {
        let e = Extraction {
            subject: subject.trim().to_owned(),
            relation: relation.trim().to_owned(),
            object: object.trim().to_owned(),
            source_sentence: source_sentence.to_owned(),
            provenance: Provenance::Original,
        };
        if e.subject.is_empty() || e.relation.is_empty() || e.object.is_empty() {
            return Err(Error::data(format!("extraction with an empty field: {e}")));
        }
        Ok(e)
    }
}

impl std::fmt::Display for Extraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}; {}; {})", self.subject, self.relation, self.object)
    }
}

pub trait OpenIEClient: Send + Sync {
    fn extract(&self, sentence: &str) -> Result<Vec<Extraction>, ProviderError>;
}

#[derive(Debug, Clone, Deserialize)]
struct RawTriple {
    subject: String,
    relation: String,
    object: String,
}

fn to_extractions(service: &str, sentence: &str, raw: Vec<RawTriple>) -> Result<Vec<Extraction>, ProviderError> {
    raw.into_iter()
        .map(|t| Extraction::new(&t.subject, &t.relation, &t.object, sentence).map_err(|e| ProviderError::protocol(service, e)))
        .collect()
}

/// Triples keyed by sentence, from a JSON object
/// `{"sentence": [{"subject","relation","object"}, ...]}`. Unknown sentences
/// have no extractions.
#[derive(Debug, Clone, Default)]
pub struct FixtureOpenIE {
    triples: HashMap<String, Vec<(String, String, String)>>,
}

impl FixtureOpenIE {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let raw: HashMap<String, Vec<RawTriple>> = read_json(path)?;
        Ok(FixtureOpenIE {
            triples: raw.into_iter().map(|(k, v)| (k, v.into_iter().map(|t| (t.subject, t.relation, t.object)).collect())).collect(),
        })
    }

    pub fn insert(&mut self, sentence: &str, subject: &str, relation: &str, object: &str) {
        self.triples.entry(sentence.to_owned()).or_default().push((subject.into(), relation.into(), object.into()));
    }
}

impl OpenIEClient for FixtureOpenIE {
    fn extract(&self, sentence: &str) -> Result<Vec<Extraction>, ProviderError> {
        let raw = self.triples.get(sentence).cloned().unwrap_or_default();
        to_extractions(
            "fixture openie",
            sentence,
            raw.into_iter().map(|(subject, relation, object)| RawTriple { subject, relation, object }).collect(),
        )
    }
}

#[derive(Deserialize)]
struct ExtractReply {
    extractions: Vec<RawTriple>,
}

/// POSTs `{"sentence"}` and expects `{"extractions": [{"subject","relation","object"}]}`.
pub struct HttpOpenIE {
    url: String,
    http: JsonHttp,
}

impl HttpOpenIE {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpOpenIE { url: url.into(), http: JsonHttp::new("openie", timeout) }
    }
}

impl OpenIEClient for HttpOpenIE {
    fn extract(&self, sentence: &str) -> Result<Vec<Extraction>, ProviderError> {
        let value = self.http.post(&self.url, &json!({ "sentence": sentence }))?;
        let reply: ExtractReply = serde_json::from_value(value).map_err(|e| ProviderError::protocol("openie", e))?;
        to_extractions("openie", sentence, reply.extractions)
    }
}

/// The same protocol over a child process's stdio, one JSON line each way.
pub struct CommandOpenIE {
    process: JsonLineProcess,
}

impl CommandOpenIE {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        Ok(CommandOpenIE { process: JsonLineProcess::spawn("openie", program, args)? })
    }
}

impl OpenIEClient for CommandOpenIE {
    fn extract(&self, sentence: &str) -> Result<Vec<Extraction>, ProviderError> {
        let reply: ExtractReply = self.process.request(&json!({ "sentence": sentence }))?;
        to_extractions("openie", sentence, reply.extractions)
    }
}

/// A sentence, an interpretation of a compound in it, and the sentence
/// rewritten with the relation made explicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationExample {
    pub sentence: String,
    pub interpretation: String,
    pub target: String,
}

pub fn load_integration_examples(path: impl AsRef<Path>) -> Result<Vec<IntegrationExample>> {
    read_jsonl(path)
}

pub fn integration_input(sentence: &str, interpretation: &str) -> String {
    format!("{sentence}{SEP}{interpretation}")
}

fn integration_items(examples: &[IntegrationExample]) -> Vec<TrainItem> {
    examples
        .iter()
        .map(|e| TrainItem {
            input: integration_input(&e.sentence, &e.interpretation),
            target: Some(e.target.clone()),
            label: None,
        })
        .collect()
}

/// Fraction of examples whose generated rewrite equals the target after
/// whitespace normalisation.
pub fn integration_exact_match(backbone: &dyn Backbone, examples: &[IntegrationExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Undefined("integration exact match"));
    }
    let mut hits = 0usize;
    for e in examples {
        let out = backbone.generate(&integration_input(&e.sentence, &e.interpretation))?;
        hits += usize::from(text::normalize_ws(&out) == text::normalize_ws(&e.target));
    }
    Ok(hits as f64 / examples.len() as f64)
}

/// Train the rewrite model. With a validation set the checkpoint is selected
/// by validation exact match; without one, by training loss.
pub fn train_integration_model(
    examples: &[IntegrationExample],
    validation: Option<&[IntegrationExample]>,
    spec: &BackboneSpec,
    config: &TrainConfig,
    dir: &Path,
) -> Result<Checkpoint> {
    if examples.is_empty() {
        return Err(Error::data("integration training set is empty"));
    }
    if validation.is_some_and(|v| v.is_empty()) {
        return Err(Error::data("validation set is empty"));
    }
    let items = integration_items(examples);
    let corpus: Vec<String> = items.iter().flat_map(|i| [i.input.clone(), i.target.clone().unwrap_or_default()]).collect();
    let backbone = spec.instantiate(&corpus, config.seed)?;
    let backbone_id = backbone.id();
    let mut validate = |b: &dyn Backbone| -> Result<ValidationScore> {
        let score = integration_exact_match(b, validation.unwrap_or_default())?;
        Ok(ValidationScore { score, ex_accuracy: None })
    };
    let validator: Option<&mut dyn FnMut(&dyn Backbone) -> Result<ValidationScore>> =
        if validation.is_some() { Some(&mut validate) } else { None };
    let outcome = train_loop(spec, backbone, &items, config, dir, validator)?;
    let cfg = CheckpointConfig {
        model: ModelKind::Integration,
        knowledge: Vec::new(),
        train: config.clone(),
        backbone: spec.clone(),
        backbone_id,
        best_epoch: outcome.best_epoch,
        best_score: outcome.best_score,
        selection: if validation.is_some() { "validation exact match" } else { "negated training loss" }.into(),
    };
    Checkpoint::write_config(dir, &cfg)?;
    Ok(Checkpoint { dir: dir.to_owned(), config: cfg, backbone: outcome.backbone })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Integrated {
    pub text: String,
    /// The rewrite lost the proper noun; downstream steps skip it.
    pub low_confidence: bool,
}

/// "X y is X y" and similar paraphrases that add no relation words.
fn is_identity(nc: &NounCompound, paraphrase: &str) -> bool {
    let toks = text::tokens(paraphrase.trim().trim_end_matches('.'));
    let c = nc.text();
    let c = text::tokens(&c);
    toks.len() == 2 * c.len() + 1
        && toks[..c.len()] == c[..]
        && matches!(toks[c.len()], "is" | "are")
        && toks[c.len() + 1..] == c[..]
}

pub fn integrate(backbone: &dyn Backbone, nc: &NounCompound, interpretation: &str) -> Result<Integrated> {
    if text::find_chars(&nc.sentence, &nc.text()).is_none() {
        return Err(Error::data(format!("compound {:?} does not occur in {:?}", nc.text(), nc.sentence)));
    }
    if is_identity(nc, interpretation) {
        return Ok(Integrated { text: nc.sentence.clone(), low_confidence: false });
    }
    let out = text::normalize_ws(&backbone.generate(&integration_input(&nc.sentence, interpretation))?);
    let low_confidence = !text::tokens(&out).contains(&nc.proper_noun.as_str());
    if low_confidence {
        log::warn!("rewrite of {:?} lost the proper noun {:?}: {out:?}", nc.sentence, nc.proper_noun);
    }
    Ok(Integrated { text: out, low_confidence })
}

/// Move the words before the proper noun in the rewritten object into the
/// relation. Applies only when the original object starts with the compound
/// and the rewritten object holds the proper noun after position 0.
pub fn postprocess(original: &Extraction, integrated: &Extraction, nc: &NounCompound) -> Option<Extraction> {
    let orig = text::tokens(&original.object);
    if orig.len() < 2 || orig[0] != nc.proper_noun || orig[1] != nc.common_noun {
        return None;
    }
    let obj = text::tokens(&integrated.object);
    let k = obj.iter().position(|&t| t == nc.proper_noun)?;
    if k == 0 {
        return None;
    }
    let mut relation = text::tokens(&integrated.relation);
    relation.extend_from_slice(&obj[..k]);
    Some(Extraction {
        subject: integrated.subject.clone(),
        relation: relation.join(" "),
        object: obj[k..].join(" "),
        source_sentence: original.source_sentence.clone(),
        provenance: Provenance::Augmented,
    })
}

fn overlap(a: &str, b: &str) -> usize {
    let b = text::tokens(b);
    text::tokens(a).iter().filter(|t| b.contains(t)).count()
}

/// Pair each original with an unused integrated extraction that has the
/// identical subject, preferring the largest relation token overlap (earliest
/// on ties). Unmatched integrated extractions are dropped.
pub fn align<'a>(originals: &'a [Extraction], integrated: &'a [Extraction]) -> Vec<(&'a Extraction, &'a Extraction)> {
    let mut used = vec![false; integrated.len()];
    let mut out = Vec::new();
    for o in originals {
        let best = integrated
            .iter()
            .enumerate()
            .filter(|(i, e)| !used[*i] && e.subject == o.subject)
            .max_by(|(i, a), (j, b)| overlap(&o.relation, &a.relation).cmp(&overlap(&o.relation, &b.relation)).then(j.cmp(i)));
        if let Some((i, e)) = best {
            used[i] = true;
            out.push((o, e));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSentence {
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldReport {
    pub sentences: usize,
    pub compounds: usize,
    pub compositional: usize,
    pub low_confidence: usize,
    pub originals: usize,
    pub augmented: usize,
    /// augmented / originals × 100; undefined with no originals.
    pub yield_increase_percent: Option<f64>,
    pub skipped: Vec<SkippedSentence>,
}

pub struct Augmentation {
    /// Originals then augmented extractions, per sentence in input order.
    pub extractions: Vec<Extraction>,
    pub report: YieldReport,
}

impl Augmentation {
    pub fn augmented(&self) -> impl Iterator<Item = &Extraction> {
        self.extractions.iter().filter(|e| e.provenance == Provenance::Augmented)
    }

    /// Up to `n` augmented extractions drawn without replacement, for a
    /// manual precision audit.
    pub fn audit_sample(&self, n: usize, seed: u64) -> Vec<Extraction> {
        let pool: Vec<&Extraction> = self.augmented().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, pool.len(), n.min(pool.len())).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i].clone()).collect()
    }
}

pub struct Pipeline<'a> {
    pub parser: &'a dyn ParseProvider,
    pub openie: &'a dyn OpenIEClient,
    pub interpreter: &'a dyn Interpreter,
    pub integrator: &'a dyn Backbone,
}

struct SentenceOutcome {
    originals: Vec<Extraction>,
    augmented: Vec<Extraction>,
    compounds: usize,
    compositional: usize,
    low_confidence: usize,
}

impl Pipeline<'_> {
    fn sentence(&self, sentence: &str) -> Result<SentenceOutcome> {
        let parsed = self.parser.parse(sentence)?;
        let originals = self.openie.extract(sentence)?;
        let mut out = SentenceOutcome { originals, augmented: Vec::new(), compounds: 0, compositional: 0, low_confidence: 0 };
        // One pass per compound, each against the original sentence.
        for nc in detect_pncs(&parsed) {
            out.compounds += 1;
            let Interpretation::Paraphrase(paraphrase) = self.interpreter.interpret(&nc)? else {
                continue;
            };
            out.compositional += 1;
            let integrated = integrate(self.integrator, &nc, &paraphrase)?;
            if integrated.low_confidence {
                out.low_confidence += 1;
                continue;
            }
            if integrated.text == sentence {
                continue;
            }
            let rewritten = self.openie.extract(&integrated.text)?;
            for (o, i) in align(&out.originals, &rewritten) {
                if let Some(mut e) = postprocess(o, i, &nc) {
                    e.source_sentence = sentence.to_owned();
                    if !out.augmented.contains(&e) && !out.originals.iter().any(|x| x.subject == e.subject && x.relation == e.relation && x.object == e.object) {
                        out.augmented.push(e);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Run the whole corpus. A sentence whose parser, extractor, interpreter
    /// or integration step fails is skipped and recorded.
    pub fn augment_corpus<S: AsRef<str>>(&self, sentences: &[S]) -> Augmentation {
        let mut extractions = Vec::new();
        let mut report = YieldReport {
            sentences: sentences.len(),
            compounds: 0,
            compositional: 0,
            low_confidence: 0,
            originals: 0,
            augmented: 0,
            yield_increase_percent: None,
            skipped: Vec::new(),
        };
        for (position, s) in sentences.iter().enumerate() {
            match self.sentence(s.as_ref()) {
                Ok(o) => {
                    report.compounds += o.compounds;
                    report.compositional += o.compositional;
                    report.low_confidence += o.low_confidence;
                    report.originals += o.originals.len();
                    report.augmented += o.augmented.len();
                    extractions.extend(o.originals);
                    extractions.extend(o.augmented);
                }
                Err(e) => {
                    log::warn!("skipping sentence {position}: {e}");
                    report.skipped.push(SkippedSentence { position, reason: e.to_string() });
                }
            }
        }
        if report.originals > 0 {
            report.yield_increase_percent = Some(100.0 * report.augmented as f64 / report.originals as f64);
        }
        Augmentation { extractions, report }
    }
}
