//! Multi-seed experiments over models and knowledge settings.
//!
//! Run directory:
//!
//! ```text
//! <output>/<name>/config.json
//! <output>/<name>/runs/<setting>/seed-<s>/{checkpoint/, predictions.jsonl, eval.json}
//! <output>/<name>/report.json
//! <output>/<name>/table.txt
//! ```
//!
//! `report.json` is rewritten after every seed, so a failed run keeps what
//! it finished.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{MatcherSpec, ProviderConfig};
use crate::dataset::{load_dataset, write_json, write_predictions, PredictionRecord, SplitManifest, Splits};
use crate::error::{Error, Result};
use crate::eval::{evaluate, paired_t_test, stable_mean, EvalReport, SemanticMatcher, Stat, TTest};
use crate::fewshot::{BackboneEmbedder, DemoSelector, Embedder, FewShot, FixtureEmbedder, KnnIndex, ZeroShot};
use crate::knowledge::{KnowledgeProvider, KnowledgeSource};
use crate::model::{mtgen_train, unigen_train, Backbone, BackboneSpec, Interpreter, Supervised, TrainConfig, TrainSetup};
use crate::split::{split, SplitSpec};
use crate::types::DatasetExample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentModel {
    Mtgen,
    Unigen,
    Zeroshot,
    Fewshot,
}

impl ExperimentModel {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentModel::Mtgen => "mtgen",
            ExperimentModel::Unigen => "unigen",
            ExperimentModel::Zeroshot => "zeroshot",
            ExperimentModel::Fewshot => "fewshot",
        }
    }

    fn supervised(self) -> bool {
        matches!(self, ExperimentModel::Mtgen | ExperimentModel::Unigen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorChoice {
    Random,
    Knn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FewShotConfig {
    pub k: usize,
    pub selector: SelectorChoice,
    /// Fixture embeddings (text → vector); otherwise the backbone's mean
    /// encoder state.
    pub embeddings: Option<PathBuf>,
}

impl Default for FewShotConfig {
    fn default() -> Self {
        FewShotConfig { k: 10, selector: SelectorChoice::Knn, embeddings: None }
    }
}

/// Either a saved manifest or a spec to generate splits from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub manifest: Option<PathBuf>,
    pub spec: SplitSpec,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { manifest: None, spec: SplitSpec::disjoint([0.7, 0.1, 0.2], 0) }
    }
}

/// Cap on split sizes for reduced-scale runs; the first examples are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subset {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_output() -> PathBuf {
    PathBuf::from("runs")
}
fn default_models() -> Vec<ExperimentModel> {
    vec![ExperimentModel::Unigen]
}
fn default_knowledge() -> Vec<String> {
    vec!["none".into()]
}
fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}
fn default_matchers() -> Vec<MatcherSpec> {
    vec![MatcherSpec::Ngram]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub data: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_models")]
    pub models: Vec<ExperimentModel>,
    /// Knowledge settings; each is a source name or several joined by '+'.
    #[serde(default = "default_knowledge")]
    pub knowledge: Vec<String>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub subset: Option<Subset>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub backbone: BackboneSpec,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_matchers")]
    pub matchers: Vec<MatcherSpec>,
    #[serde(default)]
    pub providers: ProviderConfig,
    #[serde(default)]
    pub fewshot: FewShotConfig,
    /// Two setting names to compare with a paired t-test.
    #[serde(default)]
    pub compare: Option<[String; 2]>,
}

pub fn parse_knowledge_setting(setting: &str) -> Result<Vec<KnowledgeSource>> {
    setting.split('+').map(|s| KnowledgeSource::from_str(s.trim())).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(Error::config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        if self.models.is_empty() {
            return Err(Error::config("models must not be empty"));
        }
        if self.matchers.is_empty() {
            return Err(Error::config("at least one matcher is required"));
        }
        if !self.data.exists() {
            return Err(Error::config(format!("data file {} does not exist", self.data.display())));
        }
        if let Some(m) = &self.split.manifest {
            if !m.exists() {
                return Err(Error::config(format!("split manifest {} does not exist", m.display())));
            }
        }
        for k in &self.knowledge {
            parse_knowledge_setting(k)?;
        }
        self.train.validate()?;
        if let Some([a, b]) = &self.compare {
            let names: Vec<String> = self.settings().into_iter().map(|s| s.name).collect();
            for n in [a, b] {
                if !names.contains(n) {
                    return Err(Error::config(format!("compare names unknown setting {n:?}; settings are {names:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output.join(&self.name)
    }

    /// Model × knowledge combinations. Zero- and few-shot use no knowledge
    /// and appear once.
    pub fn settings(&self) -> Vec<Setting> {
        let mut out = Vec::new();
        for &model in &self.models {
            if model.supervised() {
                for k in &self.knowledge {
                    out.push(Setting { name: format!("{}/{k}", model.as_str()), model, knowledge: k.clone() });
                }
            } else {
                let name = match model {
                    ExperimentModel::Fewshot => format!(
                        "fewshot-{}-{}",
                        match self.fewshot.selector {
                            SelectorChoice::Random => "random",
                            SelectorChoice::Knn => "knn",
                        },
                        self.fewshot.k
                    ),
                    _ => model.as_str().to_owned(),
                };
                out.push(Setting { name, model, knowledge: "none".into() });
            }
        }
        out
    }

    pub fn load_splits(&self) -> Result<Splits> {
        let data = load_dataset(&self.data)?;
        let mut splits = match &self.split.manifest {
            Some(path) => SplitManifest::load(path)?.apply(&data)?,
            None => split(&data, &self.split.spec)?,
        };
        if let Some(s) = self.subset {
            splits.train.truncate(s.train);
            splits.validation.truncate(s.validation);
            splits.test.truncate(s.test);
        }
        Ok(splits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Setting {
    pub name: String,
    pub model: ExperimentModel,
    pub knowledge: String,
}

impl Setting {
    fn slug(&self) -> String {
        self.name.replace(['/', '+'], "_")
    }
}

/// Table columns, as percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ex_precision: Option<f64>,
    pub ex_recall: Option<f64>,
    pub ex_accuracy: Option<f64>,
    pub sem_match: Option<f64>,
    pub sem_ex_match: Option<f64>,
}

impl Metrics {
    pub const COLUMNS: [&'static str; 5] = ["Ex-P", "Ex-R", "Ex-Acc", "Sem", "Sem/Ex"];

    pub fn from_report(report: &EvalReport) -> Self {
        let pct = |s: Stat| s.value().map(|v| 100.0 * v);
        let first = report.matchers.first();
        Metrics {
            ex_precision: pct(report.ex_precision),
            ex_recall: pct(report.ex_recall),
            ex_accuracy: pct(report.ex_accuracy),
            sem_match: first.and_then(|m| pct(m.sem_mean)),
            sem_ex_match: first.and_then(|m| pct(m.combined_mean)),
        }
    }

    pub fn values(&self) -> [Option<f64>; 5] {
        [self.ex_precision, self.ex_recall, self.ex_accuracy, self.sem_match, self.sem_ex_match]
    }

    fn from_values(v: [Option<f64>; 5]) -> Self {
        Metrics { ex_precision: v[0], ex_recall: v[1], ex_accuracy: v[2], sem_match: v[3], sem_ex_match: v[4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub setting: String,
    pub seed: u64,
    pub metrics: Metrics,
    pub report: EvalReport,
    pub backbone_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettingSummary {
    pub setting: Setting,
    pub seeds: usize,
    pub mean: Metrics,
    /// Sample standard deviation (n - 1); absent with a single seed.
    pub std: Metrics,
}

/// Mean and sample standard deviation; `None` entries are skipped.
pub fn mean_std(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    let mean = stable_mean(&v);
    let std = match (mean, v.len()) {
        (Some(m), n) if n >= 2 => {
            let mut sq: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
            sq.sort_by(f64::total_cmp);
            Some((sq.iter().sum::<f64>() / (n - 1) as f64).sqrt())
        }
        _ => None,
    };
    (mean, std)
}

pub fn summarize(setting: &Setting, runs: &[&SeedResult]) -> SettingSummary {
    let mut mean = [None; 5];
    let mut std = [None; 5];
    for c in 0..5 {
        let col: Vec<Option<f64>> = runs.iter().map(|r| r.metrics.values()[c]).collect();
        (mean[c], std[c]) = mean_std(&col);
    }
    SettingSummary { setting: setting.clone(), seeds: runs.len(), mean: Metrics::from_values(mean), std: Metrics::from_values(std) }
}

fn cell(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
        (Some(m), None) => format!("{m:.2}"),
        _ => "n/a".into(),
    }
}

/// Fixed-width text table, one row per setting.
pub fn render_table(summaries: &[SettingSummary]) -> String {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("Setting".to_owned()).chain(Metrics::COLUMNS.map(String::from)).collect()];
    for s in summaries {
        let (m, d) = (s.mean.values(), s.std.values());
        rows.push(std::iter::once(s.setting.name.clone()).chain((0..5).map(|c| cell(m[c], d[c]))).collect());
    }
    let widths: Vec<usize> = (0..6).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    /// Per-seed Sem/Ex-Match, paired by seed.
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendCheck {
    pub claim: String,
    pub holds: bool,
    pub left: f64,
    pub right: f64,
}

/// Ordering checks between model families on Sem/Ex-Match: best supervised
/// above KNN few-shot above zero-shot. Reported, never enforced.
pub fn trend_checks(summaries: &[SettingSummary]) -> Vec<TrendCheck> {
    let best = |pred: &dyn Fn(&Setting) -> bool| {
        summaries
            .iter()
            .filter(|s| pred(&s.setting))
            .filter_map(|s| s.mean.sem_ex_match)
            .max_by(f64::total_cmp)
    };
    let supervised = best(&|s| s.model.supervised());
    let fewshot = best(&|s| s.model == ExperimentModel::Fewshot);
    let zeroshot = best(&|s| s.model == ExperimentModel::Zeroshot);
    let mut out = Vec::new();
    for (claim, l, r) in [
        ("supervised > few-shot", supervised, fewshot),
        ("few-shot > zero-shot", fewshot, zeroshot),
        ("supervised > zero-shot", supervised, zeroshot),
    ] {
        if let (Some(left), Some(right)) = (l, r) {
            out.push(TrendCheck { claim: claim.into(), holds: left > right, left, right });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub version: String,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub split_sizes: [usize; 3],
    pub matchers: Vec<String>,
    pub settings: Vec<SettingSummary>,
    pub runs: Vec<SeedResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub trends: Vec<TrendCheck>,
}

impl ExperimentReport {
    pub fn summary(&self, setting: &str) -> Option<&SettingSummary> {
        self.settings.iter().find(|s| s.setting.name == setting)
    }
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    splits: Splits,
    provider: &'a dyn KnowledgeProvider,
    matchers: Vec<Box<dyn SemanticMatcher>>,
    embedder: Option<FixtureEmbedder>,
}

impl Runner<'_> {
    fn corpus(&self) -> Vec<String> {
        self.splits
            .train
            .iter()
            .flat_map(|e| [e.compound.text(), crate::model::serialize_target(&e.compound, &e.gold)])
            .collect()
    }

    fn predict(&self, interpreter: &dyn Interpreter, test: &[DatasetExample]) -> Result<Vec<PredictionRecord>> {
        test.iter()
            .map(|ex| Ok(PredictionRecord { id: ex.id.clone(), prediction: interpreter.interpret(&ex.compound)? }))
            .collect()
    }

    fn run_seed(&self, setting: &Setting, seed: u64, dir: &Path) -> Result<SeedResult> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let test = &self.splits.test;
        let (predictions, backbone_id) = match setting.model {
            ExperimentModel::Unigen | ExperimentModel::Mtgen => {
                let setup = TrainSetup {
                    knowledge: parse_knowledge_setting(&setting.knowledge)?,
                    provider: self.provider,
                    backbone: self.config.backbone.clone(),
                    config: TrainConfig { seed, ..self.config.train.clone() },
                };
                let ckpt_dir = dir.join("checkpoint");
                let train = if setting.model == ExperimentModel::Unigen { unigen_train } else { mtgen_train };
                let checkpoint = train(&self.splits.train, &self.splits.validation, &setup, &ckpt_dir)?;
                let id = checkpoint.config.backbone_id.clone();
                let interpreter = Supervised { checkpoint, provider: self.provider };
                (self.predict(&interpreter, test)?, id)
            }
            ExperimentModel::Zeroshot => {
                let backbone = self.config.backbone.instantiate(&self.corpus(), seed)?;
                (self.predict(&ZeroShot { backbone: backbone.as_ref() }, test)?, backbone.id())
            }
            ExperimentModel::Fewshot => {
                let backbone = self.config.backbone.instantiate(&self.corpus(), seed)?;
                let preds = self.fewshot(backbone.as_ref(), seed, test)?;
                (preds, backbone.id())
            }
        };
        write_predictions(dir.join("predictions.jsonl"), &predictions)?;
        let items = crate::eval::align(test, &predictions)?;
        let matchers: Vec<&dyn SemanticMatcher> = self.matchers.iter().map(|m| m.as_ref()).collect();
        let report = evaluate(&crate::eval::pairs_of(&items), &matchers)?;
        write_json(dir.join("eval.json"), &report)?;
        Ok(SeedResult { setting: setting.name.clone(), seed, metrics: Metrics::from_report(&report), report, backbone_id })
    }

    fn fewshot(&self, backbone: &dyn Backbone, seed: u64, test: &[DatasetExample]) -> Result<Vec<PredictionRecord>> {
        let fallback = BackboneEmbedder(backbone);
        let embedder: &dyn Embedder = match &self.embedder {
            Some(f) => f,
            None => &fallback,
        };
        let selector = match self.config.fewshot.selector {
            SelectorChoice::Random => DemoSelector::Random { seed },
            SelectorChoice::Knn => DemoSelector::Knn(KnnIndex::new(&self.splits.train, embedder)?, embedder),
        };
        let interpreter = FewShot { backbone, train: &self.splits.train, k: self.config.fewshot.k, selector };
        self.predict(&interpreter, test)
    }
}

fn finish(config: &ExperimentConfig, report: &mut ExperimentReport, settings: &[Setting]) -> Result<()> {
    report.settings = settings
        .iter()
        .filter_map(|s| {
            let runs: Vec<&SeedResult> = report.runs.iter().filter(|r| r.setting == s.name).collect();
            (!runs.is_empty()).then(|| summarize(s, &runs))
        })
        .collect();
    report.trends = trend_checks(&report.settings);
    if let (Some([a, b]), true) = (&config.compare, report.complete) {
        let scores = |name: &str| -> Vec<f64> {
            config
                .seeds
                .iter()
                .map(|seed| {
                    report
                        .runs
                        .iter()
                        .find(|r| r.setting == name && r.seed == *seed)
                        .and_then(|r| r.metrics.sem_ex_match)
                        .unwrap_or(f64::NAN)
                })
                .collect()
        };
        let (sa, sb) = (scores(a), scores(b));
        if sa.iter().chain(&sb).any(|v| v.is_nan()) {
            log::warn!("cannot compare {a} and {b}: a seed has no Sem/Ex-Match score");
        } else {
            report.comparison = Some(Comparison { a: a.clone(), b: b.clone(), test: paired_t_test(&sa, &sb)? });
        }
    }
    let dir = config.run_dir();
    write_json(dir.join("report.json"), report)?;
    let table = render_table(&report.settings);
    std::fs::write(dir.join("table.txt"), &table).map_err(|e| Error::io(dir.join("table.txt"), e))
}

/// Run every setting for every seed, sequentially and in config order.
/// On failure the report written so far is kept (marked incomplete) and the
/// error is returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dir = config.run_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_json(dir.join("config.json"), config)?;
    let splits = config.load_splits()?;
    let providers = config.providers.build()?;
    let matchers = config.matchers.iter().map(MatcherSpec::build).collect::<Result<Vec<_>>>()?;
    let embedder = config.fewshot.embeddings.as_ref().map(FixtureEmbedder::from_file).transpose()?;
    let settings = config.settings();
    let mut report = ExperimentReport {
        name: config.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        complete: false,
        error: None,
        split_sizes: splits.sizes(),
        matchers: matchers.iter().map(|m| m.id()).collect(),
        settings: Vec::new(),
        runs: Vec::new(),
        comparison: None,
        trends: Vec::new(),
    };
    let runner = Runner { config, splits, provider: providers.provider(), matchers, embedder };
    for setting in &settings {
        for &seed in &config.seeds {
            log::info!("{} seed {seed}", setting.name);
            let seed_dir = dir.join("runs").join(setting.slug()).join(format!("seed-{seed}"));
            match runner.run_seed(setting, seed, &seed_dir) {
                Ok(r) => {
                    report.runs.push(r);
                    finish(config, &mut report, &settings)?;
                }
                Err(e) => {
                    report.error = Some(format!("{} seed {seed}: {e}", setting.name));
                    finish(config, &mut report, &settings)?;
                    providers.save()?;
                    return Err(e);
                }
            }
        }
    }
    report.complete = true;
    finish(config, &mut report, &settings)?;
    providers.save()?;
    Ok(report)
}
