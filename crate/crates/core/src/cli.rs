//! The `pnc` command line.
//!
//! Every command reads its options from flags and, with `--config FILE`,
//! from the `[<command>]` table of a TOML file; flags win. Knowledge
//! providers come from the file's top-level `[providers]` table.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 external service error.

use std::ffi::OsString;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{MatcherSpec, ProviderConfig, Providers};
use crate::dataset::{load_dataset, read_predictions, save_dataset, write_json, write_jsonl, write_predictions, PredictionRecord, SplitManifest};
use crate::detect::{mine_corpus, CommandParseProvider, FixtureParseProvider, ParseProvider};
use crate::error::{Error, Result};
use crate::eval::{
    align, dummy_relation_probe, evaluate, metric_correlation, pairs_of, read_judgements, score_pair, EvalReport,
    SemanticMatcher,
};
use crate::experiment::{parse_knowledge_setting, render_table, run_experiment, ExperimentConfig};
use crate::fewshot::{BackboneEmbedder, DemoSelector, Embedder, FewShot, FixtureEmbedder, KnnIndex, ZeroShot};
use crate::model::checkpoint::{Checkpoint, ModelKind, TrainConfig};
use crate::model::{mtgen_train, shuffle_ablation, unigen_train, BackboneSpec, Interpreter, NounRole, Supervised, TinyConfig, TrainSetup};
use crate::openie::{
    load_integration_examples, train_integration_model, CommandOpenIE, FixtureOpenIE, HttpOpenIE, OpenIEClient, Pipeline,
};
use crate::split::{split, SplitMode, SplitSizes, SplitSpec};
use crate::stats::relation_stats;
use crate::types::{DatasetExample, Interpretation};

#[derive(Debug, Parser)]
#[command(name = "pnc", version, about = "Proper noun compound detection, interpretation and evaluation")]
struct Cli {
    /// TOML file with a table per command and a [providers] table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find proper noun compounds in raw sentences.
    Detect(DetectArgs),
    /// Split a dataset into train/validation/test.
    Split(SplitArgs),
    /// Relation statistics of a dataset.
    Stats(StatsArgs),
    /// Train an interpretation or integration model.
    Train(TrainArgs),
    /// Interpret compounds with a trained checkpoint.
    Predict(PredictArgs),
    /// Zero-shot or few-shot interpretation.
    Fewshot(FewshotArgs),
    /// Score predictions against gold interpretations.
    Evaluate(EvaluateArgs),
    /// Correlate matcher scores with human judgements.
    Correlate(CorrelateArgs),
    /// Add implicit-relation extractions to Open IE output.
    Augment(AugmentArgs),
    /// Character-shuffle one noun of every example.
    Ablate(AblateArgs),
    /// Run a multi-seed experiment described by a TOML file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct ParserOpts {
    /// JSON file of precomputed parses.
    #[arg(long)]
    parses: Option<PathBuf>,
    /// Parser helper command (JSON lines on stdio), split on whitespace.
    #[arg(long)]
    parser_cmd: Option<String>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct DetectArgs {
    /// Sentences, one per line.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    parser: ParserOpts,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct SplitArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// common-noun-disjoint or random.
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated fractions, e.g. 0.7,0.1,0.2.
    #[arg(long)]
    ratios: Option<String>,
    /// Comma-separated counts; overrides --ratios.
    #[arg(long)]
    counts: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Manifest (id → split) to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for train/validation/test JSONL files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct StatsArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    json: Option<bool>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct BackboneOpts {
    /// tiny, oracle or external.
    #[arg(long)]
    backbone: Option<String>,
    /// Helper program for the external backbone.
    #[arg(long)]
    backbone_program: Option<String>,
    /// Extra arguments for the helper, whitespace separated.
    #[arg(long)]
    backbone_args: Option<String>,
    /// Model name passed to the helper.
    #[arg(long)]
    backbone_model: Option<String>,
    /// Answer key (dataset JSONL) for the oracle backbone.
    #[arg(long)]
    answer_key: Option<PathBuf>,
    #[arg(long)]
    d_model: Option<usize>,
}

impl BackboneOpts {
    fn spec(&self) -> Result<BackboneSpec> {
        Ok(match self.backbone.as_deref().unwrap_or("tiny") {
            "tiny" => {
                let mut cfg = TinyConfig::default();
                if let Some(d) = self.d_model {
                    cfg.d_model = d;
                }
                BackboneSpec::Tiny(cfg)
            }
            "oracle" => BackboneSpec::Oracle { answer_key: self.answer_key.clone() },
            "external" => BackboneSpec::External {
                program: self.backbone_program.clone().ok_or_else(|| Error::config("--backbone external needs --backbone-program"))?,
                args: self.backbone_args.as_deref().map(split_words).unwrap_or_default(),
                model: self.backbone_model.clone(),
            },
            other => return Err(Error::config(format!("unknown backbone {other:?} (expected tiny, oracle or external)"))),
        })
    }
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct TrainArgs {
    /// unigen, mtgen or integration.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Knowledge setting, e.g. "sentence" or "sentence+wordnet-nn".
    #[arg(long)]
    knowledge: Option<String>,
    /// Checkpoint directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Start from the desk-scale preset (batch 4, learning rate 3e-3).
    #[arg(long)]
    desk: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    backbone: BackboneOpts,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct PredictArgs {
    /// Checkpoint directory.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct FewshotArgs {
    #[arg(long)]
    k: Option<usize>,
    /// knn, random or zero (zero-shot template).
    #[arg(long)]
    selector: Option<String>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixture embeddings for KNN; default is the backbone's mean encoder state.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    backbone: BackboneOpts,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct MatcherOpts {
    /// Learned matcher service URL.
    #[arg(long)]
    matcher_url: Option<String>,
    /// Precomputed matcher scores (JSONL of gold, prediction, score).
    #[arg(long)]
    matcher_scores: Option<PathBuf>,
    #[arg(long)]
    matcher_timeout: Option<u64>,
}

impl MatcherOpts {
    fn specs(&self) -> Vec<MatcherSpec> {
        let mut out = vec![MatcherSpec::Ngram];
        if let Some(url) = &self.matcher_url {
            out.push(MatcherSpec::Http { url: url.clone(), timeout_secs: self.matcher_timeout.unwrap_or(30) });
        }
        if let Some(path) = &self.matcher_scores {
            out.push(MatcherSpec::Fixture { name: "scores".into(), path: path.clone() });
        }
        out
    }
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct EvaluateArgs {
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Also run the dummy-relation probe.
    #[arg(long)]
    probe: Option<bool>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    matchers: MatcherOpts,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct CorrelateArgs {
    /// JSONL of {id, rating, gold?, prediction?}.
    #[arg(long)]
    judgements: Option<PathBuf>,
    /// Gold dataset for judgements without texts.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Predictions for judgements without texts.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    matchers: MatcherOpts,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct AugmentArgs {
    /// Sentences, one per line.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Open IE client: fixture:PATH, http:URL or cmd:PROGRAM ARGS.
    #[arg(long)]
    oie: Option<String>,
    /// Interpretation checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Integration checkpoint.
    #[arg(long)]
    integration: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Yield report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Sample of augmented extractions for a precision audit.
    #[arg(long)]
    audit: Option<PathBuf>,
    #[arg(long)]
    audit_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    parser: ParserOpts,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct AblateArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// proper or common.
    #[arg(long)]
    role: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(default)]
struct ExperimentArgs {
    /// Experiment TOML file.
    file: Option<PathBuf>,
    /// Override the seed list, comma separated.
    #[arg(long)]
    seeds: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn split_words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn need<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value.clone().ok_or_else(|| Error::config(format!("missing required option --{flag}")))
}

/// Overlay set flags onto the config-file table and deserialize the result.
fn merge<T: Serialize + DeserializeOwned>(flags: T, table: Option<&toml::Table>) -> Result<T> {
    let Some(table) = table else { return Ok(flags) };
    let mut base = serde_json::to_value(table).map_err(Error::config)?;
    let over = serde_json::to_value(&flags).map_err(Error::config)?;
    if let (Value::Object(b), Value::Object(o)) = (&mut base, over) {
        for (k, v) in o {
            if !v.is_null() {
                b.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| Error::config(format!("config file: {e}")))
}

struct FileConfig {
    root: toml::Table,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(FileConfig { root: toml::Table::new() }) };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root: toml::Table = toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Ok(FileConfig { root })
    }

    fn section(&self, name: &str) -> Option<&toml::Table> {
        self.root.get(name).and_then(|v| v.as_table())
    }

    fn providers(&self) -> Result<Providers> {
        let cfg: ProviderConfig = match self.root.get("providers") {
            Some(v) => v.clone().try_into().map_err(|e| Error::config(format!("[providers]: {e}")))?,
            None => ProviderConfig::default(),
        };
        cfg.build()
    }
}

fn parser(opts: &ParserOpts) -> Result<Box<dyn ParseProvider>> {
    match (&opts.parses, &opts.parser_cmd) {
        (Some(p), _) => Ok(Box::new(FixtureParseProvider::from_file(p)?)),
        (None, Some(cmd)) => {
            let words = split_words(cmd);
            let (prog, args) = words.split_first().ok_or_else(|| Error::config("--parser-cmd is empty"))?;
            Ok(Box::new(CommandParseProvider::spawn(prog, args)?))
        }
        (None, None) => Err(Error::config("a parser is required: --parses FILE or --parser-cmd COMMAND")),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .collect()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<[T; 3]> {
    let v: Vec<T> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::config(format!("bad {what} value {x:?}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|_| Error::config(format!("--{what} needs exactly three values")))
}

fn print_report(out: &mut dyn Write, report: &EvalReport) -> Result<()> {
    let pct = |s: crate::eval::Stat| s.value().map_or("n/a".to_owned(), |v| format!("{:.2}", 100.0 * v));
    let w = |e: std::io::Error| Error::io("stdout", e);
    writeln!(out, "examples: {} (both compositional: {})", report.n_total, report.n_both_cmp).map_err(w)?;
    writeln!(
        out,
        "Ex-Match precision {}  recall {}  accuracy {}",
        pct(report.ex_precision),
        pct(report.ex_recall),
        pct(report.ex_accuracy)
    )
    .map_err(w)?;
    for m in &report.matchers {
        writeln!(out, "{}: Sem-Match {}  Sem/Ex-Match {}", m.matcher, pct(m.sem_mean), pct(m.combined_mean)).map_err(w)?;
    }
    Ok(())
}

fn build_matchers(opts: &MatcherOpts) -> Result<Vec<Box<dyn SemanticMatcher>>> {
    opts.specs().iter().map(MatcherSpec::build).collect()
}

fn openie_client(spec: &str) -> Result<Box<dyn OpenIEClient>> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| Error::config(format!("bad --oie {spec:?}; expected fixture:PATH, http:URL or cmd:COMMAND")))?;
    Ok(match kind {
        "fixture" => Box::new(FixtureOpenIE::from_file(rest)?),
        "http" => Box::new(HttpOpenIE::new(rest, Duration::from_secs(30))),
        "cmd" => {
            let words = split_words(rest);
            let (prog, args) = words.split_first().ok_or_else(|| Error::config("empty --oie command"))?;
            Box::new(CommandOpenIE::spawn(prog, args)?)
        }
        other => return Err(Error::config(format!("unknown Open IE client kind {other:?}"))),
    })
}

fn detect(args: DetectArgs, out: &mut dyn Write) -> Result<()> {
    let sentences = read_lines(&need(&args.input, "in")?)?;
    let provider = parser(&args.parser)?;
    let mut miner = mine_corpus(&sentences, provider.as_ref());
    let found: Vec<_> = miner.by_ref().collect();
    let skipped = miner.skipped().len();
    match &args.out {
        Some(p) => write_jsonl(p, &found)?,
        None => {
            for nc in &found {
                writeln!(out, "{}", serde_json::to_string(nc).map_err(Error::data)?).map_err(|e| Error::io("stdout", e))?;
            }
        }
    }
    log::info!("{} compounds in {} sentences ({skipped} skipped)", found.len(), sentences.len());
    Ok(())
}

fn split_cmd(args: SplitArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(need(&args.input, "in")?)?;
    let mode = match args.mode.as_deref().unwrap_or("common-noun-disjoint") {
        "common-noun-disjoint" => SplitMode::CommonNounDisjoint,
        "random" => SplitMode::Random,
        other => return Err(Error::config(format!("unknown split mode {other:?}"))),
    };
    let sizes = match (&args.counts, &args.ratios) {
        (Some(c), _) => SplitSizes::Counts(parse_list(c, "counts")?),
        (None, Some(r)) => SplitSizes::Ratios(parse_list(r, "ratios")?),
        (None, None) => SplitSizes::Ratios([0.7, 0.1, 0.2]),
    };
    let spec = SplitSpec { mode, sizes, seed: args.seed.unwrap_or(0) };
    let splits = split(&data, &spec)?;
    let manifest: SplitManifest = splits.manifest();
    if let Some(p) = &args.out {
        manifest.save(p)?;
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for name in crate::dataset::SplitName::ALL {
            save_dataset(dir.join(format!("{}.jsonl", name.as_str())), splits.get(name))?;
        }
    }
    let [a, b, c] = splits.sizes();
    writeln!(out, "train {a}  validation {b}  test {c}").map_err(|e| Error::io("stdout", e))
}

fn stats(args: StatsArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(need(&args.input, "in")?)?;
    let s = relation_stats(&data);
    let text = if args.json.unwrap_or(false) { serde_json::to_string_pretty(&s).map_err(Error::data)? + "\n" } else { s.render() };
    out.write_all(text.as_bytes()).map_err(|e| Error::io("stdout", e))
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    let mut c = if args.desk.unwrap_or(false) { TrainConfig::desk_scale() } else { TrainConfig::default() };
    if let Some(v) = args.epochs {
        c.max_epochs = v;
    }
    if let Some(v) = args.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = args.learning_rate {
        c.learning_rate = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    c.patience = args.patience.or(c.patience);
    c
}

fn train(args: TrainArgs, file: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let dir = need(&args.out, "out")?;
    let config = train_config(&args);
    let spec = args.backbone.spec()?;
    let kind = args.model.as_deref().unwrap_or("unigen");
    let ckpt = if kind == "integration" {
        let examples = load_integration_examples(need(&args.train, "train")?)?;
        let val = args.validation.as_ref().map(load_integration_examples).transpose()?;
        train_integration_model(&examples, val.as_deref(), &spec, &config, &dir)?
    } else {
        let train = load_dataset(need(&args.train, "train")?)?;
        let val = load_dataset(need(&args.validation, "validation")?)?;
        let providers = file.providers()?;
        let setup = TrainSetup {
            knowledge: parse_knowledge_setting(args.knowledge.as_deref().unwrap_or("none"))?,
            provider: providers.provider(),
            backbone: spec,
            config,
        };
        let ckpt = match kind {
            "unigen" => unigen_train(&train, &val, &setup, &dir)?,
            "mtgen" => mtgen_train(&train, &val, &setup, &dir)?,
            other => return Err(Error::config(format!("unknown model {other:?} (expected unigen, mtgen or integration)"))),
        };
        providers.save()?;
        ckpt
    };
    writeln!(
        out,
        "saved {} (best epoch {}, {} {:.4})",
        dir.display(),
        ckpt.config.best_epoch,
        ckpt.config.selection,
        ckpt.config.best_score.unwrap_or(f64::NAN)
    )
    .map_err(|e| Error::io("stdout", e))
}

fn predict_all(interpreter: &dyn Interpreter, data: &[DatasetExample]) -> Result<Vec<PredictionRecord>> {
    data.iter()
        .map(|ex| Ok(PredictionRecord { id: ex.id.clone(), prediction: interpreter.interpret(&ex.compound)? }))
        .collect()
}

fn emit_predictions(preds: &[PredictionRecord], path: &Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_predictions(p, preds),
        None => {
            for p in preds {
                writeln!(out, "{}", serde_json::to_string(p).map_err(Error::data)?).map_err(|e| Error::io("stdout", e))?;
            }
            Ok(())
        }
    }
}

fn predict(args: PredictArgs, file: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let checkpoint = Checkpoint::load(need(&args.model, "model")?)?;
    if checkpoint.config.model == ModelKind::Integration {
        return Err(Error::config("predict needs an interpretation checkpoint, not an integration one"));
    }
    let data = load_dataset(need(&args.input, "in")?)?;
    let providers = file.providers()?;
    let interpreter = Supervised { checkpoint, provider: providers.provider() };
    let preds = predict_all(&interpreter, &data)?;
    providers.save()?;
    emit_predictions(&preds, &args.out, out)
}

fn fewshot(args: FewshotArgs, out: &mut dyn Write) -> Result<()> {
    let train = load_dataset(need(&args.train, "train")?)?;
    let test = load_dataset(need(&args.test, "test")?)?;
    let seed = args.seed.unwrap_or(0);
    let corpus: Vec<String> =
        train.iter().flat_map(|e| [e.compound.text(), crate::model::serialize_target(&e.compound, &e.gold)]).collect();
    let backbone = args.backbone.spec()?.instantiate(&corpus, seed)?;
    let selector = args.selector.as_deref().unwrap_or("knn");
    let preds = if selector == "zero" {
        predict_all(&ZeroShot { backbone: backbone.as_ref() }, &test)?
    } else {
        let fixture = args.embeddings.as_ref().map(FixtureEmbedder::from_file).transpose()?;
        let fallback = BackboneEmbedder(backbone.as_ref());
        let embedder: &dyn Embedder = match &fixture {
            Some(f) => f,
            None => &fallback,
        };
        let selector = match selector {
            "knn" => DemoSelector::Knn(KnnIndex::new(&train, embedder)?, embedder),
            "random" => DemoSelector::Random { seed },
            other => return Err(Error::config(format!("unknown selector {other:?} (expected knn, random or zero)"))),
        };
        let k = args.k.unwrap_or(10);
        predict_all(&FewShot { backbone: backbone.as_ref(), train: &train, k, selector }, &test)?
    };
    emit_predictions(&preds, &args.out, out)
}

fn evaluate_cmd(args: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let gold = load_dataset(need(&args.gold, "gold")?)?;
    let preds = read_predictions(need(&args.pred, "pred")?)?;
    let items = align(&gold, &preds)?;
    let matchers = build_matchers(&args.matchers)?;
    let refs: Vec<&dyn SemanticMatcher> = matchers.iter().map(|m| m.as_ref()).collect();
    let report = evaluate(&pairs_of(&items), &refs)?;
    print_report(out, &report)?;
    let mut json = serde_json::to_value(&report).map_err(Error::data)?;
    if args.probe.unwrap_or(false) {
        let probe = dummy_relation_probe(&items, &refs)?;
        writeln!(out, "dummy-relation probe ({} predictions replaced):", probe.n_replaced).map_err(|e| Error::io("stdout", e))?;
        print_report(out, &probe.report)?;
        json["probe"] = serde_json::to_value(&probe).map_err(Error::data)?;
    }
    if let Some(p) = &args.out {
        write_json(p, &json)?;
    }
    Ok(())
}

fn correlate(args: CorrelateArgs, out: &mut dyn Write) -> Result<()> {
    let judgements = read_judgements(need(&args.judgements, "judgements")?)?;
    let gold = args.gold.as_ref().map(load_dataset).transpose()?.unwrap_or_default();
    let preds = args.pred.as_ref().map(read_predictions).transpose()?.unwrap_or_default();
    let gold_by_id: std::collections::HashMap<&str, &DatasetExample> = gold.iter().map(|g| (g.id.as_str(), g)).collect();
    let pred_by_id: std::collections::HashMap<&str, &Interpretation> = preds.iter().map(|p| (p.id.as_str(), &p.prediction)).collect();
    let mut pairs = Vec::with_capacity(judgements.len());
    for j in &judgements {
        let g = match &j.gold {
            Some(t) => Interpretation::Paraphrase(t.clone()),
            None => gold_by_id.get(j.id.as_str()).map(|e| e.gold.clone()).ok_or_else(|| Error::data(format!("no gold text for judgement {}", j.id)))?,
        };
        let p = match &j.prediction {
            Some(t) => Interpretation::Paraphrase(t.clone()),
            None => pred_by_id.get(j.id.as_str()).map(|p| (*p).clone()).ok_or_else(|| Error::data(format!("no prediction for judgement {}", j.id)))?,
        };
        pairs.push((g, p));
    }
    let ratings: Vec<f64> = judgements.iter().map(|j| j.rating.value()).collect();
    for m in build_matchers(&args.matchers)? {
        let scores = pairs.iter().map(|(g, p)| score_pair(g, p, m.as_ref())).collect::<Result<Vec<f64>, _>>()?;
        let c = metric_correlation(&scores, &ratings)?;
        let fmt = |s: crate::eval::Stat| s.value().map_or("undefined".to_owned(), |v| format!("{v:.4}"));
        writeln!(out, "{}: n {}  pearson {}  kendall tau-b {}", m.id(), c.n, fmt(c.pearson), fmt(c.kendall_tau_b))
            .map_err(|e| Error::io("stdout", e))?;
    }
    Ok(())
}

fn augment(args: AugmentArgs, file: &FileConfig, out: &mut dyn Write) -> Result<()> {
    let sentences = read_lines(&need(&args.input, "in")?)?;
    let parser = parser(&args.parser)?;
    let client = openie_client(&need(&args.oie, "oie")?)?;
    let providers = file.providers()?;
    let interpreter = Supervised { checkpoint: Checkpoint::load(need(&args.model, "model")?)?, provider: providers.provider() };
    let integration = Checkpoint::load(need(&args.integration, "integration")?)?;
    integration.expect_kind(ModelKind::Integration)?;
    let pipeline = Pipeline {
        parser: parser.as_ref(),
        openie: client.as_ref(),
        interpreter: &interpreter,
        integrator: integration.backbone.as_ref(),
    };
    let result = pipeline.augment_corpus(&sentences);
    match &args.out {
        Some(p) => write_jsonl(p, &result.extractions)?,
        None => {
            for e in &result.extractions {
                writeln!(out, "{}", serde_json::to_string(e).map_err(Error::data)?).map_err(|e| Error::io("stdout", e))?;
            }
        }
    }
    if let Some(p) = &args.report {
        write_json(p, &result.report)?;
    }
    if let Some(p) = &args.audit {
        write_jsonl(p, &result.audit_sample(args.audit_size.unwrap_or(500), args.seed.unwrap_or(0)))?;
    }
    providers.save()?;
    let r = &result.report;
    eprintln!(
        "{} originals, {} augmented ({}), {} sentences skipped",
        r.originals,
        r.augmented,
        r.yield_increase_percent.map_or("yield n/a".to_owned(), |y| format!("+{y:.2}%")),
        r.skipped.len()
    );
    Ok(())
}

fn ablate(args: AblateArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_dataset(need(&args.input, "in")?)?;
    let role: NounRole = args.role.as_deref().unwrap_or("common").parse()?;
    let seed = args.seed.unwrap_or(0);
    let shuffled: Vec<DatasetExample> = data.iter().map(|ex| shuffle_ablation(ex, role, seed)).collect();
    match &args.out {
        Some(p) => save_dataset(p, &shuffled),
        None => {
            for ex in &shuffled {
                writeln!(out, "{} {}", ex.id, ex.compound).map_err(|e| Error::io("stdout", e))?;
            }
            Ok(())
        }
    }
}

fn experiment(args: ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = ExperimentConfig::load(need(&args.file, "file")?)?;
    if let Some(s) = &args.seeds {
        config.seeds = s
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| Error::config(format!("bad seed {x:?}"))))
            .collect::<Result<_>>()?;
    }
    if let Some(o) = args.output {
        config.output = o;
    }
    let report = run_experiment(&config)?;
    out.write_all(render_table(&report.settings).as_bytes()).map_err(|e| Error::io("stdout", e))?;
    for t in &report.trends {
        writeln!(out, "trend {}: {} ({:.2} vs {:.2})", t.claim, if t.holds { "holds" } else { "does not hold" }, t.left, t.right)
            .map_err(|e| Error::io("stdout", e))?;
    }
    if let Some(c) = &report.comparison {
        let f = |s: crate::eval::Stat| s.value().map_or("undefined".to_owned(), |v| format!("{v:.4}"));
        writeln!(out, "paired t-test {} vs {}: t {}  p {}", c.a, c.b, f(c.test.t), f(c.test.p_value)).map_err(|e| Error::io("stdout", e))?;
    }
    writeln!(out, "report: {}", config.run_dir().join("report.json").display()).map_err(|e| Error::io("stdout", e))
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Detect(a) => detect(merge(a, file.section("detect"))?, out),
        Command::Split(a) => split_cmd(merge(a, file.section("split"))?, out),
        Command::Stats(a) => stats(merge(a, file.section("stats"))?, out),
        Command::Train(a) => train(merge(a, file.section("train"))?, &file, out),
        Command::Predict(a) => predict(merge(a, file.section("predict"))?, &file, out),
        Command::Fewshot(a) => fewshot(merge(a, file.section("fewshot"))?, out),
        Command::Evaluate(a) => evaluate_cmd(merge(a, file.section("evaluate"))?, out),
        Command::Correlate(a) => correlate(merge(a, file.section("correlate"))?, out),
        Command::Augment(a) => augment(merge(a, file.section("augment"))?, &file, out),
        Command::Ablate(a) => ablate(merge(a, file.section("ablate"))?, out),
        Command::Experiment(a) => experiment(a, out),
    }
}

/// Run the command line with `args` (including the program name), writing
/// normal output to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let table: toml::Table = toml::from_str("input = \"a.jsonl\"\nseed = 3\nmode = \"random\"").unwrap();
        let flags = SplitArgs { seed: Some(9), ..Default::default() };
        let merged = merge(flags, Some(&table)).unwrap();
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.mode.as_deref(), Some("random"));
        assert_eq!(merged.input, Some(PathBuf::from("a.jsonl")));
    }

    #[test]
    fn usage_errors_exit_one() {
        let mut out = Vec::new();
        assert_eq!(run(["pnc", "stats", "--bogus"], &mut out), 1);
        assert_eq!(run(["pnc", "stats"], &mut out), 1);
        assert_eq!(run(["pnc", "stats", "--in", "/definitely/missing.jsonl"], &mut out), 2);
    }
}
