mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::fixture;
use pnc_core::cli::run;
use pnc_core::dataset::{load_dataset, read_jsonl, save_dataset};
use pnc_core::openie::{Extraction, Provenance};

fn pnc(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("pnc").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(args: &[&str]) -> String {
    let (code, out) = pnc(args);
    assert_eq!(code, 0, "pnc {args:?} failed:\n{out}");
    out
}

/// A small validation file with ids disjoint from the augmentation fixture.
fn validation_file(dir: &Path) -> PathBuf {
    let path = dir.join("val.jsonl");
    save_dataset(&path, &common::compounds()[..5]).unwrap();
    path
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_pnc");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(status(&["--version"]), Some(0));
    assert_eq!(status(&["nonsense"]), Some(1));
    assert_eq!(status(&["stats", "--in", "/no/such/file.jsonl"]), Some(2));
    assert_eq!(status(&["train", "--model", "unigen"]), Some(1));
    let ok = Command::new(bin).args(["stats", "--in", s(&fixture("compounds.jsonl"))]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("relations"));
}

#[test]
fn split_stats_and_ablate() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("compounds.jsonl");
    let manifest = dir.path().join("manifest.json");
    let out = ok(&["split", "--in", s(&data), "--ratios", "0.7,0.1,0.2", "--seed", "1", "--out", s(&manifest), "--out-dir", s(dir.path())]);
    assert!(out.starts_with("train "));
    let sizes: usize = ["train", "validation", "test"]
        .iter()
        .map(|n| load_dataset(dir.path().join(format!("{n}.jsonl"))).unwrap().len())
        .sum();
    assert_eq!(sizes, 241);
    assert!(manifest.exists());

    let json = ok(&["stats", "--in", s(&data), "--json", "true"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["total"].as_u64().unwrap() as usize, load_dataset(&data).unwrap().iter().filter(|e| e.gold.is_compositional()).count());

    let shuffled = dir.path().join("shuffled.jsonl");
    ok(&["ablate", "--in", s(&data), "--role", "proper", "--seed", "3", "--out", s(&shuffled)]);
    let a = load_dataset(&shuffled).unwrap();
    let b = load_dataset(&data).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).any(|(x, y)| x.compound.proper_noun != y.compound.proper_noun));
    assert!(a.iter().zip(&b).all(|(x, y)| x.compound.common_noun == y.compound.common_noun));
}

#[test]
fn config_file_supplies_options() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pnc.toml");
    std::fs::write(&cfg, format!("[stats]\ninput = {:?}\n", s(&fixture("compounds.jsonl")))).unwrap();
    let out = ok(&["--config", s(&cfg), "stats"]);
    assert!(out.contains("relations"));
    std::fs::write(&cfg, "[stats]\ninput = 3\n").unwrap();
    assert_eq!(pnc(&["--config", s(&cfg), "stats"]).0, 1);
}

#[test]
fn train_predict_evaluate_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let train = fixture("augment/interpretations.jsonl");
    let val = validation_file(dir.path());
    for model in ["unigen", "mtgen"] {
        let ckpt = dir.path().join(model);
        ok(&["train", "--model", model, "--backbone", "oracle", "--train", s(&train), "--validation", s(&val), "--out", s(&ckpt), "--epochs", "1"]);
        let preds = dir.path().join(format!("{model}.jsonl"));
        ok(&["predict", "--model", s(&ckpt), "--in", s(&train), "--out", s(&preds)]);
        let report = dir.path().join(format!("{model}-eval.json"));
        let out = ok(&["evaluate", "--gold", s(&train), "--pred", s(&preds), "--probe", "true", "--out", s(&report)]);
        assert!(out.contains("accuracy 100.00"), "{out}");
        assert!(out.contains("Sem/Ex-Match 100.00"), "{out}");
        let v: serde_json::Value = pnc_core::dataset::read_json(&report).unwrap();
        assert_eq!(v["ex_accuracy"], 1.0);
        assert!(v["probe"].is_object());
    }
    // A missing checkpoint is a data error.
    let (code, _) = pnc(&["predict", "--model", s(&dir.path().join("nope")), "--in", s(&train)]);
    assert_eq!(code, 2);
}

#[test]
fn fewshot_and_zero_shot_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = load_dataset(fixture("compounds.jsonl")).unwrap();
    let (train, test) = (dir.path().join("train.jsonl"), dir.path().join("test.jsonl"));
    save_dataset(&train, &data[..60]).unwrap();
    save_dataset(&test, &data[60..70]).unwrap();
    for selector in ["knn", "random", "zero"] {
        let out = dir.path().join(format!("{selector}.jsonl"));
        ok(&["fewshot", "--selector", selector, "--k", "5", "--train", s(&train), "--test", s(&test), "--out", s(&out), "--backbone", "oracle"]);
        assert_eq!(pnc_core::dataset::read_predictions(&out).unwrap().len(), 10);
    }
    let (code, _) = pnc(&["fewshot", "--k", "500", "--train", s(&train), "--test", s(&test), "--backbone", "oracle"]);
    assert_eq!(code, 1);
}

#[test]
fn correlate_from_judgements() {
    let dir = tempfile::tempdir().unwrap();
    let judgements = dir.path().join("j.jsonl");
    let rows = [
        ("a", "good", "Paris museum is a museum in Paris", "Paris museum is a museum in Paris"),
        ("b", "average", "Pfizer vaccine is a vaccine made by Pfizer", "Pfizer vaccine is a vaccine from Pfizer"),
        ("c", "bad", "London theatre is a theatre in London", "London theatre is a play"),
        ("d", "good", "Tokyo subway is a subway in Tokyo", "Tokyo subway is a subway in Tokyo"),
        ("e", "bad", "Berlin wall is a wall in Berlin", "Berlin wall is red"),
    ];
    let text: String = rows
        .iter()
        .map(|(id, r, g, p)| serde_json::json!({"id": id, "rating": r, "gold": g, "prediction": p}).to_string() + "\n")
        .collect();
    std::fs::write(&judgements, text).unwrap();
    let out = ok(&["correlate", "--judgements", s(&judgements)]);
    assert!(out.contains("ngram-bleu4-add1: n 5"), "{out}");
    assert!(out.contains("kendall tau-b"));
}

#[test]
fn augment_twenty_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let f = |n: &str| fixture(&format!("augment/{n}"));
    let val = validation_file(dir.path());
    let interp = dir.path().join("interp");
    let integ = dir.path().join("integ");
    ok(&["train", "--model", "unigen", "--backbone", "oracle", "--train", s(&f("interpretations.jsonl")), "--validation", s(&val), "--out", s(&interp), "--epochs", "1"]);
    ok(&["train", "--model", "integration", "--backbone", "oracle", "--train", s(&f("integration.jsonl")), "--out", s(&integ), "--epochs", "1"]);
    let out = dir.path().join("extractions.jsonl");
    let report = dir.path().join("report.json");
    let audit = dir.path().join("audit.jsonl");
    ok(&[
        "augment",
        "--in", s(&f("sentences.txt")),
        "--parses", s(&f("parses.json")),
        "--oie", &format!("fixture:{}", s(&f("openie.json"))),
        "--model", s(&interp),
        "--integration", s(&integ),
        "--out", s(&out),
        "--report", s(&report),
        "--audit", s(&audit),
        "--audit-size", "5",
    ]);
    let ex: Vec<Extraction> = read_jsonl(&out).unwrap();
    let augmented: Vec<&Extraction> = ex.iter().filter(|e| e.provenance == Provenance::Augmented).collect();
    assert_eq!(ex.len() - augmented.len(), 19);
    assert_eq!(augmented.len(), 14);
    assert!(augmented.iter().any(|e| e.to_string() == "(Workers; praised museum in; Paris)"));
    assert!(augmented.iter().any(|e| e.to_string() == "(Voters; visited outbreak of; COVID-19)"), "{augmented:?}");
    let r: serde_json::Value = pnc_core::dataset::read_json(&report).unwrap();
    assert_eq!(r["sentences"], 20);
    assert_eq!(r["compounds"], 17);
    assert_eq!(r["compositional"], 14);
    assert_eq!(r["skipped"].as_array().unwrap().len(), 1);
    assert_eq!(read_jsonl::<Extraction>(&audit).unwrap().len(), 5);
    // An interpretation checkpoint is not an integration model.
    let (code, _) = pnc(&[
        "augment", "--in", s(&f("sentences.txt")), "--parses", s(&f("parses.json")),
        "--oie", &format!("fixture:{}", s(&f("openie.json"))), "--model", s(&interp), "--integration", s(&interp),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn experiment_with_oracle_is_perfect_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "name = \"oracle\"\ndata = {:?}\nmodels = [\"unigen\", \"mtgen\"]\nknowledge = [\"none\"]\nseeds = [0, 1]\ncompare = [\"unigen/none\", \"mtgen/none\"]\n\
             [train]\nmax_epochs = 1\n[backbone]\nkind = \"oracle\"\nanswer_key = {:?}\n",
            s(&fixture("compounds.jsonl")),
            s(&fixture("compounds.jsonl")),
        ),
    )
    .unwrap();
    let mut tables = Vec::new();
    for run_dir in ["a", "b"] {
        let output = dir.path().join(run_dir);
        let out = ok(&["experiment", s(&cfg), "--output", s(&output)]);
        assert!(out.contains("report:"));
        let table = std::fs::read_to_string(output.join("oracle/table.txt")).unwrap();
        for line in table.lines().skip(2) {
            assert_eq!(line.matches("100.00 ± 0.00").count(), 5, "{line}");
        }
        assert!(output.join("oracle/runs/mtgen_none/seed-1/predictions.jsonl").exists());
        tables.push(table);
    }
    assert_eq!(tables[0], tables[1]);
}
