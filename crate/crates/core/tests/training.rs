mod common;

use std::time::Instant;

use pnc_core::knowledge::NoKnowledge;
use pnc_core::model::supervised::{head_accuracy, score_on};
use pnc_core::model::{build_inputs, mtgen_train, unigen_train, BackboneSpec, ModelKind, TinyConfig, TrainConfig, TrainSetup};
use pnc_core::openie::{integration_exact_match, load_integration_examples, train_integration_model};

fn desk_setup() -> TrainSetup<'static> {
    TrainSetup {
        knowledge: vec![],
        provider: &NoKnowledge,
        backbone: BackboneSpec::Tiny(TinyConfig::default()),
        config: TrainConfig::desk_scale(),
    }
}

#[test]
fn tiny_overfits_both_models() {
    let data = common::compounds();
    let (train, val) = (&data[..100], &data[100..120]);
    let inputs = build_inputs(train, &[], &NoKnowledge).unwrap();
    for kind in [ModelKind::Unigen, ModelKind::Mtgen] {
        let start = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        let ckpt = match kind {
            ModelKind::Unigen => unigen_train(train, val, &desk_setup(), dir.path()),
            _ => mtgen_train(train, val, &desk_setup(), dir.path()),
        }
        .unwrap();
        let s = score_on(kind, ckpt.backbone.as_ref(), train, &inputs).unwrap();
        eprintln!("{kind:?}: best epoch {} train {s:?} in {:?}", ckpt.config.best_epoch, start.elapsed());
        assert!(s.ex_accuracy.unwrap() >= 0.95, "{kind:?} training Ex-Match {:?}", s.ex_accuracy);
        if kind == ModelKind::Mtgen {
            assert!(head_accuracy(ckpt.backbone.as_ref(), train, &inputs).unwrap() >= 0.95);
        }
        assert_eq!(ckpt.log().unwrap().len(), ckpt.config.train.max_epochs);
    }
}

#[test]
fn training_is_deterministic() {
    let data = common::compounds();
    let (train, val) = (&data[..30], &data[30..36]);
    let mut setup = desk_setup();
    setup.config.max_epochs = 2;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    unigen_train(train, val, &setup, a.path()).unwrap();
    unigen_train(train, val, &setup, b.path()).unwrap();
    let log = |d: &std::path::Path| std::fs::read_to_string(d.join("train_log.jsonl")).unwrap();
    assert_eq!(log(a.path()), log(b.path()));
}

#[test]
fn integration_model_overfits() {
    let pairs = load_integration_examples(common::fixture("integration_pairs.jsonl")).unwrap();
    assert_eq!(pairs.len(), 200);
    let mut config = TrainConfig::desk_scale();
    config.max_epochs = 30;
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let ckpt =
        train_integration_model(&pairs, None, &BackboneSpec::Tiny(TinyConfig::default()), &config, dir.path()).unwrap();
    let em = integration_exact_match(ckpt.backbone.as_ref(), &pairs).unwrap();
    eprintln!("integration exact match {em:.3} in {:?}", start.elapsed());
    assert!(em >= 0.9, "integration training exact match {em}");
}
