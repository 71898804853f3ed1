use std::ffi::{CStr, CString};
use std::ptr;

use pnc_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    pnc_string_free(p);
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pnc_last_error()).to_str().unwrap().to_owned() }
}

#[test]
fn scores_and_gate() {
    let mut out = -1.0;
    let g = c("Paris museum is a museum in Paris");
    unsafe {
        assert_eq!(pnc_score_pair(g.as_ptr(), g.as_ptr(), &mut out), PncStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(pnc_score_pair(ptr::null(), ptr::null(), &mut out), PncStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(pnc_score_pair(g.as_ptr(), ptr::null(), &mut out), PncStatus::Ok);
        assert_eq!(out, 0.0);
        assert_eq!(pnc_score_pair(g.as_ptr(), g.as_ptr(), ptr::null_mut()), PncStatus::NullArgument);
        assert!(last_error().contains("out"));
        let bad = [0xffu8, 0];
        assert_eq!(pnc_score_pair(bad.as_ptr().cast(), g.as_ptr(), &mut out), PncStatus::InvalidUtf8);
    }
}

#[test]
fn kendall_through_c() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [10.0, 20.0, 30.0, 40.0];
    let mut out = 0.0;
    unsafe {
        assert_eq!(pnc_kendall_tau_b(x.as_ptr(), y.as_ptr(), 4, &mut out), PncStatus::Ok);
        assert_eq!(out, 1.0);
        let flat = [1.0; 4];
        assert_eq!(pnc_kendall_tau_b(x.as_ptr(), flat.as_ptr(), 4, &mut out), PncStatus::Undefined);
    }
}

#[test]
fn evaluator_handle() {
    unsafe {
        let mut ev = ptr::null_mut();
        assert_eq!(pnc_evaluator_new(&mut ev), PncStatus::Ok);
        let p = c("Covid vaccine is a vaccine against Covid");
        assert_eq!(pnc_evaluator_add(ev, p.as_ptr(), p.as_ptr()), PncStatus::Ok);
        assert_eq!(pnc_evaluator_add(ev, ptr::null(), ptr::null()), PncStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(pnc_evaluator_report(ev, &mut json), PncStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["n_total"], 2);
        assert_eq!(v["ex_accuracy"], 1.0);
        pnc_evaluator_free(ev);
        pnc_evaluator_free(ptr::null_mut());
    }
}

#[test]
fn detect_and_prompt() {
    let parse = c(r#"{"text":"Buddhist monks pray","tokens":[
        {"text":"Buddhist","pos":"PROPN","head":1,"dep":"compound","start":0,"end":8},
        {"text":"monks","pos":"NOUN","head":2,"dep":"nsubj","start":9,"end":14},
        {"text":"pray","pos":"VERB","head":2,"dep":"ROOT","start":15,"end":19}]}"#);
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(pnc_detect(parse.as_ptr(), &mut json), PncStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v[0]["proper_noun"], "Buddhist");
        let broken = c("{");
        assert_eq!(pnc_detect(broken.as_ptr(), &mut json), PncStatus::InvalidData);

        let k = c(r#"{"ner": {"Buddhist": "NORP"}}"#);
        let mut out = ptr::null_mut();
        let (p, n, src) = (c("Buddhist"), c("monks"), c("ner-nnp"));
        assert_eq!(pnc_build_prompt(p.as_ptr(), n.as_ptr(), ptr::null(), src.as_ptr(), k.as_ptr(), &mut out), PncStatus::Ok);
        assert_eq!(take(out), "Buddhist belongs to nationalities or religious groups [SEP] Buddhist monks");
        let bogus = c("bogus");
        assert_eq!(
            pnc_build_prompt(p.as_ptr(), n.as_ptr(), ptr::null(), bogus.as_ptr(), ptr::null(), &mut out),
            PncStatus::InvalidConfig
        );
    }
}

#[test]
fn model_handle_with_oracle_checkpoint() {
    use pnc_core::knowledge::NoKnowledge;
    use pnc_core::model::{unigen_train, BackboneSpec, TrainConfig, TrainSetup};
    use pnc_core::types::{DatasetExample, Interpretation, NounCompound};

    let ex = |id: &str, p: &str, n: &str, gold: Interpretation| DatasetExample {
        id: id.into(),
        compound: NounCompound::bare(p, n).unwrap(),
        gold,
    };
    let train = vec![
        ex("a", "Paris", "museum", Interpretation::Paraphrase("Paris museum is a museum in Paris".into())),
        ex("b", "Watergate", "scandal", Interpretation::NonCompositional),
    ];
    let val = vec![ex("c", "Tokyo", "subway", Interpretation::Paraphrase("Tokyo subway is a subway in Tokyo".into()))];
    let dir = tempfile::tempdir().unwrap();
    let setup = TrainSetup {
        knowledge: vec![],
        provider: &NoKnowledge,
        backbone: BackboneSpec::Oracle { answer_key: None },
        config: TrainConfig { max_epochs: 1, ..TrainConfig::default() },
    };
    unigen_train(&train, &val, &setup, dir.path()).unwrap();
    unsafe {
        let mut model = ptr::null_mut();
        let d = c(dir.path().to_str().unwrap());
        assert_eq!(pnc_model_load(d.as_ptr(), ptr::null(), &mut model), PncStatus::Ok);
        let (mut cmp, mut text) = (-1, ptr::null_mut());
        let (p, n) = (c("Paris"), c("museum"));
        assert_eq!(pnc_model_interpret(model, p.as_ptr(), n.as_ptr(), ptr::null(), &mut cmp, &mut text), PncStatus::Ok);
        assert_eq!((cmp, take(text)), (1, "Paris museum is a museum in Paris".to_owned()));
        let (p, n) = (c("Watergate"), c("scandal"));
        assert_eq!(pnc_model_interpret(model, p.as_ptr(), n.as_ptr(), ptr::null(), &mut cmp, &mut text), PncStatus::Ok);
        assert_eq!(cmp, 0);
        assert!(text.is_null());
        pnc_model_free(model);
        let missing = c("/no/such/checkpoint");
        assert_eq!(pnc_model_load(missing.as_ptr(), ptr::null(), &mut model), PncStatus::Io);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/pnc.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ double s; return pnc_score_pair(0, 0, &s) == PNC_STATUS_OK ? 0 : 1; }}\n")).unwrap();
    let status = std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("no C compiler available, skipping: {e}"),
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(pnc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
