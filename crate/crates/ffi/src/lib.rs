//! C interface to the scoring, detection, prompt and inference code.
//!
//! Every function returns a [`PncStatus`]. On failure the message is kept
//! per thread and read with [`pnc_last_error`]. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`pnc_string_free`]; handles are released with their `_free` function.
//! A null gold or prediction string stands for "non-compositional".

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pnc_core::detect::{detect_pncs, ParsedSentence};
use pnc_core::error::Error;
use pnc_core::eval::{evaluate, kendall_tau_b, score_pair, NgramMatcher, Pair};
use pnc_core::knowledge::{build_prompt, stack_prompts, FixtureKnowledgeProvider, KnowledgeProvider, KnowledgeSource, NoKnowledge};
use pnc_core::model::checkpoint::{Checkpoint, ModelKind};
use pnc_core::model::{mtgen_predict, unigen_predict};
use pnc_core::types::{Interpretation, NounCompound};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PncStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidData = 3,
    InvalidConfig = 4,
    Io = 5,
    Provider = 6,
    Backbone = 7,
    Undefined = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(PncStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => PncStatus::Io,
            Error::Record { .. } | Error::Data(_) => PncStatus::InvalidData,
            Error::Config(_) => PncStatus::InvalidConfig,
            Error::Provider(_) => PncStatus::Provider,
            Error::Backbone(_) => PncStatus::Backbone,
            Error::Undefined(_) => PncStatus::Undefined,
        };
        Failure(status, e.to_string())
    }
}

impl From<pnc_core::error::ProviderError> for Failure {
    fn from(e: pnc_core::error::ProviderError) -> Self {
        Failure(PncStatus::Provider, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PncStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PncStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(PncStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(PncStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn interpretation_arg(p: *const c_char, name: &str) -> Result<Interpretation, Failure> {
    if p.is_null() {
        Ok(Interpretation::NonCompositional)
    } else {
        Ok(Interpretation::Paraphrase(str_arg(p, name)?.to_owned()))
    }
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(PncStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    *out = CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw();
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pnc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn pnc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Sem/Ex-Match score of one pair with the n-gram matcher.
///
/// # Safety
/// String arguments are null or valid NUL-terminated strings; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_score_pair(gold: *const c_char, pred: *const c_char, out: *mut f64) -> PncStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let (g, p) = (interpretation_arg(gold, "gold")?, interpretation_arg(pred, "pred")?);
        *out = score_pair(&g, &p, &NgramMatcher)?;
        Ok(())
    })
}

/// Kendall's τ-b of two series of length `n`. Undefined inputs (constant
/// series, n < 2) return `Undefined`.
///
/// # Safety
/// `x` and `y` point at `n` doubles; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_kendall_tau_b(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> PncStatus {
    guard(|| {
        out_ptr(out, "out")?;
        if x.is_null() || y.is_null() {
            return Err(Failure(PncStatus::NullArgument, "series pointer is null".into()));
        }
        let (xs, ys) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        *out = kendall_tau_b(xs, ys).ok_or(Error::Undefined("Kendall tau-b"))?;
        Ok(())
    })
}

/// Accumulates (gold, prediction) pairs for a corpus-level report.
pub struct PncEvaluator {
    pairs: Vec<Pair>,
}

/// # Safety
/// `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_evaluator_new(out: *mut *mut PncEvaluator) -> PncStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(PncEvaluator { pairs: Vec::new() }));
        Ok(())
    })
}

/// # Safety
/// `ev` comes from [`pnc_evaluator_new`]; strings are null or valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_evaluator_add(ev: *mut PncEvaluator, gold: *const c_char, pred: *const c_char) -> PncStatus {
    guard(|| {
        let ev = ev.as_mut().ok_or(Failure(PncStatus::NullArgument, "evaluator is null".into()))?;
        ev.pairs.push((interpretation_arg(gold, "gold")?, interpretation_arg(pred, "pred")?));
        Ok(())
    })
}

/// JSON evaluation report over the pairs added so far.
///
/// # Safety
/// `ev` comes from [`pnc_evaluator_new`]; `out_json` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_evaluator_report(ev: *const PncEvaluator, out_json: *mut *mut c_char) -> PncStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        let ev = ev.as_ref().ok_or(Failure(PncStatus::NullArgument, "evaluator is null".into()))?;
        let report = evaluate(&ev.pairs, &[&NgramMatcher])?;
        put_string(out_json, serde_json::to_string(&report).map_err(Error::data)?);
        Ok(())
    })
}

/// # Safety
/// `ev` is null or comes from [`pnc_evaluator_new`] and is not used again.
#[no_mangle]
pub unsafe extern "C" fn pnc_evaluator_free(ev: *mut PncEvaluator) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// Compounds in a dependency parse given as JSON
/// (`{"text", "tokens": [{"text","pos","head","dep","start","end"}]}`),
/// returned as a JSON array.
///
/// # Safety
/// `parse_json` is a valid string; `out_json` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_detect(parse_json: *const c_char, out_json: *mut *mut c_char) -> PncStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        let raw: ParsedSentence =
            serde_json::from_str(str_arg(parse_json, "parse_json")?).map_err(|e| Error::data(format!("parse JSON: {e}")))?;
        let parsed = ParsedSentence::new(raw.text, raw.tokens)?;
        put_string(out_json, serde_json::to_string(&detect_pncs(&parsed)).map_err(Error::data)?);
        Ok(())
    })
}

unsafe fn knowledge_arg(p: *const c_char) -> Result<Box<dyn KnowledgeProvider>, Failure> {
    if p.is_null() {
        return Ok(Box::new(NoKnowledge));
    }
    let fixture: FixtureKnowledgeProvider =
        serde_json::from_str(str_arg(p, "knowledge_json")?).map_err(|e| Error::data(format!("knowledge JSON: {e}")))?;
    Ok(Box::new(fixture))
}

unsafe fn compound_arg(proper: *const c_char, common: *const c_char, sentence: *const c_char) -> Result<NounCompound, Failure> {
    let (p, c) = (str_arg(proper, "proper_noun")?, str_arg(common, "common_noun")?);
    Ok(if sentence.is_null() { NounCompound::bare(p, c)? } else { NounCompound::locate(p, c, str_arg(sentence, "sentence")?)? })
}

/// Knowledge prompt for one source name (`none`, `sentence`, `wordnet-nn`,
/// `wiki-nnp`, `ner-nnp`). `knowledge_json` is null or
/// `{"gloss": {..}, "wiki": {..}, "ner": {..}}`; `sentence` may be null.
///
/// # Safety
/// String arguments are valid or null where allowed; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_build_prompt(
    proper_noun: *const c_char,
    common_noun: *const c_char,
    sentence: *const c_char,
    source: *const c_char,
    knowledge_json: *const c_char,
    out: *mut *mut c_char,
) -> PncStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let nc = compound_arg(proper_noun, common_noun, sentence)?;
        let source: KnowledgeSource = str_arg(source, "source")?.parse()?;
        let provider = knowledge_arg(knowledge_json)?;
        put_string(out, build_prompt(&nc, source, provider.as_ref())?.text);
        Ok(())
    })
}

/// A trained interpretation checkpoint with its knowledge provider.
pub struct PncModel {
    checkpoint: Checkpoint,
    provider: Box<dyn KnowledgeProvider>,
}

/// Load a UniGen or MtGen checkpoint directory.
///
/// # Safety
/// `dir` is valid; `knowledge_json` is null or valid; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_model_load(dir: *const c_char, knowledge_json: *const c_char, out: *mut *mut PncModel) -> PncStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let checkpoint = Checkpoint::load(str_arg(dir, "dir")?)?;
        if checkpoint.config.model == ModelKind::Integration {
            return Err(Error::config("an integration checkpoint cannot interpret compounds").into());
        }
        *out = Box::into_raw(Box::new(PncModel { checkpoint, provider: knowledge_arg(knowledge_json)? }));
        Ok(())
    })
}

/// Interpret one compound. On success `*out_compositional` is 1 and
/// `*out_paraphrase` holds the paraphrase, or it is 0 and `*out_paraphrase`
/// is null.
///
/// # Safety
/// `model` comes from [`pnc_model_load`]; strings are valid (`sentence` may
/// be null); out-parameters are valid.
#[no_mangle]
pub unsafe extern "C" fn pnc_model_interpret(
    model: *const PncModel,
    proper_noun: *const c_char,
    common_noun: *const c_char,
    sentence: *const c_char,
    out_compositional: *mut i32,
    out_paraphrase: *mut *mut c_char,
) -> PncStatus {
    guard(|| {
        out_ptr(out_compositional, "out_compositional")?;
        out_ptr(out_paraphrase, "out_paraphrase")?;
        let model = model.as_ref().ok_or(Failure(PncStatus::NullArgument, "model is null".into()))?;
        let nc = compound_arg(proper_noun, common_noun, sentence)?;
        let input = stack_prompts(&nc, &model.checkpoint.config.knowledge, model.provider.as_ref())?;
        let result = match model.checkpoint.config.model {
            ModelKind::Mtgen => mtgen_predict(&model.checkpoint, &nc, &input)?,
            _ => unigen_predict(&model.checkpoint, &nc, &input)?,
        };
        match result {
            Interpretation::Paraphrase(text) => {
                *out_compositional = 1;
                put_string(out_paraphrase, text);
            }
            Interpretation::NonCompositional => {
                *out_compositional = 0;
                *out_paraphrase = ptr::null_mut();
            }
        }
        Ok(())
    })
}

/// # Safety
/// `model` is null or comes from [`pnc_model_load`] and is not used again.
#[no_mangle]
pub unsafe extern "C" fn pnc_model_free(model: *mut PncModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
