//! Hybrid exact/semantic scoring of interpretations.
//!
//! `Score(g, p)` is label agreement (1 or 0) when either side is
//! non-compositional and the matcher score on the two full paraphrases
//! when both are compositional.

mod correlation;
mod matcher;
mod ngram;
mod significance;

use std::collections::{HashMap, HashSet};

use serde::{Serialize, Serializer};

use crate::dataset::PredictionRecord;
use crate::error::{Error, ProviderError, Result};
use crate::model::serialize_target;
use crate::types::{DatasetExample, Interpretation, NounCompound};

pub use correlation::{kendall_tau_b, metric_correlation, pearson, read_judgements, Correlation, Judgement, Rating};
pub use matcher::{ConstantMatcher, FixtureMatcher, HttpMatcher, SemanticMatcher};
pub use ngram::{ngram_score, sentence_score, tokenize, NgramMatcher};
pub use significance::{paired_t_test, TTest};

/// A statistic that may be undefined (zero denominator) or absent (its
/// matcher was unavailable). Serialized as a number, `"undefined"` or `"absent"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stat {
    Value(f64),
    Undefined,
    Absent,
}

impl Stat {
    pub fn value(self) -> Option<f64> {
        match self {
            Stat::Value(v) => Some(v),
            _ => None,
        }
    }

    fn ratio(num: usize, den: usize) -> Stat {
        if den == 0 {
            Stat::Undefined
        } else {
            Stat::Value(num as f64 / den as f64)
        }
    }
}

impl From<Option<f64>> for Stat {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Stat::Undefined, Stat::Value)
    }
}

impl Serialize for Stat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Stat::Value(v) => s.serialize_f64(*v),
            Stat::Undefined => s.serialize_str("undefined"),
            Stat::Absent => s.serialize_str("absent"),
        }
    }
}

/// (gold, prediction)
pub type Pair = (Interpretation, Interpretation);

/// Order-independent mean: values are sorted before summation so any
/// permutation of the input gives a bit-identical result.
pub fn stable_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

pub fn score_pair(g: &Interpretation, p: &Interpretation, matcher: &dyn SemanticMatcher) -> Result<f64, ProviderError> {
    match (g, p) {
        (Interpretation::Paraphrase(gt), Interpretation::Paraphrase(pt)) => matcher.score(gt, pt),
        _ => Ok(if g.is_compositional() == p.is_compositional() { 1.0 } else { 0.0 }),
    }
}

/// Label confusion counts with compositional as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: &[Pair]) -> Self {
        let mut c = Confusion::default();
        for (g, p) in pairs {
            match (g.is_compositional(), p.is_compositional()) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExMatchStats {
    pub confusion: Confusion,
    pub precision: Stat,
    pub recall: Stat,
    pub accuracy: Stat,
    /// Precision and recall with non-compositional as the positive class.
    pub non_cmp_precision: Stat,
    pub non_cmp_recall: Stat,
}

pub fn ex_match_stats(pairs: &[Pair]) -> ExMatchStats {
    let c = Confusion::from_pairs(pairs);
    ExMatchStats {
        confusion: c,
        precision: Stat::ratio(c.tp, c.tp + c.fp),
        recall: Stat::ratio(c.tp, c.tp + c.fn_),
        accuracy: Stat::ratio(c.tp + c.tn, c.total()),
        non_cmp_precision: Stat::ratio(c.tn, c.tn + c.fn_),
        non_cmp_recall: Stat::ratio(c.tn, c.tn + c.fp),
    }
}

/// Mean matcher score over pairs where both sides are compositional, with
/// the number of such pairs.
pub fn sem_match_mean(pairs: &[Pair], matcher: &dyn SemanticMatcher) -> Result<(Stat, usize), ProviderError> {
    let both: Vec<(&str, &str)> = pairs
        .iter()
        .filter_map(|(g, p)| Some((g.paraphrase()?, p.paraphrase()?)))
        .collect();
    let scores = matcher.score_batch(&both)?;
    Ok((stable_mean(&scores).into(), both.len()))
}

/// Per-pair `Score(g, p)` values.
pub fn pair_scores(pairs: &[Pair], matcher: &dyn SemanticMatcher) -> Result<Vec<f64>, ProviderError> {
    let both: Vec<(&str, &str)> = pairs
        .iter()
        .filter_map(|(g, p)| Some((g.paraphrase()?, p.paraphrase()?)))
        .collect();
    let mut sem = matcher.score_batch(&both)?.into_iter();
    Ok(pairs
        .iter()
        .map(|(g, p)| match (g.is_compositional(), p.is_compositional()) {
            (true, true) => sem.next().unwrap_or(0.0),
            (a, b) => f64::from(u8::from(a == b)),
        })
        .collect())
}

/// Mean of `Score(g, p)` over all pairs.
pub fn combined_mean(pairs: &[Pair], matcher: &dyn SemanticMatcher) -> Result<Stat, ProviderError> {
    Ok(stable_mean(&pair_scores(pairs, matcher)?).into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatcherReport {
    pub matcher: String,
    pub available: bool,
    pub sem_mean: Stat,
    pub combined_mean: Stat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_total: usize,
    pub n_both_cmp: usize,
    pub ex_precision: Stat,
    pub ex_recall: Stat,
    pub ex_accuracy: Stat,
    pub ex_match: ExMatchStats,
    pub matchers: Vec<MatcherReport>,
}

impl EvalReport {
    pub fn matcher(&self, id_prefix: &str) -> Option<&MatcherReport> {
        self.matchers.iter().find(|m| m.matcher.starts_with(id_prefix))
    }
}

/// Full report. A matcher that fails is reported as unavailable with its
/// columns absent; the other matchers are unaffected.
pub fn evaluate(pairs: &[Pair], matchers: &[&dyn SemanticMatcher]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::data("nothing to evaluate: no prediction pairs"));
    }
    let ex = ex_match_stats(pairs);
    let mut reports = Vec::with_capacity(matchers.len());
    for m in matchers {
        let outcome = pair_scores(pairs, *m).map(|scores| {
            let sem: Vec<f64> = scores
                .iter()
                .zip(pairs)
                .filter(|(_, (g, p))| g.is_compositional() && p.is_compositional())
                .map(|(s, _)| *s)
                .collect();
            (Stat::from(stable_mean(&sem)), Stat::from(stable_mean(&scores)))
        });
        reports.push(match outcome {
            Ok((sem, comb)) => MatcherReport { matcher: m.id(), available: true, sem_mean: sem, combined_mean: comb, note: None },
            Err(e) => {
                log::warn!("matcher {} unavailable: {e}", m.id());
                MatcherReport {
                    matcher: m.id(),
                    available: false,
                    sem_mean: Stat::Absent,
                    combined_mean: Stat::Absent,
                    note: Some(e.to_string()),
                }
            }
        });
    }
    Ok(EvalReport {
        n_total: pairs.len(),
        n_both_cmp: ex.confusion.tp,
        ex_precision: ex.precision,
        ex_recall: ex.recall,
        ex_accuracy: ex.accuracy,
        ex_match: ex,
        matchers: reports,
    })
}

/// A gold example with its prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub id: String,
    pub compound: NounCompound,
    pub gold: Interpretation,
    pub prediction: Interpretation,
}

impl EvalItem {
    pub fn pair(&self) -> Pair {
        (self.gold.clone(), self.prediction.clone())
    }
}

pub fn pairs_of(items: &[EvalItem]) -> Vec<Pair> {
    items.iter().map(EvalItem::pair).collect()
}

/// Join predictions to gold examples by id. Every gold example needs exactly
/// one prediction; predictions for unknown ids are an error.
pub fn align(gold: &[DatasetExample], predictions: &[PredictionRecord]) -> Result<Vec<EvalItem>> {
    let mut by_id: HashMap<&str, &Interpretation> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.id.as_str(), &p.prediction).is_some() {
            return Err(Error::data(format!("duplicate prediction for id {:?}", p.id)));
        }
    }
    let known: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    if let Some(extra) = predictions.iter().find(|p| !known.contains(p.id.as_str())) {
        return Err(Error::data(format!("prediction for unknown id {:?}", extra.id)));
    }
    gold.iter()
        .map(|g| {
            let p = by_id.get(g.id.as_str()).ok_or_else(|| Error::data(format!("no prediction for id {:?}", g.id)))?;
            Ok(EvalItem { id: g.id.clone(), compound: g.compound.clone(), gold: g.gold.clone(), prediction: (*p).clone() })
        })
        .collect()
}

/// The template-only prediction used by the probe.
pub fn dummy_relation(nc: &NounCompound) -> String {
    format!("{} is none of {}", nc.text(), nc.common_noun)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemplateScore {
    pub matcher: String,
    /// Mean matcher score of serialized gold targets against themselves.
    pub faithful: Stat,
    /// Same with the dummy relation in place of each non-compositional prediction.
    pub dummy: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub n_replaced: usize,
    pub report: EvalReport,
    pub template: Vec<TemplateScore>,
}

/// Replace the prediction of every gold-non-compositional item with the
/// dummy relation and re-evaluate. The template section scores serialized
/// targets directly, exposing how much credit a matcher gives to template
/// words alone.
pub fn dummy_relation_probe(items: &[EvalItem], matchers: &[&dyn SemanticMatcher]) -> Result<ProbeReport> {
    let mut n_replaced = 0;
    let probed: Vec<EvalItem> = items
        .iter()
        .map(|it| {
            let mut it = it.clone();
            if !it.gold.is_compositional() {
                it.prediction = Interpretation::Paraphrase(dummy_relation(&it.compound));
                n_replaced += 1;
            }
            it
        })
        .collect();
    let report = evaluate(&pairs_of(&probed), matchers)?;
    let gold_text: Vec<String> = items.iter().map(|it| serialize_target(&it.compound, &it.gold)).collect();
    let probe_text: Vec<String> = probed
        .iter()
        .zip(items)
        .map(|(p, orig)| if orig.gold.is_compositional() { serialize_target(&orig.compound, &orig.gold) } else { serialize_target(&p.compound, &p.prediction) })
        .collect();
    let mut template = Vec::new();
    for m in matchers {
        let faithful: Vec<(&str, &str)> = gold_text.iter().map(|g| (g.as_str(), g.as_str())).collect();
        let dummy: Vec<(&str, &str)> = gold_text.iter().zip(&probe_text).map(|(g, p)| (g.as_str(), p.as_str())).collect();
        let entry = match (m.score_batch(&faithful), m.score_batch(&dummy)) {
            (Ok(f), Ok(d)) => TemplateScore { matcher: m.id(), faithful: stable_mean(&f).into(), dummy: stable_mean(&d).into() },
            _ => TemplateScore { matcher: m.id(), faithful: Stat::Absent, dummy: Stat::Absent },
        };
        template.push(entry);
    }
    Ok(ProbeReport { n_replaced, report, template })
}
