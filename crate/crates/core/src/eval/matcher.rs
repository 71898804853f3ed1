//! Semantic matcher plug-ins other than the n-gram score.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;

use crate::dataset::read_jsonl;
use crate::error::{ProviderError, Result};
use crate::http::JsonHttp;

/// Graded similarity between a gold and a predicted paraphrase.
pub trait SemanticMatcher: Send + Sync {
    /// Identity string recorded in reports (name and version).
    fn id(&self) -> String;
    fn range(&self) -> (f64, f64);
    fn score(&self, gold: &str, pred: &str) -> Result<f64, ProviderError>;

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, ProviderError> {
        pairs.iter().map(|(g, p)| self.score(g, p)).collect()
    }
}

/// Returns the same value for every pair.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMatcher(pub f64);

impl SemanticMatcher for ConstantMatcher {
    fn id(&self) -> String {
        format!("constant-{}", self.0)
    }
    fn range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn score(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
        Ok(self.0)
    }
}

/// Pre-computed scores from a JSONL file of `{"gold","prediction","score"}`.
#[derive(Debug, Clone, Default)]
pub struct FixtureMatcher {
    name: String,
    scores: HashMap<(String, String), f64>,
}

#[derive(Deserialize)]
struct ScoreRecord {
    gold: String,
    prediction: String,
    score: f64,
}

impl FixtureMatcher {
    pub fn new(name: impl Into<String>, scores: impl IntoIterator<Item = ((String, String), f64)>) -> Self {
        FixtureMatcher { name: name.into(), scores: scores.into_iter().collect() }
    }

    pub fn from_file(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let records: Vec<ScoreRecord> = read_jsonl(path)?;
        Ok(FixtureMatcher::new(name, records.into_iter().map(|r| ((r.gold, r.prediction), r.score))))
    }
}

impl SemanticMatcher for FixtureMatcher {
    fn id(&self) -> String {
        format!("fixture-{}", self.name)
    }
    fn range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn score(&self, gold: &str, pred: &str) -> Result<f64, ProviderError> {
        self.scores.get(&(gold.to_owned(), pred.to_owned())).copied().ok_or_else(|| ProviderError::Missing {
            service: self.id(),
            query: format!("{gold} ||| {pred}"),
        })
    }
}

/// Learned scorer served over HTTP.
///
/// `POST <url>` with `{"references": [...], "candidates": [...]}` answers
/// `{"scores": [...], "version": "..."}`. The version from the first reply
/// is folded into [`SemanticMatcher::id`].
pub struct HttpMatcher {
    url: String,
    http: JsonHttp,
    range: (f64, f64),
    version: Mutex<Option<String>>,
    batch_size: usize,
}

impl HttpMatcher {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpMatcher { url: url.into(), http: JsonHttp::new("learned matcher", timeout), range: (0.0, 1.0), version: Mutex::new(None), batch_size: 64 }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = (lo, hi);
        self
    }

    /// Cheap availability probe: scores one identical pair.
    pub fn ping(&self) -> Result<f64, ProviderError> {
        self.score("a", "a")
    }
}

impl SemanticMatcher for HttpMatcher {
    fn id(&self) -> String {
        match &*self.version.lock().unwrap_or_else(|p| p.into_inner()) {
            Some(v) => format!("learned:{v}"),
            None => format!("learned:{}", self.url),
        }
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }

    fn score(&self, gold: &str, pred: &str) -> Result<f64, ProviderError> {
        Ok(self.score_batch(&[(gold, pred)])?[0])
    }

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, ProviderError> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.batch_size.max(1)) {
            let refs: Vec<&str> = chunk.iter().map(|p| p.0).collect();
            let cands: Vec<&str> = chunk.iter().map(|p| p.1).collect();
            let resp = self.http.post(&self.url, &serde_json::json!({ "references": refs, "candidates": cands }))?;
            let scores = resp
                .get("scores")
                .and_then(Value::as_array)
                .ok_or_else(|| ProviderError::protocol("learned matcher", "response lacks a scores array"))?;
            if scores.len() != chunk.len() {
                return Err(ProviderError::protocol(
                    "learned matcher",
                    format!("asked for {} scores, got {}", chunk.len(), scores.len()),
                ));
            }
            for s in scores {
                out.push(s.as_f64().ok_or_else(|| ProviderError::protocol("learned matcher", "non-numeric score"))?);
            }
            if let Some(v) = resp.get("version").and_then(Value::as_str) {
                *self.version.lock().unwrap_or_else(|p| p.into_inner()) = Some(v.to_owned());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::mock;

    #[test]
    fn http_matcher_batches_and_records_version() {
        let server = mock::serve(|_, body| {
            let req: Value = serde_json::from_str(body).unwrap();
            let n = req["candidates"].as_array().unwrap().len();
            let scores: Vec<f64> = (0..n).map(|i| if req["candidates"][i] == req["references"][i] { 0.98 } else { 0.1 }).collect();
            (200, serde_json::json!({ "scores": scores, "version": "bleurt-test" }).to_string())
        });
        let mut m = HttpMatcher::new(format!("{}/score", server.url), Duration::from_secs(5));
        m.batch_size = 2;
        let got = m.score_batch(&[("a b", "a b"), ("a", "c"), ("x", "x")]).unwrap();
        assert_eq!(got, vec![0.98, 0.1, 0.98]);
        assert_eq!(m.id(), "learned:bleurt-test");
        assert_eq!(server.requests.lock().unwrap().len(), 2);
    }

    #[test]
    fn unreachable_scorer_is_a_transport_error() {
        let m = HttpMatcher::new("http://127.0.0.1:1/score", Duration::from_millis(300));
        assert!(matches!(m.ping(), Err(ProviderError::Transport { .. })));
    }

    #[test]
    fn fixture_matcher_reports_missing_pairs() {
        let m = FixtureMatcher::new("t", [(("g".to_owned(), "p".to_owned()), 0.4)]);
        assert_eq!(m.score("g", "p").unwrap(), 0.4);
        assert!(matches!(m.score("g", "q"), Err(ProviderError::Missing { .. })));
    }
}
