//! Network-backed knowledge providers.

use std::time::Duration;

use serde_json::Value;

use super::KnowledgeProvider;
use crate::error::ProviderError;
use crate::http::{encode_component, JsonHttp};

const WIKI_SERVICE: &str = "wikipedia";

/// First paragraph of an encyclopedia article via the MediaWiki REST summary
/// endpoint. Links by exact title first, then by the top search hit.
pub struct WikipediaClient {
    base: String,
    http: JsonHttp,
}

impl WikipediaClient {
    pub const DEFAULT_BASE: &'static str = "https://en.wikipedia.org";

    pub fn new(base: impl Into<String>, timeout: Duration) -> Self {
        WikipediaClient { base: base.into().trim_end_matches('/').to_owned(), http: JsonHttp::new(WIKI_SERVICE, timeout) }
    }

    fn summary(&self, title: &str) -> Result<Option<String>, ProviderError> {
        let url = format!("{}/api/rest_v1/page/summary/{}", self.base, encode_component(&title.replace(' ', "_")));
        let Some(doc) = self.http.get(&url)? else { return Ok(None) };
        if doc.get("type").and_then(Value::as_str) == Some("disambiguation") {
            return Ok(None);
        }
        let extract = doc
            .get("extract")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::protocol(WIKI_SERVICE, format!("summary for {title:?} has no extract")))?;
        let first = extract.split('\n').map(str::trim).find(|p| !p.is_empty());
        Ok(first.map(str::to_owned))
    }

    fn search_top(&self, query: &str) -> Result<Option<String>, ProviderError> {
        let url = format!(
            "{}/w/api.php?action=query&list=search&format=json&srlimit=1&srsearch={}",
            self.base,
            encode_component(query)
        );
        let Some(doc) = self.http.get(&url)? else { return Ok(None) };
        let hits = doc
            .pointer("/query/search")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::protocol(WIKI_SERVICE, "search response lacks query.search"))?;
        Ok(hits.first().and_then(|h| h.get("title")).and_then(Value::as_str).map(str::to_owned))
    }
}

impl KnowledgeProvider for WikipediaClient {
    fn gloss(&self, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }

    fn wiki_summary(&self, proper_noun: &str, _: &str) -> Result<Option<String>, ProviderError> {
        if let Some(s) = self.summary(proper_noun)? {
            return Ok(Some(s));
        }
        match self.search_top(proper_noun)? {
            Some(title) if title != proper_noun => self.summary(&title),
            _ => Ok(None),
        }
    }

    fn ner_category(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }
}

/// Entity tagger behind an HTTP endpoint. Request `{"text", "entity"}`,
/// response `{"label": string|null}`.
pub struct HttpNerClient {
    url: String,
    http: JsonHttp,
}

impl HttpNerClient {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpNerClient { url: url.into(), http: JsonHttp::new("ner", timeout) }
    }
}

impl KnowledgeProvider for HttpNerClient {
    fn gloss(&self, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }

    fn wiki_summary(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }

    fn ner_category(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        let resp = self.http.post(&self.url, &serde_json::json!({ "text": sentence, "entity": proper_noun }))?;
        match resp.get("label") {
            Some(Value::String(s)) if !s.trim().is_empty() => Ok(Some(s.clone())),
            Some(Value::Null) | Some(Value::String(_)) => Ok(None),
            _ => Err(ProviderError::protocol("ner", "response lacks a label field")),
        }
    }
}
