use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KnowledgeProvider;
use crate::dataset::read_json;
use crate::error::{ProviderError, Result};

/// Provider with no knowledge at all; every lookup is absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoKnowledge;

impl KnowledgeProvider for NoKnowledge {
    fn gloss(&self, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }
    fn wiki_summary(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }
    fn ner_category(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }
}

/// File-backed provider: `{"gloss": {noun: text}, "wiki": {proper: text}, "ner": {proper: label}}`.
/// Glosses fall back to a lowercase key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureKnowledgeProvider {
    #[serde(default)]
    pub gloss: HashMap<String, String>,
    #[serde(default)]
    pub wiki: HashMap<String, String>,
    #[serde(default)]
    pub ner: HashMap<String, String>,
}

impl FixtureKnowledgeProvider {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }
}

impl KnowledgeProvider for FixtureKnowledgeProvider {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError> {
        Ok(self.gloss.get(common_noun).or_else(|| self.gloss.get(&common_noun.to_lowercase())).cloned())
    }
    fn wiki_summary(&self, proper_noun: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(self.wiki.get(proper_noun).cloned())
    }
    fn ner_category(&self, proper_noun: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(self.ner.get(proper_noun).cloned())
    }
}

/// One provider per source; a missing slot answers absent.
#[derive(Default)]
pub struct CompositeProvider {
    pub gloss: Option<Box<dyn KnowledgeProvider>>,
    pub wiki: Option<Box<dyn KnowledgeProvider>>,
    pub ner: Option<Box<dyn KnowledgeProvider>>,
}

impl KnowledgeProvider for CompositeProvider {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError> {
        self.gloss.as_ref().map_or(Ok(None), |p| p.gloss(common_noun))
    }
    fn wiki_summary(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        self.wiki.as_ref().map_or(Ok(None), |p| p.wiki_summary(proper_noun, sentence))
    }
    fn ner_category(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        self.ner.as_ref().map_or(Ok(None), |p| p.ner_category(proper_noun, sentence))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_lookup_and_composite_routing() {
        let fx: FixtureKnowledgeProvider = serde_json::from_str(r#"{"gloss":{"monk":"a religious man"},"ner":{"Buddhist":"NORP"}}"#).unwrap();
        assert_eq!(fx.gloss("Monk").unwrap().as_deref(), Some("a religious man"));
        assert_eq!(fx.wiki_summary("Buddhist", "").unwrap(), None);
        let composite = CompositeProvider { ner: Some(Box::new(fx)), ..Default::default() };
        assert_eq!(composite.gloss("monk").unwrap(), None);
        assert_eq!(composite.ner_category("Buddhist", "").unwrap().as_deref(), Some("NORP"));
    }
}
