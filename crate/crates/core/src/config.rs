//! Declarative descriptions of knowledge providers and matchers, shared by
//! the command line and the experiment runner.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{FixtureMatcher, HttpMatcher, NgramMatcher, SemanticMatcher};
use crate::knowledge::{
    CacheStats, CachedProvider, CompositeProvider, FixtureKnowledgeProvider, HttpNerClient, KnowledgeProvider,
    WikipediaClient, WordNet,
};

fn default_timeout() -> u64 {
    10
}

/// Where each kind of knowledge comes from. A fixture file answers every
/// source it has entries for; a dedicated backend overrides it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub fixture: Option<PathBuf>,
    /// WordNet `dict/` directory for common-noun glosses.
    pub wordnet: Option<PathBuf>,
    /// Wikipedia REST base URL for proper-noun summaries.
    pub wikipedia: Option<String>,
    /// NER tagging service URL.
    pub ner: Option<String>,
    /// JSON file the answers are cached in across runs.
    pub cache: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

pub struct Providers {
    cached: CachedProvider<CompositeProvider>,
    cache_path: Option<PathBuf>,
}

impl Providers {
    pub fn provider(&self) -> &dyn KnowledgeProvider {
        &self.cached
    }

    pub fn stats(&self) -> CacheStats {
        self.cached.stats()
    }

    /// Write the cache file, if one is configured.
    pub fn save(&self) -> Result<()> {
        match &self.cache_path {
            Some(p) => self.cached.save(p),
            None => Ok(()),
        }
    }
}

impl ProviderConfig {
    pub fn build(&self) -> Result<Providers> {
        let timeout = Duration::from_secs(self.timeout_secs.max(1));
        let fixture = self.fixture.as_ref().map(FixtureKnowledgeProvider::from_file).transpose()?;
        let boxed = |f: &Option<FixtureKnowledgeProvider>| f.clone().map(|f| Box::new(f) as Box<dyn KnowledgeProvider>);
        let composite = CompositeProvider {
            gloss: match &self.wordnet {
                Some(dir) => Some(Box::new(WordNet::open(dir)?)),
                None => boxed(&fixture),
            },
            wiki: match &self.wikipedia {
                Some(url) => Some(Box::new(WikipediaClient::new(url.clone(), timeout))),
                None => boxed(&fixture),
            },
            ner: match &self.ner {
                Some(url) => Some(Box::new(HttpNerClient::new(url.clone(), timeout))),
                None => boxed(&fixture),
            },
        };
        let cached = match &self.cache {
            Some(p) => CachedProvider::with_file(composite, p)?,
            None => CachedProvider::new(composite),
        };
        Ok(Providers { cached, cache_path: self.cache.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatcherSpec {
    Ngram,
    /// Pre-computed scores, JSONL of `{"gold","prediction","score"}`.
    Fixture { name: String, path: PathBuf },
    /// Learned scorer behind HTTP.
    Http {
        url: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

impl MatcherSpec {
    pub fn build(&self) -> Result<Box<dyn SemanticMatcher>> {
        Ok(match self {
            MatcherSpec::Ngram => Box::new(NgramMatcher),
            MatcherSpec::Fixture { name, path } => Box::new(FixtureMatcher::from_file(name.clone(), path)?),
            MatcherSpec::Http { url, timeout_secs } => {
                Box::new(HttpMatcher::new(url.clone(), Duration::from_secs((*timeout_secs).max(1))))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_answers_every_source() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.json");
        std::fs::write(&path, r#"{"gloss":{"monks":"a religious man"},"ner":{"Buddhist":"NORP"}}"#).unwrap();
        let cache = dir.path().join("cache.json");
        let cfg = ProviderConfig { fixture: Some(path), cache: Some(cache.clone()), ..Default::default() };
        let p = cfg.build().unwrap();
        assert_eq!(p.provider().gloss("monks").unwrap().as_deref(), Some("a religious man"));
        assert_eq!(p.provider().ner_category("Buddhist", "s").unwrap().as_deref(), Some("NORP"));
        assert_eq!(p.provider().wiki_summary("Buddhist", "s").unwrap(), None);
        p.save().unwrap();
        assert!(cache.exists());
    }

    #[test]
    fn matcher_spec_from_toml() {
        let m: MatcherSpec = toml::from_str("kind = \"ngram\"").unwrap();
        assert_eq!(m.build().unwrap().id(), "ngram-bleu4-add1");
    }
}
