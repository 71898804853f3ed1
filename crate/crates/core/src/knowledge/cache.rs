use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::KnowledgeProvider;
use crate::dataset::{read_json, write_json};
use crate::error::{ProviderError, Result};

type Table = BTreeMap<String, BTreeMap<String, Option<String>>>;

const GLOSS: &str = "gloss";
const WIKI: &str = "wiki";
const NER: &str = "ner";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

/// Cache-through wrapper. Answers (including absent ones) are remembered;
/// errors are not. Persisted as `{"gloss": {query: value|null}, "wiki": ..., "ner": ...}`.
/// NER queries are keyed by `"<proper noun> | <sentence>"` since taggers use context.
pub struct CachedProvider<P> {
    inner: P,
    table: Mutex<Table>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<P: KnowledgeProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        CachedProvider { inner, table: Mutex::new(Table::new()), hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    /// Start from a previously saved cache; a missing file means an empty cache.
    pub fn with_file(inner: P, path: impl AsRef<Path>) -> Result<Self> {
        let cache = CachedProvider::new(inner);
        if path.as_ref().exists() {
            *cache.table.lock().unwrap() = read_json(path)?;
        }
        Ok(cache)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let table = self.table.lock().unwrap_or_else(|p| p.into_inner());
        write_json(path, &*table)
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats { hits: self.hits.load(Ordering::Relaxed), misses: self.misses.load(Ordering::Relaxed) }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn through(
        &self,
        source: &str,
        query: String,
        fetch: impl FnOnce() -> Result<Option<String>, ProviderError>,
    ) -> Result<Option<String>, ProviderError> {
        if let Some(v) = self.table.lock().unwrap_or_else(|p| p.into_inner()).get(source).and_then(|m| m.get(&query)) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        // The lock is not held across the upstream call; a concurrent miss on
        // the same key may fetch twice but both store the same answer.
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = fetch()?;
        self.table
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .entry(source.to_owned())
            .or_default()
            .insert(query, value.clone());
        Ok(value)
    }
}

impl<P: KnowledgeProvider> KnowledgeProvider for CachedProvider<P> {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError> {
        self.through(GLOSS, common_noun.to_owned(), || self.inner.gloss(common_noun))
    }
    fn wiki_summary(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        self.through(WIKI, proper_noun.to_owned(), || self.inner.wiki_summary(proper_noun, sentence))
    }
    fn ner_category(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        self.through(NER, format!("{proper_noun} | {sentence}"), || self.inner.ner_category(proper_noun, sentence))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[derive(Default)]
    struct Counting {
        calls: AtomicUsize,
        fail: bool,
    }

    impl KnowledgeProvider for Counting {
        fn gloss(&self, noun: &str) -> Result<Option<String>, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fail {
                return Err(ProviderError::transport("counting", "down"));
            }
            Ok((noun == "monks").then(|| "a religious man".to_owned()))
        }
        fn wiki_summary(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(None)
        }
        fn ner_category(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
            Ok(Some("NORP".into()))
        }
    }

    #[test]
    fn repeated_fetch_calls_upstream_once() {
        let cache = CachedProvider::new(Counting::default());
        for _ in 0..5 {
            assert_eq!(cache.gloss("monks").unwrap().as_deref(), Some("a religious man"));
            assert_eq!(cache.wiki_summary("Xyzzy", "s").unwrap(), None);
        }
        assert_eq!(cache.inner().calls.load(Ordering::SeqCst), 2);
        assert_eq!(cache.stats(), CacheStats { hits: 8, misses: 2 });
    }

    #[test]
    fn errors_are_not_cached() {
        let cache = CachedProvider::new(Counting { fail: true, ..Default::default() });
        assert!(cache.gloss("monks").is_err());
        assert!(cache.gloss("monks").is_err());
        assert_eq!(cache.inner().calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn persisted_cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let cache = CachedProvider::new(Counting::default());
        cache.gloss("monks").unwrap();
        cache.gloss("nothing").unwrap();
        cache.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"nothing\": null"), "{text}");

        let reloaded = CachedProvider::with_file(Counting::default(), &path).unwrap();
        assert_eq!(reloaded.gloss("monks").unwrap().as_deref(), Some("a religious man"));
        assert_eq!(reloaded.gloss("nothing").unwrap(), None);
        assert_eq!(reloaded.inner().calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn concurrent_reads_are_safe() {
        let cache = Arc::new(CachedProvider::new(Counting::default()));
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let c = cache.clone();
                std::thread::spawn(move || (0..50).for_each(|_| assert!(c.gloss("monks").unwrap().is_some())))
            })
            .collect();
        handles.into_iter().for_each(|h| h.join().unwrap());
        assert_eq!(cache.stats().hits + cache.stats().misses, 200);
    }
}
