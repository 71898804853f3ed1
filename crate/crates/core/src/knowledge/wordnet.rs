//! Noun glosses straight from WordNet database files (`index.noun`,
//! `data.noun`, optional `noun.exc`). The first listed sense is used.

use std::collections::HashMap;
use std::path::Path;

use super::KnowledgeProvider;
use crate::error::{Error, ProviderError, Result};

const SUFFIX_RULES: [(&str, &str); 8] = [
    ("s", ""),
    ("ses", "s"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
];

pub struct WordNet {
    /// lemma → byte offset of its first synset in `data.noun`.
    first_sense: HashMap<String, usize>,
    exceptions: HashMap<String, Vec<String>>,
    data: Vec<u8>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl WordNet {
    /// Load from a WordNet `dict/` directory.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let index_path = dir.join("index.noun");
        let mut first_sense = HashMap::new();
        for (n, line) in read(&index_path)?.lines().enumerate() {
            if line.starts_with("  ") || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Record { path: index_path.clone(), line: n + 1, message: "malformed index entry".into() };
            let synsets: usize = f.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let pointers: usize = f.get(3).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let first = 4 + pointers + 2;
            if synsets == 0 || f.len() < first + synsets {
                return Err(bad());
            }
            let offset: usize = f[first].parse().map_err(|_| bad())?;
            first_sense.insert(f[0].to_owned(), offset);
        }
        let mut exceptions: HashMap<String, Vec<String>> = HashMap::new();
        let exc_path = dir.join("noun.exc");
        if exc_path.exists() {
            for line in read(&exc_path)?.lines() {
                let mut f = line.split_whitespace();
                if let Some(inflected) = f.next() {
                    exceptions.entry(inflected.to_owned()).or_default().extend(f.map(str::to_owned));
                }
            }
        }
        let data_path = dir.join("data.noun");
        let data = std::fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
        Ok(WordNet { first_sense, exceptions, data })
    }

    /// Candidate base forms, most specific first.
    fn morphy(&self, word: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(exc) = self.exceptions.get(word) {
            out.extend(exc.iter().cloned());
        }
        out.push(word.to_owned());
        for (suffix, replacement) in SUFFIX_RULES {
            if let Some(stem) = word.strip_suffix(suffix) {
                if !stem.is_empty() {
                    out.push(format!("{stem}{replacement}"));
                }
            }
        }
        out
    }

    /// First-sense gloss with usage examples removed.
    pub fn lookup(&self, noun: &str) -> Option<String> {
        let key = noun.trim().to_lowercase().replace(' ', "_");
        let offset = self.morphy(&key).into_iter().find_map(|form| self.first_sense.get(&form).copied())?;
        let rest = self.data.get(offset..)?;
        let line = rest.split(|&b| b == b'\n').next()?;
        let line = String::from_utf8_lossy(line);
        let gloss = line.split_once(" | ")?.1;
        let gloss = gloss.split("; \"").next().unwrap_or(gloss);
        let gloss = gloss.trim();
        (!gloss.is_empty()).then(|| gloss.to_owned())
    }
}

impl KnowledgeProvider for WordNet {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError> {
        Ok(self.lookup(common_noun))
    }
    fn wiki_summary(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }
    fn ner_category(&self, _: &str, _: &str) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Writes a miniature dictionary whose offsets are computed, not typed.
    fn tiny_dict(dir: &Path) {
        let entries = [
            ("monk", "02 n 01 monk 0 000 | a male religious living in a cloister and devoting himself to contemplation and prayer and work"),
            ("mouse", "03 n 01 mouse 0 000 | any of numerous small rodents; \"a mouse ran past\""),
            ("church", "04 n 01 church 0 000 | a place for public (especially Christian) worship"),
        ];
        let mut data = String::from("  1 This software and database is a fixture\n");
        let mut index = String::from("  1 header line\n");
        for (lemma, rest) in entries {
            let offset = data.len();
            data += &format!("{offset:08} {rest}  \n");
            index += &format!("{lemma} n 1 1 @ 1 0 {offset:08}\n");
        }
        std::fs::write(dir.join("data.noun"), data).unwrap();
        std::fs::write(dir.join("index.noun"), index).unwrap();
        std::fs::write(dir.join("noun.exc"), "mice mouse\n").unwrap();
    }

    #[test]
    fn glosses_with_plurals_and_exceptions() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dict(dir.path());
        let wn = WordNet::open(dir.path()).unwrap();
        assert_eq!(
            wn.lookup("monks").as_deref(),
            Some("a male religious living in a cloister and devoting himself to contemplation and prayer and work")
        );
        assert_eq!(wn.lookup("mice").as_deref(), Some("any of numerous small rodents"));
        assert_eq!(wn.lookup("Churches").as_deref(), Some("a place for public (especially Christian) worship"));
        assert_eq!(wn.lookup("zeppelin"), None);
    }

    #[test]
    fn missing_directory_is_io_error() {
        assert!(matches!(WordNet::open("/nonexistent/wordnet"), Err(Error::Io { .. })));
    }
}
