//! Proper noun compound detection over dependency parses.
//!
//! A candidate is an adjacent token pair (w, h) where w carries the
//! `compound` dependency to h, w is tagged `PROPN` and h is tagged `NOUN`.
//! Parses use universal POS tags; providers with other tagsets must map
//! before returning.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::read_json;
use crate::error::{Error, ProviderError, Result};
use crate::process::JsonLineProcess;
use crate::text;
use crate::types::NounCompound;

pub const COMPOUND_DEP: &str = "compound";
pub const PROPER_NOUN_TAG: &str = "PROPN";
pub const COMMON_NOUN_TAG: &str = "NOUN";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    pub text: String,
    #[serde(default)]
    pub index: usize,
    pub pos: String,
    /// Index of the syntactic head; the root points at itself.
    pub head: usize,
    pub dep: String,
    /// Character offsets `[start, end)` in the sentence.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub text: String,
    pub tokens: Vec<ParsedToken>,
}

impl ParsedSentence {
    /// Validate a parse and renumber token indices by position.
    pub fn new(text: impl Into<String>, mut tokens: Vec<ParsedToken>) -> Result<Self> {
        let text = text.into();
        let n = tokens.len();
        let mut cursor = 0;
        for (i, tok) in tokens.iter_mut().enumerate() {
            tok.index = i;
            if tok.head >= n {
                return Err(Error::data(format!("token {i} ({:?}) has head {} outside 0..{n}", tok.text, tok.head)));
            }
            let covered = text::char_slice(&text, tok.start, tok.end)
                .ok_or_else(|| Error::data(format!("token {i} offsets {}..{} fall outside the sentence", tok.start, tok.end)))?;
            if covered != tok.text {
                return Err(Error::data(format!("token {i} is {:?} but its offsets cover {covered:?}", tok.text)));
            }
            let gap = text::char_slice(&text, cursor, tok.start)
                .ok_or_else(|| Error::data(format!("token {i} overlaps the previous token")))?;
            if !gap.chars().all(char::is_whitespace) {
                return Err(Error::data(format!("text {gap:?} before token {i} is not covered by any token")));
            }
            cursor = tok.end;
        }
        let tail = text::char_slice(&text, cursor, text::char_len(&text)).unwrap_or_default();
        if !tail.chars().all(char::is_whitespace) {
            return Err(Error::data(format!("trailing text {tail:?} is not covered by any token")));
        }
        Ok(ParsedSentence { text, tokens })
    }

    /// Build a parse from `(text, pos, dep, head)` tuples; tokens are joined
    /// by single spaces to form the sentence.
    pub fn from_tokens(tokens: &[(&str, &str, &str, usize)]) -> Result<Self> {
        let mut text = String::new();
        let mut out = Vec::with_capacity(tokens.len());
        for (i, (word, pos, dep, head)) in tokens.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            let start = text::char_len(&text);
            text.push_str(word);
            out.push(ParsedToken {
                text: (*word).to_owned(),
                index: i,
                pos: (*pos).to_owned(),
                head: *head,
                dep: (*dep).to_owned(),
                start,
                end: start + text::char_len(word),
            });
        }
        ParsedSentence::new(text, out)
    }
}

/// Source of dependency parses.
pub trait ParseProvider {
    fn parse(&self, sentence: &str) -> Result<ParsedSentence, ProviderError>;
}

/// Pre-computed parses keyed by sentence text. The file is a JSON array of
/// `{"text": ..., "tokens": [{"text","pos","head","dep","start","end"}, ...]}`.
#[derive(Debug, Clone, Default)]
pub struct FixtureParseProvider {
    parses: HashMap<String, ParsedSentence>,
}

impl FixtureParseProvider {
    pub fn new(parses: impl IntoIterator<Item = ParsedSentence>) -> Self {
        FixtureParseProvider { parses: parses.into_iter().map(|p| (p.text.clone(), p)).collect() }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let raw: Vec<ParsedSentence> = read_json(path)?;
        let parses = raw.into_iter().map(|p| ParsedSentence::new(p.text, p.tokens)).collect::<Result<Vec<_>>>()?;
        Ok(FixtureParseProvider::new(parses))
    }

    pub fn len(&self) -> usize {
        self.parses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parses.is_empty()
    }
}

impl ParseProvider for FixtureParseProvider {
    fn parse(&self, sentence: &str) -> Result<ParsedSentence, ProviderError> {
        self.parses.get(sentence).cloned().ok_or_else(|| ProviderError::Missing {
            service: "fixture parser".into(),
            query: sentence.to_owned(),
        })
    }
}

/// Parser running as a child process that answers one JSON request
/// `{"text": ...}` per line with a parse object per line.
pub struct CommandParseProvider {
    process: JsonLineProcess,
}

impl CommandParseProvider {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        Ok(CommandParseProvider { process: JsonLineProcess::spawn("parser", program, args)? })
    }
}

impl ParseProvider for CommandParseProvider {
    fn parse(&self, sentence: &str) -> Result<ParsedSentence, ProviderError> {
        let raw: ParsedSentence = self.process.request(&serde_json::json!({ "text": sentence }))?;
        ParsedSentence::new(raw.text, raw.tokens).map_err(|e| ProviderError::protocol("parser", e))
    }
}

fn is_candidate(w: &ParsedToken, h: &ParsedToken) -> bool {
    w.dep == COMPOUND_DEP
        && w.head == h.index
        && w.pos == PROPER_NOUN_TAG
        && h.pos == COMMON_NOUN_TAG
        && w.index + 1 == h.index
}

/// Every proper noun compound in the parse, in sentence order.
pub fn detect_pncs(parsed: &ParsedSentence) -> Vec<NounCompound> {
    parsed
        .tokens
        .windows(2)
        .filter(|pair| is_candidate(&pair[0], &pair[1]))
        .filter_map(|pair| {
            let (w, h) = (&pair[0], &pair[1]);
            match NounCompound::new(w.text.clone(), h.text.clone(), parsed.text.clone(), (w.start, h.end)) {
                Ok(nc) => Some(nc),
                Err(e) => {
                    log::warn!("dropping candidate {:?} {:?}: {e}", w.text, h.text);
                    None
                }
            }
        })
        .collect()
}

/// Lazily parse sentences and yield their compounds in input order.
/// Sentences the provider cannot parse are skipped and recorded.
pub struct CorpusMiner<'p, I> {
    sentences: I,
    provider: &'p dyn ParseProvider,
    pending: VecDeque<NounCompound>,
    position: usize,
    skipped: Vec<(usize, ProviderError)>,
}

impl<I> CorpusMiner<'_, I> {
    /// `(sentence position, error)` for every sentence skipped so far.
    pub fn skipped(&self) -> &[(usize, ProviderError)] {
        &self.skipped
    }
}

impl<I, S> Iterator for CorpusMiner<'_, I>
where
    I: Iterator<Item = S>,
    S: AsRef<str>,
{
    type Item = NounCompound;

    fn next(&mut self) -> Option<NounCompound> {
        loop {
            if let Some(nc) = self.pending.pop_front() {
                return Some(nc);
            }
            let sentence = self.sentences.next()?;
            let position = self.position;
            self.position += 1;
            match self.provider.parse(sentence.as_ref()) {
                Ok(parsed) => self.pending.extend(detect_pncs(&parsed)),
                Err(e) => {
                    log::warn!("skipping sentence {position}: {e}");
                    self.skipped.push((position, e));
                }
            }
        }
    }
}

pub fn mine_corpus<'p, I, S>(sentences: I, provider: &'p dyn ParseProvider) -> CorpusMiner<'p, I::IntoIter>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    CorpusMiner { sentences: sentences.into_iter(), provider, pending: VecDeque::new(), position: 0, skipped: Vec::new() }
}
