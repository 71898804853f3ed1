//! Knowledge-augmented model inputs.
//!
//! Each knowledge segment is placed before the compound and separated from
//! what follows by `" [SEP] "`:
//!
//! | source      | segment                               |
//! |-------------|---------------------------------------|
//! | `None`      | (nothing)                             |
//! | `Sentence`  | the source sentence                   |
//! | `WordNetNN` | `<common noun> meaning: <gloss>`      |
//! | `WikiNNP`   | `<proper noun> meaning: <summary>`    |
//! | `NerNNP`    | `<proper noun> belongs to <category>` |
//!
//! A provider answering "absent" drops the segment.

mod cache;
mod providers;
mod remote;
mod wordnet;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ProviderError};
use crate::types::NounCompound;

pub use cache::{CacheStats, CachedProvider};
pub use providers::{CompositeProvider, FixtureKnowledgeProvider, NoKnowledge};
pub use remote::{HttpNerClient, WikipediaClient};
pub use wordnet::WordNet;

pub const SEP: &str = " [SEP] ";

/// Knowledge payloads are cut to this many whitespace tokens.
pub const MAX_KNOWLEDGE_TOKENS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnowledgeSource {
    None,
    Sentence,
    #[serde(rename = "wordnet-nn")]
    WordNetNN,
    #[serde(rename = "wiki-nnp")]
    WikiNNP,
    #[serde(rename = "ner-nnp")]
    NerNNP,
}

impl KnowledgeSource {
    pub const ALL: [KnowledgeSource; 5] = [
        KnowledgeSource::None,
        KnowledgeSource::Sentence,
        KnowledgeSource::WordNetNN,
        KnowledgeSource::WikiNNP,
        KnowledgeSource::NerNNP,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KnowledgeSource::None => "none",
            KnowledgeSource::Sentence => "sentence",
            KnowledgeSource::WordNetNN => "wordnet-nn",
            KnowledgeSource::WikiNNP => "wiki-nnp",
            KnowledgeSource::NerNNP => "ner-nnp",
        }
    }
}

impl fmt::Display for KnowledgeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KnowledgeSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        KnowledgeSource::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown knowledge source {s:?} (expected one of none, sentence, wordnet-nn, wiki-nnp, ner-nnp)")))
    }
}

/// Sources with `None` removed, order kept. This is the canonical form
/// stored in checkpoints and compared at prediction time.
pub fn canonical_sources(sources: &[KnowledgeSource]) -> Vec<KnowledgeSource> {
    sources.iter().copied().filter(|s| *s != KnowledgeSource::None).collect()
}

/// External knowledge lookups. `Ok(None)` means the source has nothing for
/// the query, which is distinct from a failed lookup.
pub trait KnowledgeProvider: Send + Sync {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError>;
    fn wiki_summary(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError>;
    /// Category label; either a tag ("NORP") or an already readable description.
    fn ner_category(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError>;
}

impl<P: KnowledgeProvider + ?Sized> KnowledgeProvider for &P {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError> {
        (**self).gloss(common_noun)
    }
    fn wiki_summary(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        (**self).wiki_summary(proper_noun, sentence)
    }
    fn ner_category(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        (**self).ner_category(proper_noun, sentence)
    }
}

impl<P: KnowledgeProvider + ?Sized> KnowledgeProvider for Box<P> {
    fn gloss(&self, common_noun: &str) -> Result<Option<String>, ProviderError> {
        (**self).gloss(common_noun)
    }
    fn wiki_summary(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        (**self).wiki_summary(proper_noun, sentence)
    }
    fn ner_category(&self, proper_noun: &str, sentence: &str) -> Result<Option<String>, ProviderError> {
        (**self).ner_category(proper_noun, sentence)
    }
}

/// Readable description of an OntoNotes entity tag. Unknown labels are
/// returned unchanged so providers may answer with descriptions directly.
pub fn ner_description(label: &str) -> String {
    let d = match label.trim().to_ascii_uppercase().as_str() {
        "PERSON" => "people, including fictional",
        "NORP" => "nationalities or religious groups",
        "FAC" => "buildings, airports, highways, bridges, etc.",
        "ORG" => "companies, agencies, institutions, etc.",
        "GPE" => "countries, cities, states",
        "LOC" => "non-GPE locations, mountain ranges, bodies of water",
        "PRODUCT" => "objects, vehicles, foods, etc.",
        "EVENT" => "named hurricanes, battles, wars, sports events, etc.",
        "WORK_OF_ART" => "titles of books, songs, etc.",
        "LAW" => "named documents made into laws",
        "LANGUAGE" => "any named language",
        "DATE" => "absolute or relative dates or periods",
        "TIME" => "times smaller than a day",
        "PERCENT" => "percentage",
        "MONEY" => "monetary values, including unit",
        "QUANTITY" => "measurements, as of weight or distance",
        "ORDINAL" => "first, second, etc.",
        "CARDINAL" => "numerals that do not fall under another type",
        _ => return label.trim().to_owned(),
    };
    d.to_owned()
}

/// Serialized model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedInput {
    pub text: String,
    /// Requested sources in canonical form (see [`canonical_sources`]).
    pub sources: Vec<KnowledgeSource>,
}

impl AugmentedInput {
    pub fn plain(nc: &NounCompound) -> Self {
        AugmentedInput { text: nc.text(), sources: Vec::new() }
    }

    pub fn segments(&self) -> Vec<&str> {
        split_segments(&self.text)
    }

    /// The final segment, which is always the compound.
    pub fn compound(&self) -> &str {
        self.text.rsplit(SEP).next().unwrap_or(&self.text)
    }
}

impl fmt::Display for AugmentedInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub fn split_segments(text: &str) -> Vec<&str> {
    text.split(SEP).collect()
}

fn clean_payload(text: &str) -> Option<String> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.is_empty() {
        return None;
    }
    let out = if toks.len() > MAX_KNOWLEDGE_TOKENS { toks[..MAX_KNOWLEDGE_TOKENS].join(" ") } else { text.trim().to_owned() };
    // Keep the separator unambiguous.
    Some(out.replace(SEP, " ").replace(SEP.trim(), "[sep]"))
}

/// The knowledge segment for one source, or `None` when the source is
/// `None` or the provider has no answer.
pub fn knowledge_segment(
    nc: &NounCompound,
    source: KnowledgeSource,
    provider: &dyn KnowledgeProvider,
) -> Result<Option<String>, ProviderError> {
    let (p, c) = (nc.proper_noun.as_str(), nc.common_noun.as_str());
    let seg = match source {
        KnowledgeSource::None => None,
        KnowledgeSource::Sentence => clean_payload(&nc.sentence),
        KnowledgeSource::WordNetNN => provider.gloss(c)?.as_deref().and_then(clean_payload).map(|g| format!("{c} meaning: {g}")),
        KnowledgeSource::WikiNNP => {
            provider.wiki_summary(p, &nc.sentence)?.as_deref().and_then(clean_payload).map(|s| format!("{p} meaning: {s}"))
        }
        KnowledgeSource::NerNNP => provider
            .ner_category(p, &nc.sentence)?
            .as_deref()
            .and_then(clean_payload)
            .map(|l| format!("{p} belongs to {}", ner_description(&l))),
    };
    Ok(seg)
}

/// Input with knowledge segments for `sources` in order, compound last.
pub fn stack_prompts(
    nc: &NounCompound,
    sources: &[KnowledgeSource],
    provider: &dyn KnowledgeProvider,
) -> Result<AugmentedInput, ProviderError> {
    let mut text = String::new();
    for &source in sources {
        if let Some(seg) = knowledge_segment(nc, source, provider)? {
            text.push_str(&seg);
            text.push_str(SEP);
        }
    }
    text.push_str(&nc.text());
    Ok(AugmentedInput { text, sources: canonical_sources(sources) })
}

pub fn build_prompt(
    nc: &NounCompound,
    source: KnowledgeSource,
    provider: &dyn KnowledgeProvider,
) -> Result<AugmentedInput, ProviderError> {
    stack_prompts(nc, &[source], provider)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SENTENCE: &str = "Recent visitors to the campus include Buddhist monks who installed an environmental artwork at Lower Pond.";
    const GLOSS: &str = "a male religious living in a cloister and devoting himself to contemplation and prayer and work";

    fn monks() -> NounCompound {
        NounCompound::locate("Buddhist", "monks", SENTENCE).unwrap()
    }

    fn provider() -> FixtureKnowledgeProvider {
        let mut p = FixtureKnowledgeProvider::default();
        p.gloss.insert("monks".into(), GLOSS.into());
        p.ner.insert("Buddhist".into(), "NORP".into());
        p
    }

    #[test]
    fn formats() {
        let nc = monks();
        let p = provider();
        assert_eq!(build_prompt(&nc, KnowledgeSource::None, &p).unwrap().text, "Buddhist monks");
        assert_eq!(build_prompt(&nc, KnowledgeSource::Sentence, &p).unwrap().text, format!("{SENTENCE} [SEP] Buddhist monks"));
        assert_eq!(build_prompt(&nc, KnowledgeSource::WordNetNN, &p).unwrap().text, format!("monks meaning: {GLOSS} [SEP] Buddhist monks"));
        assert_eq!(
            build_prompt(&nc, KnowledgeSource::NerNNP, &p).unwrap().text,
            "Buddhist belongs to nationalities or religious groups [SEP] Buddhist monks"
        );
    }

    #[test]
    fn absent_answer_falls_back_to_bare_compound() {
        let nc = monks();
        let p = provider();
        let wiki = build_prompt(&nc, KnowledgeSource::WikiNNP, &p).unwrap();
        assert_eq!(wiki.text, build_prompt(&nc, KnowledgeSource::None, &p).unwrap().text);
        assert_eq!(wiki.sources, vec![KnowledgeSource::WikiNNP]);
    }

    #[test]
    fn stacking_composes_and_splits() {
        let nc = monks();
        let p = provider();
        let stacked = stack_prompts(&nc, &[KnowledgeSource::Sentence, KnowledgeSource::NerNNP], &p).unwrap();
        assert_eq!(
            stacked.text,
            format!("{SENTENCE} [SEP] Buddhist belongs to nationalities or religious groups [SEP] Buddhist monks")
        );
        assert_eq!(stacked.segments().len(), 3);
        assert_eq!(stacked.compound(), "Buddhist monks");
        assert_eq!(stack_prompts(&nc, &[KnowledgeSource::None], &p).unwrap().text, "Buddhist monks");
    }

    #[test]
    fn long_payloads_are_truncated() {
        let nc = monks();
        let mut p = provider();
        let long: Vec<String> = (0..400).map(|i| format!("w{i}")).collect();
        p.gloss.insert("monks".into(), long.join(" "));
        let text = build_prompt(&nc, KnowledgeSource::WordNetNN, &p).unwrap().text;
        let payload = text.strip_prefix("monks meaning: ").unwrap().strip_suffix(" [SEP] Buddhist monks").unwrap();
        assert_eq!(payload.split_whitespace().count(), MAX_KNOWLEDGE_TOKENS);
    }

    #[test]
    fn separator_inside_knowledge_is_neutralised() {
        let nc = NounCompound::locate("Buddhist", "monks", "A [SEP] B Buddhist monks").unwrap();
        let input = build_prompt(&nc, KnowledgeSource::Sentence, &NoKnowledge).unwrap();
        assert_eq!(input.segments().len(), 2);
    }

    #[test]
    fn source_names_round_trip() {
        for s in KnowledgeSource::ALL {
            assert_eq!(s.as_str().parse::<KnowledgeSource>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.as_str()));
        }
        assert!("wordnet".parse::<KnowledgeSource>().is_err());
        assert_eq!(ner_description("GPE"), "countries, cities, states");
        assert_eq!(ner_description("some group"), "some group");
    }
}
