//! Canonical data model.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::text;

/// A two-word proper noun compound in its source sentence.
///
/// `span` holds character offsets `[start, end)` of the compound inside
/// `sentence`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NounCompound {
    pub proper_noun: String,
    pub common_noun: String,
    pub sentence: String,
    pub span: (usize, usize),
}

impl NounCompound {
    pub fn new(
        proper_noun: impl Into<String>,
        common_noun: impl Into<String>,
        sentence: impl Into<String>,
        span: (usize, usize),
    ) -> Result<Self> {
        let nc = NounCompound {
            proper_noun: proper_noun.into(),
            common_noun: common_noun.into(),
            sentence: sentence.into(),
            span,
        };
        nc.validate()?;
        Ok(nc)
    }

    /// Build a compound by locating the first occurrence of "proper common" in
    /// the sentence.
    pub fn locate(
        proper_noun: impl Into<String>,
        common_noun: impl Into<String>,
        sentence: impl Into<String>,
    ) -> Result<Self> {
        let (p, c, s) = (proper_noun.into(), common_noun.into(), sentence.into());
        let needle = format!("{p} {c}");
        let start = text::find_chars(&s, &needle)
            .ok_or_else(|| Error::data(format!("compound {needle:?} does not occur in sentence {s:?}")))?;
        let end = start + text::char_len(&needle);
        NounCompound::new(p, c, s, (start, end))
    }

    /// Compound without sentence context; the span covers the whole string.
    pub fn bare(proper_noun: impl Into<String>, common_noun: impl Into<String>) -> Result<Self> {
        let (p, c) = (proper_noun.into(), common_noun.into());
        let s = format!("{p} {c}");
        NounCompound::locate(p, c, s)
    }

    pub fn validate(&self) -> Result<()> {
        for (role, word) in [("proper noun", &self.proper_noun), ("common noun", &self.common_noun)] {
            if word.is_empty() {
                return Err(Error::data(format!("{role} is empty")));
            }
            if word.chars().any(char::is_whitespace) {
                return Err(Error::data(format!("{role} {word:?} contains whitespace")));
            }
        }
        let (start, end) = self.span;
        let covered = text::char_slice(&self.sentence, start, end).ok_or_else(|| {
            Error::data(format!("span {start}..{end} is outside the sentence ({} chars)", text::char_len(&self.sentence)))
        })?;
        if text::normalize_ws(covered) != self.text() {
            return Err(Error::data(format!(
                "span {start}..{end} covers {covered:?}, expected {:?}",
                self.text()
            )));
        }
        Ok(())
    }

    /// "proper_noun common_noun"
    pub fn text(&self) -> String {
        format!("{} {}", self.proper_noun, self.common_noun)
    }
}

impl fmt::Display for NounCompound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.proper_noun, self.common_noun)
    }
}

/// Binary compositionality class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compositionality {
    Cmp,
    NonCmp,
}

impl Compositionality {
    /// Row index used by the classifier head: 0 = CMP, 1 = NON-CMP.
    pub fn index(self) -> usize {
        match self {
            Compositionality::Cmp => 0,
            Compositionality::NonCmp => 1,
        }
    }
}

/// Semantic interpretation of a compound: a full paraphrase sentence
/// ("Shakespeare biography is a biography about Shakespeare"), or the
/// non-compositional label.
///
/// Serialized as a JSON string or `null`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Interpretation {
    Paraphrase(String),
    NonCompositional,
}

impl Interpretation {
    pub fn is_compositional(&self) -> bool {
        matches!(self, Interpretation::Paraphrase(_))
    }

    pub fn label(&self) -> Compositionality {
        match self {
            Interpretation::Paraphrase(_) => Compositionality::Cmp,
            Interpretation::NonCompositional => Compositionality::NonCmp,
        }
    }

    pub fn paraphrase(&self) -> Option<&str> {
        match self {
            Interpretation::Paraphrase(t) => Some(t),
            Interpretation::NonCompositional => None,
        }
    }
}

impl Serialize for Interpretation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.paraphrase().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interpretation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(match Option::<String>::deserialize(deserializer)? {
            Some(t) if !t.trim().is_empty() => Interpretation::Paraphrase(t),
            _ => Interpretation::NonCompositional,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetExample {
    pub id: String,
    pub compound: NounCompound,
    pub gold: Interpretation,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_computes_character_span() {
        let nc = NounCompound::locate("Covid-19", "outbreak", "Workers sound alarm on Covid-19 outbreak").unwrap();
        assert_eq!(nc.span, (23, 40));
        assert_eq!(nc.text(), "Covid-19 outbreak");
    }

    #[test]
    fn span_must_match_compound() {
        let err = NounCompound::new("London", "theatre", "a London theatre", (0, 8)).unwrap_err();
        assert!(err.to_string().contains("covers"));
        assert!(NounCompound::new("London", "theatre", "a London\ttheatre", (2, 16)).is_ok());
    }

    #[test]
    fn nouns_are_single_tokens() {
        assert!(NounCompound::bare("New York", "police").is_err());
        assert!(NounCompound::bare("", "police").is_err());
    }

    #[test]
    fn interpretation_json_is_string_or_null() {
        let p = Interpretation::Paraphrase("London theatre is a theatre in London".into());
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"London theatre is a theatre in London\"");
        assert_eq!(serde_json::to_string(&Interpretation::NonCompositional).unwrap(), "null");
        let back: Interpretation = serde_json::from_str("null").unwrap();
        assert_eq!(back, Interpretation::NonCompositional);
        let blank: Interpretation = serde_json::from_str("\"  \"").unwrap();
        assert_eq!(blank, Interpretation::NonCompositional);
    }
}
