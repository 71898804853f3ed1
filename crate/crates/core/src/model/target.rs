//! Text targets for generation and parsing of generated text.

use crate::types::{Interpretation, NounCompound};

/// Sentinel suffix written for non-compositional compounds.
pub const NON_CMP_SUFFIX: &str = "is non-compositional";
const NON_CMP_VARIANTS: [&str; 2] = [NON_CMP_SUFFIX, "is not compositional"];

pub fn serialize_target(nc: &NounCompound, gold: &Interpretation) -> String {
    match gold {
        Interpretation::Paraphrase(text) => text.clone(),
        Interpretation::NonCompositional => format!("{} {NON_CMP_SUFFIX}", nc.text()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedOutput {
    pub interpretation: Interpretation,
    /// The generation was empty; the interpretation is a fallback.
    pub empty: bool,
}

pub fn is_sentinel(text: &str) -> bool {
    let norm = crate::text::normalize_ws(text).to_lowercase();
    let norm = norm.trim_end_matches('.').trim_end();
    NON_CMP_VARIANTS.iter().any(|v| norm.ends_with(v))
}

pub fn parse_output_flagged(_nc: &NounCompound, generated: &str) -> ParsedOutput {
    let text = generated.trim();
    if text.is_empty() {
        return ParsedOutput { interpretation: Interpretation::NonCompositional, empty: true };
    }
    let interpretation =
        if is_sentinel(text) { Interpretation::NonCompositional } else { Interpretation::Paraphrase(text.to_owned()) };
    ParsedOutput { interpretation, empty: false }
}

pub fn parse_output(nc: &NounCompound, generated: &str) -> Interpretation {
    let parsed = parse_output_flagged(nc, generated);
    if parsed.empty {
        log::warn!("empty generation for {nc}; reading it as non-compositional");
    }
    parsed.interpretation
}
