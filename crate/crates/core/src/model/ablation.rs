//! Character-shuffle ablation: scramble one noun of a compound everywhere it
//! appears, to test whether a model relies on the noun's identity.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text;
use crate::types::{DatasetExample, Interpretation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NounRole {
    Proper,
    Common,
}

impl std::str::FromStr for NounRole {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "proper" => Ok(NounRole::Proper),
            "common" => Ok(NounRole::Common),
            other => Err(crate::Error::config(format!("unknown noun role {other:?}; expected proper or common"))),
        }
    }
}

fn noun(ex: &DatasetExample, role: NounRole) -> &str {
    match role {
        NounRole::Proper => &ex.compound.proper_noun,
        NounRole::Common => &ex.compound.common_noun,
    }
}

/// Seeded permutation of `word`'s characters that changes the word, or `None`
/// when every permutation leaves it unchanged.
pub fn ablation_permutation(word: &str, seed: u64) -> Option<Vec<usize>> {
    let chars: Vec<char> = word.chars().collect();
    if chars.iter().all(|&c| c == chars[0]) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..chars.len()).collect();
    perm.shuffle(&mut rng);
    if perm.iter().all(|&i| chars[i] == chars[perm[i]]) || apply(&chars, &perm) == chars {
        // Swap the first position with one holding a different character.
        let j = (1..chars.len()).find(|&j| chars[perm[j]] != chars[perm[0]]).expect("two distinct characters");
        perm.swap(0, j);
    }
    Some(perm)
}

fn apply(chars: &[char], perm: &[usize]) -> Vec<char> {
    perm.iter().map(|&i| chars[i]).collect()
}

pub fn permute_word(word: &str, perm: &[usize]) -> String {
    let chars: Vec<char> = word.chars().collect();
    apply(&chars, perm).into_iter().collect()
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Replace whole-word occurrences of `from` in `s`.
fn replace_word(s: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find(from) {
        let before = rest[..pos].chars().next_back();
        let after = rest[pos + from.len()..].chars().next();
        out.push_str(&rest[..pos]);
        if before.is_none_or(|c| !is_word_char(c)) && after.is_none_or(|c| !is_word_char(c)) {
            out.push_str(to);
        } else {
            out.push_str(from);
        }
        rest = &rest[pos + from.len()..];
    }
    out.push_str(rest);
    out
}

/// Apply a given character permutation to the `role` noun of `ex`.
pub fn shuffle_with(ex: &DatasetExample, role: NounRole, perm: &[usize]) -> DatasetExample {
    let old = noun(ex, role).to_owned();
    assert_eq!(perm.len(), text::char_len(&old), "permutation length");
    let new = permute_word(&old, perm);
    let mut out = ex.clone();
    let (start, end) = ex.compound.span;
    let (s, e) = match role {
        NounRole::Proper => (start, start + perm.len()),
        NounRole::Common => (end - perm.len(), end),
    };
    if text::char_slice(&ex.compound.sentence, s, e) == Some(old.as_str()) {
        out.compound.sentence = text::replace_chars(&ex.compound.sentence, s, e, &new).expect("span checked");
    } else {
        log::warn!("{}: noun {old:?} not found at the compound span; sentence left unchanged", ex.id);
    }
    match role {
        NounRole::Proper => out.compound.proper_noun = new.clone(),
        NounRole::Common => out.compound.common_noun = new.clone(),
    }
    if let Interpretation::Paraphrase(p) = &ex.gold {
        out.gold = Interpretation::Paraphrase(replace_word(p, &old, &new));
    }
    out
}

/// Shuffle the characters of one noun with a seeded permutation guaranteed to
/// change it. A noun whose characters are all equal (including a single
/// character) is returned unchanged.
pub fn shuffle_ablation(ex: &DatasetExample, role: NounRole, seed: u64) -> DatasetExample {
    match ablation_permutation(noun(ex, role), seed) {
        Some(perm) => shuffle_with(ex, role, &perm),
        None => {
            log::warn!("{}: {:?} cannot be shuffled; left unchanged", ex.id, noun(ex, role));
            ex.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::NounCompound;

    fn covid() -> DatasetExample {
        DatasetExample {
            id: "1".into(),
            compound: NounCompound::locate("Covid", "vaccine", "The vaccine rollout: a Covid vaccine for all.").unwrap(),
            gold: Interpretation::Paraphrase("Covid vaccine is a vaccine against Covid".into()),
        }
    }

    #[test]
    fn shuffles_everywhere_and_inverts() {
        let ex = covid();
        for seed in 0..20 {
            let out = shuffle_ablation(&ex, NounRole::Common, seed);
            let w = &out.compound.common_noun;
            assert_ne!(w, "vaccine");
            let mut a: Vec<char> = w.chars().collect();
            let mut b: Vec<char> = "vaccine".chars().collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
            out.compound.validate().unwrap();
            assert!(out.compound.sentence.starts_with("The vaccine rollout"));
            assert_eq!(out.gold, Interpretation::Paraphrase(format!("Covid {w} is a {w} against Covid")));
            assert_eq!(out.compound.proper_noun, "Covid");
            let perm = ablation_permutation("vaccine", seed).unwrap();
            assert_eq!(shuffle_with(&out, NounRole::Common, &inverse_permutation(&perm)), ex);
        }
        assert_eq!(shuffle_ablation(&ex, NounRole::Proper, 3), shuffle_ablation(&ex, NounRole::Proper, 3));
    }

    #[test]
    fn degenerate_nouns_unchanged() {
        let mut ex = covid();
        ex.compound = NounCompound::bare("aa", "x").unwrap();
        ex.gold = Interpretation::NonCompositional;
        assert_eq!(shuffle_ablation(&ex, NounRole::Proper, 1), ex);
        assert_eq!(shuffle_ablation(&ex, NounRole::Common, 1), ex);
    }

    #[test]
    fn two_char_word_always_swaps() {
        for seed in 0..10 {
            assert_eq!(permute_word("ab", &ablation_permutation("ab", seed).unwrap()), "ba");
        }
    }
}
