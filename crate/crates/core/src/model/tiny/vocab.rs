//! Word-level vocabulary with a copy mechanism.
//!
//! Output ids `size()..size()+window` are copy slots: slot `k` stands for
//! input token `len - 1 - k`, counted from the end so that the compound,
//! which always closes the input, sits at slots 1 and 0.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const MASK: u32 = 4;
pub const SPECIALS: [&str; 5] = ["<pad>", "<s>", "</s>", "<unk>", "<mask>"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocab {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    pub window: usize,
}

impl Vocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize, window: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in texts {
            for w in t.split_whitespace() {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(w, _)| !SPECIALS.contains(w)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let words: Vec<String> = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(ranked.into_iter().map(|(w, _)| w.to_owned()))
            .take(max_size.max(SPECIALS.len()))
            .collect();
        Vocab::from_words(words, window)
    }

    pub fn from_words(words: Vec<String>, window: usize) -> Self {
        let mut v = Vocab { words, index: HashMap::new(), window };
        v.reindex();
        v
    }

    pub fn reindex(&mut self) {
        self.index = self.words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
    }

    /// Number of word ids (copy slots excluded).
    pub fn size(&self) -> usize {
        self.words.len()
    }

    /// Word ids plus copy slots.
    pub fn output_size(&self) -> usize {
        self.words.len() + self.window
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn copy_id(&self, k: usize) -> u32 {
        (self.words.len() + k) as u32
    }

    pub fn encode_input(&self, tokens: &[&str]) -> Vec<u32> {
        tokens.iter().map(|w| self.id(w).unwrap_or(UNK)).collect()
    }

    fn copy_slots(&self, input: &[&str], word: &str) -> Vec<u32> {
        let n = input.len();
        (0..n.min(self.window)).filter(|&k| input[n - 1 - k] == word).map(|k| self.copy_id(k)).collect()
    }

    /// Every output id that produces `word` given `input`.
    pub fn valid_ids(&self, input: &[&str], word: &str) -> Vec<u32> {
        let mut ids = self.copy_slots(input, word);
        match self.id(word) {
            Some(id) => ids.push(id),
            None if ids.is_empty() => ids.push(UNK),
            None => {}
        }
        ids
    }

    /// The single id fed back to the decoder for `word`: the word id when
    /// known, else the nearest copy slot, else `<unk>`.
    pub fn canonical_id(&self, input: &[&str], word: &str) -> u32 {
        self.id(word).or_else(|| self.copy_slots(input, word).first().copied()).unwrap_or(UNK)
    }

    /// Surface word for an output id.
    pub fn output_word<'a>(&'a self, input: &[&'a str], id: u32) -> &'a str {
        let id = id as usize;
        if id < self.words.len() {
            &self.words[id]
        } else {
            let k = id - self.words.len();
            input.len().checked_sub(1 + k).map_or(SPECIALS[UNK as usize], |j| input[j])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copy_slots_count_from_the_end() {
        let v = Vocab::build(["is a theatre in"], 100, 8);
        let input = ["London", "theatre"];
        assert_eq!(v.valid_ids(&input, "London"), vec![v.copy_id(1)]);
        let theatre = v.valid_ids(&input, "theatre");
        assert_eq!(theatre.len(), 2);
        assert!(theatre.contains(&v.copy_id(0)) && theatre.contains(&v.id("theatre").unwrap()));
        assert_eq!(v.valid_ids(&input, "zebra"), vec![UNK]);
        assert_eq!(v.output_word(&input, v.copy_id(1)), "London");
        assert_eq!(v.canonical_id(&input, "London"), v.copy_id(1));
        assert_eq!(v.canonical_id(&input, "theatre"), v.id("theatre").unwrap());
    }
}
