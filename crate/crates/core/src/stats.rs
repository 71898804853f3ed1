//! Relation frequency statistics over compositional examples.

use std::collections::HashMap;

use serde::Serialize;

use crate::types::{DatasetExample, NounCompound};

/// Relation words of a paraphrase: the text after the leading compound, with
/// a trailing mention of the proper noun removed.
/// "London theatre is a theatre in London" → "is a theatre in".
pub fn relation_of(nc: &NounCompound, paraphrase: &str) -> String {
    let compound = nc.text();
    let mut rest = paraphrase.trim();
    if let Some(r) = rest.strip_prefix(&compound) {
        rest = r;
    }
    let mut rest = rest.trim().trim_end_matches('.').trim_end();
    if let Some(r) = rest.strip_suffix(nc.proper_noun.as_str()) {
        if r.is_empty() || r.ends_with(char::is_whitespace) {
            rest = r.trim_end();
        }
    }
    rest.to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationStats {
    /// (relation, count), most frequent first; ties by relation string.
    pub histogram: Vec<(String, usize)>,
    pub total: usize,
    pub unique: usize,
    pub singletons: usize,
    /// `buckets[k]` = number of relations occurring exactly k+1 times, k < 9;
    /// `buckets[9]` = relations occurring 10 or more times.
    pub buckets: [usize; 10],
}

impl RelationStats {
    pub fn mean_examples_per_relation(&self) -> Option<f64> {
        (self.unique > 0).then(|| self.total as f64 / self.unique as f64)
    }

    pub fn top(&self, k: usize) -> &[(String, usize)] {
        &self.histogram[..k.min(self.histogram.len())]
    }

    /// Plain-text summary.
    pub fn render(&self) -> String {
        let mut out = format!(
            "compositional examples: {}\nunique relations: {}\nsingleton relations: {}\n",
            self.total, self.unique, self.singletons
        );
        if let Some(m) = self.mean_examples_per_relation() {
            out += &format!("examples per relation: {m:.2}\n");
        }
        out += "frequency buckets:";
        for (i, b) in self.buckets.iter().enumerate() {
            let label = if i == 9 { ">=10".to_owned() } else { (i + 1).to_string() };
            out += &format!(" {label}:{b}");
        }
        out += "\ntop relations:\n";
        for (rel, count) in self.top(5) {
            out += &format!("  {rel} ({count})\n");
        }
        out
    }
}

pub fn relation_stats(examples: &[DatasetExample]) -> RelationStats {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut total = 0;
    for ex in examples {
        if let Some(p) = ex.gold.paraphrase() {
            *counts.entry(relation_of(&ex.compound, p)).or_default() += 1;
            total += 1;
        }
    }
    let mut histogram: Vec<(String, usize)> = counts.into_iter().collect();
    histogram.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut buckets = [0usize; 10];
    for (_, c) in &histogram {
        buckets[(*c).min(10) - 1] += 1;
    }
    RelationStats { unique: histogram.len(), singletons: buckets[0], histogram, total, buckets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Interpretation;

    fn ex(p: &str, c: &str, para: Option<&str>) -> DatasetExample {
        DatasetExample {
            id: format!("{p}-{c}"),
            compound: NounCompound::bare(p, c).unwrap(),
            gold: para.map_or(Interpretation::NonCompositional, |t| Interpretation::Paraphrase(t.into())),
        }
    }

    #[test]
    fn relation_strips_compound_and_proper_noun() {
        let nc = NounCompound::bare("Paris", "museum").unwrap();
        assert_eq!(relation_of(&nc, "Paris museum is located in Paris"), "is located in");
        let nc = NounCompound::bare("Kennedy", "brothers").unwrap();
        assert_eq!(relation_of(&nc, "Kennedy brothers are relatives of Kennedy."), "are relatives of");
        // A proper noun that is only a suffix of the last word is kept.
        let nc = NounCompound::bare("Hawk", "nest").unwrap();
        assert_eq!(relation_of(&nc, "Hawk nest is a nest of a Blackhawk"), "is a nest of a Blackhawk");
    }

    #[test]
    fn empty_input_has_empty_histogram() {
        let s = relation_stats(&[]);
        assert!(s.histogram.is_empty());
        assert_eq!(s.total, 0);
        assert_eq!(s.mean_examples_per_relation(), None);
    }

    #[test]
    fn shared_relation_forms_one_bucket() {
        let data = vec![
            ex("Paris", "museum", Some("Paris museum is located in Paris")),
            ex("Tokyo", "office", Some("Tokyo office is located in Tokyo")),
            ex("Texas", "ranch", Some("Texas ranch is located in Texas")),
            ex("Enron", "scandal", None),
        ];
        let s = relation_stats(&data);
        assert_eq!(s.histogram, vec![("is located in".to_owned(), 3)]);
        assert_eq!(s.buckets[2], 1);
        assert_eq!(s.total, 3);
    }
}
