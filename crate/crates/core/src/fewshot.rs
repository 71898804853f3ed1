//! Zero-shot masked templates and few-shot prompting with random or
//! nearest-neighbour demonstrations.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::read_json;
use crate::error::{Error, Result};
use crate::model::{parse_output, serialize_target, Backbone, Interpreter};
use crate::types::{DatasetExample, Interpretation, NounCompound};

/// "<w1> <w2> is a <MASK> the <w1>"
pub fn zero_shot_template(nc: &NounCompound, mask: &str) -> String {
    format!("{} {} is a {mask} the {}", nc.proper_noun, nc.common_noun, nc.proper_noun)
}

/// The infill span of a generation. Text-to-text infill models answer
/// "<extra_id_0> span <extra_id_1> ..."; the span ends at the next sentinel.
pub fn extract_infill(generated: &str, mask: &str) -> String {
    let text = generated.trim();
    let text = text.strip_prefix(mask).unwrap_or(text);
    let end = text.find("<extra_id_").unwrap_or(text.len());
    let end = text[..end].find("</s>").unwrap_or(end);
    text[..end].split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn splice(template: &str, mask: &str, infill: &str) -> String {
    let filled = template.replacen(mask, infill.trim(), 1);
    filled.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Zero-shot never predicts non-compositionality: the template always
/// yields a paraphrase.
pub fn zero_shot_predict(backbone: &dyn Backbone, nc: &NounCompound) -> Result<Interpretation> {
    let mask = backbone.mask_token();
    let template = zero_shot_template(nc, mask);
    let infill = extract_infill(&backbone.generate(&template)?, mask);
    Ok(Interpretation::Paraphrase(splice(&template, mask, &infill)))
}

pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>>;
}

/// Precomputed vectors keyed by text.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixtureEmbedder(pub HashMap<String, Vec<f32>>);

impl FixtureEmbedder {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }
}

impl Embedder for FixtureEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        self.0.get(text).cloned().ok_or_else(|| Error::data(format!("no fixture embedding for {text:?}")))
    }
}

/// Mean of a backbone's encoder states.
pub struct BackboneEmbedder<'a>(pub &'a dyn Backbone);

impl Embedder for BackboneEmbedder<'_> {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        let states = self.0.encode(text)?;
        let first = states.first().ok_or_else(|| Error::data(format!("no encoder states for {text:?}")))?;
        let mut mean = vec![0f32; first.len()];
        for s in &states {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        let n = states.len() as f32;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }
}

pub fn cosine_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::data(format!("embedding sizes differ: {} vs {}", a.len(), b.len())));
    }
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::data("cosine distance of a zero vector"));
    }
    Ok(1.0 - dot / (na.sqrt() * nb.sqrt()))
}

/// Training compounds embedded once for repeated nearest-neighbour queries.
pub struct KnnIndex<'a> {
    train: &'a [DatasetExample],
    vectors: Vec<Vec<f32>>,
}

impl<'a> KnnIndex<'a> {
    pub fn new(train: &'a [DatasetExample], embedder: &dyn Embedder) -> Result<Self> {
        let vectors = train.iter().map(|ex| embedder.embed(&ex.compound.text())).collect::<Result<_>>()?;
        Ok(KnnIndex { train, vectors })
    }

    /// The `k` nearest examples by cosine distance, ties broken by id.
    pub fn nearest(&self, query: &[f32], k: usize) -> Result<Vec<&'a DatasetExample>> {
        check_k(k, self.train.len())?;
        let mut scored = self
            .train
            .iter()
            .zip(&self.vectors)
            .map(|(ex, v)| Ok((cosine_distance(query, v)?, ex)))
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        Ok(scored.into_iter().take(k).map(|(_, ex)| ex).collect())
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::data("training set is empty"));
    }
    if k > n {
        return Err(Error::config(format!("K = {k} exceeds the {n} training examples")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SelectorKind {
    Random { seed: u64 },
    Knn,
}

pub enum DemoSelector<'a> {
    /// Uniform draws without replacement. The generator is seeded from the
    /// seed and the query text, so each query gets its own fixed draw.
    Random { seed: u64 },
    Knn(KnnIndex<'a>, &'a dyn Embedder),
}

fn fnv(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn select_demos<'a>(
    query: &NounCompound,
    train: &'a [DatasetExample],
    k: usize,
    selector: &DemoSelector<'a>,
) -> Result<Vec<&'a DatasetExample>> {
    check_k(k, train.len())?;
    match selector {
        DemoSelector::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv(&query.text()));
            Ok(sample(&mut rng, train.len(), k).into_iter().map(|i| &train[i]).collect())
        }
        DemoSelector::Knn(index, embedder) => index.nearest(&embedder.embed(&query.text())?, k),
    }
}

/// One "<compound> => <target>" line per demo, then "<query> =>". With a
/// budget (in whitespace tokens) an oversized prompt is an error.
pub fn assemble_prompt(demos: &[&DatasetExample], query: &NounCompound, budget: Option<usize>) -> Result<String> {
    let mut lines: Vec<String> = demos
        .iter()
        .map(|d| format!("{} => {}", d.compound.text(), serialize_target(&d.compound, &d.gold)))
        .collect();
    lines.push(format!("{} =>", query.text()));
    let prompt = lines.join("\n");
    if let Some(limit) = budget {
        let n = prompt.split_whitespace().count();
        if n > limit {
            return Err(Error::config(format!(
                "prompt with {} demos is {n} tokens, {} over the context limit of {limit}",
                demos.len(),
                n - limit
            )));
        }
    }
    Ok(prompt)
}

/// Parse a completion: the text after the last "=>", first line only.
pub fn parse_completion(nc: &NounCompound, generated: &str) -> Interpretation {
    let tail = generated.rsplit("=>").next().unwrap_or(generated);
    let line = tail.trim_start().lines().next().unwrap_or("");
    parse_output(nc, line)
}

pub struct ZeroShot<'a> {
    pub backbone: &'a dyn Backbone,
}

impl Interpreter for ZeroShot<'_> {
    fn name(&self) -> String {
        "zeroshot".into()
    }

    fn interpret(&self, nc: &NounCompound) -> Result<Interpretation> {
        zero_shot_predict(self.backbone, nc)
    }
}

pub struct FewShot<'a> {
    pub backbone: &'a dyn Backbone,
    pub train: &'a [DatasetExample],
    pub k: usize,
    pub selector: DemoSelector<'a>,
}

impl Interpreter for FewShot<'_> {
    fn name(&self) -> String {
        let how = match self.selector {
            DemoSelector::Random { .. } => "random",
            DemoSelector::Knn(..) => "knn",
        };
        format!("fewshot-{how}-{}", self.k)
    }

    fn interpret(&self, nc: &NounCompound) -> Result<Interpretation> {
        let demos = select_demos(nc, self.train, self.k, &self.selector)?;
        let prompt = assemble_prompt(&demos, nc, self.backbone.context_limit())?;
        Ok(parse_completion(nc, &self.backbone.generate(&prompt)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, p: &str, c: &str, gold: Option<&str>) -> DatasetExample {
        DatasetExample {
            id: id.into(),
            compound: NounCompound::bare(p, c).unwrap(),
            gold: gold.map_or(Interpretation::NonCompositional, |g| Interpretation::Paraphrase(g.into())),
        }
    }

    #[test]
    fn template_and_splice() {
        let nc = NounCompound::bare("Covid", "vaccine").unwrap();
        let t = zero_shot_template(&nc, "<MASK>");
        assert_eq!(t, "Covid vaccine is a <MASK> the Covid");
        assert_eq!(extract_infill("<extra_id_0> vaccine against <extra_id_1>", "<extra_id_0>"), "vaccine against");
        assert_eq!(splice(&t, "<MASK>", " vaccine against "), "Covid vaccine is a vaccine against the Covid");
    }

    #[test]
    fn prompt_format() {
        let london = ex("1", "London", "theatre", Some("London theatre is a theatre in London"));
        let q = NounCompound::bare("Oxford", "vaccine").unwrap();
        let p = assemble_prompt(&[&london], &q, None).unwrap();
        assert_eq!(p, "London theatre => London theatre is a theatre in London\nOxford vaccine =>");
        assert_eq!(assemble_prompt(&[], &q, None).unwrap(), "Oxford vaccine =>");
        let err = assemble_prompt(&[&london], &q, Some(5)).unwrap_err();
        assert!(err.to_string().contains("over the context limit"), "{err}");
        assert_eq!(
            parse_completion(&q, "London theatre => x\nOxford vaccine => Oxford vaccine is a vaccine from Oxford\nmore"),
            Interpretation::Paraphrase("Oxford vaccine is a vaccine from Oxford".into())
        );
    }

    #[test]
    fn selectors() {
        let train: Vec<DatasetExample> =
            (0..5).map(|i| ex(&format!("e{i}"), &format!("P{i}"), "thing", None)).collect();
        let mut emb = FixtureEmbedder::default();
        for (i, e) in train.iter().enumerate() {
            let mut v = vec![0.0; 5];
            v[i] = 1.0;
            emb.0.insert(e.compound.text(), v);
        }
        emb.0.insert("Q thing".into(), vec![0.0, 0.0, 1.0, 0.1, 0.0]);
        let q = NounCompound::bare("Q", "thing").unwrap();
        let sel = DemoSelector::Knn(KnnIndex::new(&train, &emb).unwrap(), &emb);
        let got = select_demos(&q, &train, 3, &sel).unwrap();
        let ids: Vec<&str> = got.iter().map(|e| e.id.as_str()).collect();
        // e2 nearest, e3 next, then the orthogonal ones tie and go by id.
        assert_eq!(ids, ["e2", "e3", "e0"]);
        assert!(select_demos(&q, &train, 6, &sel).is_err());
        let r = DemoSelector::Random { seed: 7 };
        let a = select_demos(&q, &train, 3, &r).unwrap();
        assert_eq!(a, select_demos(&q, &train, 3, &r).unwrap());
        let mut ids: Vec<&str> = a.iter().map(|e| e.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 3);
    }
}
