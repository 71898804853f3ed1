//! Dataset ingestion and persistence.
//!
//! One JSON object per line:
//! `{"id","proper_noun","common_noun","sentence","span":[start,end],"interpretation": string|null}`.
//! A `null` (or blank) interpretation marks a non-compositional compound.
//! Paraphrases are stored as full sentences; a relation-only paraphrase
//! ("is a biography about Shakespeare") is expanded with the compound prefix
//! on load.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{DatasetExample, Interpretation, NounCompound};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    proper_noun: String,
    common_noun: String,
    sentence: String,
    span: (usize, usize),
    #[serde(default)]
    interpretation: Option<String>,
}

/// A record that failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

impl Record {
    fn into_example(self) -> Result<DatasetExample> {
        let compound = NounCompound::new(self.proper_noun, self.common_noun, self.sentence, self.span)?;
        let gold = match self.interpretation {
            Some(text) if !text.trim().is_empty() => Interpretation::Paraphrase(full_paraphrase(&compound, &text)),
            _ => Interpretation::NonCompositional,
        };
        Ok(DatasetExample { id: self.id, compound, gold })
    }

    fn from_example(ex: &DatasetExample) -> Self {
        Record {
            id: ex.id.clone(),
            proper_noun: ex.compound.proper_noun.clone(),
            common_noun: ex.compound.common_noun.clone(),
            sentence: ex.compound.sentence.clone(),
            span: ex.compound.span,
            interpretation: ex.gold.paraphrase().map(str::to_owned),
        }
    }
}

fn full_paraphrase(nc: &NounCompound, text: &str) -> String {
    let text = text.trim();
    let compound = nc.text();
    if text.starts_with(&compound) {
        text.to_owned()
    } else {
        format!("{compound} {text}")
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Read every line of a JSONL file, keeping well-formed records and
/// collecting the rest as line-numbered errors (1-based).
pub fn read_dataset_lenient(path: impl AsRef<Path>) -> Result<(Vec<DatasetExample>, Vec<RecordError>)> {
    let path = path.as_ref();
    let mut examples = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Record>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.into_example().map_err(|e| e.to_string()));
        match parsed {
            Ok(ex) if !seen.insert(ex.id.clone()) => {
                errors.push(RecordError { line: line_no, message: format!("duplicate id {:?}", ex.id) })
            }
            Ok(ex) => examples.push(ex),
            Err(message) => errors.push(RecordError { line: line_no, message }),
        }
    }
    Ok((examples, errors))
}

/// Load a dataset, failing on the first malformed record.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetExample>> {
    let path = path.as_ref();
    let (examples, errors) = read_dataset_lenient(path)?;
    if let Some(first) = errors.into_iter().next() {
        return Err(Error::Record { path: path.to_owned(), line: first.line, message: first.message });
    }
    Ok(examples)
}

pub fn save_dataset(path: impl AsRef<Path>, examples: &[DatasetExample]) -> Result<()> {
    let records: Vec<Record> = examples.iter().map(Record::from_example).collect();
    write_jsonl(path, &records)
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.to_owned(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(Error::data)?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    serde_json::from_reader(open(path)?).map_err(|e| Error::Record { path: path.to_owned(), line: e.line(), message: e.to_string() })
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(Error::data)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Validation, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<DatasetExample>,
    pub validation: Vec<DatasetExample>,
    pub test: Vec<DatasetExample>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &[DatasetExample] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, name: SplitName) -> &mut Vec<DatasetExample> {
        match name {
            SplitName::Train => &mut self.train,
            SplitName::Validation => &mut self.validation,
            SplitName::Test => &mut self.test,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }

    pub fn manifest(&self) -> SplitManifest {
        let mut map = BTreeMap::new();
        for name in SplitName::ALL {
            for ex in self.get(name) {
                map.insert(ex.id.clone(), name);
            }
        }
        SplitManifest(map)
    }
}

/// Persisted split assignment: example id → split name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest(pub BTreeMap<String, SplitName>);

impl SplitManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    /// Distribute examples according to the manifest, preserving input order.
    /// Every example must be listed.
    pub fn apply(&self, examples: &[DatasetExample]) -> Result<Splits> {
        let mut splits = Splits::default();
        for ex in examples {
            let name = self
                .0
                .get(&ex.id)
                .ok_or_else(|| Error::data(format!("example {:?} is not assigned to any split", ex.id)))?;
            splits.get_mut(*name).push(ex.clone());
        }
        Ok(splits)
    }
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(alias = "interpretation")]
    pub prediction: Interpretation,
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    read_jsonl(path)
}

pub fn write_predictions(path: impl AsRef<Path>, preds: &[PredictionRecord]) -> Result<()> {
    write_jsonl(path, preds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn relation_only_paraphrase_is_expanded() {
        let f = write_lines(&[
            r#"{"id":"a","proper_noun":"Shakespeare","common_noun":"biography","sentence":"A Shakespeare biography appeared.","span":[2,23],"interpretation":"is a biography about Shakespeare"}"#,
        ]);
        let ds = load_dataset(f.path()).unwrap();
        assert_eq!(ds[0].gold, Interpretation::Paraphrase("Shakespeare biography is a biography about Shakespeare".into()));
    }

    #[test]
    fn blank_or_null_relation_is_non_compositional() {
        let f = write_lines(&[
            r#"{"id":"a","proper_noun":"Concorde","common_noun":"airplane","sentence":"Concorde airplane","span":[0,17],"interpretation":null}"#,
            r#"{"id":"b","proper_noun":"Concorde","common_noun":"airplane","sentence":"Concorde airplane","span":[0,17],"interpretation":""}"#,
            r#"{"id":"c","proper_noun":"Concorde","common_noun":"airplane","sentence":"Concorde airplane","span":[0,17]}"#,
        ]);
        let ds = load_dataset(f.path()).unwrap();
        assert!(ds.iter().all(|e| e.gold == Interpretation::NonCompositional));
    }

    #[test]
    fn malformed_records_carry_line_numbers() {
        let f = write_lines(&[
            r#"{"id":"a","proper_noun":"Concorde","common_noun":"airplane","sentence":"Concorde airplane","span":[0,17],"interpretation":null}"#,
            r#"{"id":"b","proper_noun":"Concorde","sentence":"Concorde airplane","span":[0,17]}"#,
            r#"{"id":"c","proper_noun":"Concorde","common_noun":"airplane","sentence":"Concorde airplane","span":[0,9]}"#,
            r#"{"id":"a","proper_noun":"Concorde","common_noun":"airplane","sentence":"Concorde airplane","span":[0,17]}"#,
        ]);
        let (ok, errs) = read_dataset_lenient(f.path()).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(errs.iter().map(|e| e.line).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(errs[0].message.contains("common_noun"));
        assert!(errs[2].message.contains("duplicate"));
        match load_dataset(f.path()).unwrap_err() {
            Error::Record { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(load_dataset("/nonexistent/pnc.jsonl"), Err(Error::Io { .. })));
    }

    #[test]
    fn manifest_must_cover_every_example() {
        let nc = NounCompound::bare("Covid", "vaccine").unwrap();
        let ex = DatasetExample { id: "x".into(), compound: nc, gold: Interpretation::NonCompositional };
        assert!(SplitManifest::default().apply(&[ex]).is_err());
    }
}
