#![allow(dead_code)]

use std::path::PathBuf;

use pnc_core::dataset::load_dataset;
use pnc_core::types::DatasetExample;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn compounds() -> Vec<DatasetExample> {
    load_dataset(fixture("compounds.jsonl")).unwrap()
}
