//! Proper noun compound interpretation toolkit.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod detect;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fewshot;
pub mod http;
pub mod knowledge;
pub mod model;
pub mod openie;
pub mod process;
pub mod split;
pub mod stats;
pub mod text;
pub mod types;

pub use error::{Error, ProviderError, Result};
