//! Supervised interpreters over a pluggable sequence-to-sequence backbone.

pub mod ablation;
pub mod backbone;
pub mod checkpoint;
pub mod external;
pub mod oracle;
pub mod supervised;
pub mod target;
pub mod tiny;
pub mod train;

pub use ablation::{shuffle_ablation, NounRole};
pub use backbone::{Backbone, BackboneSpec, StepLoss, StepOptions, TrainItem};
pub use checkpoint::{Checkpoint, CheckpointConfig, EpochLog, ModelKind, TrainConfig};
pub use external::ExternalBackbone;
pub use oracle::OracleBackbone;
pub use supervised::{
    build_inputs, mtgen_predict, mtgen_train, predict_with, unigen_predict, unigen_train, Interpreter, Supervised,
    TrainSetup,
};
pub use target::{parse_output, serialize_target};
pub use tiny::{TinyBackbone, TinyConfig};
