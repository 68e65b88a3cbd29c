//! Interaction ingestion, preprocessing, strong-generalization splits and a
//! synthetic missing-not-at-random generator.

mod matrix;
mod preprocess;
mod records;
mod split;
mod synth;

pub use matrix::{InteractionMatrix, MatrixStats};
pub use preprocess::{preprocess, PreprocessOptions};
pub use records::{load_interactions, parse_interactions, Delimited, InteractionRecord};
pub use split::{
    split_strong_generalization, EvalSplit, HeldOutUser, Segment, SegmentSplit, SplitOptions,
};
pub use synth::{
    generate_mnar, power_law_exposure, MnarConfig, PreferenceStructure, SyntheticGroundTruth,
};
