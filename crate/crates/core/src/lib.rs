//! Financial sentiment instruction-data builder and model evaluation
//! harness.
//!
//! The pipeline: ingest labeled sentiment datasets into a canonical form
//! ([`corpus`]), render them into instruction-tuning records and emit the
//! training configuration ([`instructgen`]), carve out the numerical and
//! contextual diagnostic subsets ([`subsetter`]), obtain generations from a
//! pluggable model backend ([`inference`]), map free-form generations onto
//! labels ([`labelmap`]), score them ([`metrics`]), and render comparison
//! and error tables ([`reporter`]).

pub mod corpus;
pub mod error;
pub mod inference;
pub mod instructgen;
pub mod labelmap;
pub mod metrics;
pub mod reporter;
pub mod rng;
pub mod subsetter;

pub use corpus::{Dataset, LabelVocabulary, Sample, SentimentLabel};
pub use error::{Error, Result};
pub use inference::{BackendConfig, BackendKind};
pub use labelmap::Prediction;
pub use metrics::{ConfusionMatrix, EvalReport, F1Mode};
pub use reporter::{RunSpec, TableFormat, TemplateMode};
