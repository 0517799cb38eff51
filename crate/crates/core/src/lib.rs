//! Allocation-only core for defeasible visual entailment.
//!
//! Everything here is pure computation over in-memory values: the shared
//! domain types, the corpus join and its statistics, the encoder contract
//! with a deterministic hashing encoder, the evaluator heads with their
//! losses and trainer, the meta-evaluation metrics, and the
//! critique-and-refine loop. File formats, HTTP, image decoding and the CLI
//! live in the `dve` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod encoder;
pub mod evaluator;
pub mod metrics;
mod numeric;
pub mod refinement;
pub mod synthetic;
pub mod types;

pub use dataset::{DatasetStats, DveDataset, JoinReport, StatsReport};
pub use encoder::{DeterministicTestEncoder, EncoderError, TextPairEncoder, VisualEncoder};
pub use evaluator::{EvaluatorModel, FusedFeature, TrainConfig};
pub use refinement::{critique, RefinementConfig, RefinementTrace, Verdict};
pub use types::{label_sign, Caption, DveSample, Goal, Hypothesis, ImagePremise, Split, Update, UpdateLabel};
