//! IO and command-line layer for the `dve-core` evaluator.

#[cfg(feature = "backbones")]
pub mod backbones;
pub mod batch;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod encoders;
pub mod image_prep;
pub mod jsonl;
pub mod lvlm;
pub mod report;
pub mod sources;
