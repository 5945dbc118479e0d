//! Classification of numerical values in French medical notes.
//!
//! The pipeline runs in two phases. Phase 1 finds numeric lexemes in note
//! text, blinds quantitative values behind a placeholder word, and labels
//! each token with one of eight physiological classes using a small
//! transformer encoder whose attention is augmented with label-embedding
//! cross-attention. Phase 2 checks every classified value against reference
//! ranges (age-indexed heart rate, weight-indexed pulmonary artery diameter,
//! oxygen saturation, contractility fractions) and emits a criticality
//! verdict.
//!
//! Modules follow the pipeline order:
//!
//! - [`tokenizer`]: rule-based segmentation, quantitative vs. code numbers
//! - [`blinding`]: placeholder substitution with reversible alignment
//! - [`labels`]: the 8-class schema, keyword table, label-embedding matrix
//! - [`lesa`]: label-embedding self-attention, forward and backward
//! - [`model`]: encoder stack, training loop, checkpoints
//! - [`criticality`]: reference-range rules engine
//! - [`metrics`]: per-class and macro F1, attention export
//! - [`corpus`]: synthetic annotated corpus generation

pub mod blinding;
pub mod corpus;
pub mod criticality;
pub mod labels;
pub mod lesa;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod tokenizer;

pub use labels::ClassLabel;
pub use tokenizer::{Token, TokenKind};
