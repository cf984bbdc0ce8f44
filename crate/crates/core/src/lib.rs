//! Corpus domain-adaptation toolkit for machine translation pipelines.
//!
//! The crate covers the statistical side of a phrase-based MT adaptation
//! recipe:
//!
//! - [`text`]: normalization, tokenization, parallel corpus I/O, length filtering
//! - [`lm`]: n-gram counting, modified Kneser-Ney estimation, ARPA I/O
//! - [`mixture`]: EM-fitted linear interpolation of n-gram models
//! - [`selection`]: cross-entropy difference (Moore-Lewis) data selection
//! - [`bpe`]: byte-pair-encoding subword segmentation
//! - [`osm`]: operation-sequence encoding of word-aligned bitext
//! - [`classes`]: exchange-algorithm word clustering
//! - [`oov`]: out-of-vocabulary detection, deletion and transliteration
//! - [`eval`]: corpus BLEU and progress tables
//! - [`pipeline`]: config-driven runner chaining the stages
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod bpe;
pub mod classes;
mod error;
pub mod eval;
pub mod lm;
pub mod mixture;
pub mod oov;
pub mod osm;
pub mod pipeline;
pub mod selection;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
