//! Normalization, tokenization, and parallel-corpus I/O shared by every
//! downstream stage.

mod corpus;
mod normalize;
mod tokenize;

pub use corpus::{
    format_pharaoh, length_filter, parse_pharaoh, read_lines, read_parallel, read_text,
    write_atomic, write_lines, SentencePair,
};
pub(crate) use normalize::parse_codepoint;
pub use normalize::{normalize, normalize_bytes, NormalizationRules};
pub use tokenize::{tokenize, tokenize_line};
