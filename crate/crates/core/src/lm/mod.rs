//! Streaming n-gram counting, modified Kneser-Ney estimation, back-off
//! queries and ARPA I/O.

mod arpa;
mod counts;
mod kneser_ney;
mod model;
mod vocab;

pub use arpa::{export_arpa, export_arpa_with, import_arpa, read_arpa, write_arpa, ArpaOptions};
pub use counts::{count_ngrams, count_ngrams_sharded, NgramCounts, DEFAULT_ORDER};
pub use kneser_ney::{
    adjusted_counts, count_of_counts, estimate_kn, estimate_kn_detailed, train, train_closed,
    Discounts, KnEstimate, FALLBACK_DISCOUNT,
};
pub use model::{NgramEntry, NgramModel, Perplexity, LOG_ZERO};
pub use vocab::{Vocabulary, WordId, BOS, EOS, UNK};
