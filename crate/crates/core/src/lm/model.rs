use std::collections::HashMap;

use super::vocab::{Vocabulary, WordId};
use crate::error::{Error, Result};

/// log10 value ARPA files use for "impossible" (the `<s>` unigram).
pub const LOG_ZERO: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramEntry {
    /// log10 p(w | h)
    pub logprob: f64,
    /// log10 backoff weight of this n-gram used as a context
    pub backoff: f64,
}

/// A back-off n-gram model with log10 probabilities and backoff weights.
///
/// Immutable once built; queries take `&self` and are safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    vocab: Vocabulary,
    grams: Vec<HashMap<Vec<WordId>, NgramEntry>>,
}

/// Corpus-level perplexity summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perplexity {
    pub ppl: f64,
    /// total log10 probability
    pub logprob: f64,
    /// predicted events: every token plus one `</s>` per sentence
    pub events: usize,
    pub sentences: usize,
    pub oov: usize,
}

impl NgramModel {
    pub fn new(order: usize, vocab: Vocabulary) -> Self {
        assert!(order >= 1);
        NgramModel {
            order,
            vocab,
            grams: vec![HashMap::new(); order],
        }
    }

    /// Inserts or overwrites an entry, interning unseen tokens.
    pub fn insert(&mut self, tokens: &[&str], logprob: f64, backoff: f64) {
        assert!(!tokens.is_empty() && tokens.len() <= self.order);
        let ids: Vec<WordId> = tokens.iter().map(|t| self.vocab.intern(t)).collect();
        self.insert_ids(ids, NgramEntry { logprob, backoff });
    }

    pub(crate) fn insert_ids(&mut self, ids: Vec<WordId>, entry: NgramEntry) {
        let k = ids.len();
        self.grams[k - 1].insert(ids, entry);
    }

    pub(crate) fn entry_mut(&mut self, ids: &[WordId]) -> Option<&mut NgramEntry> {
        self.grams[ids.len() - 1].get_mut(ids)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn entry(&self, ids: &[WordId]) -> Option<&NgramEntry> {
        if ids.is_empty() || ids.len() > self.order {
            return None;
        }
        self.grams[ids.len() - 1].get(ids)
    }

    pub fn entry_tokens(&self, tokens: &[&str]) -> Option<&NgramEntry> {
        let ids: Option<Vec<WordId>> = tokens.iter().map(|t| self.vocab.id(t)).collect();
        ids.and_then(|ids| self.entry(&ids))
    }

    /// Number of stored n-grams of order `k`.
    pub fn len_order(&self, k: usize) -> usize {
        self.grams[k - 1].len()
    }

    pub fn grams(&self, k: usize) -> impl Iterator<Item = (&[WordId], &NgramEntry)> {
        self.grams[k - 1].iter().map(|(g, e)| (g.as_slice(), e))
    }

    /// Words that can be predicted: every unigram except `<s>`.
    pub fn event_space(&self) -> Vec<WordId> {
        let mut ids: Vec<WordId> = self.grams[0]
            .keys()
            .map(|g| g[0])
            .filter(|&w| w != Vocabulary::BOS_ID)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// log10 p(word | history) by back-off. History is oldest-first and is
    /// truncated to the last `order - 1` ids.
    pub fn logprob_ids(&self, word: WordId, history: &[WordId]) -> f64 {
        let n = history.len().min(self.order - 1);
        let ctx = &history[history.len() - n..];
        let mut key = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for start in 0..=n {
            key.clear();
            key.extend_from_slice(&ctx[start..]);
            key.push(word);
            if let Some(e) = self.grams[key.len() - 1].get(&key) {
                return acc + e.logprob;
            }
            if start < n {
                if let Some(c) = self.grams[n - start - 1].get(&ctx[start..]) {
                    acc += c.backoff;
                }
            }
        }
        // word absent even as a unigram: fall back to <unk>, if the model has one
        if word != Vocabulary::UNK_ID {
            self.logprob_ids(Vocabulary::UNK_ID, history)
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn logprob(&self, word: &str, history: &[&str]) -> f64 {
        let hist: Vec<WordId> = history.iter().map(|t| self.vocab.id_or_unk(t)).collect();
        self.logprob_ids(self.vocab.id_or_unk(word), &hist)
    }

    /// Maps a whitespace-tokenized line to ids, appending `</s>`.
    pub fn events(&self, line: &str) -> Vec<WordId> {
        let mut ids: Vec<WordId> = line
            .split_whitespace()
            .map(|t| self.vocab.id_or_unk(t))
            .collect();
        ids.push(Vocabulary::EOS_ID);
        ids
    }

    /// Per-event log10 probabilities of one sentence, `</s>` included.
    pub fn sentence_logprobs(&self, line: &str) -> Vec<f64> {
        let ids = self.events(line);
        let mut hist = Vec::with_capacity(ids.len() + 1);
        hist.push(Vocabulary::BOS_ID);
        ids.iter()
            .map(|&w| {
                let lp = self.logprob_ids(w, &hist);
                hist.push(w);
                lp
            })
            .collect()
    }

    /// Average negative log10 probability per event of one sentence.
    pub fn cross_entropy(&self, line: &str) -> f64 {
        let lps = self.sentence_logprobs(line);
        -lps.iter().sum::<f64>() / lps.len() as f64
    }

    pub fn perplexity<I>(&self, lines: I) -> Result<Perplexity>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut total = 0.0;
        let mut events = 0;
        let mut sentences = 0;
        let mut oov = 0;
        for line in lines {
            let line = line.as_ref();
            oov += line
                .split_whitespace()
                .filter(|t| !self.is_known(t))
                .count();
            let lps = self.sentence_logprobs(line);
            events += lps.len();
            total += lps.iter().sum::<f64>();
            sentences += 1;
        }
        if sentences == 0 {
            return Err(Error::NoEvents("perplexity of an empty corpus".into()));
        }
        Ok(Perplexity {
            ppl: 10f64.powf(-total / events as f64),
            logprob: total,
            events,
            sentences,
            oov,
        })
    }

    /// True if the token has its own unigram entry.
    pub fn is_known(&self, token: &str) -> bool {
        self.vocab
            .id(token)
            .is_some_and(|id| id != Vocabulary::UNK_ID && self.grams[0].contains_key(&[id][..]))
    }
}
