use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::vocab::{Vocabulary, WordId};
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 5;

/// Raw n-gram counts for orders `1..=order`.
///
/// Each sentence is padded as `<s> w1 .. wm </s>`; every predicted position
/// (the words and `</s>`, never `<s>`) contributes one k-gram per order `k`
/// whose window fits inside the padded sentence.
#[derive(Debug, Clone)]
pub struct NgramCounts {
    order: usize,
    vocab: Vocabulary,
    counts: Vec<HashMap<Vec<WordId>, u64>>,
    sentences: u64,
}

impl NgramCounts {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Argument("n-gram order must be at least 1".into()));
        }
        Ok(NgramCounts {
            order,
            vocab: Vocabulary::new(),
            counts: vec![HashMap::new(); order],
            sentences: 0,
        })
    }

    pub fn add_sentence(&mut self, line: &str) {
        let mut seq = Vec::with_capacity(16);
        seq.push(Vocabulary::BOS_ID);
        self.vocab.observe(super::vocab::BOS, 1);
        for tok in line.split_whitespace() {
            seq.push(self.vocab.observe(tok, 1));
        }
        seq.push(self.vocab.observe(super::vocab::EOS, 1));
        for i in 1..seq.len() {
            for k in 1..=self.order.min(i + 1) {
                *self.counts[k - 1]
                    .entry(seq[i + 1 - k..=i].to_vec())
                    .or_insert(0) += 1;
            }
        }
        self.sentences += 1;
    }

    /// Registers `token` as a unigram with count zero if unseen, so the
    /// estimate reserves probability for it.
    pub fn declare(&mut self, token: &str) {
        let id = self.vocab.intern(token);
        if !Vocabulary::is_reserved(id) {
            self.counts[0].entry(vec![id]).or_insert(0);
        }
    }

    /// Adds `other` into `self`, remapping its ids through this vocabulary.
    pub fn merge(&mut self, other: &NgramCounts) -> Result<()> {
        if other.order != self.order {
            return Err(Error::Argument(format!(
                "cannot merge order-{} counts into order-{}",
                other.order, self.order
            )));
        }
        let remap: Vec<WordId> = other
            .vocab
            .tokens()
            .map(|(id, tok)| self.vocab.observe(tok, other.vocab.frequency(id)))
            .collect();
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (gram, c) in theirs {
                let key: Vec<WordId> = gram.iter().map(|&w| remap[w as usize]).collect();
                *mine.entry(key).or_insert(0) += c;
            }
        }
        self.sentences += other.sentences;
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn sentences(&self) -> u64 {
        self.sentences
    }

    /// Raw counts of order `k` (1-based).
    pub fn raw(&self, k: usize) -> &HashMap<Vec<WordId>, u64> {
        &self.counts[k - 1]
    }

    pub fn count(&self, tokens: &[&str]) -> u64 {
        if tokens.is_empty() || tokens.len() > self.order {
            return 0;
        }
        let ids: Option<Vec<WordId>> = tokens.iter().map(|t| self.vocab.id(t)).collect();
        ids.and_then(|ids| self.counts[tokens.len() - 1].get(&ids).copied())
            .unwrap_or(0)
    }

    /// Token-level view, independent of id assignment.
    pub fn to_token_map(&self) -> BTreeMap<Vec<String>, u64> {
        self.counts
            .iter()
            .flatten()
            .map(|(g, &c)| {
                (
                    g.iter().map(|&w| self.vocab.token(w).to_string()).collect(),
                    c,
                )
            })
            .collect()
    }

    /// Count-of-counts `n1..n4` of the Kneser-Ney adjusted counts, per order.
    pub fn count_of_counts(&self) -> Vec<[u64; 4]> {
        super::kneser_ney::adjusted_counts(self)
            .iter()
            .map(|m| super::kneser_ney::count_of_counts(m.values().copied()))
            .collect()
    }
}

impl PartialEq for NgramCounts {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
            && self.sentences == other.sentences
            && self.to_token_map() == other.to_token_map()
    }
}

/// Counts a corpus of whitespace-tokenized lines.
pub fn count_ngrams<I>(lines: I, order: usize) -> Result<NgramCounts>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut counts = NgramCounts::new(order)?;
    for line in lines {
        counts.add_sentence(line.as_ref());
    }
    if counts.sentences == 0 {
        return Err(Error::NoEvents("empty corpus".into()));
    }
    Ok(counts)
}

/// Counts contiguous shards in parallel and merges them in shard order.
pub fn count_ngrams_sharded<S>(lines: &[S], order: usize, shards: usize) -> Result<NgramCounts>
where
    S: AsRef<str> + Sync,
{
    if lines.is_empty() {
        return Err(Error::NoEvents("empty corpus".into()));
    }
    let size = lines.len().div_ceil(shards.max(1));
    let parts: Vec<NgramCounts> = lines
        .par_chunks(size)
        .map(|chunk| count_ngrams(chunk.iter().map(AsRef::as_ref), order))
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let mut total = iter.next().expect("non-empty corpus has a shard");
    for part in iter {
        total.merge(&part)?;
    }
    Ok(total)
}
