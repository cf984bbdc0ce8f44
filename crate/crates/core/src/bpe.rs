//! Byte-pair-encoding subword segmentation.
//!
//! Words are split into characters with the end-of-word marker `</w>` glued
//! to the last character, the convention of the widely used `subword-nmt`
//! codes files. Learning repeatedly merges the most frequent adjacent symbol
//! pair (weighted by word frequency), breaking ties by the lexicographically
//! smallest `(left, right)`. Segmented output marks every non-final subword
//! with the continuation suffix `@@`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const END_OF_WORD: &str = "</w>";
pub const CONTINUATION: &str = "@@";
pub const CODES_VERSION: &str = "#version: 0.2";
pub const DEFAULT_MERGES: usize = 59_500;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Result<Self> {
        let mut ranks = HashMap::with_capacity(merges.len());
        for (i, m) in merges.iter().enumerate() {
            if ranks.insert(m.clone(), i).is_some() {
                return Err(Error::Argument(format!("duplicate merge {} {}", m.0, m.1)));
            }
        }
        Ok(BpeModel { merges, ranks })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn rank(&self, left: &str, right: &str) -> Option<usize> {
        self.ranks
            .get(&(left.to_string(), right.to_string()))
            .copied()
    }

    /// Subword units of one word, `</w>` removed, without continuation marks.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        let mut syms = initial_symbols(word);
        loop {
            let best = syms
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            syms = merge_symbols(&syms, l, r);
        }
        if let Some(last) = syms.last_mut() {
            if let Some(stripped) = last.strip_suffix(END_OF_WORD) {
                *last = stripped.to_string();
            }
        }
        syms.retain(|s| !s.is_empty());
        syms
    }

    /// Segments a whitespace-tokenized line.
    pub fn apply_line(&self, line: &str) -> String {
        let mut out: Vec<String> = Vec::new();
        for word in line.split_whitespace() {
            let units = self.segment_word(word);
            let n = units.len();
            for (i, u) in units.into_iter().enumerate() {
                if i + 1 < n {
                    out.push(format!("{u}{CONTINUATION}"));
                } else {
                    out.push(u);
                }
            }
        }
        out.join(" ")
    }

    pub fn apply_lines<S: AsRef<str> + Sync>(&self, lines: &[S]) -> Vec<String> {
        lines
            .par_iter()
            .map(|l| self.apply_line(l.as_ref()))
            .collect()
    }

    /// Codes file: a version header, then `left right` per line in rank order.
    pub fn to_codes(&self) -> String {
        let mut out = String::from(CODES_VERSION);
        out.push('\n');
        for (l, r) in &self.merges {
            out.push_str(l);
            out.push(' ');
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn parse_codes(text: &str) -> Result<Self> {
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 && line.starts_with("#version") {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => return Err(Error::parse("BPE codes", i + 1, "expected `left right`")),
            }
        }
        Self::from_merges(merges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_codes(&crate::text::read_text(path)?)
    }
}

pub(crate) fn initial_symbols(word: &str) -> Vec<String> {
    let mut syms: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = syms.last_mut() {
        last.push_str(END_OF_WORD);
    }
    syms
}

fn merge_symbols(syms: &[String], l: &str, r: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
            out.push(format!("{l}{r}"));
            i += 2;
        } else {
            out.push(syms[i].clone());
            i += 1;
        }
    }
    out
}

#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    left: Arc<str>,
    right: Arc<str>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Learner {
    symbols: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
    words: Vec<(Vec<u32>, i64)>,
    pair_counts: HashMap<(u32, u32), i64>,
    where_: HashMap<(u32, u32), HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Learner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        let a: Arc<str> = Arc::from(s);
        self.symbols.push(a.clone());
        self.ids.insert(a, id);
        id
    }

    fn candidate(&self, pair: (u32, u32)) -> Candidate {
        Candidate {
            count: self.pair_counts.get(&pair).copied().unwrap_or(0),
            left: self.symbols[pair.0 as usize].clone(),
            right: self.symbols[pair.1 as usize].clone(),
            pair,
        }
    }

    fn account(&mut self, w: usize, sign: i64, touched: &mut HashSet<(u32, u32)>) {
        let (syms, freq) = &self.words[w];
        for p in syms.windows(2) {
            let pair = (p[0], p[1]);
            *self.pair_counts.entry(pair).or_insert(0) += sign * freq;
            if sign > 0 {
                self.where_.entry(pair).or_default().insert(w);
            }
            touched.insert(pair);
        }
    }

    fn pop_best(&mut self) -> Option<Candidate> {
        while let Some(c) = self.heap.pop() {
            if self.pair_counts.get(&c.pair).copied().unwrap_or(0) == c.count {
                return Some(c);
            }
        }
        None
    }

    fn merge(&mut self, pair: (u32, u32)) {
        let joined = format!(
            "{}{}",
            self.symbols[pair.0 as usize], self.symbols[pair.1 as usize]
        );
        let new_id = self.intern(&joined);
        let mut affected: Vec<usize> = self
            .where_
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut touched = HashSet::new();
        for w in affected {
            if !self.words[w].0.windows(2).any(|p| (p[0], p[1]) == pair) {
                continue;
            }
            self.account(w, -1, &mut touched);
            let syms = &self.words[w].0;
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            self.words[w].0 = out;
            self.account(w, 1, &mut touched);
        }
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            if self.pair_counts.get(&p).copied().unwrap_or(0) > 0 {
                let c = self.candidate(p);
                self.heap.push(c);
            }
        }
    }
}

/// Word-type frequencies of a corpus of whitespace-tokenized lines.
pub fn word_frequencies<I>(lines: I) -> HashMap<String, u64>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut freq = HashMap::new();
    for line in lines {
        for w in line.as_ref().split_whitespace() {
            *freq.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    freq
}

/// Learns up to `num_merges` merges; stops early once no pair occurs at
/// least twice.
pub fn bpe_learn<I>(lines: I, num_merges: usize) -> Result<BpeModel>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    bpe_learn_from_counts(&word_frequencies(lines), num_merges)
}

pub fn bpe_learn_from_counts(freq: &HashMap<String, u64>, num_merges: usize) -> Result<BpeModel> {
    if freq.is_empty() {
        return Err(Error::NoEvents(
            "BPE learning needs at least one word".into(),
        ));
    }
    let mut types: Vec<(&String, &u64)> = freq.iter().collect();
    types.sort();
    let mut l = Learner {
        symbols: Vec::new(),
        ids: HashMap::new(),
        words: Vec::with_capacity(types.len()),
        pair_counts: HashMap::new(),
        where_: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    for (w, &c) in types {
        let syms: Vec<u32> = initial_symbols(w).iter().map(|s| l.intern(s)).collect();
        l.words.push((syms, c as i64));
    }
    let mut touched = HashSet::new();
    for w in 0..l.words.len() {
        l.account(w, 1, &mut touched);
    }
    let mut pairs: Vec<_> = touched.into_iter().collect();
    pairs.sort_unstable();
    for p in pairs {
        let c = l.candidate(p);
        l.heap.push(c);
    }

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let Some(best) = l.pop_best() else { break };
        if best.count < 2 {
            break;
        }
        merges.push((best.left.to_string(), best.right.to_string()));
        l.merge(best.pair);
    }
    BpeModel::from_merges(merges)
}

pub fn bpe_apply(model: &BpeModel, line: &str) -> String {
    model.apply_line(line)
}

/// Removes continuation markers, joining each marked unit with its successor.
/// A marker left dangling at the end of the line is dropped with a warning.
pub fn bpe_undo(line: &str) -> String {
    let (out, dangling) = bpe_undo_checked(line);
    if dangling {
        log::warn!("dangling continuation marker at end of line: {line:?}");
    }
    out
}

/// Like [`bpe_undo`], also reporting whether a dangling marker was stripped.
pub fn bpe_undo_checked(line: &str) -> (String, bool) {
    let joined = line.replace("@@ ", "");
    match joined.strip_suffix(CONTINUATION) {
        Some(s) => (s.to_string(), true),
        None => (joined, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> HashMap<String, u64> {
        [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]
            .into_iter()
            .map(|(w, c)| (w.to_string(), c))
            .collect()
    }

    #[test]
    fn first_merge_is_e_s() {
        let m = bpe_learn_from_counts(&fixture(), 1).unwrap();
        assert_eq!(m.merges(), [("e".to_string(), "s".to_string())]);
    }

    #[test]
    fn zero_merges() {
        assert!(bpe_learn_from_counts(&fixture(), 0).unwrap().is_empty());
    }

    #[test]
    fn stops_when_pairs_are_rare() {
        let m = bpe_learn(["ab cd"], 100).unwrap();
        assert!(m.is_empty());
        let m = bpe_learn(["ab ab"], 100).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(bpe_learn(["", "  "], 10).is_err());
    }

    #[test]
    fn char_fallback() {
        assert_eq!(BpeModel::default().apply_line("ab"), "a@@ b");
        assert_eq!(BpeModel::default().apply_line("a"), "a");
    }

    #[test]
    fn frequent_word_whole() {
        let m = bpe_learn(["newest newest newest widest"], 50).unwrap();
        assert_eq!(m.apply_line("newest"), "newest");
    }

    #[test]
    fn undo_examples() {
        assert_eq!(bpe_undo("un@@ related"), "unrelated");
        assert_eq!(bpe_undo("a b"), "a b");
        assert_eq!(bpe_undo_checked("foo@@"), ("foo".to_string(), true));
    }

    #[test]
    fn codes_roundtrip() {
        let m = bpe_learn_from_counts(&fixture(), 10).unwrap();
        let text = m.to_codes();
        assert!(text.starts_with(CODES_VERSION));
        assert_eq!(BpeModel::parse_codes(&text).unwrap(), m);
        assert!(BpeModel::parse_codes("#version: 0.2\na b\na b\n").is_err());
        assert!(BpeModel::parse_codes("#version: 0.2\nab\n").is_err());
    }
}
