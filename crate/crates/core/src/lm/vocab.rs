use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub type WordId = u32;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Bidirectional token/id map with per-id frequencies.
///
/// Ids 0, 1 and 2 are always `<unk>`, `<s>` and `</s>`; other tokens get ids
/// in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, WordId>,
    tokens: Vec<String>,
    freq: Vec<u64>,
}

impl Vocabulary {
    pub const UNK_ID: WordId = 0;
    pub const BOS_ID: WordId = 1;
    pub const EOS_ID: WordId = 2;

    pub fn new() -> Self {
        let mut v = Vocabulary {
            ids: HashMap::new(),
            tokens: Vec::new(),
            freq: Vec::new(),
        };
        for t in [UNK, BOS, EOS] {
            v.intern(t);
        }
        v
    }

    /// Counts every whitespace-separated token of every line.
    pub fn from_corpus<I>(lines: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut v = Vocabulary::new();
        for line in lines {
            for tok in line.as_ref().split_whitespace() {
                v.observe(tok, 1);
            }
        }
        v
    }

    pub fn intern(&mut self, token: &str) -> WordId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as WordId;
        self.ids.insert(token.to_string(), id);
        self.tokens.push(token.to_string());
        self.freq.push(0);
        id
    }

    pub fn observe(&mut self, token: &str, count: u64) -> WordId {
        let id = self.intern(token);
        self.freq[id as usize] += count;
        id
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.ids.get(token).copied()
    }

    /// Maps unknown tokens to `<unk>`.
    pub fn id_or_unk(&self, token: &str) -> WordId {
        self.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn frequency(&self, id: WordId) -> u64 {
        self.freq[id as usize]
    }

    /// True for ordinary (non-reserved) tokens present in the map.
    pub fn contains(&self, token: &str) -> bool {
        self.id(token).is_some_and(|id| !Self::is_reserved(id))
    }

    pub fn is_reserved(id: WordId) -> bool {
        id <= Self::EOS_ID
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 3
    }

    pub fn tokens(&self) -> impl Iterator<Item = (WordId, &str)> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (i as WordId, t.as_str()))
    }

    /// One `token\tcount` line per non-reserved token, by descending count.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&str, u64)> = self
            .tokens()
            .filter(|(id, _)| !Self::is_reserved(*id))
            .map(|(id, t)| (t, self.frequency(id)))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        rows.iter().map(|(t, c)| format!("{t}\t{c}\n")).collect()
    }

    /// Accepts `token` or `token\tcount` per line.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut v = Vocabulary::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let tok = fields.next().unwrap_or_default().trim();
            let count = match fields.next() {
                Some(c) => c
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("vocabulary", i + 1, format!("bad count {c:?}")))?,
                None => 1,
            };
            v.observe(tok, count);
        }
        Ok(v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_tsv(&crate::text::read_text(path)?)
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}
