//! Out-of-vocabulary detection and resolution by deletion or
//! character-level transliteration.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lm::Vocabulary;
use crate::text::parse_codepoint;

const DEFAULT_TABLE: &str = include_str!("../data/buckwalter.tsv");

/// Per-character romanization. Characters without an entry pass through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslitTable {
    map: BTreeMap<char, String>,
}

impl TranslitTable {
    pub fn new(map: BTreeMap<char, String>) -> Self {
        TranslitTable { map }
    }

    /// Buckwalter-style table covering the Arabic letters.
    pub fn buckwalter() -> Self {
        Self::parse_tsv(DEFAULT_TABLE).expect("bundled table parses")
    }

    pub fn get(&self, c: char) -> Option<&str> {
        self.map.get(&c).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `<hex codepoint>\t<latin string>` lines; `#` comments allowed.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (code, latin) = line.split_once('\t').ok_or_else(|| {
                Error::parse("transliteration table", i + 1, "expected two fields")
            })?;
            let c = parse_codepoint(code).ok_or_else(|| {
                Error::parse(
                    "transliteration table",
                    i + 1,
                    format!("bad code point {code:?}"),
                )
            })?;
            map.insert(c, latin.to_string());
        }
        Ok(TranslitTable { map })
    }

    pub fn to_tsv(&self) -> String {
        self.map
            .iter()
            .map(|(c, s)| format!("{:04X}\t{s}\n", *c as u32))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_tsv(&crate::text::read_text(path)?)
    }

    /// Maps each character; unmapped characters are kept and tallied.
    pub fn transliterate(&self, word: &str, unmapped: &mut BTreeMap<char, u64>) -> String {
        let mut out = String::with_capacity(word.len());
        for c in word.chars() {
            match self.map.get(&c) {
                Some(s) => out.push_str(s),
                None => {
                    out.push(c);
                    *unmapped.entry(c).or_insert(0) += 1;
                }
            }
        }
        out
    }
}

impl Default for TranslitTable {
    fn default() -> Self {
        Self::buckwalter()
    }
}

/// Every token not in `vocab`, with its number of occurrences.
pub fn find_oov<I>(lines: I, vocab: &Vocabulary) -> BTreeMap<String, u64>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut out = BTreeMap::new();
    for line in lines {
        for tok in line.as_ref().split_whitespace() {
            if !vocab.contains(tok) {
                *out.entry(tok.to_string()).or_insert(0) += 1;
            }
        }
    }
    out
}

pub fn drop_oov_line(line: &str, vocab: &Vocabulary) -> String {
    line.split_whitespace()
        .filter(|t| vocab.contains(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Removes OOV tokens; a line of only OOV tokens becomes empty.
pub fn drop_oov<S: AsRef<str> + Sync>(lines: &[S], vocab: &Vocabulary) -> Vec<String> {
    lines
        .par_iter()
        .map(|l| drop_oov_line(l.as_ref(), vocab))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslitSummary {
    pub tokens: u64,
    /// Characters of OOV tokens that had no table entry.
    pub unmapped: BTreeMap<char, u64>,
}

pub fn transliterate_oov_line(
    line: &str,
    vocab: &Vocabulary,
    table: &TranslitTable,
    summary: &mut TranslitSummary,
) -> String {
    line.split_whitespace()
        .map(|t| {
            if vocab.contains(t) {
                t.to_string()
            } else {
                summary.tokens += 1;
                table.transliterate(t, &mut summary.unmapped)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Transliterates OOV tokens character by character. Logs a warning when
/// some characters had no table entry.
pub fn transliterate_oov<S: AsRef<str> + Sync>(
    lines: &[S],
    vocab: &Vocabulary,
    table: &TranslitTable,
) -> (Vec<String>, TranslitSummary) {
    let parts: Vec<(String, TranslitSummary)> = lines
        .par_iter()
        .map(|l| {
            let mut s = TranslitSummary::default();
            let out = transliterate_oov_line(l.as_ref(), vocab, table, &mut s);
            (out, s)
        })
        .collect();
    let mut summary = TranslitSummary::default();
    let mut out = Vec::with_capacity(parts.len());
    for (line, s) in parts {
        summary.tokens += s.tokens;
        for (c, n) in s.unmapped {
            *summary.unmapped.entry(c).or_insert(0) += n;
        }
        out.push(line);
    }
    if !summary.unmapped.is_empty() {
        let chars: Vec<String> = summary
            .unmapped
            .iter()
            .map(|(c, n)| format!("U+{:04X}x{n}", *c as u32))
            .collect();
        log::warn!("characters without transliteration: {}", chars.join(" "));
    }
    (out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_corpus([words.join(" ")])
    }

    #[test]
    fn counts_oov() {
        let v = vocab(&["a", "b"]);
        let found = find_oov(["a c b c"], &v);
        assert_eq!(
            found.into_iter().collect::<Vec<_>>(),
            vec![("c".to_string(), 2)]
        );
        assert!(find_oov(["a b a"], &v).is_empty());
    }

    #[test]
    fn reserved_tokens_are_oov() {
        let v = vocab(&["a"]);
        assert_eq!(find_oov(["<unk> a"], &v).len(), 1);
    }

    #[test]
    fn drops() {
        let v = vocab(&["a", "b"]);
        assert_eq!(
            drop_oov(&["a c b", "c c", "", "b a"], &v),
            vec!["a b", "", "", "b a"]
        );
    }

    #[test]
    fn buckwalter_examples() {
        let v = vocab(&["قلم"]);
        let t = TranslitTable::default();
        let (out, summary) = transliterate_oov(&["كتاب قلم محمد"], &v, &t);
        assert_eq!(out, vec!["ktAb قلم mHmd"]);
        assert_eq!(summary.tokens, 2);
        assert!(summary.unmapped.is_empty());
        assert_eq!(t.len(), 31);
    }

    #[test]
    fn unmapped_pass_through() {
        let v = vocab(&["a"]);
        let (out, summary) = transliterate_oov(&["كx"], &v, &TranslitTable::default());
        assert_eq!(out, vec!["kx"]);
        assert_eq!(summary.unmapped.get(&'x'), Some(&1));
    }

    #[test]
    fn table_roundtrip() {
        let t = TranslitTable::default();
        assert_eq!(TranslitTable::parse_tsv(&t.to_tsv()).unwrap(), t);
    }
}
