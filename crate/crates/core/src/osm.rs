//! Operation-sequence encoding of word-aligned sentence pairs.
//!
//! A pair is linearized target-left-to-right into generation, gap and jump
//! operations. The decoder rebuilds the source as a list of words and gap
//! markers with an insertion cursor:
//!
//! - `GEN`, `GEN_IDENT`, `GEN_SRC_ONLY` insert a source word at the cursor
//!   (and, except for `GEN_SRC_ONLY`, append a target word);
//! - `GEN_TGT_ONLY` appends a target word only;
//! - `INSERT_GAP` inserts a gap marker at the cursor and steps past it;
//! - `JUMP_BACK(k)` moves the cursor to just before the k-th gap marker
//!   counted from the right (1-based);
//! - `JUMP_FWD` moves the cursor to the end of the list.
//!
//! Markers stay in the list after their gap has been filled, so jump indices
//! count every marker ever inserted to the right of the target; markers are
//! discarded when decoding finishes.
//!
//! Alignments are first reduced to a one-to-one link set: each target word
//! keeps its lowest-index source link, then each source word keeps its
//! lowest-index target among the survivors.

use std::fmt;

use crate::error::{Error, Result};
use crate::text::SentencePair;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operation {
    Gen(String, String),
    GenIdent(String),
    GenSrcOnly(String),
    GenTgtOnly(String),
    InsertGap,
    JumpBack(usize),
    JumpFwd,
}

impl Operation {
    pub fn is_reordering(&self) -> bool {
        matches!(
            self,
            Operation::InsertGap | Operation::JumpBack(_) | Operation::JumpFwd
        )
    }

    /// Single-token form: `GEN_src_tgt`, `IDENT_w`, `SRC_w`, `TGT_w`, `GAP`,
    /// `JUMPBACK_k`, `JUMPFWD`. Underscores inside payload tokens are doubled.
    pub fn to_token(&self) -> String {
        match self {
            Operation::Gen(s, t) => format!("GEN_{}_{}", escape(s), escape(t)),
            Operation::GenIdent(w) => format!("IDENT_{}", escape(w)),
            Operation::GenSrcOnly(w) => format!("SRC_{}", escape(w)),
            Operation::GenTgtOnly(w) => format!("TGT_{}", escape(w)),
            Operation::InsertGap => "GAP".into(),
            Operation::JumpBack(k) => format!("JUMPBACK_{k}"),
            Operation::JumpFwd => "JUMPFWD".into(),
        }
    }

    /// Inverse of [`Operation::to_token`]. Kind names contain no underscore,
    /// so the first one ends the kind. Between the two `GEN` payloads, an odd
    /// run of underscores is read with the separator last.
    pub fn from_token(token: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("bad operation token {token:?}"));
        let (kind, rest) = match token.split_once('_') {
            Some((k, r)) => (k, Some(r)),
            None => (token, None),
        };
        let payload = |n: usize| -> Result<Vec<String>> {
            let fields = split_fields(rest.ok_or_else(bad)?);
            if fields.len() == n {
                Ok(fields)
            } else {
                Err(bad())
            }
        };
        let op = match (kind, rest) {
            ("GEN", _) => {
                let mut f = payload(2)?;
                let t = f.pop().unwrap();
                Operation::Gen(f.pop().unwrap(), t)
            }
            ("IDENT", _) => Operation::GenIdent(payload(1)?.remove(0)),
            ("SRC", _) => Operation::GenSrcOnly(payload(1)?.remove(0)),
            ("TGT", _) => Operation::GenTgtOnly(payload(1)?.remove(0)),
            ("GAP", None) => Operation::InsertGap,
            ("JUMPFWD", None) => Operation::JumpFwd,
            ("JUMPBACK", Some(k)) => Operation::JumpBack(k.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        match &op {
            Operation::Gen(a, b) if a.is_empty() || b.is_empty() => Err(bad()),
            Operation::GenIdent(w) | Operation::GenSrcOnly(w) | Operation::GenTgtOnly(w)
                if w.is_empty() =>
            {
                Err(bad())
            }
            Operation::JumpBack(0) => Err(bad()),
            _ => Ok(op),
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Gen(s, t) => write!(f, "GEN({s},{t})"),
            Operation::GenIdent(w) => write!(f, "GEN_IDENT({w})"),
            Operation::GenSrcOnly(w) => write!(f, "GEN_SRC_ONLY({w})"),
            Operation::GenTgtOnly(w) => write!(f, "GEN_TGT_ONLY({w})"),
            Operation::InsertGap => write!(f, "INSERT_GAP"),
            Operation::JumpBack(k) => write!(f, "JUMP_BACK({k})"),
            Operation::JumpFwd => write!(f, "JUMP_FWD"),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('_', "__")
}

fn split_fields(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut fields = vec![String::new()];
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '_' {
            if chars.get(i + 1) == Some(&'_') {
                fields.last_mut().unwrap().push('_');
                i += 2;
            } else {
                fields.push(String::new());
                i += 1;
            }
        } else {
            fields.last_mut().unwrap().push(chars[i]);
            i += 1;
        }
    }
    fields
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationSequence {
    pub ops: Vec<Operation>,
    pub source_len: usize,
    pub target_len: usize,
}

impl OperationSequence {
    pub fn reordering_ops(&self) -> usize {
        self.ops.iter().filter(|o| o.is_reordering()).count()
    }

    pub fn to_line(&self) -> String {
        self.ops
            .iter()
            .map(Operation::to_token)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One-to-one reduction of a link set, sorted by source index.
pub fn functionalize(links: &[(usize, usize)], target_len: usize) -> Vec<(usize, usize)> {
    let mut per_target: Vec<Option<usize>> = vec![None; target_len];
    for &(s, t) in links {
        if t < target_len {
            let slot = &mut per_target[t];
            *slot = Some(slot.map_or(s, |cur| cur.min(s)));
        }
    }
    let mut taken = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (t, s) in per_target.iter().enumerate() {
        if let Some(s) = *s {
            if taken.insert(s) {
                out.push((s, t));
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Word(usize),
    Gap(usize),
}

/// Encoder state mirroring the decoder's word/marker list.
struct EncoderState {
    list: Vec<Slot>,
    cursor: usize,
    covered: Vec<bool>,
    /// remaining uncovered source range `lo..=hi` of each gap marker
    gaps: Vec<(usize, usize)>,
}

impl EncoderState {
    fn frontier(&self) -> Option<usize> {
        self.list
            .iter()
            .filter_map(|s| match s {
                Slot::Word(p) => Some(*p),
                Slot::Gap(_) => None,
            })
            .max()
    }

    /// Source position the next generation at the cursor corresponds to.
    fn cursor_src(&self) -> usize {
        self.list[..self.cursor]
            .iter()
            .rev()
            .find_map(|s| match s {
                Slot::Word(p) => Some(p + 1),
                Slot::Gap(_) => None,
            })
            .unwrap_or(0)
    }

    fn gap_containing(&self, s: usize) -> Option<usize> {
        self.gaps.iter().position(|&(lo, hi)| lo <= s && s <= hi)
    }

    fn marker_index(&self, gap: usize) -> usize {
        self.list
            .iter()
            .position(|x| *x == Slot::Gap(gap))
            .expect("every gap has a marker")
    }

    fn jump_rank(&self, gap: usize) -> usize {
        let at = self.marker_index(gap);
        1 + self.list[at + 1..]
            .iter()
            .filter(|x| matches!(x, Slot::Gap(_)))
            .count()
    }

    fn insert_gap(&mut self, lo: usize, hi: usize, ops: &mut Vec<Operation>) {
        let id = self.gaps.len();
        self.gaps.push((lo, hi));
        self.list.insert(self.cursor, Slot::Gap(id));
        self.cursor += 1;
        ops.push(Operation::InsertGap);
    }

    fn place(&mut self, s: usize) {
        self.list.insert(self.cursor, Slot::Word(s));
        self.cursor += 1;
        self.covered[s] = true;
        if let Some(g) = self.gap_containing(s) {
            // generation inside a gap always consumes its leftmost position
            debug_assert_eq!(self.gaps[g].0, s);
            self.gaps[g].0 = s + 1;
        }
    }

    /// Moves the cursor so that the next generation lands on source position `s`.
    fn move_to(&mut self, s: usize, ops: &mut Vec<Operation>) {
        if self.cursor_src() == s && !self.covered[s] {
            return;
        }
        let frontier = self.frontier();
        if frontier.is_none_or(|f| s > f) {
            if self.cursor != self.list.len() {
                ops.push(Operation::JumpFwd);
                self.cursor = self.list.len();
            }
            let start = frontier.map_or(0, |f| f + 1);
            if s > start {
                self.insert_gap(start, s - 1, ops);
            }
            return;
        }
        let g = self
            .gap_containing(s)
            .expect("uncovered position left of the frontier lies in a gap");
        let at = self.marker_index(g);
        let here = self.cursor == at;
        if !here {
            if at > self.cursor {
                ops.push(Operation::JumpFwd);
                self.cursor = self.list.len();
            }
            ops.push(Operation::JumpBack(self.jump_rank(g)));
            self.cursor = at;
        }
        let lo = self.gaps[g].0;
        if s > lo {
            self.gaps[g].0 = s;
            self.insert_gap(lo, s - 1, ops);
        }
    }

    fn emit_unlinked_run(&mut self, source: &[String], linked: &[bool], ops: &mut Vec<Operation>) {
        let mut p = self.cursor_src();
        while p < source.len() && !linked[p] && !self.covered[p] {
            if let Some(g) = self.gap_containing(p) {
                if self.marker_index(g) != self.cursor {
                    break;
                }
            }
            ops.push(Operation::GenSrcOnly(source[p].clone()));
            self.place(p);
            p += 1;
        }
    }
}

/// Encodes a pair; the alignment is functionalized first.
pub fn osm_encode(pair: &SentencePair) -> Result<OperationSequence> {
    if pair.source.is_empty() || pair.target.is_empty() {
        return Err(Error::Argument(
            "cannot encode a pair with an empty side".into(),
        ));
    }
    let links = pair
        .alignment
        .as_deref()
        .ok_or_else(|| Error::Argument("operation-sequence encoding needs an alignment".into()))?;
    let links = functionalize(links, pair.target.len());
    let mut src_of = vec![None; pair.target.len()];
    let mut linked = vec![false; pair.source.len()];
    for &(s, t) in &links {
        src_of[t] = Some(s);
        linked[s] = true;
    }

    let mut st = EncoderState {
        list: Vec::new(),
        cursor: 0,
        covered: vec![false; pair.source.len()],
        gaps: Vec::new(),
    };
    let mut ops = Vec::new();
    // unlinked words at the very start of the source
    st.emit_unlinked_run(&pair.source, &linked, &mut ops);
    for (t, tok) in pair.target.iter().enumerate() {
        let Some(s) = src_of[t] else {
            ops.push(Operation::GenTgtOnly(tok.clone()));
            continue;
        };
        st.move_to(s, &mut ops);
        let src = &pair.source[s];
        ops.push(if src == tok {
            Operation::GenIdent(tok.clone())
        } else {
            Operation::Gen(src.clone(), tok.clone())
        });
        st.place(s);
        st.emit_unlinked_run(&pair.source, &linked, &mut ops);
    }
    // unlinked source words still uncovered: visit each remaining block
    let mut p = 0;
    while p < pair.source.len() {
        if st.covered[p] {
            p += 1;
            continue;
        }
        st.move_to(p, &mut ops);
        ops.push(Operation::GenSrcOnly(pair.source[p].clone()));
        st.place(p);
        st.emit_unlinked_run(&pair.source, &linked, &mut ops);
        p += 1;
    }
    Ok(OperationSequence {
        ops,
        source_len: pair.source.len(),
        target_len: pair.target.len(),
    })
}

pub fn osm_decode(seq: &OperationSequence) -> Result<SentencePair> {
    enum Item {
        Word(String, Option<usize>),
        Gap,
    }
    let mut list: Vec<Item> = Vec::new();
    let mut cursor = 0;
    let mut target: Vec<String> = Vec::new();
    let err = |index: usize, msg: &str| Error::Structure {
        index,
        msg: msg.to_string(),
    };
    for (i, op) in seq.ops.iter().enumerate() {
        match op {
            Operation::Gen(s, t) => {
                list.insert(cursor, Item::Word(s.clone(), Some(target.len())));
                cursor += 1;
                target.push(t.clone());
            }
            Operation::GenIdent(w) => {
                list.insert(cursor, Item::Word(w.clone(), Some(target.len())));
                cursor += 1;
                target.push(w.clone());
            }
            Operation::GenSrcOnly(s) => {
                list.insert(cursor, Item::Word(s.clone(), None));
                cursor += 1;
            }
            Operation::GenTgtOnly(t) => target.push(t.clone()),
            Operation::InsertGap => {
                match seq.ops.get(i + 1) {
                    Some(
                        Operation::Gen(..) | Operation::GenIdent(_) | Operation::GenSrcOnly(_),
                    ) => {}
                    _ => return Err(err(i, "gap not followed by a source generation")),
                }
                list.insert(cursor, Item::Gap);
                cursor += 1;
            }
            Operation::JumpBack(k) => {
                if *k == 0 {
                    return Err(err(i, "jump distance must be at least 1"));
                }
                let at = list
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| matches!(x, Item::Gap))
                    .map(|(j, _)| j)
                    .rev()
                    .nth(k - 1)
                    .ok_or_else(|| err(i, &format!("JUMP_BACK({k}) with fewer open gaps")))?;
                cursor = at;
            }
            Operation::JumpFwd => cursor = list.len(),
        }
    }
    let mut source = Vec::new();
    let mut links = Vec::new();
    for item in list {
        if let Item::Word(w, t) = item {
            if let Some(t) = t {
                links.push((source.len(), t));
            }
            source.push(w);
        }
    }
    if source.len() != seq.source_len || target.len() != seq.target_len {
        return Err(err(
            seq.ops.len(),
            &format!(
                "decoded {}x{} words, sequence declares {}x{}",
                source.len(),
                target.len(),
                seq.source_len,
                seq.target_len
            ),
        ));
    }
    links.sort_unstable();
    SentencePair::new(source, target, Some(links))
}

/// Serializes every pair as one line of operation tokens.
pub fn osm_corpus(pairs: &[SentencePair]) -> Result<Vec<String>> {
    osm_corpus_mapped(pairs, |w| w.to_string())
}

/// As [`osm_corpus`], with payload tokens passed through `map` (for example
/// a word-class lookup) before serialization.
pub fn osm_corpus_mapped<F>(pairs: &[SentencePair], map: F) -> Result<Vec<String>>
where
    F: Fn(&str) -> String,
{
    pairs
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let seq = osm_encode(p).map_err(|e| Error::Pair {
                index,
                source: Box::new(e),
            })?;
            Ok(seq
                .ops
                .iter()
                .map(|op| map_payload(op, &map).to_token())
                .collect::<Vec<_>>()
                .join(" "))
        })
        .collect()
}

fn map_payload<F: Fn(&str) -> String>(op: &Operation, map: &F) -> Operation {
    match op {
        Operation::Gen(s, t) => Operation::Gen(map(s), map(t)),
        Operation::GenIdent(w) => Operation::GenIdent(map(w)),
        Operation::GenSrcOnly(w) => Operation::GenSrcOnly(map(w)),
        Operation::GenTgtOnly(w) => Operation::GenTgtOnly(map(w)),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Operation::*;

    fn pair(src: &str, tgt: &str, align: &str) -> SentencePair {
        SentencePair::from_lines(src, tgt, Some(align)).unwrap()
    }

    fn s(x: &str) -> String {
        x.to_string()
    }

    #[test]
    fn monotone() {
        let seq = osm_encode(&pair("a b", "x y", "0-0 1-1")).unwrap();
        assert_eq!(seq.ops, vec![Gen(s("a"), s("x")), Gen(s("b"), s("y"))]);
        assert_eq!(seq.to_line(), "GEN_a_x GEN_b_y");
    }

    #[test]
    fn swap() {
        let p = pair("a b", "y x", "0-1 1-0");
        let seq = osm_encode(&p).unwrap();
        assert_eq!(
            seq.ops,
            vec![
                InsertGap,
                Gen(s("b"), s("y")),
                JumpBack(1),
                Gen(s("a"), s("x"))
            ]
        );
        assert_eq!(osm_decode(&seq).unwrap(), p);
    }

    #[test]
    fn identical_word() {
        let seq = osm_encode(&pair("a", "a", "0-0")).unwrap();
        assert_eq!(seq.ops, vec![GenIdent(s("a"))]);
    }

    #[test]
    fn decode_monotone() {
        let seq = OperationSequence {
            ops: vec![Gen(s("a"), s("x")), Gen(s("b"), s("y"))],
            source_len: 2,
            target_len: 2,
        };
        assert_eq!(osm_decode(&seq).unwrap(), pair("a b", "x y", "0-0 1-1"));
    }

    #[test]
    fn decode_rejects_bad_jump() {
        let seq = OperationSequence {
            ops: vec![
                InsertGap,
                Gen(s("b"), s("y")),
                JumpBack(2),
                Gen(s("a"), s("x")),
            ],
            source_len: 2,
            target_len: 2,
        };
        assert!(matches!(
            osm_decode(&seq),
            Err(Error::Structure { index: 2, .. })
        ));
        let seq = OperationSequence {
            ops: vec![InsertGap, JumpFwd],
            source_len: 0,
            target_len: 0,
        };
        assert!(matches!(
            osm_decode(&seq),
            Err(Error::Structure { index: 0, .. })
        ));
    }

    #[test]
    fn unaligned_words() {
        let p = pair("a b c d", "x y z", "1-0 3-2");
        let seq = osm_encode(&p).unwrap();
        assert_eq!(osm_decode(&seq).unwrap(), p);
        assert!(seq.ops.contains(&GenTgtOnly(s("y"))));
        assert!(seq.ops.contains(&GenSrcOnly(s("a"))));
        assert!(seq.ops.contains(&GenSrcOnly(s("c"))));
    }

    #[test]
    fn many_to_one_functionalized() {
        let p = pair("a b", "x y z", "0-0 1-0 0-1 1-2");
        let seq = osm_encode(&p).unwrap();
        let back = osm_decode(&seq).unwrap();
        assert_eq!(back.alignment.unwrap(), vec![(0, 0), (1, 2)]);
    }

    #[test]
    fn nested_gaps_roundtrip() {
        for (src, tgt, al) in [
            ("a b c d e", "v w x y z", "4-0 0-1 2-2 1-3 3-4"),
            ("a b c d e f", "u v w x y z", "5-0 2-1 0-2 4-3 1-4 3-5"),
            ("a b c d", "w x y z", "3-0 1-1 2-2 0-3"),
            ("a b c d e", "v w x y z", "2-0 4-1 0-2 3-3 1-4"),
        ] {
            let p = pair(src, tgt, al);
            let seq = osm_encode(&p).unwrap();
            assert_eq!(osm_decode(&seq).unwrap(), p, "{}", seq.to_line());
        }
    }

    #[test]
    fn token_roundtrip_and_escaping() {
        for op in [
            Gen(s("a_b"), s("x")),
            GenIdent(s("snake_case")),
            GenSrcOnly(s("q")),
            GenTgtOnly(s("r")),
            InsertGap,
            JumpBack(3),
            JumpFwd,
        ] {
            let tok = op.to_token();
            assert!(!tok.contains(char::is_whitespace));
            assert_eq!(Operation::from_token(&tok).unwrap(), op);
        }
        assert_eq!(Gen(s("a_b"), s("x")).to_token(), "GEN_a__b_x");
        assert_eq!(
            Operation::from_token("SRC___d").unwrap(),
            GenSrcOnly(s("_d"))
        );
        assert_eq!(
            Operation::from_token("GEN___d_y").unwrap(),
            Gen(s("_d"), s("y"))
        );
        assert_eq!(
            Operation::from_token("GEN_c___y").unwrap(),
            Gen(s("c_"), s("y"))
        );
        for bad in [
            "JUMPBACK_0",
            "GEN_a",
            "SRC_a_b",
            "GAP_",
            "IDENT",
            "GEN_a_b_c",
        ] {
            assert!(Operation::from_token(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn corpus_errors_carry_index() {
        let ok = pair("a", "x", "0-0");
        let bad = SentencePair::from_lines("a", "x", None).unwrap();
        match osm_corpus(&[ok, bad]) {
            Err(Error::Pair { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
