//! Exchange-algorithm word clustering.
//!
//! Maximizes the class-bigram objective
//!
//! ```text
//! F = sum_{c,c'} N(c,c') ln N(c,c') - 2 sum_c N(c) ln N(c)
//! ```
//!
//! where `N(c,c')` counts adjacent token pairs within a line and `N(c)` is the
//! total token count of class `c` (with `0 ln 0 = 0`). Words are visited in
//! descending frequency order, ties lexicographic; each word moves to the
//! class that improves `F` the most, if that improves it by more than
//! `MIN_GAIN`. A word alone in its class is never moved, so no class empties.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_CLASSES: usize = 50;
pub const DEFAULT_SWEEPS: usize = 30;
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    classes: BTreeMap<String, usize>,
    k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTrace {
    /// Objective at initialization, then after every accepted move.
    pub objective: Vec<f64>,
    pub sweeps: usize,
    pub moves: usize,
    pub converged: bool,
}

impl ClassMap {
    pub fn new(classes: BTreeMap<String, usize>, k: usize) -> Result<Self> {
        if let Some((w, c)) = classes.iter().find(|(_, &c)| c >= k) {
            return Err(Error::Argument(format!("word {w:?} has class {c} >= {k}")));
        }
        Ok(ClassMap { classes, k })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    /// Class id reserved for words outside the map.
    pub fn unknown_class(&self) -> usize {
        self.k
    }

    pub fn class_of(&self, word: &str) -> Option<usize> {
        self.classes.get(word).copied()
    }

    pub fn class_or_unknown(&self, word: &str) -> usize {
        self.class_of(word).unwrap_or(self.k)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.classes.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Replaces every token by its class id.
    pub fn apply_line(&self, line: &str) -> String {
        line.split_whitespace()
            .map(|w| self.class_or_unknown(w).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn apply_lines<S: AsRef<str> + Sync>(&self, lines: &[S]) -> Vec<String> {
        lines
            .par_iter()
            .map(|l| self.apply_line(l.as_ref()))
            .collect()
    }

    /// `word\tclass_id` lines, sorted by word.
    pub fn to_tsv(&self) -> String {
        self.classes
            .iter()
            .map(|(w, c)| format!("{w}\t{c}\n"))
            .collect()
    }

    /// K is taken as one more than the largest class id present.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut classes = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (w, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("class map", i + 1, "expected `word\\tclass_id`"))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| Error::parse("class map", i + 1, format!("bad class id {c:?}")))?;
            if classes.insert(w.to_string(), c).is_some() {
                return Err(Error::parse(
                    "class map",
                    i + 1,
                    format!("duplicate word {w:?}"),
                ));
            }
        }
        let k = classes.values().max().map_or(0, |m| m + 1);
        ClassMap::new(classes, k)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_tsv(&crate::text::read_text(path)?)
    }
}

pub fn apply_classes(map: &ClassMap, line: &str) -> String {
    map.apply_line(line)
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Word-level statistics of a corpus.
struct Stats {
    words: Vec<String>,
    count: Vec<f64>,
    /// successors: (word, count), sorted by word id
    succ: Vec<Vec<(usize, f64)>>,
    pred: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Stats {
    fn build<I>(lines: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut raw_count: Vec<u64> = Vec::new();
        let mut words: Vec<String> = Vec::new();
        let mut bigrams: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for line in lines {
            let mut prev: Option<usize> = None;
            for tok in line.as_ref().split_whitespace() {
                let id = *ids.entry(tok.to_string()).or_insert_with(|| {
                    words.push(tok.to_string());
                    raw_count.push(0);
                    words.len() - 1
                });
                raw_count[id] += 1;
                if let Some(p) = prev {
                    *bigrams.entry((p, id)).or_insert(0) += 1;
                }
                prev = Some(id);
            }
        }
        let n = words.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        let mut self_loops = vec![0.0; n];
        for (&(a, b), &c) in &bigrams {
            if a == b {
                self_loops[a] = c as f64;
            } else {
                succ[a].push((b, c as f64));
                pred[b].push((a, c as f64));
            }
        }
        for p in &mut pred {
            p.sort_unstable_by_key(|x| x.0);
        }
        Stats {
            words,
            count: raw_count.into_iter().map(|c| c as f64).collect(),
            succ,
            pred,
            self_loops,
        }
    }
}

/// Class-level count tables for the current assignment.
struct Tables {
    k: usize,
    bigram: Vec<f64>,
    unigram: Vec<f64>,
}

impl Tables {
    fn build(stats: &Stats, class: &[usize], k: usize) -> Self {
        let mut t = Tables {
            k,
            bigram: vec![0.0; k * k],
            unigram: vec![0.0; k],
        };
        for w in 0..stats.words.len() {
            t.unigram[class[w]] += stats.count[w];
            t.bigram[class[w] * k + class[w]] += stats.self_loops[w];
            for &(v, c) in &stats.succ[w] {
                t.bigram[class[w] * k + class[v]] += c;
            }
        }
        t
    }

    fn objective(&self) -> f64 {
        self.bigram.iter().map(|&x| xlnx(x)).sum::<f64>()
            - 2.0 * self.unigram.iter().map(|&x| xlnx(x)).sum::<f64>()
    }
}

/// Objective of an arbitrary assignment. Every corpus word must be assigned.
pub fn objective_of<I>(lines: I, assign: &HashMap<String, usize>, k: usize) -> f64
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let stats = Stats::build(lines);
    let class: Vec<usize> = stats.words.iter().map(|w| assign[w]).collect();
    Tables::build(&stats, &class, k).objective()
}

/// Clusters the vocabulary of `lines` into `k` classes.
pub fn cluster_exchange<I>(
    lines: I,
    k: usize,
    max_sweeps: usize,
) -> Result<(ClassMap, ClusterTrace)>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let stats = Stats::build(lines);
    let n = stats.words.len();
    if k == 0 {
        return Err(Error::Argument(
            "number of classes must be at least 1".into(),
        ));
    }
    if k > n {
        return Err(Error::Argument(format!(
            "{k} classes requested for a vocabulary of {n} words"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        stats.count[b]
            .total_cmp(&stats.count[a])
            .then_with(|| stats.words[a].cmp(&stats.words[b]))
    });
    let mut class = vec![k - 1; n];
    for (rank, &w) in order.iter().take(k - 1).enumerate() {
        class[w] = rank;
    }
    let mut members = vec![0usize; k];
    for &c in &class {
        members[c] += 1;
    }

    let mut t = Tables::build(&stats, &class, k);
    let mut objective = t.objective();
    let mut trace = ClusterTrace {
        objective: vec![objective],
        sweeps: 0,
        moves: 0,
        converged: false,
    };

    let mut succ_by = vec![0.0; k];
    let mut pred_by = vec![0.0; k];
    for _ in 0..max_sweeps {
        trace.sweeps += 1;
        let mut moved = false;
        for &w in &order {
            let from = class[w];
            if members[from] == 1 {
                continue;
            }
            succ_by.iter_mut().for_each(|x| *x = 0.0);
            pred_by.iter_mut().for_each(|x| *x = 0.0);
            for &(v, c) in &stats.succ[w] {
                succ_by[class[v]] += c;
            }
            for &(v, c) in &stats.pred[w] {
                pred_by[class[v]] += c;
            }
            let own = stats.self_loops[w];
            let cnt = stats.count[w];

            t.shift(from, &succ_by, &pred_by, own, cnt, -1.0);
            let gains: Vec<f64> = (0..k)
                .map(|c| t.add_gain(c, &succ_by, &pred_by, own, cnt))
                .collect();
            let stay = gains[from];
            let mut best = from;
            for (c, &g) in gains.iter().enumerate() {
                if g - stay > MIN_GAIN && g > gains[best] {
                    best = c;
                }
            }
            t.shift(best, &succ_by, &pred_by, own, cnt, 1.0);
            if best != from {
                objective += gains[best] - stay;
                class[w] = best;
                members[from] -= 1;
                members[best] += 1;
                trace.moves += 1;
                trace.objective.push(objective);
                moved = true;
            }
        }
        if !moved {
            trace.converged = true;
            break;
        }
    }

    let classes = stats
        .words
        .iter()
        .cloned()
        .zip(class.iter().copied())
        .collect();
    Ok((ClassMap::new(classes, k)?, trace))
}

impl Tables {
    /// Adds (`sign = 1`) or removes (`sign = -1`) a word's counts in class `c`.
    fn shift(&mut self, c: usize, succ: &[f64], pred: &[f64], own: f64, cnt: f64, sign: f64) {
        let k = self.k;
        for d in 0..k {
            self.bigram[c * k + d] += sign * succ[d];
            self.bigram[d * k + c] += sign * pred[d];
        }
        self.bigram[c * k + c] += sign * own;
        self.unigram[c] += sign * cnt;
    }

    /// Objective change from adding a (currently unassigned) word to class `c`.
    fn add_gain(&self, c: usize, succ: &[f64], pred: &[f64], own: f64, cnt: f64) -> f64 {
        let k = self.k;
        let mut g = 0.0;
        for d in 0..k {
            if d == c {
                continue;
            }
            let row = self.bigram[c * k + d];
            g += xlnx(row + succ[d]) - xlnx(row);
            let col = self.bigram[d * k + c];
            g += xlnx(col + pred[d]) - xlnx(col);
        }
        let diag = self.bigram[c * k + c];
        g += xlnx(diag + succ[c] + pred[c] + own) - xlnx(diag);
        g - 2.0 * (xlnx(self.unigram[c] + cnt) - xlnx(self.unigram[c]))
    }
}
