//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

/// Back-off model read straight from ARPA text, queried by token strings.
pub struct ArpaWalker {
    order: usize,
    entries: HashMap<String, (f64, f64)>,
}

impl ArpaWalker {
    pub fn parse(text: &str) -> Self {
        let mut order = 0;
        let mut section = 0;
        let mut entries = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.starts_with("ngram ") {
                order += 1;
                continue;
            }
            if let Some(k) = line
                .strip_prefix('\\')
                .and_then(|r| r.strip_suffix("-grams:"))
            {
                section = k.parse().unwrap();
                continue;
            }
            if line.is_empty() || line.starts_with('\\') || section == 0 {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let lp: f64 = f[0].parse().unwrap();
            let bo = if f.len() == section + 2 {
                f[section + 1].parse().unwrap()
            } else {
                0.0
            };
            entries.insert(f[1..=section].join(" "), (lp, bo));
        }
        ArpaWalker { order, entries }
    }

    fn known(&self, w: &str) -> bool {
        self.entries.contains_key(w)
    }

    /// log10 p(word | history), history already mapped to known tokens.
    fn walk(&self, word: &str, history: &[&str]) -> f64 {
        let keep = history.len().min(self.order - 1);
        let h = &history[history.len() - keep..];
        let mut key = h.join(" ");
        if !key.is_empty() {
            key.push(' ');
        }
        key.push_str(word);
        if let Some(&(lp, _)) = self.entries.get(&key) {
            return lp;
        }
        if h.is_empty() {
            return f64::NEG_INFINITY;
        }
        let bo = self.entries.get(&h.join(" ")).map_or(0.0, |e| e.1);
        bo + self.walk(word, &h[1..])
    }

    /// Perplexity over sentences padded with `<s>`/`</s>`; `<s>` is not
    /// predicted, unknown words are scored as `<unk>`.
    pub fn perplexity(&self, lines: &[String]) -> (f64, usize) {
        let mut total = 0.0;
        let mut events = 0;
        for line in lines {
            let mut hist: Vec<&str> = vec!["<s>"];
            let toks = line.split_whitespace().chain(std::iter::once("</s>"));
            for t in toks {
                let t = if self.known(t) { t } else { "<unk>" };
                total += self.walk(t, &hist);
                hist.push(t);
                events += 1;
            }
        }
        (10f64.powf(-total / events as f64), events)
    }
}

/// Reference BPE learner: recounts every pair from scratch each step.
/// Ties go to the lexicographically smallest pair; learning stops when no
/// pair occurs at least twice.
pub fn bpe_brute_force(freq: &BTreeMap<String, u64>, merges: usize) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, u64)> = freq
        .iter()
        .map(|(w, &c)| {
            let chars: Vec<char> = w.chars().collect();
            let mut syms: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
            let last = syms.pop().unwrap();
            syms.push(format!("{last}</w>"));
            (syms, c)
        })
        .collect();
    let mut out = Vec::new();
    for _ in 0..merges {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (syms, c) in &words {
            for w in syms.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += c;
            }
        }
        let Some(best_count) = counts.values().copied().max() else {
            break;
        };
        if best_count < 2 {
            break;
        }
        let best = counts
            .iter()
            .find(|(_, &c)| c == best_count)
            .map(|(p, _)| p.clone())
            .unwrap();
        for (syms, _) in &mut words {
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == best.0 && syms[i + 1] == best.1 {
                    merged.push(format!("{}{}", syms[i], syms[i + 1]));
                    i += 2;
                } else {
                    merged.push(syms[i].clone());
                    i += 1;
                }
            }
            *syms = merged;
        }
        out.push(best);
    }
    out
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Class-bigram objective of an assignment, counted directly from the text.
pub fn class_objective(lines: &[String], class: &HashMap<String, usize>) -> f64 {
    let mut bi: HashMap<(usize, usize), f64> = HashMap::new();
    let mut uni: HashMap<usize, f64> = HashMap::new();
    for line in lines {
        let toks: Vec<usize> = line.split_whitespace().map(|w| class[w]).collect();
        for &c in &toks {
            *uni.entry(c).or_insert(0.0) += 1.0;
        }
        for w in toks.windows(2) {
            *bi.entry((w[0], w[1])).or_insert(0.0) += 1.0;
        }
    }
    bi.values().map(|&x| xlnx(x)).sum::<f64>() - 2.0 * uni.values().map(|&x| xlnx(x)).sum::<f64>()
}

/// Best objective over every split of the vocabulary into two non-empty classes.
pub fn best_two_partition(lines: &[String]) -> f64 {
    let mut vocab: Vec<&str> = lines.iter().flat_map(|l| l.split_whitespace()).collect();
    vocab.sort_unstable();
    vocab.dedup();
    let n = vocab.len();
    assert!((2..=20).contains(&n));
    let mut best = f64::NEG_INFINITY;
    // word 0 fixed in class 0 to skip mirror images
    for mask in 1u32..(1 << (n - 1)) {
        let class: HashMap<String, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| {
                (
                    w.to_string(),
                    if i > 0 && mask >> (i - 1) & 1 == 1 {
                        1
                    } else {
                        0
                    },
                )
            })
            .collect();
        best = best.max(class_objective(lines, &class));
    }
    best
}

/// Tune perplexity of the two-component mixture `(l, 1 - l)` given
/// per-event component probabilities.
pub fn mixture_perplexity(p1: &[f64], p2: &[f64], l: f64) -> f64 {
    let ll: f64 = p1
        .iter()
        .zip(p2)
        .map(|(a, b)| (l * a + (1.0 - l) * b).log10())
        .sum();
    10f64.powf(-ll / p1.len() as f64)
}

/// Grid point in `{0, 0.01, ..., 1}` minimizing the mixture perplexity.
pub fn grid_search(p1: &[f64], p2: &[f64]) -> f64 {
    (0..=100)
        .map(|i| i as f64 / 100.0)
        .min_by(|a, b| mixture_perplexity(p1, p2, *a).total_cmp(&mixture_perplexity(p1, p2, *b)))
        .unwrap()
}
