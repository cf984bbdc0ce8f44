//! Interpolated modified Kneser-Ney estimation.
//!
//! The highest order uses raw counts. Lower orders use continuation counts
//! (number of distinct left extensions), except for n-grams that start with
//! `<s>`, which cannot be extended to the left and keep their raw counts.
//!
//! Each order has three discounts computed from its count-of-counts:
//!
//! ```text
//! Y   = n1 / (n1 + 2 n2)
//! D1  = 1 - 2 Y n2 / n1
//! D2  = 2 - 3 Y n3 / n2
//! D3+ = 3 - 4 Y n4 / n3
//! ```
//!
//! and falls back to a single discount of 0.75 when any of `n1..n4` is zero
//! or a discount leaves `(0, k]`.
//!
//! The unigram level treats `<unk>` as an extra event whose count is the
//! number of unigram singletons, then interpolates with the uniform
//! distribution over all predictable words.

use std::collections::HashMap;

use super::counts::NgramCounts;
use super::model::{NgramEntry, NgramModel, LOG_ZERO};
use super::vocab::{Vocabulary, WordId};
use crate::error::{Error, Result};

pub const FALLBACK_DISCOUNT: f64 = 0.75;

/// Discounts for adjusted counts 1, 2 and 3+.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d: [f64; 3],
    pub fallback: bool,
}

impl Discounts {
    pub fn from_count_of_counts(n: [u64; 4]) -> Self {
        let fallback = Discounts {
            d: [FALLBACK_DISCOUNT; 3],
            fallback: true,
        };
        if n.contains(&0) {
            return fallback;
        }
        let [n1, n2, n3, n4] = n.map(|x| x as f64);
        let y = n1 / (n1 + 2.0 * n2);
        let d = [
            1.0 - 2.0 * y * n2 / n1,
            2.0 - 3.0 * y * n3 / n2,
            3.0 - 4.0 * y * n4 / n3,
        ];
        if d.iter()
            .enumerate()
            .any(|(i, &v)| !(v > 0.0 && v <= (i + 1) as f64))
        {
            return fallback;
        }
        Discounts { d, fallback: false }
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d[0],
            2 => self.d[1],
            _ => self.d[2],
        }
    }
}

pub fn count_of_counts(values: impl Iterator<Item = u64>) -> [u64; 4] {
    let mut n = [0u64; 4];
    for c in values {
        if (1..=4).contains(&c) {
            n[c as usize - 1] += 1;
        }
    }
    n
}

/// Kneser-Ney adjusted counts, indexed by order - 1.
pub fn adjusted_counts(counts: &NgramCounts) -> Vec<HashMap<Vec<WordId>, u64>> {
    let order = counts.order();
    let mut out = Vec::with_capacity(order);
    for k in 1..=order {
        if k == order {
            out.push(counts.raw(k).clone());
            continue;
        }
        let mut cont: HashMap<Vec<WordId>, u64> = HashMap::new();
        for gram in counts.raw(k + 1).keys() {
            *cont.entry(gram[1..].to_vec()).or_insert(0) += 1;
        }
        let adj = counts
            .raw(k)
            .iter()
            .map(|(g, &raw)| {
                let c = if g[0] == Vocabulary::BOS_ID {
                    raw
                } else {
                    cont.get(g).copied().unwrap_or(0)
                };
                (g.clone(), c)
            })
            .collect();
        out.push(adj);
    }
    out
}

#[derive(Default, Clone, Copy)]
struct ContextStats {
    total: u64,
    n: [u64; 3],
}

impl ContextStats {
    fn add(&mut self, c: u64) {
        self.total += c;
        match c {
            0 => {}
            1 => self.n[0] += 1,
            2 => self.n[1] += 1,
            _ => self.n[2] += 1,
        }
    }

    fn gamma(&self, d: &Discounts) -> f64 {
        (d.d[0] * self.n[0] as f64 + d.d[1] * self.n[1] as f64 + d.d[2] * self.n[2] as f64)
            / self.total as f64
    }
}

/// Estimated model plus the per-order discounts that produced it.
#[derive(Debug, Clone)]
pub struct KnEstimate {
    pub model: NgramModel,
    pub discounts: Vec<Discounts>,
}

pub fn estimate_kn(counts: &NgramCounts) -> Result<NgramModel> {
    estimate_kn_detailed(counts).map(|e| e.model)
}

pub fn estimate_kn_detailed(counts: &NgramCounts) -> Result<KnEstimate> {
    if counts.sentences() == 0 {
        return Err(Error::NoEvents("cannot estimate from empty counts".into()));
    }
    let order = counts.order();
    let mut adjusted = adjusted_counts(counts);
    let discounts: Vec<Discounts> = adjusted
        .iter()
        .map(|m| Discounts::from_count_of_counts(count_of_counts(m.values().copied())))
        .collect();

    // <unk> as a unigram event with singleton-type mass
    let singletons = adjusted[0].values().filter(|&&c| c == 1).count() as u64;
    *adjusted[0].entry(vec![Vocabulary::UNK_ID]).or_insert(0) += singletons;

    let mut model = NgramModel::new(order, counts.vocab().clone());

    // unigrams
    let mut uni = ContextStats::default();
    for &c in adjusted[0].values() {
        uni.add(c);
    }
    let gamma = uni.gamma(&discounts[0]);
    let uniform = 1.0 / adjusted[0].len() as f64;
    let mut unigrams: Vec<(&Vec<WordId>, &u64)> = adjusted[0].iter().collect();
    unigrams.sort_unstable();
    for (g, &c) in unigrams {
        let p = (c as f64 - discounts[0].for_count(c)) / uni.total as f64 + gamma * uniform;
        model.insert_ids(
            g.clone(),
            NgramEntry {
                logprob: p.log10(),
                backoff: 0.0,
            },
        );
    }
    if order > 1 {
        model.insert_ids(
            vec![Vocabulary::BOS_ID],
            NgramEntry {
                logprob: LOG_ZERO,
                backoff: 0.0,
            },
        );
    }

    for k in 2..=order {
        let d = &discounts[k - 1];
        let mut stats: HashMap<&[WordId], ContextStats> = HashMap::new();
        for (g, &c) in &adjusted[k - 1] {
            stats.entry(&g[..k - 1]).or_default().add(c);
        }
        let mut gammas = HashMap::with_capacity(stats.len());
        for (ctx, s) in &stats {
            let gamma = s.gamma(d);
            gammas.insert(*ctx, gamma);
            let entry = model.entry_mut(ctx).ok_or_else(|| {
                Error::Numeric(format!("context {ctx:?} of order {k} has no stored n-gram"))
            })?;
            entry.backoff = gamma.log10();
        }
        let mut fresh = Vec::with_capacity(adjusted[k - 1].len());
        for (g, &c) in &adjusted[k - 1] {
            let ctx = &g[..k - 1];
            let s = &stats[ctx];
            let lower = 10f64.powf(model.logprob_ids(g[k - 1], &g[1..k - 1]));
            let p = (c as f64 - d.for_count(c)) / s.total as f64 + gammas[ctx] * lower;
            fresh.push((
                g.clone(),
                NgramEntry {
                    logprob: p.log10(),
                    backoff: 0.0,
                },
            ));
        }
        for (g, e) in fresh {
            model.insert_ids(g, e);
        }
    }
    Ok(KnEstimate { model, discounts })
}

/// Counts and estimates in one step.
pub fn train<I>(lines: I, order: usize) -> Result<NgramModel>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    estimate_kn(&super::counts::count_ngrams(lines, order)?)
}

/// Trains over the closed vocabulary `vocab`: tokens outside it count as
/// `<unk>`, and words of `vocab` unseen in `lines` still get the smoothed
/// unigram share.
pub fn train_closed<I>(lines: I, order: usize, vocab: &Vocabulary) -> Result<NgramModel>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let mut counts = NgramCounts::new(order)?;
    for (_, tok) in vocab.tokens() {
        counts.declare(tok);
    }
    for line in lines {
        let mapped: Vec<&str> = line
            .as_ref()
            .split_whitespace()
            .map(|t| {
                if vocab.contains(t) {
                    t
                } else {
                    super::vocab::UNK
                }
            })
            .collect();
        counts.add_sentence(&mapped.join(" "));
    }
    if counts.sentences() == 0 {
        return Err(Error::NoEvents("empty corpus".into()));
    }
    estimate_kn(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::count_ngrams;

    fn sum_over_events(m: &NgramModel, ctx: &[WordId]) -> f64 {
        m.event_space()
            .iter()
            .map(|&w| 10f64.powf(m.logprob_ids(w, ctx)))
            .sum()
    }

    #[test]
    fn closed_vocabulary_reserves_unseen_words() {
        let vocab = Vocabulary::from_corpus(["a b c d"]);
        let m = train_closed(["a b a x", "b a"], 2, &vocab).unwrap();
        assert!(m.vocab().contains("d"));
        assert!(!m.vocab().contains("x"));
        for ctx in [
            vec![],
            vec![m.vocab().id("a").unwrap()],
            vec![Vocabulary::BOS_ID],
        ] {
            assert!((sum_over_events(&m, &ctx) - 1.0).abs() < 1e-12);
        }
        let unseen = 10f64.powf(m.logprob_ids(m.vocab().id("d").unwrap(), &[]));
        let c = 10f64.powf(m.logprob_ids(m.vocab().id("c").unwrap(), &[]));
        assert!(unseen > 0.0 && (unseen - c).abs() < 1e-15);
    }

    #[test]
    fn discount_formula() {
        let d = Discounts::from_count_of_counts([10, 4, 2, 1]);
        let y = 10.0 / 18.0;
        assert!(!d.fallback);
        assert!((d.d[0] - (1.0 - 2.0 * y * 4.0 / 10.0)).abs() < 1e-15);
        assert!((d.d[1] - (2.0 - 3.0 * y * 2.0 / 4.0)).abs() < 1e-15);
        assert!((d.d[2] - (3.0 - 4.0 * y * 1.0 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn discount_fallbacks() {
        assert!(Discounts::from_count_of_counts([3, 0, 1, 1]).fallback);
        // D2 would be negative here
        assert!(Discounts::from_count_of_counts([1, 1, 100, 1]).fallback);
        assert_eq!(Discounts::from_count_of_counts([0; 4]).d, [0.75; 3]);
    }

    #[test]
    fn single_word_unigram_normalizes() {
        let m = train(["a", "a a"], 1).unwrap();
        let total: f64 = ["a", "</s>", "<unk>"]
            .iter()
            .map(|w| 10f64.powf(m.logprob(w, &[])))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_every_context() {
        let lines = [
            "the cat sat on the mat",
            "the dog sat on the log",
            "a cat and a dog",
            "the cat",
            "on the mat the cat sat",
        ];
        let m = train(lines, 3).unwrap();
        for k in 1..m.order() {
            for (ctx, _) in m.grams(k) {
                if ctx.last() == Some(&Vocabulary::EOS_ID) {
                    continue;
                }
                let s = sum_over_events(&m, ctx);
                assert!((s - 1.0).abs() < 1e-9, "context {ctx:?} sums to {s}");
            }
        }
        assert!((sum_over_events(&m, &[]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stored_prob_at_least_discounted_mass() {
        let lines = ["a b c a b", "b c a", "a a b b c c", "c b a"];
        let counts = count_ngrams(lines, 3).unwrap();
        let est = estimate_kn_detailed(&counts).unwrap();
        let adj = adjusted_counts(&counts);
        for k in 2..=3 {
            let mut totals: HashMap<&[WordId], u64> = HashMap::new();
            for (g, &c) in &adj[k - 1] {
                *totals.entry(&g[..k - 1]).or_default() += c;
            }
            for (g, &c) in &adj[k - 1] {
                let floor =
                    (c as f64 - est.discounts[k - 1].for_count(c)) / totals[&g[..k - 1]] as f64;
                let p = 10f64.powf(est.model.entry(g).unwrap().logprob);
                assert!(p >= floor && p <= 1.0, "{g:?}: {p} < {floor}");
            }
        }
    }

    #[test]
    fn probabilities_in_range() {
        let m = train(["x y z", "y z x", "z"], 3).unwrap();
        for k in 1..=3 {
            for (g, e) in m.grams(k) {
                if g == [Vocabulary::BOS_ID] {
                    assert_eq!(e.logprob, LOG_ZERO);
                    continue;
                }
                assert!(e.logprob <= 0.0 && e.logprob.is_finite());
                assert!(e.backoff.is_finite());
            }
        }
    }
}
