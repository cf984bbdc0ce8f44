//! Cross-entropy difference scoring and fraction-based selection of
//! out-of-domain data.
//!
//! Cross-entropies are per-event log10 values (the ARPA storage unit); a
//! sentence's events are its tokens plus `</s>`. Lower scores are more
//! in-domain-like.
//!
//! Both models of a side should share the in-domain vocabulary: train the
//! out-of-domain model with [`crate::lm::train_closed`] over the in-domain
//! model's vocabulary, so a word unseen in-domain is `<unk>` under both.
//! Otherwise the in-domain model's `<unk>` mass makes foreign vocabulary
//! look in-domain.

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lm::NgramModel;
use crate::text::SentencePair;

/// Fraction grid swept by default, as fractions of the out-of-domain corpus.
pub const FRACTION_GRID: [f64; 5] = [0.025, 0.0375, 0.05, 0.10, 0.30];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionScore {
    pub index: usize,
    pub score: f64,
    /// `(source, target)` components for bilingual scores.
    pub sides: Option<(f64, f64)>,
}

/// `H_in(s) - H_out(s)` for one whitespace-tokenized sentence.
pub fn ml_score(sentence: &str, in_lm: &NgramModel, out_lm: &NgramModel) -> f64 {
    in_lm.cross_entropy(sentence) - out_lm.cross_entropy(sentence)
}

/// In-domain and out-of-domain models for both sides of a parallel corpus.
#[derive(Debug, Clone, Copy)]
pub struct BilingualModels<'a> {
    pub in_src: &'a NgramModel,
    pub out_src: &'a NgramModel,
    pub in_tgt: &'a NgramModel,
    pub out_tgt: &'a NgramModel,
}

/// Sum of the source-side and target-side cross-entropy differences.
pub fn bilingual_score(pair: &SentencePair, models: &BilingualModels<'_>) -> f64 {
    let (s, t) = bilingual_sides(pair, models);
    s + t
}

fn bilingual_sides(pair: &SentencePair, m: &BilingualModels<'_>) -> (f64, f64) {
    (
        ml_score(&pair.source_line(), m.in_src, m.out_src),
        ml_score(&pair.target_line(), m.in_tgt, m.out_tgt),
    )
}

/// Scores every sentence of a monolingual corpus in parallel.
pub fn score_monolingual<S>(
    lines: &[S],
    in_lm: &NgramModel,
    out_lm: &NgramModel,
) -> Vec<SelectionScore>
where
    S: AsRef<str> + Sync,
{
    lines
        .par_iter()
        .enumerate()
        .map(|(index, l)| SelectionScore {
            index,
            score: ml_score(l.as_ref(), in_lm, out_lm),
            sides: None,
        })
        .collect()
}

pub fn score_bilingual(
    pairs: &[SentencePair],
    models: &BilingualModels<'_>,
) -> Vec<SelectionScore> {
    pairs
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let (s, t) = bilingual_sides(p, models);
            SelectionScore {
                index,
                score: s + t,
                sides: Some((s, t)),
            }
        })
        .collect()
}

/// `floor(n * fraction)`, robust to the fraction not being exactly
/// representable in binary.
pub fn selection_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "selection fraction {fraction} outside (0, 1]"
        )));
    }
    let exact = n as f64 * fraction;
    let k = (exact * (1.0 + 4.0 * f64::EPSILON)).floor() as usize;
    Ok(k.min(n))
}

/// Indices of the `floor(n * fraction)` lowest scores, ties broken by
/// position, returned in corpus order.
pub fn select_lowest(scores: &[f64], fraction: f64) -> Result<Vec<usize>> {
    let k = selection_size(scores.len(), fraction)?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("score #{i} is {}", scores[i])));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut idx: Vec<u32> = (0..scores.len() as u32).collect();
    let by_score = |a: &u32, b: &u32| {
        scores[*a as usize]
            .total_cmp(&scores[*b as usize])
            .then(a.cmp(b))
    };
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_score);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| i as usize).collect())
}

/// Selection by [`SelectionScore`]; returns the scores' own `index` values.
pub fn select_fraction(scores: &[SelectionScore], fraction: f64) -> Result<Vec<usize>> {
    let raw: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let mut out: Vec<usize> = select_lowest(&raw, fraction)?
        .into_iter()
        .map(|i| scores[i].index)
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Random sample of `size` lines (all lines if fewer), kept in corpus order.
/// Used to build an out-of-domain scoring LM the same size as the in-domain one.
pub fn sample_indices(n: usize, size: usize, seed: u64) -> Vec<usize> {
    if size >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, size).into_vec();
    idx.sort_unstable();
    idx
}

/// `index\tscore\tsrc_score\ttgt_score` lines; side columns are empty for
/// monolingual scores.
pub fn format_scores(scores: &[SelectionScore]) -> String {
    let mut out = String::new();
    for s in scores {
        match s.sides {
            Some((a, b)) => out.push_str(&format!("{}\t{}\t{}\t{}\n", s.index, s.score, a, b)),
            None => out.push_str(&format!("{}\t{}\t\t\n", s.index, s.score)),
        }
    }
    out
}

pub fn parse_scores(text: &str) -> Result<Vec<SelectionScore>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |what: &str| Error::parse("scores", i + 1, format!("bad {what}"));
        let index = f
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("index"))?;
        let score = f
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("score"))?;
        let side = |j: usize| f.get(j).filter(|v| !v.is_empty()).map(|v| v.parse::<f64>());
        let sides = match (side(2), side(3)) {
            (Some(Ok(a)), Some(Ok(b))) => Some((a, b)),
            (None, None) => None,
            _ => return Err(bad("side scores")),
        };
        out.push(SelectionScore {
            index,
            score,
            sides,
        });
    }
    Ok(out)
}

pub fn read_scores(path: &Path) -> Result<Vec<SelectionScore>> {
    parse_scores(&crate::text::read_text(path)?)
}
