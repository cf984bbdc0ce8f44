//! Linear interpolation of n-gram models with weights fitted by EM on a
//! tune set.
//!
//! Each component is queried with its own vocabulary, so a word unknown to
//! one component is scored by that component's `<unk>` mass.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lm::{NgramEntry, NgramModel, Vocabulary, WordId, LOG_ZERO};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub struct MixtureModel {
    components: Vec<NgramModel>,
    weights: Vec<f64>,
}

/// Diagnostics of one EM run.
#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    /// Tune perplexity at the initial weights, then after every iteration.
    pub perplexities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct EmOptions {
    /// Stop once the relative perplexity improvement drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

fn check_simplex(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "weights {weights:?} are not on the simplex"
        )));
    }
    Ok(())
}

impl MixtureModel {
    pub fn new(components: Vec<NgramModel>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::Argument(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        check_simplex(&weights)?;
        Ok(MixtureModel {
            components,
            weights,
        })
    }

    pub fn uniform(components: Vec<NgramModel>) -> Result<Self> {
        let n = components.len();
        Self::new(components, vec![1.0 / n as f64; n])
    }

    /// Fits weights on `tune` and returns the mixture with its trace.
    pub fn fit<I>(components: Vec<NgramModel>, tune: I, opts: &EmOptions) -> Result<(Self, EmTrace)>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let (weights, trace) = em_fit(&components, tune, opts)?;
        Ok((Self::new(components, weights)?, trace))
    }

    pub fn components(&self) -> &[NgramModel] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.components
            .iter()
            .map(NgramModel::order)
            .max()
            .unwrap_or(1)
    }

    /// log10 of the weighted sum of component probabilities.
    pub fn logprob(&self, word: &str, history: &[&str]) -> f64 {
        let p: f64 = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(m, &l)| l * 10f64.powf(m.logprob(word, history)))
            .sum();
        p.log10()
    }

    pub fn perplexity<I>(&self, lines: I) -> Result<f64>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let table = EventTable::build(&self.components, lines)?;
        Ok(table.perplexity(&self.weights))
    }
}

pub fn mixture_logprob(mix: &MixtureModel, word: &str, history: &[&str]) -> f64 {
    mix.logprob(word, history)
}

/// Linear probabilities of every tune event under every component.
struct EventTable {
    /// probs[e][i] = p_i(event e)
    probs: Vec<Vec<f64>>,
}

impl EventTable {
    fn build<I>(components: &[NgramModel], lines: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let lines: Vec<String> = lines.into_iter().map(|l| l.as_ref().to_string()).collect();
        if lines.is_empty() {
            return Err(Error::NoEvents("empty tune set".into()));
        }
        let per_component: Vec<Vec<f64>> = components
            .par_iter()
            .map(|m| {
                lines
                    .iter()
                    .flat_map(|l| m.sentence_logprobs(l))
                    .map(|lp| 10f64.powf(lp))
                    .collect()
            })
            .collect();
        let n = per_component[0].len();
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|e| per_component.iter().map(|c| c[e]).collect())
            .collect();
        if let Some(idx) = probs.iter().position(|row| row.iter().all(|&p| p <= 0.0)) {
            return Err(Error::ZeroProbability {
                event: nth_event(&lines, idx),
                index: idx,
            });
        }
        Ok(EventTable { probs })
    }

    fn perplexity(&self, weights: &[f64]) -> f64 {
        let total: f64 = self
            .probs
            .iter()
            .map(|row| {
                row.iter()
                    .zip(weights)
                    .map(|(p, l)| p * l)
                    .sum::<f64>()
                    .log10()
            })
            .sum();
        10f64.powf(-total / self.probs.len() as f64)
    }

    fn em_step(&self, weights: &[f64]) -> Vec<f64> {
        let k = weights.len();
        let mut acc = vec![0.0; k];
        for row in &self.probs {
            let denom: f64 = row.iter().zip(weights).map(|(p, l)| p * l).sum();
            for i in 0..k {
                acc[i] += weights[i] * row[i] / denom;
            }
        }
        let n = self.probs.len() as f64;
        let mut next: Vec<f64> = acc.iter().map(|a| a / n).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|w| *w /= s);
        next
    }
}

fn nth_event(lines: &[String], mut idx: usize) -> String {
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if idx <= toks.len() {
            return toks.get(idx).copied().unwrap_or(crate::lm::EOS).to_string();
        }
        idx -= toks.len() + 1;
    }
    String::new()
}

/// Fits interpolation weights by EM, starting from uniform weights.
///
/// E-step: `r_i(e) = l_i p_i(e) / sum_j l_j p_j(e)`; M-step: `l_i = mean_e r_i(e)`.
pub fn em_fit<I>(
    components: &[NgramModel],
    tune: I,
    opts: &EmOptions,
) -> Result<(Vec<f64>, EmTrace)>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    if components.len() < 2 {
        return Err(Error::Argument(
            "interpolation needs at least two components".into(),
        ));
    }
    let table = EventTable::build(components, tune)?;
    let k = components.len();
    let mut weights = vec![1.0 / k as f64; k];
    let mut ppl = table.perplexity(&weights);
    let mut trace = EmTrace {
        perplexities: vec![ppl],
        iterations: 0,
        converged: false,
    };
    for _ in 0..opts.max_iter {
        let next = table.em_step(&weights);
        let next_ppl = table.perplexity(&next);
        if !next_ppl.is_finite() {
            return Err(Error::Numeric(format!("tune perplexity became {next_ppl}")));
        }
        trace.iterations += 1;
        trace.perplexities.push(next_ppl);
        let improvement = (ppl - next_ppl) / ppl;
        weights = next;
        ppl = next_ppl;
        if improvement < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((weights, trace))
}

/// Statically merges a mixture into a single back-off model over the union
/// of the component n-gram sets.
///
/// Stored probabilities equal the dynamic mixture's; backoff weights are
/// recomputed so each context renormalizes. Unstored events back off through
/// the merged model rather than through each component, so this approximates
/// query-time interpolation.
pub fn merge_static(mix: &MixtureModel) -> Result<NgramModel> {
    let order = mix.order();
    let mut vocab = Vocabulary::new();
    for m in mix.components() {
        for (_, tok) in m.vocab().tokens() {
            vocab.intern(tok);
        }
    }
    let mut merged = NgramModel::new(order, vocab);
    for k in 1..=order {
        let mut union: BTreeSet<Vec<String>> = BTreeSet::new();
        for m in mix.components().iter().filter(|m| m.order() >= k) {
            for (g, _) in m.grams(k) {
                union.insert(g.iter().map(|&w| m.vocab().token(w).to_string()).collect());
            }
        }
        let rows: Vec<(Vec<WordId>, f64)> = union
            .iter()
            .map(|g| {
                let toks: Vec<&str> = g.iter().map(String::as_str).collect();
                let ids: Vec<WordId> = toks.iter().map(|t| merged.vocab().id(t).unwrap()).collect();
                let lp = if k == 1 && ids[0] == Vocabulary::BOS_ID {
                    LOG_ZERO
                } else {
                    mix.logprob(toks[k - 1], &toks[..k - 1])
                };
                (ids, lp)
            })
            .collect();

        if k > 1 {
            // backoff for each context of this order, from sums over its stored successors
            let mut by_ctx: std::collections::BTreeMap<&[WordId], (f64, f64)> = Default::default();
            for (ids, lp) in &rows {
                let lower = merged.logprob_ids(ids[k - 1], &ids[1..k - 1]);
                let e = by_ctx.entry(&ids[..k - 1]).or_insert((0.0, 0.0));
                e.0 += 10f64.powf(*lp);
                e.1 += 10f64.powf(lower);
            }
            for (ctx, (hi, lo)) in by_ctx {
                let num = (1.0 - hi).max(f64::EPSILON);
                let den = (1.0 - lo).max(f64::EPSILON);
                if 1.0 - hi <= 0.0 || 1.0 - lo <= 0.0 {
                    log::warn!("context {ctx:?}: stored mass saturates, backoff clamped");
                }
                let entry = merged
                    .entry_mut(ctx)
                    .ok_or_else(|| Error::Numeric(format!("merged context {ctx:?} missing")))?;
                entry.backoff = (num / den).log10();
            }
        }
        for (ids, lp) in rows {
            merged.insert_ids(
                ids,
                NgramEntry {
                    logprob: lp,
                    backoff: 0.0,
                },
            );
        }
    }
    Ok(merged)
}

/// `component_path\tlambda` lines.
pub fn format_weights<S: AsRef<str>>(names: &[S], weights: &[f64]) -> String {
    names
        .iter()
        .zip(weights)
        .map(|(n, w)| format!("{}\t{w}\n", n.as_ref()))
        .collect()
}

pub fn parse_weights(text: &str) -> Result<Vec<(String, f64)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let (name, w) = l
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse("weights", i + 1, "expected `path\\tlambda`"))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::parse("weights", i + 1, format!("bad weight {w:?}")))?;
            Ok((name.to_string(), w))
        })
        .collect()
}

pub fn read_weights(path: &Path) -> Result<Vec<(String, f64)>> {
    parse_weights(&crate::text::read_text(path)?)
}
