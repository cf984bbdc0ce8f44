//! Seeded synthetic corpora for tests, examples and the desk-scale pipeline.
//!
//! All generators are deterministic functions of their seed.

use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lm::{NgramModel, Vocabulary, WordId};
use crate::text::{format_pharaoh, write_atomic, write_lines, SentencePair};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zipf distribution over ranks `0..n` with exponent `s`.
#[derive(Debug, Clone)]
pub struct Zipf {
    index: WeightedIndex<f64>,
}

impl Zipf {
    pub fn new(n: usize, s: f64) -> Self {
        assert!(n > 0);
        let w: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
        Zipf {
            index: WeightedIndex::new(w).expect("positive weights"),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// Monolingual text over words `w0..w{vocab}` with Zipfian unigrams and a
/// preferred successor per word, so higher orders carry information.
pub fn zipf_corpus(lines: usize, vocab: usize, seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    let zipf = Zipf::new(vocab, 1.1);
    (0..lines)
        .map(|_| {
            let len = r.gen_range(3..=15);
            let mut prev = zipf.sample(&mut r);
            let mut words = vec![format!("w{prev}")];
            for _ in 1..len {
                let next = if r.gen_bool(0.4) {
                    (prev * 31 + 7) % vocab
                } else {
                    zipf.sample(&mut r)
                };
                words.push(format!("w{next}"));
                prev = next;
            }
            words.join(" ")
        })
        .collect()
}

/// A word source for one domain: a peaked private vocabulary mixed with a
/// common one. Domains with distinct prefixes and fillers share no words.
#[derive(Debug, Clone)]
pub struct Domain {
    prefix: &'static str,
    common_prefix: &'static str,
    filler: &'static str,
    own: Zipf,
    common: Zipf,
    own_rate: f64,
}

impl Domain {
    /// Words are `{prefix}{i}` from a Zipf vocabulary of `own_vocab`, or with
    /// probability `1 - own_rate` `{common_prefix}{i}` from a common
    /// vocabulary. Targets uppercase the word and insert `filler` now and then.
    pub fn new(
        prefix: &'static str,
        common_prefix: &'static str,
        filler: &'static str,
        own_vocab: usize,
        common_vocab: usize,
        own_rate: f64,
    ) -> Self {
        Domain {
            prefix,
            common_prefix,
            filler,
            own: Zipf::new(own_vocab, 1.0),
            common: Zipf::new(common_vocab, 1.0),
            own_rate,
        }
    }

    /// Source word ids as `(is_own, rank)`.
    fn word<R: Rng>(&self, r: &mut R) -> (bool, usize) {
        if r.gen_bool(self.own_rate) {
            (true, self.own.sample(r))
        } else {
            (false, self.common.sample(r))
        }
    }

    fn source_token(&self, w: (bool, usize)) -> String {
        match w {
            (true, i) => format!("{}{i}", self.prefix),
            (false, i) => format!("{}{i}", self.common_prefix),
        }
    }

    fn target_token(&self, w: (bool, usize)) -> String {
        match w {
            (true, i) => format!("{}{i}", self.prefix.to_uppercase()),
            (false, i) => format!("{}{i}", self.common_prefix.to_uppercase()),
        }
    }

    /// A sentence pair whose target is a word-by-word translation with local
    /// swaps, occasional dropped source words and inserted target words.
    pub fn pair<R: Rng>(&self, r: &mut R, max_len: usize) -> SentencePair {
        let len = r.gen_range(2..=max_len.max(2));
        let words: Vec<(bool, usize)> = (0..len).map(|_| self.word(r)).collect();
        let source: Vec<String> = words.iter().map(|&w| self.source_token(w)).collect();
        // target slots: Some(source index) or None for an inserted word
        let mut slots: Vec<Option<usize>> = Vec::new();
        for i in 0..len {
            if r.gen_bool(0.05) {
                continue;
            }
            slots.push(Some(i));
            if r.gen_bool(0.05) {
                slots.push(None);
            }
        }
        if slots.is_empty() {
            slots.push(Some(0));
        }
        let mut j = 0;
        while j + 1 < slots.len() {
            if r.gen_bool(0.2) {
                slots.swap(j, j + 1);
                j += 2;
            } else {
                j += 1;
            }
        }
        let mut target = Vec::with_capacity(slots.len());
        let mut links = Vec::new();
        for (t, slot) in slots.iter().enumerate() {
            match slot {
                Some(s) => {
                    target.push(self.target_token(words[*s]));
                    links.push((*s, t));
                }
                None => target.push(self.filler.to_string()),
            }
        }
        SentencePair::new(source, target, Some(links)).expect("generated pair is valid")
    }
}

/// Bitext with a known set of in-domain sentences hidden in a general pool.
#[derive(Debug, Clone)]
pub struct PlantedBitext {
    /// In-domain training data (separate from the pool).
    pub in_domain: Vec<SentencePair>,
    /// Out-of-domain pool containing the planted sentences.
    pub pool: Vec<SentencePair>,
    /// Sorted pool indices of the planted in-domain sentences.
    pub planted: Vec<usize>,
    pub tune: Vec<SentencePair>,
    pub test: Vec<SentencePair>,
    /// Held-out draw from the pool's mixture, as large as `in_domain`.
    pub mixed_sample: Vec<SentencePair>,
}

#[derive(Debug, Clone, Copy)]
pub struct PlantedConfig {
    pub in_domain: usize,
    pub pool: usize,
    pub planted: usize,
    pub tune: usize,
    pub test: usize,
    pub max_len: usize,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            in_domain: 2000,
            pool: 10_000,
            planted: 1000,
            tune: 500,
            test: 500,
            max_len: 12,
        }
    }
}

pub fn in_domain() -> Domain {
    Domain::new("d", "s", "of", 300, 400, 0.5)
}

pub fn general_domain() -> Domain {
    Domain::new("g", "c", "the", 2000, 400, 0.5)
}

pub fn planted_bitext(cfg: &PlantedConfig, seed: u64) -> PlantedBitext {
    assert!(cfg.planted <= cfg.pool);
    let mut r = rng(seed);
    let ind = in_domain();
    let gen = general_domain();
    let in_domain = (0..cfg.in_domain)
        .map(|_| ind.pair(&mut r, cfg.max_len))
        .collect();
    let planted = rand::seq::index::sample(&mut r, cfg.pool, cfg.planted).into_vec();
    let mut is_planted = vec![false; cfg.pool];
    for &i in &planted {
        is_planted[i] = true;
    }
    let pool = is_planted
        .iter()
        .map(|&p| if p { &ind } else { &gen }.pair(&mut r, cfg.max_len))
        .collect();
    let tune = (0..cfg.tune)
        .map(|_| ind.pair(&mut r, cfg.max_len))
        .collect();
    let test = (0..cfg.test)
        .map(|_| ind.pair(&mut r, cfg.max_len))
        .collect();
    let rate = cfg.planted as f64 / cfg.pool as f64;
    let mixed_sample = (0..cfg.in_domain)
        .map(|_| if r.gen_bool(rate) { &ind } else { &gen }.pair(&mut r, cfg.max_len))
        .collect();
    let mut planted = planted;
    planted.sort_unstable();
    PlantedBitext {
        in_domain,
        pool,
        planted,
        tune,
        test,
        mixed_sample,
    }
}

/// Random aligned pair over a small vocabulary, lengths `1..=max_len`, with
/// an arbitrary (possibly many-to-many, possibly partial) alignment.
pub fn random_aligned_pair<R: Rng>(r: &mut R, max_len: usize) -> SentencePair {
    let ls = r.gen_range(1..=max_len);
    let lt = r.gen_range(1..=max_len);
    let source = (0..ls).map(|_| format!("s{}", r.gen_range(0..6))).collect();
    let target = (0..lt).map(|_| format!("t{}", r.gen_range(0..6))).collect();
    let density = r.gen_range(0.0..0.4);
    let mut links = Vec::new();
    for i in 0..ls {
        for j in 0..lt {
            if r.gen_bool(density) {
                links.push((i, j));
            }
        }
    }
    SentencePair::new(source, target, Some(links)).expect("generated pair is valid")
}

/// Random 1-1 monotone pair: every word linked to the same position.
pub fn monotone_pair<R: Rng>(r: &mut R, max_len: usize) -> SentencePair {
    let n = r.gen_range(1..=max_len);
    let source = (0..n).map(|_| format!("s{}", r.gen_range(0..6))).collect();
    let target = (0..n).map(|_| format!("t{}", r.gen_range(0..6))).collect();
    SentencePair::new(source, target, Some((0..n).map(|i| (i, i)).collect())).expect("valid")
}

/// Sentences drawn from the linear mixture of `components` with `weights`:
/// each token picks a component by weight, then a word from that
/// component's conditional distribution (which may yield `<unk>`, written
/// literally). Generation stops once at least
/// `events` predicted tokens (including `</s>`) exist. Sentences are capped
/// at 50 tokens.
pub fn sample_mixture(
    components: &[NgramModel],
    weights: &[f64],
    events: usize,
    seed: u64,
) -> Vec<String> {
    assert_eq!(components.len(), weights.len());
    let mut r = rng(seed);
    let pick = WeightedIndex::new(weights).expect("valid weights");
    let spaces: Vec<Vec<WordId>> = components.iter().map(NgramModel::event_space).collect();
    let mut lines = Vec::new();
    let mut total = 0;
    while total < events {
        let mut sent: Vec<String> = Vec::new();
        loop {
            let k = pick.sample(&mut r);
            let m = &components[k];
            let keep = m.order() - 1;
            let mut hist: Vec<WordId> = Vec::with_capacity(keep);
            if sent.len() < keep {
                hist.push(Vocabulary::BOS_ID);
            }
            let start = sent.len().saturating_sub(keep);
            hist.extend(sent[start..].iter().map(|w| m.vocab().id_or_unk(w)));
            let probs: Vec<f64> = spaces[k]
                .iter()
                .map(|&w| 10f64.powf(m.logprob_ids(w, &hist)))
                .collect();
            let w = spaces[k][WeightedIndex::new(&probs)
                .expect("positive mass")
                .sample(&mut r)];
            total += 1;
            if w == Vocabulary::EOS_ID || sent.len() >= 50 {
                break;
            }
            sent.push(m.vocab().token(w).to_string());
        }
        lines.push(sent.join(" "));
    }
    lines
}

fn write_pairs(dir: &Path, stem: &str, pairs: &[SentencePair]) -> Result<()> {
    let src: Vec<String> = pairs.iter().map(SentencePair::source_line).collect();
    let tgt: Vec<String> = pairs.iter().map(SentencePair::target_line).collect();
    let align: Vec<String> = pairs
        .iter()
        .map(|p| format_pharaoh(p.alignment.as_deref().unwrap_or(&[])))
        .collect();
    write_lines(&dir.join(format!("{stem}.src")), &src)?;
    write_lines(&dir.join(format!("{stem}.tgt")), &tgt)?;
    write_lines(&dir.join(format!("{stem}.align")), &align)
}

/// A noisy "system output" for `refs`: each word is kept with probability
/// 0.8, otherwise replaced by a fixed filler word.
pub fn noisy_hypotheses(refs: &[SentencePair], seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    refs.iter()
        .map(|p| {
            p.target
                .iter()
                .map(|w| if r.gen_bool(0.8) { w.as_str() } else { "of" })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Config running every stage over the files of [`write_desk_fixture`].
pub const DESK_CONFIG: &str = "\
seed = 42

[corpus news]
role = in-domain
src = news.src
tgt = news.tgt
align = news.align

[corpus web]
role = out-domain
src = web.src
tgt = web.tgt
align = web.align

[corpus dev]
role = tune
src = dev.src
tgt = dev.tgt
align = dev.align

[corpus eval]
role = test
src = eval.src
tgt = eval.tgt
align = eval.align

[stage normalize]

[stage filter]
max_len = 80

[stage select]
fraction = 0.10
order = 3

[stage train-lm]
order = 5

[stage interpolate]

[stage bpe]
merges = 2000

[stage osm]
order = 5

[stage classes]
k = 50

[stage oov]
mode = translit

[stage bleu]
hyp = eval.hyp
ref = eval.tgt
";

/// Writes the planted bitext (`news` in-domain, `web` pool, `dev` tune,
/// `eval` test), a hypothesis file and `run.cfg` into `dir`. Returns the
/// config path.
pub fn write_desk_fixture(dir: &Path, cfg: &PlantedConfig, seed: u64) -> Result<PathBuf> {
    let data = planted_bitext(cfg, seed);
    write_pairs(dir, "news", &data.in_domain)?;
    write_pairs(dir, "web", &data.pool)?;
    write_pairs(dir, "dev", &data.tune)?;
    write_pairs(dir, "eval", &data.test)?;
    write_lines(
        &dir.join("eval.hyp"),
        &noisy_hypotheses(&data.test, seed ^ 0x5eed),
    )?;
    let path = dir.join("run.cfg");
    write_atomic(&path, DESK_CONFIG.as_bytes())?;
    Ok(path)
}
