//! Bilingual cross-entropy-difference selection on a planted bitext: 1000
//! in-domain pairs hidden among 10000 general ones.
//!
//! cargo run --release --example select_data

use std::collections::HashSet;

use adaptkit::lm;
use adaptkit::selection::{score_bilingual, select_fraction, BilingualModels, FRACTION_GRID};
use adaptkit::synth::{planted_bitext, PlantedConfig};
use adaptkit::text::SentencePair;

fn side(pairs: &[SentencePair], src: bool) -> Vec<String> {
    pairs
        .iter()
        .map(|p| {
            if src {
                p.source_line()
            } else {
                p.target_line()
            }
        })
        .collect()
}

fn main() -> anyhow::Result<()> {
    let data = planted_bitext(&PlantedConfig::default(), 7);
    // out-of-domain models share the in-domain vocabulary
    let models_for = |src: bool| -> adaptkit::Result<_> {
        let in_lm = lm::train(side(&data.in_domain, src), 4)?;
        let out_lm = lm::train_closed(side(&data.mixed_sample, src), 4, in_lm.vocab())?;
        Ok((in_lm, out_lm))
    };
    let (in_src, out_src) = models_for(true)?;
    let (in_tgt, out_tgt) = models_for(false)?;
    let models = BilingualModels {
        in_src: &in_src,
        out_src: &out_src,
        in_tgt: &in_tgt,
        out_tgt: &out_tgt,
    };
    let scores = score_bilingual(&data.pool, &models);

    let planted: HashSet<usize> = data.planted.iter().copied().collect();
    for f in FRACTION_GRID {
        let chosen = select_fraction(&scores, f)?;
        let hits = chosen.iter().filter(|i| planted.contains(i)).count();
        println!(
            "fraction {:>6.2}%: {:>5} pairs, {:>4} planted (precision {:.3})",
            f * 100.0,
            chosen.len(),
            hits,
            hits as f64 / chosen.len() as f64
        );
    }
    Ok(())
}
