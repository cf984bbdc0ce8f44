//! Fits interpolation weights for two component models by EM on a tune set
//! drawn from a known 0.7/0.3 mixture, then merges them into one back-off
//! model.
//!
//! cargo run --release --example interpolate

use adaptkit::lm;
use adaptkit::mixture::{merge_static, EmOptions, MixtureModel};
use adaptkit::synth::{sample_mixture, zipf_corpus};

fn main() -> anyhow::Result<()> {
    let a = lm::train(zipf_corpus(3000, 150, 5), 3)?;
    let b = lm::train(zipf_corpus(3000, 300, 6), 3)?;
    let comps = vec![a, b];
    let tune = sample_mixture(&comps, &[0.7, 0.3], 20_000, 9);

    let (mix, trace) = MixtureModel::fit(comps, &tune, &EmOptions::default())?;
    for (i, ppl) in trace.perplexities.iter().enumerate() {
        println!("iteration {i:>2}: tune ppl {ppl:.4}");
    }
    println!("weights {:?}, converged {}", mix.weights(), trace.converged);

    let merged = merge_static(&mix)?;
    println!(
        "mixture ppl {:.4}, merged back-off model ppl {:.4}",
        mix.perplexity(&tune)?,
        merged.perplexity(&tune)?.ppl
    );
    Ok(())
}
