//! Trains an interpolated modified Kneser-Ney 5-gram model, queries it,
//! and round-trips it through ARPA.
//!
//! cargo run --release --example train_lm

use adaptkit::lm::{self, export_arpa, import_arpa, KnEstimate};
use adaptkit::synth::zipf_corpus;

fn main() -> anyhow::Result<()> {
    let train = zipf_corpus(5000, 500, 1);
    let held_out = zipf_corpus(500, 600, 2);

    let counts = lm::count_ngrams(&train, 5)?;
    let KnEstimate { model, discounts } = lm::estimate_kn_detailed(&counts)?;
    for (k, d) in discounts.iter().enumerate() {
        let tag = if d.fallback { " (fallback)" } else { "" };
        println!(
            "order {}: D1 {:.3} D2 {:.3} D3+ {:.3}{tag}",
            k + 1,
            d.d[0],
            d.d[1],
            d.d[2]
        );
    }

    let p = model.perplexity(&held_out)?;
    println!(
        "held-out ppl {:.3} over {} events ({} OOV)",
        p.ppl, p.events, p.oov
    );
    println!("log10 p(w1 | w0) = {:.4}", model.logprob("w1", &["w0"]));

    let arpa = export_arpa(&model);
    let back = import_arpa(&arpa)?;
    println!(
        "ARPA: {} bytes, round-trip ppl {:.3}",
        arpa.len(),
        back.perplexity(&held_out)?.ppl
    );
    Ok(())
}
