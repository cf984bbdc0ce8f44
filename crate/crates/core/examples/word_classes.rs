//! Exchange clustering of a vocabulary into classes, then a class-based
//! language model over the mapped text.
//!
//! cargo run --release --example word_classes

use adaptkit::classes::cluster_exchange;
use adaptkit::lm;
use adaptkit::synth::zipf_corpus;

fn main() -> anyhow::Result<()> {
    let planted: Vec<String> = vec!["a x a y a x a y".to_string(); 10];
    let (map, _) = cluster_exchange(&planted, 2, 30)?;
    println!(
        "planted corpus at K=2: {:?}",
        map.iter().collect::<Vec<_>>()
    );

    let corpus = zipf_corpus(3000, 400, 3);
    let (map, trace) = cluster_exchange(&corpus, 50, 30)?;
    println!(
        "K=50: {} moves in {} sweeps (converged {}), objective {:.1} -> {:.1}",
        trace.moves,
        trace.sweeps,
        trace.converged,
        trace.objective[0],
        trace.objective.last().unwrap()
    );
    let mapped = map.apply_lines(&corpus);
    println!("{}\n  -> {}", corpus[0], mapped[0]);
    let class_lm = lm::train(&mapped, 5)?;
    println!(
        "class 5-gram ppl on its training text: {:.3}",
        class_lm.perplexity(&mapped)?.ppl
    );
    Ok(())
}
