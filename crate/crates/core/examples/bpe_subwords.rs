//! Learns BPE merges, segments text with `@@` continuation markers, and
//! undoes the segmentation.
//!
//! cargo run --example bpe_subwords

use std::collections::HashMap;

use adaptkit::bpe::{bpe_apply, bpe_learn, bpe_learn_from_counts, bpe_undo};

fn main() -> anyhow::Result<()> {
    let freq: HashMap<String, u64> = [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]
        .into_iter()
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    let model = bpe_learn_from_counts(&freq, 10)?;
    println!("merges: {:?}", model.merges());
    print!("codes file:\n{}", model.to_codes());

    let corpus = ["the lowest newer widget", "newest widgets are the widest"];
    let model = bpe_learn(corpus, 20)?;
    for line in ["the slowest newest lower", "unseen"] {
        let seg = bpe_apply(&model, line);
        println!("{line:?} -> {seg:?} -> {:?}", bpe_undo(&seg));
    }
    Ok(())
}
