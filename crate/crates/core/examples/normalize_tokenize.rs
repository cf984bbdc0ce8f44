//! Normalizes Arabic text with the built-in rules, tokenizes it, and
//! length-filters a tiny parallel corpus.
//!
//! cargo run --example normalize_tokenize

use adaptkit::text::{length_filter, normalize, tokenize_line, NormalizationRules, SentencePair};

fn main() -> anyhow::Result<()> {
    let rules = NormalizationRules::arabic_default();
    for raw in [
        "أهلاً وسهلاً، يا صديقي!",
        "\u{0625}\u{0644}\u{0649} \u{0627}\u{0644}\u{0645}\u{062F}\u{0631}\u{0633}\u{0629}\u{061F}",
        "Hello,world... (again)",
    ] {
        let norm = normalize(raw, &rules);
        println!(
            "{raw}\n  normalized: {norm}\n  tokenized:  {}",
            tokenize_line(&norm)
        );
    }

    let corpus = vec![
        SentencePair::from_lines("a b c", "x y z", Some("0-0 1-1 2-2"))?,
        SentencePair::from_lines("a b c d e f", "x", None)?,
        SentencePair::from_lines("a", "x y", None)?,
    ];
    let kept: Vec<SentencePair> = length_filter(corpus, 4).collect();
    println!(
        "\nlength filter (max 4 tokens per side) kept {} of 3 pairs:",
        kept.len()
    );
    for p in &kept {
        println!("  {} ||| {}", p.source_line(), p.target_line());
    }
    Ok(())
}
