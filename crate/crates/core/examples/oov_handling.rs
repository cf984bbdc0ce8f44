//! Finds words missing from a training vocabulary and either drops them or
//! transliterates them with the Buckwalter table.
//!
//! cargo run --example oov_handling

use adaptkit::lm::Vocabulary;
use adaptkit::oov::{drop_oov, find_oov, transliterate_oov, TranslitTable};

fn main() -> anyhow::Result<()> {
    let train = ["ذهب الولد الى المدرسة", "الولد في البيت"];
    let vocab = Vocabulary::from_corpus(train);
    let test = vec![
        "ذهب محمد الى المدرسة".to_string(),
        "كتاب الولد في البيت".to_string(),
    ];

    println!("OOV: {:?}", find_oov(&test, &vocab));
    for line in drop_oov(&test, &vocab) {
        println!("drop:     {line}");
    }
    let (lines, summary) = transliterate_oov(&test, &vocab, &TranslitTable::buckwalter());
    for line in &lines {
        println!("translit: {line}");
    }
    println!(
        "{} tokens transliterated, unmapped characters {:?}",
        summary.tokens, summary.unmapped
    );
    Ok(())
}
