//! Corpus BLEU and a progress table with per-row averages.
//!
//! cargo run --example bleu_report

use adaptkit::eval::{bleu, progress_table, AverageMode};

fn main() -> anyhow::Result<()> {
    let refs = ["the cat sat on the mat", "there is a cat on the mat"];
    let hyps = ["the cat sat on a mat", "a cat is on the mat"];
    println!("{}", bleu(&hyps, &refs, false)?);
    println!("{}", bleu(&refs, &refs, false)?);

    let columns: Vec<String> = ["test11", "test12", "test13", "test14"]
        .map(String::from)
        .to_vec();
    let rows = vec![
        ("baseline".to_string(), vec![27.5, 30.6, 30.4, 26.3]),
        ("selected 3.75%".to_string(), vec![28.2, 32.4, 32.3, 28.6]),
    ];
    print!(
        "{}",
        progress_table(&rows, &columns, AverageMode::Displayed)?
    );
    Ok(())
}
