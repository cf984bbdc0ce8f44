//! Linearizes word-aligned sentence pairs into operation sequences and
//! decodes them back.
//!
//! cargo run --example osm_encode

use adaptkit::osm::{osm_decode, osm_encode};
use adaptkit::text::{format_pharaoh, SentencePair};

fn main() -> anyhow::Result<()> {
    let pairs = [
        ("a b", "y x", "0-1 1-0"),
        ("the red house", "la casa roja", "0-0 1-2 2-1"),
        ("je ne sais pas", "i do not know", "0-0 1-2 2-3 3-2"),
        ("a b c d", "w x y z", "0-3 1-2 2-1 3-0"),
    ];
    for (src, tgt, align) in pairs {
        let pair = SentencePair::from_lines(src, tgt, Some(align))?;
        let seq = osm_encode(&pair)?;
        println!("{src} ||| {tgt} ||| {align}");
        println!(
            "  ops: {}",
            seq.ops
                .iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        println!("  tokens: {}", seq.to_line());
        let back = osm_decode(&seq)?;
        println!(
            "  decoded: {} ||| {} ||| {}",
            back.source_line(),
            back.target_line(),
            format_pharaoh(back.alignment.as_deref().unwrap_or(&[]))
        );
    }
    Ok(())
}
