use std::collections::BTreeMap;

use proptest::prelude::*;

use adaptkit::lm::Vocabulary;
use adaptkit::oov::{drop_oov, find_oov, transliterate_oov, TranslitTable};

fn words() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(
        prop::sample::select(vec![
            "كتاب",
            "محمد",
            "ذهب",
            "الولد",
            "في",
            "a",
            "b",
            "c",
            "ثلج",
        ])
        .prop_map(String::from),
        0..10,
    )
}

fn vocab() -> Vocabulary {
    Vocabulary::from_corpus(["ذهب الولد في a b"])
}

proptest! {
    #[test]
    fn drop_keeps_the_in_vocabulary_subsequence(lines in proptest::collection::vec(words(), 1..8)) {
        let v = vocab();
        let text: Vec<String> = lines.iter().map(|l| l.join(" ")).collect();
        let dropped = drop_oov(&text, &v);
        prop_assert_eq!(dropped.len(), text.len());
        for (out, line) in dropped.iter().zip(&lines) {
            let expect: Vec<&str> = line.iter().map(String::as_str).filter(|w| v.contains(w)).collect();
            prop_assert_eq!(out, &expect.join(" "));
        }
    }

    #[test]
    fn translit_touches_only_oov_words(lines in proptest::collection::vec(words(), 1..8)) {
        let v = vocab();
        let table = TranslitTable::buckwalter();
        let text: Vec<String> = lines.iter().map(|l| l.join(" ")).collect();
        let oov = find_oov(&text, &v);
        let (out, summary) = transliterate_oov(&text, &v, &table);
        prop_assert_eq!(summary.tokens, oov.values().sum::<u64>());
        for (o, line) in out.iter().zip(&lines) {
            let toks: Vec<&str> = o.split_whitespace().collect();
            prop_assert_eq!(toks.len(), line.len());
            for (t, w) in toks.iter().zip(line) {
                if v.contains(w) {
                    prop_assert_eq!(*t, w.as_str());
                } else {
                    prop_assert!(t.chars().all(|c| table.get(c).is_none()), "{} kept table characters", t);
                }
            }
        }
    }

    #[test]
    fn oov_counts_match_a_recount(lines in proptest::collection::vec(words(), 0..8)) {
        let v = vocab();
        let text: Vec<String> = lines.iter().map(|l| l.join(" ")).collect();
        let mut recount: BTreeMap<String, u64> = BTreeMap::new();
        for w in lines.iter().flatten() {
            if !v.contains(w) {
                *recount.entry(w.clone()).or_default() += 1;
            }
        }
        prop_assert_eq!(find_oov(&text, &v), recount);
    }
}

#[test]
fn small_examples() {
    let v = Vocabulary::from_corpus(["a b"]);
    assert_eq!(
        find_oov(["a c b c"], &v),
        BTreeMap::from([("c".to_string(), 2)])
    );
    assert!(find_oov(["a b a"], &v).is_empty());
    assert_eq!(
        drop_oov(&["a c b", "c d", "a b"], &v),
        vec!["a b", "", "a b"]
    );
}
