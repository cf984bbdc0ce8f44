use std::collections::HashSet;

use proptest::prelude::*;

use adaptkit::lm;
use adaptkit::selection::{
    score_monolingual, select_fraction, select_lowest, selection_size, FRACTION_GRID,
};
use adaptkit::synth::zipf_corpus;

proptest! {
    #[test]
    fn selections_nest(scores in proptest::collection::vec(-5.0f64..5.0, 1..300)) {
        let mut prev: Option<HashSet<usize>> = None;
        for f in FRACTION_GRID.iter().copied().chain([0.5, 1.0]) {
            let sel = select_lowest(&scores, f).unwrap();
            prop_assert_eq!(sel.len(), selection_size(scores.len(), f).unwrap());
            prop_assert!(sel.windows(2).all(|w| w[0] < w[1]));
            let set: HashSet<usize> = sel.into_iter().collect();
            if let Some(p) = &prev {
                prop_assert!(p.is_subset(&set));
            }
            prev = Some(set);
        }
        prop_assert_eq!(prev.unwrap().len(), scores.len());
    }
}

#[test]
fn bad_fractions_are_rejected() {
    for f in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(select_lowest(&[1.0, 2.0], f).is_err());
    }
    assert_eq!(selection_size(1000, 0.10).unwrap(), 100);
}

#[test]
fn scores_do_not_depend_on_corpus_order() {
    let in_lm = lm::train(zipf_corpus(300, 50, 1), 3).unwrap();
    let out_lm = lm::train(zipf_corpus(300, 80, 2), 3).unwrap();
    let pool = zipf_corpus(200, 90, 3);
    let mut reversed = pool.clone();
    reversed.reverse();
    let a = score_monolingual(&pool, &in_lm, &out_lm);
    let b = score_monolingual(&reversed, &in_lm, &out_lm);
    for (i, s) in a.iter().enumerate() {
        assert_eq!(s.score, b[pool.len() - 1 - i].score);
    }
    let sel = select_fraction(&a, 0.1).unwrap();
    assert_eq!(
        sel,
        select_fraction(&score_monolingual(&pool, &in_lm, &out_lm), 0.1).unwrap()
    );
}
