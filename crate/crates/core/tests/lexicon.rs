use std::collections::BTreeSet;

use asrkit_core::lexicon::{spell, top_words, Lexicon, ROOT};
use proptest::prelude::*;

fn alphabet() -> BTreeSet<String> {
    "abcde".chars().map(String::from).collect()
}

fn word_list() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,5}", 1..20)
}

#[test]
fn top_k_is_exact_on_known_frequencies() {
    let corpus = "x x x x y y y z z w v v".split(' ');
    assert_eq!(top_words(corpus.clone(), 2), ["x", "y"]);
    // z and v tie at two; lexicographic order decides
    assert_eq!(top_words(corpus, 3), ["x", "y", "v"]);
}

#[test]
fn half_overlap_oov_rate() {
    let (lex, _) = Lexicon::build(["ab", "cd"], &alphabet()).unwrap();
    assert_eq!(lex.oov_rate(["ab", "cd", "ee", "ea"]), 0.5);
}

proptest! {
    #[test]
    fn trie_reconstructs_entries(words in word_list()) {
        let (lex, dropped) = Lexicon::build(&words, &alphabet()).unwrap();
        prop_assert!(dropped.is_empty());
        let expected: BTreeSet<(String, Vec<String>)> = words.iter().map(|w| (w.clone(), spell(w))).collect();
        prop_assert_eq!(lex.reconstruct(), expected);
    }

    #[test]
    fn lookup_finds_own_id_and_nothing_else(words in word_list(), probe in "[a-e]{1,5}") {
        let (lex, _) = Lexicon::build(&words, &alphabet()).unwrap();
        for id in 0..lex.len() as u32 {
            let spelling: Vec<&str> = lex.spelling(id).collect();
            prop_assert!(lex.lookup(&spelling).contains(&id));
        }
        let ids = lex.lookup(&spell(&probe));
        prop_assert_eq!(!ids.is_empty(), words.contains(&probe));
        prop_assert!(lex.walk::<&str>(&[]) == Some(ROOT));
    }

    #[test]
    fn characters_outside_the_vocabulary_drop_the_word(words in prop::collection::vec("[a-g]{1,4}", 1..15)) {
        let kept: Vec<&String> = words.iter().filter(|w| w.chars().all(|c| c <= 'e')).collect();
        match Lexicon::build(&words, &alphabet()) {
            Ok((lex, dropped)) => {
                let kept_set: BTreeSet<&str> = kept.iter().map(|w| w.as_str()).collect();
                prop_assert_eq!(lex.len(), kept_set.len());
                let dropped_set: BTreeSet<&str> = dropped.iter().map(|d| d.word.as_str()).collect();
                prop_assert!(dropped_set.iter().all(|w| !kept_set.contains(w)));
                for (_, s) in lex.entries() {
                    prop_assert!(s.iter().all(|c| alphabet().contains(*c)));
                }
            }
            Err(_) => prop_assert!(kept.is_empty()),
        }
    }

    #[test]
    fn augmentation_is_monotone_in_k(base in word_list(), corpus in prop::collection::vec("[a-e]{1,3}", 0..40), k1 in 0usize..10, dk in 0usize..10) {
        let (lex, _) = Lexicon::build(&base, &alphabet()).unwrap();
        let small: BTreeSet<String> = lex.augment(&corpus, k1).words().iter().cloned().collect();
        let large: BTreeSet<String> = lex.augment(&corpus, k1 + dk).words().iter().cloned().collect();
        prop_assert!(small.is_subset(&large));
    }
}
