mod support;

use std::collections::BTreeSet;

use lgg_core::annotate::Matcher;
use lgg_core::pathgen::DistinctIndices;
use lgg_core::{compile, enumerate, parse_grammar, sample, tokenize, unrank, CountedFst};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use support::random::{naive_paths, naive_texts, random_sources};

const MAX_PATHS: u64 = 10_000;

fn counted(seed: u64) -> Option<(support::random::RandomSources, CountedFst)> {
    let src = random_sources(seed);
    let rs = src.resource_set();
    let fst = compile(&rs, &src.root).ok()?;
    let cf = CountedFst::new(fst).unwrap();
    (cf.total() <= &BigUint::from(MAX_PATHS)).then_some((src, cf))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        for text in random_sources(seed).grammars {
            let g = parse_grammar(&text).unwrap();
            let again = parse_grammar(&g.to_lgg()).unwrap();
            prop_assert_eq!(&g, &again);
            prop_assert_eq!(g.to_lgg(), again.to_lgg());
        }
    }

    #[test]
    fn count_matches_enumeration_and_unrank(seed in any::<u64>()) {
        let Some((_, cf)) = counted(seed) else { return Ok(()) };
        let all: Vec<_> = enumerate(&cf, None).unwrap().collect();
        prop_assert_eq!(BigUint::from(all.len()), cf.total().clone());
        for (i, u) in all.iter().enumerate() {
            prop_assert_eq!(&u.path_index, &BigUint::from(i));
            prop_assert_eq!(&unrank(&cf, &BigUint::from(i)).unwrap(), u);
        }
        prop_assert!(unrank(&cf, cf.total()).is_err());
    }

    #[test]
    fn compiled_language_equals_naive_walk(seed in any::<u64>()) {
        let Some((src, cf)) = counted(seed) else { return Ok(()) };
        let rs = src.resource_set();
        let mut compiled: Vec<String> = enumerate(&cf, None).unwrap().map(|u| u.text).collect();
        compiled.sort();
        prop_assert_eq!(&compiled, &naive_texts(&rs, &src.root));
        let empties = naive_paths(&rs, &src.root).iter().filter(|p| p.is_empty()).count();
        prop_assert_eq!(cf.fst().dropped_empty_paths().clone(), BigUint::from(empties));
    }

    #[test]
    fn every_generated_utterance_is_fully_matched(seed in any::<u64>()) {
        let Some((_, cf)) = counted(seed) else { return Ok(()) };
        let m = Matcher::new("root", cf.fst());
        for u in enumerate(&cf, None).unwrap().take(300) {
            let tt = tokenize(&u.text);
            let found = m.match_longest(&tt);
            prop_assert_eq!(found.len(), 1, "{:?}", u.text);
            prop_assert_eq!((found[0].start, found[0].end), (0, tt.len()));
        }
    }

    #[test]
    fn ranges_slice_the_enumeration(seed in any::<u64>(), a in 0u64..200, len in 0u64..50) {
        let Some((_, cf)) = counted(seed) else { return Ok(()) };
        let total = cf.total().clone();
        let start = BigUint::from(a) % (&total + 1u32);
        let end = (&start + len).min(total);
        let all: Vec<_> = enumerate(&cf, None).unwrap().collect();
        let part: Vec<_> = enumerate(&cf, Some(start.clone()..end.clone())).unwrap().collect();
        let s: usize = start.try_into().unwrap();
        let e: usize = end.try_into().unwrap();
        prop_assert_eq!(&part[..], &all[s..e]);
    }

    #[test]
    fn distinct_sampling_has_no_duplicates(seed in any::<u64>(), n in 1usize..40) {
        let Some((_, cf)) = counted(seed) else { return Ok(()) };
        let total: usize = cf.total().try_into().unwrap();
        let n = n.min(total);
        let drawn = sample(&cf, n, seed, true).unwrap();
        let idx: BTreeSet<_> = drawn.iter().map(|u| u.path_index.clone()).collect();
        prop_assert_eq!(idx.len(), n);
        prop_assert_eq!(sample(&cf, n, seed, true).unwrap(), drawn);
    }

    #[test]
    fn distinct_indices_cover_everything(total in 1u32..300, seed in any::<u64>()) {
        let rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let got: BTreeSet<BigUint> = DistinctIndices::new(BigUint::from(total), rng).collect();
        prop_assert_eq!(got, (0..total).map(BigUint::from).collect::<BTreeSet<_>>());
    }
}

#[test]
fn generator_is_not_trivial() {
    let mut totals = Vec::new();
    let mut calls = 0;
    for seed in 0..200u64 {
        if let Some((src, cf)) = counted(seed) {
            totals.push(cf.total().clone());
            calls += src.grammars.iter().filter(|g| g.contains(":G")).count();
        }
    }
    assert!(totals.len() > 150, "{}", totals.len());
    assert!(totals.iter().filter(|t| **t > BigUint::from(20u32)).count() > 30);
    assert!(calls > 20);
}
