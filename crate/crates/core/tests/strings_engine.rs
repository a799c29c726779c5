use hds_core::engine::reference_outputs;
use hds_core::strings::{
    ham_array, hamming_distance, mismatch_counts_fast, mismatch_counts_naive, sliding_mismatch_counts,
    sliding_mismatch_counts_fast,
};
use hds_core::{Alphabet, BackendKind, CellStore, MemoryStore, OfflineCounter, StreamEngine, SymbolString};
use proptest::prelude::*;

const BACKENDS: [BackendKind; 3] = [
    BackendKind::Naive,
    BackendKind::Blackbox(OfflineCounter::Convolution),
    BackendKind::Blackbox(OfflineCounter::Naive),
];

fn string(delta: u32, symbols: Vec<u32>) -> SymbolString {
    let a = Alphabet::new(delta).unwrap();
    SymbolString::new(a, symbols.into_iter().map(|s| s & a.max_symbol()).collect()).unwrap()
}

fn window_text() -> impl Strategy<Value = (u32, Vec<u32>, Vec<u32>)> {
    (1u32..=8, 1usize..=300, 0usize..=600).prop_flat_map(|(delta, m, extra)| {
        let sym = 0u32..(1 << delta.min(3));
        (Just(delta), prop::collection::vec(sym.clone(), m), prop::collection::vec(sym, m + extra))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fast_counts_match_naive((delta, p, t) in window_text()) {
        let (p, t) = (string(delta, p), string(delta, t));
        prop_assert_eq!(sliding_mismatch_counts_fast(&p, &t).unwrap(), sliding_mismatch_counts(&p, &t).unwrap());
    }

    #[test]
    fn wide_alphabets_match_naive(p in prop::collection::vec(0u32..1000, 1..200), t in prop::collection::vec(0u32..1000, 200..400)) {
        prop_assert_eq!(mismatch_counts_fast(&p, &t), mismatch_counts_naive(&p, &t));
    }

    #[test]
    fn hamming_is_a_metric(a in prop::collection::vec(0u32..4, 40), b in prop::collection::vec(0u32..4, 40), c in prop::collection::vec(0u32..4, 40)) {
        let (a, b, c) = (string(2, a), string(2, b), string(2, c));
        let ab = hamming_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, hamming_distance(&b, &a).unwrap());
        prop_assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        prop_assert!(hamming_distance(&a, &c).unwrap() <= ab + hamming_distance(&b, &c).unwrap());
    }

    #[test]
    fn ham_array_is_windowed_distance(s1 in prop::collection::vec(0u32..8, 1..60), seed in prop::collection::vec(0u32..8, 120)) {
        let s2 = string(3, seed[..2 * s1.len()].to_vec());
        let s1 = string(3, s1);
        let arr = ham_array(&s1, &s2).unwrap();
        prop_assert_eq!(arr.len(), s1.len() + 1);
        for (k, &d) in arr.iter().enumerate() {
            prop_assert_eq!(d, hamming_distance(&s1, &s2.substring(k, s1.len()).unwrap()).unwrap());
        }
    }

    #[test]
    fn backends_match_definition(
        delta in 1u32..=8,
        f in prop::collection::vec(any::<u32>(), 1..150),
        u in prop::collection::vec(any::<u32>(), 0..400),
    ) {
        let f = string(delta, f);
        let u = string(delta, u);
        let expected = reference_outputs(&f, &u);
        for backend in BACKENDS {
            let mut engine = StreamEngine::new(f.clone(), backend, MemoryStore::native(32).unwrap()).unwrap();
            let got = engine.run_sequence(&u).unwrap();
            prop_assert_eq!(got.as_slice(), expected.as_slice());
        }
    }

    #[test]
    fn instrumentation_is_transparent(f in prop::collection::vec(0u32..4, 1..80), u in prop::collection::vec(0u32..4, 0..200)) {
        let (f, u) = (string(2, f), string(2, u));
        for backend in BACKENDS {
            let mut plain = StreamEngine::new(f.clone(), backend, MemoryStore::native(16).unwrap()).unwrap();
            let mut logged = StreamEngine::new(f.clone(), backend, MemoryStore::instrumented(16).unwrap()).unwrap();
            prop_assert_eq!(plain.run_sequence(&u).unwrap(), logged.run_sequence(&u).unwrap());
            let mut store = logged.into_store();
            prop_assert_eq!(plain.store().probes(), store.take_log(u.len() as u64).records.len() as u64);
        }
    }
}
