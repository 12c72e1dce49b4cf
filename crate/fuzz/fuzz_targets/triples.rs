#![no_main]

use std::path::Path;

use kgxk_core::kg::parse_triples;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok((triples, vocab)) = parse_triples(text, Path::new("fuzz"), None) {
        for t in &triples {
            assert!((t.head as usize) < vocab.num_entities());
            assert!((t.tail as usize) < vocab.num_entities());
            assert!((t.relation as usize) < vocab.num_relations());
        }
        let again = parse_triples(text, Path::new("fuzz"), Some(&vocab)).unwrap();
        assert_eq!(again.0, triples);
    }
});
