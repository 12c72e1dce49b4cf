#![no_main]

use kgxk_core::explainer::parse_explanations;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(records) = parse_explanations(text) {
        for r in &records {
            assert!(r.validate().is_ok());
        }
    }
});
