#![no_main]

use kgxk_core::kg::parse_query_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_query_spec(text);
});
