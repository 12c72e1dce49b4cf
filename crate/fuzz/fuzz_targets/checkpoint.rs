#![no_main]

use kgxk_core::model::parse_checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_checkpoint(text);
});
