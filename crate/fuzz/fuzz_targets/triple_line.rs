#![no_main]

use kgxk_core::kg::parse_triple_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|line: &str| {
    if let Ok((h, r, t)) = parse_triple_line(line) {
        assert!(!h.trim().is_empty() && !r.trim().is_empty() && !t.trim().is_empty());
    }
});
