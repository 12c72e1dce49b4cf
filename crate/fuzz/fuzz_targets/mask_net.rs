#![no_main]

use kgxk_core::explainer::MaskNet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(net) = MaskNet::from_json(text) {
        assert!(net.validate().is_ok());
    }
});
