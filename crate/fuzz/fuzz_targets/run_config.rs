#![no_main]

use kgxk_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = RunConfig::parse(text) {
        let _ = cfg.validate();
        let back = RunConfig::parse(&cfg.to_toml()).expect("serialized config parses");
        assert_eq!(back.budgets, cfg.budgets);
    }
});
