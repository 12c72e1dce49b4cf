use std::fs;
use std::path::{Path, PathBuf};

use kgxk_cli::config::RunConfig;
use kgxk_core::explainer::{parse_explanations, MaskNet};
use kgxk_core::kg::{parse_query_spec, parse_triple_line, parse_triples};
use kgxk_core::model::parse_checkpoint;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn outcomes<T, E>(target: &str, f: impl Fn(&str) -> Result<T, E>) -> Vec<bool> {
    seeds(target).iter().map(|(_, text)| f(text).is_ok()).collect()
}

#[test]
fn corpus_seeds_cover_accept_and_reject_paths() {
    let checks = [
        ("triple_line", outcomes("triple_line", |s| parse_triple_line(s.trim_end_matches('\n')).map(|_| ()))),
        ("triples", outcomes("triples", |s| parse_triples(s, Path::new("seed"), None).map(|_| ()))),
        ("query_spec", outcomes("query_spec", |s| parse_query_spec(s).map(|_| ()))),
        ("run_config", outcomes("run_config", |s| RunConfig::parse(s).and_then(|c| c.validate()))),
        ("checkpoint", outcomes("checkpoint", |s| parse_checkpoint(s).map(|_| ()))),
        ("mask_net", outcomes("mask_net", |s| MaskNet::from_json(s).map(|_| ()))),
        ("explanations", outcomes("explanations", |s| parse_explanations(s).map(|_| ()))),
    ];
    for (target, results) in checks {
        assert!(results.iter().any(|&ok| ok), "{target}: every seed rejected");
        assert!(results.iter().any(|&ok| !ok), "{target}: every seed accepted");
    }
}
