use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kgxk_cli::Manifest;
use tempfile::TempDir;

const CONFIG: &str = r#"
budgets = [3, 6]
query_relations = ["target_0", "target_1", "target_2"]
max_train_queries = 24
max_eval_queries = 6

[backbone]
embed_dim = 8
num_layers = 2

[train]
epochs = 3

[fine_tune]
epochs = 1

[explainer]
hidden = [8]
epochs = 2

[instance]
steps = 10

[ppr]
beta_in = 0.1
beta_out = 0.01

[synthetic]
num_entities = 120
instances_per_rule = 12
noise_triples = 60
"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(ws.config(), CONFIG).unwrap();
        let out = ws.run(&["prepare", "--synthetic"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ws
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("run.toml")
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn data(&self) -> PathBuf {
        self.out().join("prepare-seed0").join("data")
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_kgxk"))
            .arg("--config")
            .arg(self.config())
            .arg("--out")
            .arg(self.out())
            .arg("--dataset")
            .arg(self.data())
            .args(args)
            .env_remove("KGXK_OUT")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> PathBuf {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn jsonl(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn protocol_metrics_are_byte_identical_across_runs() {
    let ws = Workspace::new();
    let a = ws.ok(&["protocol", "--budgets", "2,4", "--seed", "7", "--run-id", "a"]);
    let b = ws.ok(&["protocol", "--budgets", "2,4", "--seed", "7", "--run-id", "b"]);
    let ma = fs::read(a.join("metrics.csv")).unwrap();
    assert_eq!(ma, fs::read(b.join("metrics.csv")).unwrap());
    let text = String::from_utf8(ma).unwrap();
    assert!(text.starts_with("explainer,budget,mrr,hits1,hits3,hits10,components\n"));
    assert!(text.contains("\nraw,4,"));
    let m = Manifest::read(&a.join("manifest.json")).unwrap();
    assert_eq!((m.seed, m.config.explainer.seed, m.config.budgets.clone()), (7, 7, vec![2, 4]));
}

#[test]
fn explain_query_respects_budget() {
    let ws = Workspace::new();
    ws.ok(&["train-evaluator"]);
    ws.ok(&["train-explainer"]);
    let dir = ws.ok(&["explain", "--query", "e1,target_0", "--budget", "4"]);
    let records = jsonl(&dir.join("explanations.jsonl"));
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["query"]["head"], "e1");
    assert_eq!(records[0]["query"]["relation"], "target_0");
    assert!(records[0]["edges"].as_array().unwrap().len() <= 4);

    let dir = ws.ok(&["explain", "--split", "test", "--limit", "3", "--budget", "2", "--run-id", "split"]);
    let records = jsonl(&dir.join("explanations.jsonl"));
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r["edges"].as_array().unwrap().len() <= 2));

    let eval = ws.ok(&["evaluate", "--explanations", dir.join("explanations.jsonl").to_str().unwrap(), "--model", ws.out().join("train-evaluator-seed0/evaluator.json").to_str().unwrap()]);
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(eval.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["queries"], 3);
}

#[test]
fn report_has_one_row_per_explainer_and_budget() {
    let ws = Workspace::new();
    ws.ok(&["protocol", "--explainers", "full,empty,raw,instance_mask"]);
    let dir = ws.ok(&["report"]);
    let text = fs::read_to_string(dir.join("report.csv")).unwrap();
    let keys: Vec<(String, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_owned(), f[1].to_owned())
        })
        .collect();
    let expected: Vec<(String, String)> = [
        ("full", "inf"),
        ("empty", "inf"),
        ("raw", "3"),
        ("raw", "6"),
        ("instance_mask", "3"),
        ("instance_mask", "6"),
    ]
    .iter()
    .map(|(a, b)| ((*a).to_owned(), (*b).to_owned()))
    .collect();
    assert_eq!(keys, expected);
    let wide = fs::read_to_string(dir.join("report_mrr.csv")).unwrap();
    assert!(wide.starts_with("explainer,k=3,k=6\n"));
    assert_eq!(wide.lines().count(), 5);
}

#[test]
fn manifest_records_inputs_and_outputs() {
    let ws = Workspace::new();
    let dir = ws.ok(&["train-backbone", "--run-id", "bb"]);
    let m = Manifest::read(&dir.join("manifest.json")).unwrap();
    assert_eq!(m.command, "train-backbone");
    assert_eq!(m.run_id, "bb");
    assert_eq!(m.outputs, vec!["backbone.json"]);
    assert_eq!(m.inputs, vec![ws.data()]);
    assert!(m.version.starts_with(env!("CARGO_PKG_VERSION")));
    assert!(dir.starts_with(ws.out()));
}

#[test]
fn exit_codes_and_error_prefix() {
    let ws = Workspace::new();

    let usage = ws.run(&["no-such-command"]);
    assert_eq!(code(&usage), 1);
    assert!(stderr(&usage).starts_with("ERROR 1: "));

    let bad_query = ws.run(&["explain", "--query", "e1"]);
    assert_eq!(code(&bad_query), 1);

    let missing = ws.run(&["evaluate", "--model", "missing.json"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).starts_with("ERROR 2: "));
    assert_eq!(stderr(&missing).lines().count(), 1);

    fs::write(ws.config(), format!("{CONFIG}\nunknown_key = 1\n")).unwrap();
    let unknown = ws.run(&["train-backbone"]);
    assert_eq!(code(&unknown), 2);
    assert!(stderr(&unknown).contains("unknown_key"));

    fs::write(ws.config(), format!("{CONFIG}\n[train]\nlearning_rate = 1e300\n").replace("[train]\nepochs = 3\n", "")).unwrap();
    let diverged = ws.run(&["train-backbone"]);
    assert_eq!(code(&diverged), 3, "{}", stderr(&diverged));
    assert!(stderr(&diverged).starts_with("ERROR 3: "));
}

#[test]
fn prepare_leaves_input_dataset_untouched() {
    let ws = Workspace::new();
    let before: Vec<Vec<u8>> = ["train.txt", "valid.txt", "test.txt"]
        .iter()
        .map(|f| fs::read(ws.data().join(f)).unwrap())
        .collect();
    let dir = ws.ok(&["prepare", "--run-id", "check"]);
    let stats = |d: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(d.join("stats.json")).unwrap()).unwrap()
    };
    assert_eq!(stats(&dir), stats(&ws.out().join("prepare-seed0")));
    for (f, b) in ["train.txt", "valid.txt", "test.txt"].iter().zip(before) {
        assert_eq!(fs::read(ws.data().join(f)).unwrap(), b);
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(kgxk_cli::run(["kgxk", "--version"]), 0);
    assert_eq!(kgxk_cli::run(["kgxk", "--help"]), 0);
}
