use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use vulnfuzz::formats::{load_checkpoint, save_checkpoint, svs_from_json};
use vulnfuzz_core::gnn::{init_params, Init};
use vulnfuzz_core::{Hyperparams, ModelParams};

fn vulnfuzz(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vulnfuzz")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vulnfuzz(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    vulnfuzz(dir, args).status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const GEN_DATA: &[&str] = &["gen-data", "--out-train", "train.jsonl", "--out-test", "test.jsonl", "--count", "60", "--seed", "5"];

#[test]
fn gen_data_is_reproducible_and_has_manifests() {
    let d = TempDir::new().unwrap();
    ok(d.path(), GEN_DATA);
    let first = fs::read(d.path().join("train.jsonl")).unwrap();
    let test = fs::read_to_string(d.path().join("test.jsonl")).unwrap();
    ok(d.path(), GEN_DATA);
    assert_eq!(first, fs::read(d.path().join("train.jsonl")).unwrap());
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count() + test.lines().count(), 60);

    let m = json(&d.path().join("train.jsonl.manifest.json"));
    assert_eq!(m["command"], "gen-data");
    assert_eq!(m["seeds"]["seed"], 5);
    assert_eq!(m["flags"]["count"], 60);
    assert!(m["version"].is_string());
}

#[test]
fn gen_data_usage_errors() {
    let d = TempDir::new().unwrap();
    let base = ["gen-data", "--out-train", "a", "--out-test", "b"];
    assert_eq!(code(d.path(), &[&base[..], &["--train-frac", "1.5"]].concat()), 2);
    let out = vulnfuzz(d.path(), &[&base[..], &["--count", "0"]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty corpus requested"));
    assert!(!d.path().join("a").exists());
}

fn train_args<'a>(epochs: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--corpus", "train.jsonl", "--test", "test.jsonl", "--dim", "4", "--depth", "1", "--iters", "2",
        "--epochs", epochs, "--seed", "3", "--out", out,
    ]
}

#[test]
fn zero_epochs_leaves_initialization() {
    let d = TempDir::new().unwrap();
    ok(d.path(), GEN_DATA);
    ok(d.path(), &train_args("0", "ck.json"));
    let ck = load_checkpoint(&fs::read_to_string(d.path().join("ck.json")).unwrap()).unwrap();
    let hyper = Hyperparams { attr_dim: ck.attr_dim, embed_dim: 4, depth: 1, iterations: 2, rng_seed: 3, ..Hyperparams::desk() };
    assert_eq!(ck.params, init_params(&hyper).unwrap());

    let metrics = json(&d.path().join("ck.json.metrics.json"));
    assert!(metrics["accuracy_at_k"].as_object().unwrap().contains_key("10"));
    assert_eq!(metrics["loss_trace"].as_array().unwrap().len(), 0);
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let d = TempDir::new().unwrap();
    ok(d.path(), GEN_DATA);
    ok(d.path(), &train_args("4", "full.json"));
    ok(d.path(), &train_args("2", "half.json"));
    let mut resume = train_args("4", "resumed.json");
    resume.extend(["--resume", "half.json"]);
    ok(d.path(), &resume);
    assert_eq!(fs::read(d.path().join("full.json")).unwrap(), fs::read(d.path().join("resumed.json")).unwrap());
}

#[test]
fn train_rejects_bad_corpus() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("bad.jsonl"), "{\"label\": 0, \"graph\": 3}\n").unwrap();
    assert_eq!(code(d.path(), &["train", "--corpus", "bad.jsonl", "--out", "ck.json"]), 3);
    assert_eq!(code(d.path(), &["train", "--corpus", "missing.jsonl", "--out", "ck.json"]), 3);
}

const PROGRAM: &str = "\
program three
fn main
block 0:
  call helper
  jif 0 'A' 1 2
block 1:
  call sink
  halt
block 2:
  halt
fn helper
block 0:
  nop
  ret
fn sink
block 0:
  bug 1 assert 1='B'
  ret
";

fn zero_checkpoint(dir: &Path) {
    let hyper = Hyperparams { embed_dim: 4, depth: 2, iterations: 2, ..Hyperparams::default() };
    let params = ModelParams::init(&hyper, Init::Zero).unwrap();
    fs::write(dir.join("zero.json"), save_checkpoint(&params, hyper.iterations, None)).unwrap();
}

#[test]
fn zero_checkpoint_predicts_one_half() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("p.vm"), PROGRAM).unwrap();
    zero_checkpoint(d.path());
    let stdout = ok(d.path(), &["predict", "--target", "p.vm", "--checkpoint", "zero.json", "--out", "svs.json"]);
    assert_eq!(stdout.lines().count(), 1 + 3);
    let svs = svs_from_json(&fs::read_to_string(d.path().join("svs.json")).unwrap()).unwrap();
    assert_eq!(svs.functions().len(), 3);
    for f in svs.functions() {
        assert_eq!(f.p, 0.5);
        assert!(f.blocks.iter().all(|&(_, s)| s == 10.1));
    }
    assert!(d.path().join("svs.json.manifest.json").exists());
}

#[test]
fn oracle_scores_use_supplied_probabilities() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("p.vm"), PROGRAM).unwrap();
    fs::write(d.path().join("truth.json"), r#"{"bugs": [{"id": 1, "function": "sink", "trigger_input_hex": "4142"}]}"#)
        .unwrap();
    ok(d.path(), &["predict", "--target", "p.vm", "--oracle-svs", "truth.json", "--oracle-p-vuln", "0.75", "--out", "svs.json"]);
    let svs = svs_from_json(&fs::read_to_string(d.path().join("svs.json")).unwrap()).unwrap();
    assert_eq!(svs.function("sink").unwrap().p, 0.75);
    assert_eq!(svs.function("main").unwrap().p, 0.05);
    assert_eq!(svs.score("sink", 0), Some(20.0 * 0.75 + 0.1));
}

#[test]
fn predict_rejects_mismatched_checkpoint() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("p.vm"), PROGRAM).unwrap();
    let hyper = Hyperparams { attr_dim: 7, embed_dim: 2, depth: 1, iterations: 1, ..Hyperparams::default() };
    fs::write(d.path().join("small.json"), save_checkpoint(&init_params(&hyper).unwrap(), 1, None)).unwrap();
    assert_eq!(code(d.path(), &["predict", "--target", "p.vm", "--checkpoint", "small.json", "--out", "s.json"]), 3);
    fs::write(d.path().join("broken.vm"), "fn main\nblock 0:\n  jmp 9\n").unwrap();
    zero_checkpoint(d.path());
    assert_eq!(code(d.path(), &["predict", "--target", "broken.vm", "--checkpoint", "zero.json", "--out", "s.json"]), 3);
    assert_eq!(code(d.path(), &["predict", "--target", "p.vm", "--out", "s.json"]), 2);
}

fn fuzz_setup(dir: &Path, trigger: bool) {
    fs::write(dir.join("p.vm"), PROGRAM).unwrap();
    fs::create_dir_all(dir.join("seeds")).unwrap();
    fs::write(dir.join("seeds/a"), b"xx").unwrap();
    if trigger {
        fs::write(dir.join("seeds/b"), b"AB").unwrap();
    }
    zero_checkpoint(dir);
    ok(dir, &["predict", "--target", "p.vm", "--checkpoint", "zero.json", "--out", "svs.json"]);
}

fn fuzz<'a>(out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "fuzz", "--target", "p.vm", "--seeds-dir", "seeds", "--svs", "svs.json", "--pop", "20", "--topk", "4",
        "--budget-execs", "2000", "--seed", seed, "--out", out,
    ]
}

#[test]
fn triggering_seed_crashes_in_first_generation() {
    let d = TempDir::new().unwrap();
    fuzz_setup(d.path(), true);
    ok(d.path(), &fuzz("run", "1"));
    let r = json(&d.path().join("run/report.json"));
    assert_eq!(r["generations"][0]["unique_crashes"], 1);
    assert_eq!(r["first_crash_exec"], 2);
    assert_eq!(r["crashes_found"], true);
    assert_eq!(r["crash_catalog"][0]["function"], "sink");
    assert_eq!(r["crash_catalog"][0]["bug_id"], 1);
    let m = json(&d.path().join("run/manifest.json"));
    assert_eq!(m["seeds"]["seed"], 1);
    assert_eq!(m["flags"]["pool_capacity"], 16);

    let csv = fs::read_to_string(d.path().join("run/timeseries.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("generation,executions,unique_crashes,covered_blocks,CW,MS"));
    assert_eq!(csv.lines().nth(1), Some("0,2,1,5,16,slight"));
}

#[test]
fn same_flags_give_identical_outputs() {
    let d = TempDir::new().unwrap();
    fuzz_setup(d.path(), false);
    ok(d.path(), &fuzz("one", "9"));
    ok(d.path(), &fuzz("two", "9"));
    let mut parallel = fuzz("three", "9");
    parallel.extend(["--jobs", "3"]);
    ok(d.path(), &parallel);
    let csv = fs::read(d.path().join("one/timeseries.csv")).unwrap();
    assert_eq!(csv, fs::read(d.path().join("two/timeseries.csv")).unwrap());
    assert_eq!(csv, fs::read(d.path().join("three/timeseries.csv")).unwrap());
    let (a, b) = (json(&d.path().join("one/report.json")), json(&d.path().join("three/report.json")));
    assert_eq!(a["pool"], b["pool"]);
    assert_eq!(a["crash_catalog"], b["crash_catalog"]);
}

#[test]
fn fuzz_configuration_errors() {
    let d = TempDir::new().unwrap();
    fuzz_setup(d.path(), false);
    let base = ["fuzz", "--target", "p.vm", "--seeds-dir", "seeds", "--out", "x"];
    assert_eq!(code(d.path(), &base), 2);
    assert_eq!(code(d.path(), &[&base[..], &["--coverage-mode", "--pop", "2", "--topk", "3"]].concat()), 2);
    assert_eq!(code(d.path(), &[&base[..], &["--coverage-mode", "--ini-cw", "100"]].concat()), 2);

    fs::write(d.path().join("other.vm"), "fn main\nblock 0:\n  call extra\n  halt\nfn extra\nblock 0:\n  ret\n").unwrap();
    let other = ["fuzz", "--target", "other.vm", "--seeds-dir", "seeds", "--svs", "svs.json", "--out", "x"];
    assert_eq!(code(d.path(), &other), 3);
    fs::create_dir_all(d.path().join("empty")).unwrap();
    let empty = ["fuzz", "--target", "p.vm", "--seeds-dir", "empty", "--coverage-mode", "--out", "x"];
    assert_eq!(code(d.path(), &empty), 3);
    assert!(!d.path().join("x").exists());
}

#[test]
fn require_crash_sets_exit_status() {
    let d = TempDir::new().unwrap();
    fuzz_setup(d.path(), false);
    let args = ["fuzz", "--target", "p.vm", "--seeds-dir", "seeds", "--coverage-mode", "--budget-execs", "60", "--out", "r"];
    assert_eq!(code(d.path(), &args), 0);
    assert_eq!(json(&d.path().join("r/report.json"))["crashes_found"], false);
    assert_eq!(code(d.path(), &[&args[..], &["--require-crash"]].concat()), 1);
}

#[test]
fn report_and_compare() {
    let d = TempDir::new().unwrap();
    fuzz_setup(d.path(), false);
    for s in ["1", "2", "3"] {
        ok(d.path(), &fuzz(&format!("a/{s}"), s));
    }
    let text = ok(d.path(), &["report", "--input", "a/1/report.json", "--out", "summary.json"]);
    assert!(text.contains("fitness_mode\tsvs_sum"));
    assert_eq!(json(&d.path().join("summary.json"))["rng_seed"], 1);

    ok(d.path(), &["compare", "--a", "a", "--b", "a", "--out", "same.json"]);
    let same = json(&d.path().join("same.json"));
    for m in ["exec_to_first_crash", "unique_crashes", "covered_blocks"] {
        assert_eq!(same[m]["delta"], 0.0);
        assert_eq!(same[m]["winner"], "tie");
    }
    assert_eq!(same["a"]["trials"], 3);

    ok(d.path(), &fuzz("b/1", "1"));
    assert_eq!(code(d.path(), &["compare", "--a", "a", "--b", "b", "--out", "c.json"]), 3);
    fs::create_dir_all(d.path().join("none")).unwrap();
    assert_eq!(code(d.path(), &["compare", "--a", "a", "--b", "none", "--out", "c.json"]), 3);
}

#[test]
fn gen_target_writes_program_truth_and_seeds() {
    let d = TempDir::new().unwrap();
    let args = [
        "gen-target", "--out", "t.vm", "--truth", "truth.json", "--bug", "2:div_zero:2", "--seed", "8", "--seeds-out", "s",
    ];
    ok(d.path(), &args);
    let first = fs::read(d.path().join("t.vm")).unwrap();
    ok(d.path(), &args);
    assert_eq!(first, fs::read(d.path().join("t.vm")).unwrap());
    let truth = json(&d.path().join("truth.json"));
    assert_eq!(truth["bugs"][0]["function"], "fn_2");
    assert_eq!(truth["bugs"][0]["kind"], "div_zero");
    assert!(d.path().join("s/zero.bin").exists() && d.path().join("s/near_miss_1.bin").exists());
    assert_eq!(code(d.path(), &["gen-target", "--out", "t.vm", "--truth", "x.json", "--bug", "9:assert:1"]), 2);
    assert_eq!(code(d.path(), &["gen-target", "--out", "t.vm", "--truth", "x.json", "--bug", "1:nonsense:1"]), 2);
}
