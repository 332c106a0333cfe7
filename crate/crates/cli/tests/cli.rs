//! End-to-end runs of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use spatial_grpo::grpo::Checkpoint;
use spatial_grpo::QAItem;
use spatial_grpo_cli::commands::initial_policy;
use spatial_grpo_cli::RunConfig;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-grpo")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn qa_items(p: &Path) -> Vec<QAItem> {
    read(p).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// Generated and flipped data in `root/data`.
fn dataset(root: &Path, count: usize) -> PathBuf {
    let data = root.join("data");
    ok(&["gen-data", "--count", &count.to_string(), "--seed", "0", "--out", s(&data)]);
    ok(&["flip", "--data", s(&data)]);
    data
}

fn train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let qa = data.join("qa.jsonl");
    let qf = data.join("qa_flipped.jsonl");
    let mut args = vec!["train", "--data", s(&qa), "--flipped-data", s(&qf), "--out", s(out)];
    args.extend_from_slice(extra);
    ok(&args)
}

fn eval_preds(preds: &Path, data: &Path, out: &Path) -> Value {
    ok(&["eval", "--preds", s(preds), "--data", s(&data.join("qa.jsonl")), "--out-dir", s(out)]);
    serde_json::from_str(&read(&out.join("report.json"))).unwrap()
}

fn write_preds(path: &Path, items: &[QAItem], answer: impl Fn(&QAItem) -> String) {
    let lines: Vec<String> = items
        .iter()
        .map(|q| serde_json::json!({ "qa_id": q.qa_id, "output": format!("<think>ok</think> <answer>{}</answer>", answer(q)) }).to_string() + "\n")
        .collect();
    std::fs::write(path, lines.concat()).unwrap();
}

#[test]
fn zero_count_writes_valid_empty_files_and_seed_is_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let empty = t.path().join("empty");
    ok(&["gen-data", "--count", "0", "--out", s(&empty)]);
    assert_eq!(read(&empty.join("qa.jsonl")), "");
    assert_eq!(read(&empty.join("scenes.jsonl")), "");

    let (a, b) = (t.path().join("a"), t.path().join("b"));
    ok(&["gen-data", "--count", "40", "--seed", "3", "--out", s(&a)]);
    ok(&["gen-data", "--count", "40", "--seed", "3", "--out", s(&b)]);
    for f in ["qa.jsonl", "scenes.jsonl"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)));
    }
    assert_eq!(qa_items(&a.join("qa.jsonl")).len(), 40);
}

#[test]
fn corrupt_line_is_a_hard_error_naming_the_line() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 10);
    let qa = data.join("qa.jsonl");
    let mut lines: Vec<String> = read(&qa).lines().map(str::to_string).collect();
    lines[3] = "{not json".into();
    std::fs::write(&qa, lines.join("\n") + "\n").unwrap();
    let out = run(&["flip", "--data", s(&data), "--out", s(&t.path().join("x"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn mock_llm_flip_matches_rule_based() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("data");
    ok(&["gen-data", "--count", "120", "--out", s(&data)]);
    let (r, l) = (t.path().join("rule"), t.path().join("llm"));
    ok(&["flip", "--data", s(&data), "--out", s(&r), "--mode", "rule-based"]);
    ok(&["flip", "--data", s(&data), "--out", s(&l), "--mode", "llm"]);
    for f in ["qa_flipped.jsonl", "scenes_flipped.jsonl"] {
        assert_eq!(read(&r.join(f)), read(&l.join(f)), "{f}");
    }
    let v: Value = serde_json::from_str(&read(&l.join("verification_report.json"))).unwrap();
    assert_eq!(v["failed"], 0);
    assert_eq!(v["passed"], 120);
}

#[test]
fn zero_steps_checkpoint_is_the_initialization() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 30);
    let out = t.path().join("out");
    train(&data, &out, &["--steps", "0", "--seed", "5"]);
    let c = Checkpoint::from_json(&read(&out.join("checkpoint.json"))).unwrap();
    assert_eq!(c.step, 0);
    let mut cfg = RunConfig::default();
    cfg.train.seed = 5;
    let init = initial_policy(&cfg);
    assert_eq!(c.theta.values().unwrap(), init.theta);
    assert_eq!(c.reference.values().unwrap(), init.theta);
    assert_eq!(read(&out.join("train_log.jsonl")), "");
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 60);
    let full = t.path().join("full");
    train(&data, &full, &["--steps", "12", "--checkpoint-every", "6"]);
    let resumed = t.path().join("resumed");
    let mid = full.join("checkpoint_000006.json");
    train(&data, &resumed, &["--steps", "12", "--checkpoint-every", "6", "--resume", s(&mid)]);

    let a: Vec<String> = read(&full.join("train_log.jsonl")).lines().map(str::to_string).collect();
    let b: Vec<String> = read(&resumed.join("train_log.jsonl")).lines().map(str::to_string).collect();
    assert_eq!(a.len(), 12);
    assert_eq!(&a[6..], &b[..]);
    assert_eq!(read(&full.join("checkpoint.json")), read(&resumed.join("checkpoint.json")));
    assert_eq!(read(&full.join("preds.jsonl")), read(&resumed.join("preds.jsonl")));

    // Resuming in place keeps the earlier lines.
    let copy = t.path().join("copy");
    std::fs::create_dir_all(&copy).unwrap();
    let head: String = a[..6].iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(copy.join("train_log.jsonl"), head).unwrap();
    train(&data, &copy, &["--steps", "12", "--checkpoint-every", "6", "--resume", s(&mid)]);
    assert_eq!(read(&copy.join("train_log.jsonl")), read(&full.join("train_log.jsonl")));
}

#[test]
fn oracle_predictions_score_perfectly() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 200);
    let items = qa_items(&data.join("qa.jsonl"));
    let preds = t.path().join("oracle.jsonl");
    write_preds(&preds, &items, |q| q.reference_answer.clone());
    let r = eval_preds(&preds, &data, &t.path().join("out"));
    assert_eq!(r["counts"]["records"], 200);
    for (block, key) in [
        ("numeric", "success_rate"),
        ("numeric", "samples_completed"),
        ("open_ended", "bleu1"),
        ("open_ended", "yes_no_acc"),
        ("open_ended", "distance_acc"),
        ("open_ended", "bbox_miou"),
        ("open_ended", "bbox_acc_075"),
        ("open_ended", "sbert"),
    ] {
        let v = r[block][key].as_f64().unwrap_or_else(|| panic!("{key} missing"));
        assert!((v - 100.0).abs() < 1e-9, "{key} = {v}");
    }
    assert_eq!(r["numeric"]["smape"].as_f64(), Some(0.0));
}

#[test]
fn constant_yes_scores_the_positive_base_rate() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 200);
    let items = qa_items(&data.join("qa.jsonl"));
    let preds = t.path().join("yes.jsonl");
    write_preds(&preds, &items, |_| "Yes.".into());
    let r = eval_preds(&preds, &data, &t.path().join("out"));
    let yn: Vec<bool> = items.iter().filter_map(|q| q.gt_bool).collect();
    let want = yn.iter().filter(|b| **b).count() as f64 / yn.len() as f64 * 100.0;
    let got = r["open_ended"]["yes_no_acc"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn empty_predictions_give_an_empty_report() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 20);
    let preds = t.path().join("none.jsonl");
    std::fs::write(&preds, "").unwrap();
    let r = eval_preds(&preds, &data, &t.path().join("out"));
    assert_eq!(r["counts"]["records"], 0);
    assert!(r["numeric"]["success_rate"].is_null());
    assert!(r["open_ended"]["yes_no_acc"].is_null());
}

#[test]
fn ablation_rows_follow_the_eta_list() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 80);
    let qa = data.join("qa.jsonl");
    let qf = data.join("qa_flipped.jsonl");
    let sweep = |out: &Path, etas: &str| -> Value {
        ok(&["ablate-eta", "--data", s(&qa), "--flipped-data", s(&qf), "--steps", "5", "--etas", etas, "--out", s(out)]);
        serde_json::from_str(&read(&out.join("ablation.json"))).unwrap()
    };
    let four = sweep(&t.path().join("four"), "0,1,2,10");
    let rows = four["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let etas: Vec<f64> = rows.iter().map(|r| r["eta"].as_f64().unwrap()).collect();
    assert_eq!(etas, vec![0.0, 1.0, 2.0, 10.0]);
    assert!(rows.iter().all(|r| r["seeds_failed"] == 0));

    let one = sweep(&t.path().join("one"), "1");
    assert_eq!(one["rows"].as_array().unwrap().len(), 1);

    let again = t.path().join("again");
    sweep(&again, "0,1,2,10");
    for f in ["ablation.json", "ablation.md", "ablation.csv"] {
        assert_eq!(read(&t.path().join("four").join(f)), read(&again.join(f)), "{f}");
    }
    assert_eq!(read(&again.join("ablation.md")).lines().count(), 6);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("bad.json");
    std::fs::write(&cfg, r#"{"stepz": 3}"#).unwrap();
    assert_eq!(run(&["gen-data", "--config", s(&cfg), "--out", s(t.path())]).status.code(), Some(1));
}

#[test]
fn report_renders_saved_reports() {
    let t = tempfile::tempdir().unwrap();
    let data = dataset(t.path(), 30);
    let items = qa_items(&data.join("qa.jsonl"));
    let preds = t.path().join("p.jsonl");
    write_preds(&preds, &items, |q| q.reference_answer.clone());
    let out = t.path().join("out");
    eval_preds(&preds, &data, &out);
    let md = ok(&["report", "--input", s(&out.join("report.json"))]);
    let text = String::from_utf8(md.stdout).unwrap();
    assert!(text.starts_with('|'), "{text}");
}
