use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use emojirec::corpus::io::read_jsonl;
use emojirec::corpus::{build_vocabulary, LabelSet, RawDialogue};
use emojirec::encoders::{Classifier, EncoderKind, ModelConfig, ParameterSet};
use emojirec::nn::RngStream;
use emojirec::training::{save_checkpoint, Checkpoint, CheckpointMeta, TrainConfig};
use serde_json::Value;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_emojirec"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary starts");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run(args: &[&str]) -> Output {
    run_with_stdin(args, "")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.code, 0, "{args:?} failed: {}", out.stderr);
    out.stdout
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn assert_error_line(out: &Output, code: i32) {
    assert_eq!(out.code, code, "stdout {} stderr {}", out.stdout, out.stderr);
    let lines: Vec<&str> = out.stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{}", out.stderr);
    assert!(lines[0].starts_with("error: "), "{}", lines[0]);
}

/// Generates a synthetic raw corpus and preprocesses it into `dir/data`.
fn prepared(dir: &Path, per_class: usize, depth: usize) -> PathBuf {
    let raw = dir.join("raw.jsonl");
    let emoji = dir.join("emoji.tsv");
    let data = dir.join("data");
    ok(&[
        "gen-synthetic",
        "--out",
        p(&raw),
        "--emoji-out",
        p(&emoji),
        "--classes",
        "4",
        "--per-class",
        &per_class.to_string(),
        "--depth",
        &depth.to_string(),
        "--seed",
        "3",
    ]);
    ok(&[
        "preprocess",
        "--raw",
        p(&raw),
        "--emoji",
        p(&emoji),
        "--out",
        p(&data),
        "--min-freq",
        "1",
        "--seed",
        "5",
    ]);
    data
}

const SMALL: &[&str] = &["--batch-size", "8", "--max-epochs", "3", "--gamma", "0.2", "--seed", "1"];

fn train(data: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["train", "--data", p(data), "--out", p(out)];
    args.extend_from_slice(SMALL);
    if !extra.contains(&"--dim") {
        args.extend_from_slice(&["--dim", "8"]);
    }
    args.extend_from_slice(extra);
    ok(&args)
}

fn evaluate_report(data: &Path, model: &Path) -> Value {
    let report = model.join("report.json");
    ok(&[
        "evaluate",
        "--checkpoint",
        p(&model.join("model.ckpt")),
        "--split",
        p(&data.join("test.jsonl")),
        "--vocab",
        p(&data.join("vocab.tsv")),
        "--labels",
        p(&data.join("labels.tsv")),
        "--report",
        p(&report),
    ]);
    serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap()
}

#[test]
fn stats_match_generator_composition() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 25, 1);
    let stats: Value = serde_json::from_str(&fs::read_to_string(data.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["input"], 100);
    assert_eq!(stats["labeled"], 100);
    assert!(stats["rejected"].as_object().unwrap().values().all(|v| v == 0));
    for class in ["emo0", "emo1", "emo2", "emo3"] {
        let total: u64 = ["train", "valid", "test"]
            .iter()
            .map(|s| stats[s]["per_class"][class].as_u64().unwrap())
            .sum();
        assert_eq!(total, 25, "{class}");
    }
    let sizes: Vec<u64> = ["train", "valid", "test"].iter().map(|s| stats[s]["total"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [90, 5, 5]);
    for file in ["train.jsonl", "valid.jsonl", "test.jsonl", "vocab.tsv", "labels.tsv"] {
        assert!(data.join(file).exists(), "{file}");
    }
}

#[test]
fn long_sentence_is_counted_as_rejection() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let emoji = dir.path().join("emoji.tsv");
    let long: Vec<String> = (0..51).map(|_| "a".to_string()).collect();
    let dialogues = [
        RawDialogue::new(vec![long, vec!["b".into(), "[x]".into()]]),
        RawDialogue::from_strs(&[&["a", "b", "[x]"]]),
        RawDialogue::from_strs(&[&["a", "a", "[y]"]]),
    ];
    emojirec::corpus::io::write_jsonl(&raw, &dialogues).unwrap();
    fs::write(&emoji, "[x]\tx\n[y]\ty\n").unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&[
        "preprocess",
        "--raw",
        p(&raw),
        "--emoji",
        p(&emoji),
        "--out",
        p(&out),
        "--min-freq",
        "1",
    ]);
    let stats: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(stats["rejected"]["too_long_sentence"], 1);
    assert_eq!(stats["labeled"], 3);
}

#[test]
fn preprocessing_clean_labeled_data_is_a_fixpoint() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 1);
    let again = dir.path().join("again");
    ok(&[
        "preprocess",
        "--raw",
        p(&data.join("train.jsonl")),
        "--emoji",
        p(&dir.path().join("emoji.tsv")),
        "--out",
        p(&again),
        "--min-freq",
        "1",
    ]);
    let key = |d: &RawDialogue| serde_json::to_string(d).unwrap();
    let mut before: Vec<String> = read_jsonl(&data.join("train.jsonl")).unwrap().iter().map(key).collect();
    let mut after: Vec<String> = ["train", "valid", "test"]
        .iter()
        .flat_map(|s| read_jsonl(&again.join(format!("{s}.jsonl"))).unwrap())
        .map(|d| key(&d))
        .collect();
    before.sort();
    after.sort();
    assert_eq!(before, after);
}

#[test]
fn training_is_reproducible_and_logged() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 0);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out_a = train(&data, &a, &[]);
    let out_b = train(&data, &b, &[]);
    assert_eq!(out_a, out_b);
    assert!(out_a.starts_with("encoder=h-lstm epoch="), "{out_a}");
    assert_eq!(
        fs::read(a.join("model.ckpt")).unwrap(),
        fs::read(b.join("model.ckpt")).unwrap()
    );
    let log = fs::read_to_string(a.join("train_log.jsonl")).unwrap();
    let records: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!records.is_empty() && records.len() <= 3);
    for (k, r) in records.iter().enumerate() {
        assert_eq!(r["epoch"], k + 1);
        assert!(r["train_loss"].as_f64().unwrap().is_finite());
        assert!(r.get("valid_error").is_some() && r.get("seconds").is_some());
    }
}

#[test]
fn bow_encoder_dispatches_to_baseline() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 0);
    let model = dir.path().join("bow");
    let stdout = train(&data, &model, &["--encoder", "s-bow"]);
    assert!(stdout.starts_with("encoder=s-bow "), "{stdout}");
    let out = ok(&[
        "evaluate",
        "--checkpoint",
        p(&model.join("model.ckpt")),
        "--split",
        p(&data.join("test.jsonl")),
        "--vocab",
        p(&data.join("vocab.tsv")),
        "--labels",
        p(&data.join("labels.tsv")),
    ]);
    assert!(out.contains("emoji\ts-bow\n"), "{out}");
}

#[test]
fn evaluate_writes_report_and_refuses_foreign_vocabulary() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 0);
    let model = dir.path().join("m");
    train(&data, &model, &[]);
    let report = evaluate_report(&data, &model);
    for key in ["n", "p_at_1", "p_at_3", "mrr", "per_class_p1", "confusion"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    let p1 = report["p_at_1"].as_f64().unwrap();
    assert!(p1 <= report["p_at_3"].as_f64().unwrap() && p1 <= report["mrr"].as_f64().unwrap());

    let other = dir.path().join("other_vocab.tsv");
    let vocab = build_vocabulary(&[RawDialogue::from_strs(&[&["zzz"]])], 1).unwrap();
    fs::write(&other, vocab.to_tsv()).unwrap();
    let out = run(&[
        "evaluate",
        "--checkpoint",
        p(&model.join("model.ckpt")),
        "--split",
        p(&data.join("test.jsonl")),
        "--vocab",
        p(&other),
        "--labels",
        p(&data.join("labels.tsv")),
    ]);
    assert_error_line(&out, 1);
    assert!(out.stderr.contains("vocabulary hash"), "{}", out.stderr);
}

fn zero_checkpoint(dir: &Path) -> (PathBuf, PathBuf) {
    let vocab = build_vocabulary(&[RawDialogue::from_strs(&[&["a", "b"], &["c"]])], 1).unwrap();
    let labels = LabelSet::new(vec!["heart".into(), "smile".into(), "cry".into()]).unwrap();
    let model = ModelConfig::new(EncoderKind::Hierarchical, vocab.len(), labels.len()).with_dims(4, 4);
    let checkpoint = Checkpoint {
        meta: CheckpointMeta {
            config: TrainConfig::new(model.clone()),
            vocab_hash: vocab.content_hash(),
            labels_hash: labels.content_hash(),
            label_names: labels.names().to_vec(),
            epoch: 0,
            best_valid_error: 1.0,
            rng: RngStream::new(0).state(),
        },
        classifier: Classifier::neural(EncoderKind::Hierarchical, ParameterSet::zeros(&model)).unwrap(),
    };
    let ckpt = dir.join("zero.ckpt");
    save_checkpoint(&checkpoint, &ckpt).unwrap();
    let vocab_path = dir.join("vocab.tsv");
    fs::write(&vocab_path, vocab.to_tsv()).unwrap();
    (ckpt, vocab_path)
}

#[test]
fn zero_checkpoint_predicts_uniform_in_index_order() {
    let dir = TempDir::new().unwrap();
    let (ckpt, vocab) = zero_checkpoint(dir.path());
    let input = "{\"sentences\":[[\"a\",\"b\"],[\"c\",\"unknown\"]]}\n{\"sentences\":[[\"@someone\",\"a\"]]}\n";
    let out = run_with_stdin(&["predict", "--checkpoint", p(&ckpt), "--vocab", p(&vocab)], input);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let blocks: Vec<&str> = out.stdout.split("\n\n").collect();
    assert_eq!(blocks.len(), 2);
    for block in blocks {
        let rows: Vec<(&str, f64)> = block
            .lines()
            .map(|l| {
                let (name, prob) = l.split_once('\t').unwrap();
                (name, prob.parse().unwrap())
            })
            .collect();
        let names: Vec<&str> = rows.iter().map(|r| r.0).collect();
        assert_eq!(names, ["heart", "smile", "cry"]);
        let total: f64 = rows.iter().map(|r| r.1).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(rows.iter().all(|r| (r.1 - 1.0 / 3.0).abs() < 1e-15));
    }
}

#[test]
fn malformed_predict_input_reports_position() {
    let dir = TempDir::new().unwrap();
    let (ckpt, vocab) = zero_checkpoint(dir.path());
    let out = run_with_stdin(
        &["predict", "--checkpoint", p(&ckpt), "--vocab", p(&vocab)],
        "{\"sentences\":[[\"a\"]]}\n{\"sentences\": [[\"a\",]]}\n",
    );
    assert_error_line(&out, 2);
    assert!(out.stderr.contains("<stdin>:2:") && out.stderr.contains("column"), "{}", out.stderr);
}

#[test]
fn overfit_run_reports_high_train_precision_and_ranks_gold_first() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 16, 1);
    // select the checkpoint on the training data itself
    fs::copy(data.join("train.jsonl"), data.join("valid.jsonl")).unwrap();
    let model = dir.path().join("overfit");
    let stdout = ok(&[
        "train",
        "--data",
        p(&data),
        "--out",
        p(&model),
        "--dim",
        "16",
        "--batch-size",
        "1",
        "--gamma",
        "0",
        "--max-epochs",
        "200",
        "--patience",
        "200",
        "--seed",
        "2",
    ]);
    let p1: f64 = stdout.trim().rsplit("train_p_at_1=").next().unwrap().parse().unwrap();
    assert!(p1 >= 0.99, "{stdout}");

    let example = read_jsonl(&data.join("train.jsonl")).unwrap().remove(0);
    let gold = example.label.clone().unwrap();
    let input = serde_json::to_string(&RawDialogue::new(example.sentences)).unwrap();
    let out = run_with_stdin(
        &[
            "predict",
            "--checkpoint",
            p(&model.join("model.ckpt")),
            "--vocab",
            p(&data.join("vocab.tsv")),
            "--labels",
            p(&data.join("labels.tsv")),
        ],
        &input,
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.lines().next().unwrap().split('\t').next(), Some(gold.as_str()));
}

#[test]
fn sweep_rows_follow_request_order_and_match_single_runs() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 0);
    let mut args = vec!["sweep", "--data", p(&data), "--dims", "6,4", "--encoders", "f-lstm,s-lstm"];
    args.extend_from_slice(SMALL);
    let table = ok(&args);
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows[0], ["encoder", "dim", "p_at_1", "p_at_3", "mrr"]);
    let order: Vec<(&str, &str)> = rows[1..].iter().map(|r| (r[0], r[1])).collect();
    assert_eq!(order, [("f-lstm", "6"), ("f-lstm", "4"), ("s-lstm", "6"), ("s-lstm", "4")]);

    let model = dir.path().join("single");
    train(&data, &model, &["--encoder", "s-lstm", "--dim", "4"]);
    let report = evaluate_report(&data, &model);
    let metrics: Vec<f64> = rows[4][2..].iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(
        metrics,
        [
            report["p_at_1"].as_f64().unwrap(),
            report["p_at_3"].as_f64().unwrap(),
            report["mrr"].as_f64().unwrap()
        ]
    );
}

#[test]
fn single_dim_sweep_has_one_row() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 0);
    let mut args = vec!["sweep", "--data", p(&data), "--dims", "8"];
    args.extend_from_slice(SMALL);
    assert_eq!(ok(&args).lines().count(), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let data = prepared(dir.path(), 10, 0);
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("# test run\ndata = {}\nencoder = f-lstm\nmax_epochs = 2\n", p(&data))).unwrap();
    let model = dir.path().join("m");
    let stdout = ok(&[
        "train",
        "--config",
        p(&conf),
        "--out",
        p(&model),
        "--encoder",
        "s-lstm",
        "--dim",
        "4",
    ]);
    assert!(stdout.starts_with("encoder=s-lstm "), "{stdout}");
    let log = fs::read_to_string(model.join("train_log.jsonl")).unwrap();
    assert!(log.lines().count() <= 2);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "n_x = 4\nlearning_rate = 1\n").unwrap();
    let out = run(&["train", "--config", p(&conf)]);
    assert_error_line(&out, 1);
    assert!(out.stderr.contains("learning_rate"));
}

#[test]
fn exit_codes() {
    assert_error_line(&run(&["frobnicate"]), 1);
    assert_error_line(&run(&["evaluate", "--checkpoint", "x"]), 1);
    assert_error_line(&run(&["preprocess", "--emoji", "e", "--out", "o"]), 1);
    assert_error_line(&run(&["train", "--data", "/nonexistent/dir", "--out", "/tmp/x"]), 2);
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["--version"]).code, 0);
}

#[test]
fn damaged_checkpoint_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let (ckpt, vocab) = zero_checkpoint(dir.path());
    let mut bytes = fs::read(&ckpt).unwrap();
    bytes.truncate(bytes.len() - 5);
    fs::write(&ckpt, bytes).unwrap();
    let out = run_with_stdin(
        &["predict", "--checkpoint", p(&ckpt), "--vocab", p(&vocab)],
        "{\"sentences\":[[\"a\"]]}\n",
    );
    assert_error_line(&out, 2);
}

#[test]
fn gen_synthetic_embeds_emoji_tokens() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let emoji = dir.path().join("emoji.tsv");
    let stdout = ok(&[
        "gen-synthetic",
        "--out",
        p(&raw),
        "--emoji-out",
        p(&emoji),
        "--classes",
        "3",
        "--per-class",
        "5",
    ]);
    assert_eq!(stdout.trim(), "wrote 15 dialogues in 3 classes");
    let dialogues = read_jsonl(&raw).unwrap();
    assert_eq!(dialogues.len(), 15);
    assert!(dialogues.iter().all(|d| d.label.is_none()));
    assert!(dialogues
        .iter()
        .all(|d| d.sentences.last().unwrap().last().unwrap().starts_with("[emo")));
    assert_eq!(fs::read_to_string(emoji).unwrap().lines().count(), 3);
}
