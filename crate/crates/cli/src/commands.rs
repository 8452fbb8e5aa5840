use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use emojirec::corpus::io::{parse_jsonl, read_jsonl, read_text, write_jsonl, write_text};
use emojirec::corpus::{
    clean_dialogue, embed_emoji, encode_split, generate_synthetic, preprocess as run_preprocess, CleanRules,
    EmojiInventory, LabelSet, LabeledDialogue, SyntheticSpec, Vocabulary,
};
use emojirec::encoders::EncoderKind;
use emojirec::evaluation::{evaluate as run_evaluate, per_class_table, ranking, EvalReport};
use emojirec::training::{load_checkpoint, save_checkpoint, train as run_train, TrainingData};
use emojirec::{Error, Result};

use crate::config::RunConfig;

pub const SPLITS: [&str; 3] = ["train", "valid", "test"];
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const STATS_FILE: &str = "stats.json";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "train_log.jsonl";

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("missing {key} path (flag --{key} or '{key} = ...' in the config file)")))
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

pub fn preprocess(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let raw_path = required(&cfg.raw, "raw")?;
    let emoji_path = required(&cfg.emoji, "emoji")?;
    let out_dir = required(&cfg.out, "out")?;
    let config = cfg.preprocess_config()?;
    let raws = read_jsonl(raw_path)?;
    let inventory = EmojiInventory::from_tsv(&read_text(emoji_path)?)?;
    let pre = run_preprocess(&raws, &inventory, &config)?;

    create_dir(out_dir)?;
    for (name, split) in SPLITS.iter().zip([&pre.splits.train, &pre.splits.valid, &pre.splits.test]) {
        write_jsonl(&out_dir.join(format!("{name}.jsonl")), split)?;
    }
    write_text(&out_dir.join(VOCAB_FILE), &pre.vocab.to_tsv())?;
    write_text(&out_dir.join(LABELS_FILE), &pre.labels.to_tsv())?;
    let stats = serde_json::to_string_pretty(&pre.stats).expect("stats serialize") + "\n";
    write_text(&out_dir.join(STATS_FILE), &stats)?;
    out.write_all(stats.as_bytes()).map_err(stdout_err)
}

struct Dataset {
    vocab: Vocabulary,
    labels: LabelSet,
    splits: Vec<Vec<LabeledDialogue>>,
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    let vocab = Vocabulary::from_tsv(&read_text(&dir.join(VOCAB_FILE))?)?;
    let labels = LabelSet::from_tsv(&read_text(&dir.join(LABELS_FILE))?)?;
    let splits = SPLITS
        .iter()
        .map(|name| encode_split(&read_jsonl(&dir.join(format!("{name}.jsonl")))?, &vocab, &labels))
        .collect::<Result<_>>()?;
    Ok(Dataset { vocab, labels, splits })
}

impl Dataset {
    fn training_data(&self) -> TrainingData<'_> {
        TrainingData {
            train: &self.splits[0],
            valid: &self.splits[1],
            vocab: &self.vocab,
            labels: &self.labels,
        }
    }
}

pub fn train(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let data_dir = required(&cfg.data, "data")?;
    let out_dir = required(&cfg.out, "out")?;
    let data = load_dataset(data_dir)?;
    let config = cfg.train_config(data.vocab.len(), data.labels.len())?;
    let outcome = run_train(&config, &data.training_data())?;
    create_dir(out_dir)?;
    save_checkpoint(&outcome.checkpoint, &out_dir.join(CHECKPOINT_FILE))?;
    write_text(&out_dir.join(LOG_FILE), &outcome.log.to_jsonl())?;
    let train_report = run_evaluate(&outcome.checkpoint.classifier, &data.splits[0], &data.labels)?;
    writeln!(
        out,
        "encoder={} epoch={} valid_error={:.4} train_p_at_1={:.4}",
        config.model.encoder, outcome.checkpoint.meta.epoch, outcome.checkpoint.meta.best_valid_error, train_report.p_at_1
    )
    .map_err(stdout_err)
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub split: PathBuf,
    pub vocab: PathBuf,
    pub labels: PathBuf,
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
}

pub fn evaluate(args: &EvalArgs, out: &mut impl Write) -> Result<()> {
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let vocab = Vocabulary::from_tsv(&read_text(&args.vocab)?)?;
    let labels = LabelSet::from_tsv(&read_text(&args.labels)?)?;
    ckpt.verify(&vocab, &labels)?;
    let split = encode_split(&read_jsonl(&args.split)?, &vocab, &labels)?;
    let report = run_evaluate(&ckpt.classifier, &split, &labels)?;
    let json = report.to_json();
    let table = per_class_table(&labels, &[(ckpt.encoder().as_str(), &report)]);
    if let Some(path) = &args.report {
        write_text(path, &json)?;
    }
    if let Some(path) = &args.table {
        write_text(path, &table)?;
    }
    write!(out, "{json}\n{table}").map_err(stdout_err)
}

pub fn predict(
    cfg: &RunConfig,
    checkpoint: &Path,
    vocab_path: &Path,
    labels_path: Option<&Path>,
    input: &str,
    out: &mut impl Write,
) -> Result<()> {
    let ckpt = load_checkpoint(checkpoint)?;
    let vocab = Vocabulary::from_tsv(&read_text(vocab_path)?)?;
    let labels = match labels_path {
        Some(p) => LabelSet::from_tsv(&read_text(p)?)?,
        None => ckpt.labels()?,
    };
    ckpt.verify(&vocab, &labels)?;
    let dialogues = parse_jsonl(input, Path::new("<stdin>"))?;
    if dialogues.is_empty() {
        return Err(Error::Data("no dialogue on standard input".into()));
    }
    let rules = CleanRules::default();
    for (k, raw) in dialogues.iter().enumerate() {
        let cleaned = clean_dialogue(raw, &rules)
            .ok_or_else(|| Error::Data(format!("dialogue {} is empty after cleaning", k + 1)))?;
        let keep = cleaned.sentences.len().saturating_sub(cfg.max_dialogue_len);
        let sentences: Vec<Vec<u32>> = cleaned.sentences[keep..]
            .iter()
            .map(|s| vocab.encode_sentence(s))
            .collect();
        let probs = ckpt.classifier.predict(&sentences)?;
        if k > 0 {
            writeln!(out).map_err(stdout_err)?;
        }
        for class in ranking(&probs) {
            writeln!(out, "{}\t{}", labels.name(class), probs[class]).map_err(stdout_err)?;
        }
    }
    Ok(())
}

pub fn sweep_row(encoder: EncoderKind, dim: usize, report: &EvalReport) -> String {
    format!("{encoder}\t{dim}\t{}\t{}\t{}", report.p_at_1, report.p_at_3, report.mrr)
}

pub fn sweep(
    cfg: &RunConfig,
    dims: &[usize],
    encoders: &[EncoderKind],
    table: Option<&Path>,
    out: &mut impl Write,
) -> Result<()> {
    let data_dir = required(&cfg.data, "data")?;
    let data = load_dataset(data_dir)?;
    let encoders = if encoders.is_empty() { vec![cfg.encoder] } else { encoders.to_vec() };
    let mut text = String::from("encoder\tdim\tp_at_1\tp_at_3\tmrr\n");
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    for &encoder in &encoders {
        for &dim in dims {
            let point = RunConfig {
                encoder,
                n_x: dim,
                n_h: dim,
                ..cfg.clone()
            };
            let config = point.train_config(data.vocab.len(), data.labels.len())?;
            let outcome = run_train(&config, &data.training_data())?;
            let report = run_evaluate(&outcome.checkpoint.classifier, &data.splits[2], &data.labels)?;
            let row = sweep_row(encoder, dim, &report) + "\n";
            out.write_all(row.as_bytes()).map_err(stdout_err)?;
            out.flush().map_err(stdout_err)?;
            text.push_str(&row);
        }
    }
    if let Some(path) = table {
        write_text(path, &text)?;
    }
    Ok(())
}

pub fn gen_synthetic(spec: &SyntheticSpec, out_path: &Path, emoji_path: &Path, out: &mut impl Write) -> Result<()> {
    let labels = spec.label_set()?;
    let raws = generate_synthetic(spec)?
        .iter()
        .map(|d| embed_emoji(d, &labels))
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(out_path, &raws)?;
    write_text(emoji_path, &spec.inventory()?.to_tsv())?;
    writeln!(out, "wrote {} dialogues in {} classes", raws.len(), spec.classes).map_err(stdout_err)
}
