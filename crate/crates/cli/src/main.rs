mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emojirec::encoders::EncoderKind;
use emojirec::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "emojirec", version, about = "Emoji classification for short dialogues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, label, split, build the vocabulary and filter a raw corpus.
    Preprocess {
        /// Raw dialogues, one JSON object per line.
        #[arg(long)]
        raw: Option<PathBuf>,
        /// Emoji inventory: `surface<TAB>label` lines.
        #[arg(long)]
        emoji: Option<PathBuf>,
        /// Output directory for splits, vocabulary, labels and stats.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Train a model on a preprocessed directory.
    Train {
        /// Directory written by `preprocess`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory for the checkpoint and the training log.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Score a checkpoint on a labeled split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Labeled split, one JSON object per line.
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Also write the report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the per-class table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Rank emojis for dialogues read from standard input.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Optional label set to check against the checkpoint.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Train and evaluate at several dimensions (n_x = n_h = dim).
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated dimensions, evaluated in the given order.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Comma-separated encoders; defaults to the configured encoder.
        #[arg(long, value_delimiter = ',')]
        encoders: Vec<EncoderKind>,
        /// Also write the table here.
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic raw corpus with embedded emoji tokens.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        /// Where to write the matching emoji inventory.
        #[arg(long)]
        emoji_out: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 40)]
        vocab_size: usize,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        /// Turns between the keyword sentence and the reply.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Run configuration: an optional file, then flag overrides.
#[derive(Args, Debug, Default)]
struct Settings {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    encoder: Option<String>,
    /// Sets both n_x and n_h.
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    n_x: Option<String>,
    #[arg(long)]
    n_h: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long)]
    max_epochs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    min_freq: Option<String>,
    #[arg(long)]
    max_sentence_len: Option<String>,
    #[arg(long)]
    max_dialogue_len: Option<String>,
    #[arg(long)]
    max_oov_ratio: Option<String>,
    #[arg(long)]
    balance: Option<String>,
    #[arg(long)]
    clip_norm: Option<String>,
}

impl Settings {
    fn resolve(&self, paths: &[(&str, &Option<PathBuf>)]) -> emojirec::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = emojirec::corpus::io::read_text(path)?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        let flags = [
            ("encoder", &self.encoder),
            ("n_x", &self.dim),
            ("n_h", &self.dim),
            ("n_x", &self.n_x),
            ("n_h", &self.n_h),
            ("batch_size", &self.batch_size),
            ("gamma", &self.gamma),
            ("rho", &self.rho),
            ("epsilon", &self.epsilon),
            ("patience", &self.patience),
            ("max_epochs", &self.max_epochs),
            ("seed", &self.seed),
            ("min_freq", &self.min_freq),
            ("max_sentence_len", &self.max_sentence_len),
            ("max_dialogue_len", &self.max_dialogue_len),
            ("max_oov_ratio", &self.max_oov_ratio),
            ("balance", &self.balance),
            ("clip_norm", &self.clip_norm),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for (key, value) in paths {
            if let Some(p) = value {
                cfg.set(key, &p.display().to_string())?;
            }
        }
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Numeric(_) | Error::Determinism(_) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> emojirec::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Preprocess {
            raw,
            emoji,
            out,
            settings,
        } => {
            let cfg = settings.resolve(&[("raw", &raw), ("emoji", &emoji), ("out", &out)])?;
            commands::preprocess(&cfg, &mut stdout)
        }
        Command::Train { data, out, settings } => {
            let cfg = settings.resolve(&[("data", &data), ("out", &out)])?;
            commands::train(&cfg, &mut stdout)
        }
        Command::Evaluate {
            checkpoint,
            split,
            vocab,
            labels,
            report,
            table,
        } => commands::evaluate(
            &commands::EvalArgs {
                checkpoint,
                split,
                vocab,
                labels,
                report,
                table,
            },
            &mut stdout,
        ),
        Command::Predict {
            checkpoint,
            vocab,
            labels,
            settings,
        } => {
            let cfg = settings.resolve(&[])?;
            let input = std::io::read_to_string(std::io::stdin())
                .map_err(|e| Error::Io {
                    path: "<stdin>".into(),
                    source: e,
                })?;
            commands::predict(&cfg, &checkpoint, &vocab, labels.as_deref(), &input, &mut stdout)
        }
        Command::Sweep {
            data,
            dims,
            encoders,
            table,
            settings,
        } => {
            let cfg = settings.resolve(&[("data", &data)])?;
            commands::sweep(&cfg, &dims, &encoders, table.as_deref(), &mut stdout)
        }
        Command::GenSynthetic {
            out,
            emoji_out,
            classes,
            vocab_size,
            per_class,
            depth,
            noise,
            seed,
        } => {
            let spec = emojirec::corpus::SyntheticSpec {
                classes,
                vocab_size,
                dialogues_per_class: per_class,
                context_depth: depth,
                noise,
                seed,
                ..Default::default()
            };
            commands::gen_synthetic(&spec, &out, &emoji_out, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
