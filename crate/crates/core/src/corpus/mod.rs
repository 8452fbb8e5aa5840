//! Corpus ingestion, cleaning, labeling, vocabulary, filtering, splitting,
//! batching and synthetic data.

pub mod batch;
pub mod clean;
pub mod filter;
pub mod io;
pub mod labels;
pub mod pipeline;
pub mod split;
pub mod synthetic;
pub mod types;
pub mod vocab;

pub use batch::{make_batches, Batch};
pub use clean::{clean_dialogue, CleanRules};
pub use filter::{filter_dialogue, FilterConfig, Rejection};
pub use labels::{extract_label, EmojiInventory, LabelSet};
pub use pipeline::{encode_split, preprocess, PreprocessConfig, PreprocessStats, Preprocessed};
pub use split::{balance_classes, split_corpus, split_sizes, Splits};
pub use synthetic::{embed_emoji, generate_synthetic, SyntheticSpec};
pub use types::{LabeledDialogue, RawDialogue, PAD_ID, UNK_ID};
pub use vocab::{build_vocabulary, Vocabulary, DEFAULT_MIN_FREQ};
