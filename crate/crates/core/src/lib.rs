//! Sub-character preprocessing for NMT with logographic source languages.
//!
//! - [`ids`]: parse and serialize Ideographic Description Sequences and
//!   CHISE-style IDS files.
//! - [`db`]: the decomposition table with flattening, recursive expansion,
//!   base-form normalization and semantic replacement.
//! - [`vocab`] and [`bpe`]: character vocabularies and a deterministic BPE.
//! - [`schemes`]: training decomposition and the inference-only schemes for
//!   unseen characters.
//! - [`testset`]: unseen-character challenge set construction and audit.

pub mod bpe;
pub mod db;
pub mod error;
pub mod ids;
pub mod schemes;
pub mod testset;
pub mod vocab;

pub use bpe::{apply_bpe, learn_bpe, BpeModel};
pub use db::{flatten, DecompositionDb, FlatDecomposition, Symbol};
pub use error::{Error, IdsError, Result};
pub use ids::{parse_ids, parse_ids_file, serialize_ids, Component, DecompositionTree, Idc};
pub use schemes::{
    apply_inference_scheme, apply_training_decomposition, preprocess_corpus, SchemeConfig, SchemeKind, SchemeReport,
};
pub use testset::{audit_split, build_unseen_split, HoldoutConfig, SplitResult};
pub use vocab::{build_char_vocab, is_unseen, Vocabulary};
