//! Sentence-level decomposition schemes.
//!
//! Training decomposition rewrites every character that has an entry.
//! Inference-only schemes touch a character only when it is unseen and at
//! least one of its single-level components (after base-form normalization
//! and optional semantic replacement) is in the vocabulary; everything else
//! is copied through unchanged.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::db::{flatten, DecompositionDb, DEFAULT_MAX_DEPTH};
use crate::error::{Error, Result};
use crate::ids::Component;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Baseline,
    TrainDecompose,
    InferRemove,
    InferDecomposeAll,
    InferDecomposeLeft,
}

impl SchemeKind {
    pub fn is_inference(self) -> bool {
        matches!(
            self,
            SchemeKind::InferRemove | SchemeKind::InferDecomposeAll | SchemeKind::InferDecomposeLeft
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Keep IDC operators (training only).
    pub with_idc: bool,
    /// Swap out-of-vocabulary radicals via the semantic replacement table
    /// (decomposing inference kinds only).
    pub replace_radical: bool,
    /// Recursion cap for training decomposition without IDCs.
    pub max_depth: usize,
    /// Characters never decomposed or removed.
    pub exclude: BTreeSet<char>,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind) -> Self {
        SchemeConfig {
            kind,
            with_idc: false,
            replace_radical: false,
            max_depth: DEFAULT_MAX_DEPTH,
            exclude: BTreeSet::new(),
        }
    }

    pub fn with_idc(mut self, yes: bool) -> Self {
        self.with_idc = yes;
        self
    }

    pub fn replace_radical(mut self, yes: bool) -> Self {
        self.replace_radical = yes;
        self
    }

    pub fn max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn exclude<I: IntoIterator<Item = char>>(mut self, chars: I) -> Self {
        self.exclude.extend(chars);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.with_idc && self.kind != SchemeKind::TrainDecompose {
            return Err(Error::Config(
                "IDC output is only available for training decomposition".into(),
            ));
        }
        if self.replace_radical
            && !matches!(
                self.kind,
                SchemeKind::InferDecomposeAll | SchemeKind::InferDecomposeLeft
            )
        {
            return Err(Error::Config(
                "radical replacement needs infer-all or infer-left".into(),
            ));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max depth must be at least 1".into()));
        }
        Ok(())
    }

    /// CLI name of the scheme, without the `--replace-radical` modifier.
    pub fn name(&self) -> &'static str {
        match (self.kind, self.with_idc) {
            (SchemeKind::Baseline, _) => "baseline",
            (SchemeKind::TrainDecompose, false) => "train",
            (SchemeKind::TrainDecompose, true) => "train-idc",
            (SchemeKind::InferRemove, _) => "infer-remove",
            (SchemeKind::InferDecomposeAll, _) => "infer-all",
            (SchemeKind::InferDecomposeLeft, _) => "infer-left",
        }
    }
}

impl FromStr for SchemeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let config = match s {
            "baseline" => SchemeConfig::new(SchemeKind::Baseline),
            "train" => SchemeConfig::new(SchemeKind::TrainDecompose),
            "train-idc" => SchemeConfig::new(SchemeKind::TrainDecompose).with_idc(true),
            "infer-remove" => SchemeConfig::new(SchemeKind::InferRemove),
            "infer-all" => SchemeConfig::new(SchemeKind::InferDecomposeAll),
            "infer-left" => SchemeConfig::new(SchemeKind::InferDecomposeLeft),
            other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
        };
        Ok(config)
    }
}

/// What happened to one character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Decomposed,
    Removed,
    /// Unseen and decomposable, but on the exclusion list.
    Excluded,
    /// Unseen with no database entry.
    NotDecomposable,
    /// Unseen, but no component survives the vocabulary filter.
    NoInVocabComponent,
    /// Unseen under the baseline scheme.
    Unknown,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Decomposed => "decomposed",
            Action::Removed => "removed",
            Action::Excluded => "excluded",
            Action::NotDecomposable => "not-decomposable",
            Action::NoInVocabComponent => "no-in-vocab-component",
            Action::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharEvent {
    /// 1-based corpus line, 0 for a lone sentence.
    pub line: usize,
    pub character: char,
    pub action: Action,
    pub output: String,
}

impl fmt::Display for CharEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.line,
            self.character,
            self.action.name(),
            self.output
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemeReport {
    pub sentences: usize,
    pub sentences_changed: usize,
    pub chars_decomposed: usize,
    pub chars_removed: usize,
    pub chars_still_unknown: usize,
    /// Unseen-character events; training decomposition does not log.
    pub per_char_log: Vec<CharEvent>,
}

impl SchemeReport {
    /// Adds a single-sentence report, tagging its events with `line`.
    pub fn absorb(&mut self, other: SchemeReport, line: usize) {
        self.add_counts(&other);
        self.per_char_log
            .extend(other.per_char_log.into_iter().map(|e| CharEvent { line, ..e }));
    }

    /// Appends a report for a later batch whose lines start after `offset`.
    fn append_shifted(&mut self, other: SchemeReport, offset: usize) {
        self.add_counts(&other);
        self.per_char_log
            .extend(other.per_char_log.into_iter().map(|e| CharEvent {
                line: e.line + offset,
                ..e
            }));
    }

    fn add_counts(&mut self, other: &SchemeReport) {
        self.sentences += other.sentences;
        self.sentences_changed += other.sentences_changed;
        self.chars_decomposed += other.chars_decomposed;
        self.chars_removed += other.chars_removed;
        self.chars_still_unknown += other.chars_still_unknown;
    }

    pub fn summary_line(&self) -> String {
        format!(
            "sentences={} changed={} decomposed={} removed={} still_unknown={}",
            self.sentences, self.sentences_changed, self.chars_decomposed, self.chars_removed, self.chars_still_unknown
        )
    }
}

/// Replaces every character with an entry by its decomposition: the
/// single-level flattening with operators when `with_idc`, otherwise the
/// recursive expansion up to `max_depth`.
pub fn apply_training_decomposition(db: &DecompositionDb, sentence: &str, with_idc: bool, max_depth: usize) -> String {
    train_sentence(db, sentence, with_idc, max_depth, &BTreeSet::new()).0
}

fn train_sentence(
    db: &DecompositionDb,
    sentence: &str,
    with_idc: bool,
    max_depth: usize,
    exclude: &BTreeSet<char>,
) -> (String, usize) {
    let mut out = String::with_capacity(sentence.len() * 2);
    let mut count = 0;
    for c in sentence.chars() {
        let expansion = match db.get(c) {
            Some(_) if exclude.contains(&c) => None,
            Some(tree) if with_idc => Some(flatten(tree, true)),
            Some(_) => db.expand_recursive(c, max_depth).ok(),
            None => None,
        };
        match expansion {
            Some(flat) => {
                use std::fmt::Write;
                let _ = write!(out, "{flat}");
                count += 1;
            }
            None => out.push(c),
        }
    }
    (out, count)
}

/// In-vocabulary components that stand in for an unseen character, in
/// left-to-right order. Empty when the character is not decomposable.
pub fn surviving_components(
    db: &DecompositionDb,
    vocab: &Vocabulary,
    character: char,
    replace_radical: bool,
) -> Vec<char> {
    let Some(tree) = db.get(character) else {
        return Vec::new();
    };
    tree.leaves()
        .into_iter()
        .filter_map(|comp| {
            let mut comp = db.normalize_base_form(comp);
            if replace_radical && !in_vocab(vocab, &comp) {
                if let Some(r) = db.semantic_replacement(&comp) {
                    comp = r;
                }
            }
            comp.as_char().filter(|&c| vocab.contains_char(c))
        })
        .collect()
}

fn in_vocab(vocab: &Vocabulary, comp: &Component) -> bool {
    comp.as_char().is_some_and(|c| vocab.contains_char(c))
}

/// Applies any scheme to one sentence. Vocabulary is ignored by training
/// decomposition.
pub fn apply_inference_scheme(
    db: &DecompositionDb,
    vocab: &Vocabulary,
    sentence: &str,
    config: &SchemeConfig,
) -> (String, SchemeReport) {
    let mut report = SchemeReport {
        sentences: 1,
        ..Default::default()
    };
    let out = match config.kind {
        SchemeKind::TrainDecompose => {
            let (out, n) = train_sentence(db, sentence, config.with_idc, config.max_depth, &config.exclude);
            report.chars_decomposed = n;
            out
        }
        _ => infer_sentence(db, vocab, sentence, config, &mut report),
    };
    if out != sentence {
        report.sentences_changed = 1;
    }
    (out, report)
}

fn infer_sentence(
    db: &DecompositionDb,
    vocab: &Vocabulary,
    sentence: &str,
    config: &SchemeConfig,
    report: &mut SchemeReport,
) -> String {
    let mut out = String::with_capacity(sentence.len() * 2);
    for c in sentence.chars() {
        if c.is_whitespace() || vocab.contains_char(c) {
            out.push(c);
            continue;
        }
        let mut log = |action, output: &str| {
            report.per_char_log.push(CharEvent {
                line: 0,
                character: c,
                action,
                output: output.to_string(),
            });
        };
        if config.kind == SchemeKind::Baseline {
            report.chars_still_unknown += 1;
            log(Action::Unknown, "");
            out.push(c);
            continue;
        }
        if !db.is_decomposable(c) {
            report.chars_still_unknown += 1;
            log(Action::NotDecomposable, "");
            out.push(c);
            continue;
        }
        let survivors = surviving_components(db, vocab, c, config.replace_radical);
        if survivors.is_empty() {
            report.chars_still_unknown += 1;
            log(Action::NoInVocabComponent, "");
            out.push(c);
            continue;
        }
        if config.exclude.contains(&c) {
            report.chars_still_unknown += 1;
            log(Action::Excluded, "");
            out.push(c);
            continue;
        }
        let emitted: String = match config.kind {
            SchemeKind::InferDecomposeAll => survivors.iter().collect(),
            SchemeKind::InferDecomposeLeft => survivors[..1].iter().collect(),
            _ => String::new(),
        };
        if config.kind == SchemeKind::InferRemove {
            report.chars_removed += 1;
            log(Action::Removed, "");
        } else {
            report.chars_decomposed += 1;
            log(Action::Decomposed, &emitted);
        }
        out.push_str(&emitted);
    }
    out
}

/// Applies a scheme to a batch of lines on the current rayon pool. Output
/// and report do not depend on the number of threads.
pub fn preprocess_lines<S: AsRef<str> + Sync>(
    db: &DecompositionDb,
    vocab: &Vocabulary,
    lines: &[S],
    config: &SchemeConfig,
) -> (Vec<String>, SchemeReport) {
    let results: Vec<(String, SchemeReport)> = lines
        .par_iter()
        .map(|l| apply_inference_scheme(db, vocab, l.as_ref(), config))
        .collect();
    let mut total = SchemeReport::default();
    let mut out = Vec::with_capacity(results.len());
    for (i, (line, report)) in results.into_iter().enumerate() {
        total.absorb(report, i + 1);
        out.push(line);
    }
    (out, total)
}

const CHUNK_LINES: usize = 4096;

/// Streams a one-sentence-per-line corpus through a scheme. Line `i` of the
/// output corresponds to line `i` of the input; output lines end in LF.
pub fn preprocess_corpus<R: BufRead, W: Write>(
    db: &DecompositionDb,
    vocab: &Vocabulary,
    input: R,
    mut output: W,
    config: &SchemeConfig,
) -> Result<SchemeReport> {
    config.validate()?;
    let mut total = SchemeReport::default();
    let mut lines = input.lines();
    let mut chunk = Vec::with_capacity(CHUNK_LINES);
    loop {
        chunk.clear();
        for line in lines.by_ref().take(CHUNK_LINES) {
            chunk.push(line?);
        }
        if chunk.is_empty() {
            break;
        }
        let offset = total.sentences;
        let (out, report) = preprocess_lines(db, vocab, &chunk, config);
        for line in &out {
            output.write_all(line.as_bytes())?;
            output.write_all(b"\n")?;
        }
        total.append_shifted(report, offset);
    }
    output.flush()?;
    Ok(total)
}
