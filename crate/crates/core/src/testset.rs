//! Unseen-character challenge sets.
//!
//! Sentence pairs whose source contains a rare (or out-of-vocabulary)
//! decomposable logographic character are pulled out of the training data.
//! Those passing the length-ratio filter become the challenge set and the
//! rest are discarded, so no trigger character is left in training.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::db::DecompositionDb;
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

pub type SentencePair = (String, String);

pub const DEFAULT_LENGTH_RATIO_MAX: f64 = 3.5;

pub const TRAIN_SRC: &str = "train.src";
pub const TRAIN_TGT: &str = "train.tgt";
pub const UNSEEN_SRC: &str = "unseen.src";
pub const UNSEEN_TGT: &str = "unseen.tgt";
pub const TRIGGERS: &str = "triggers.tsv";

/// CJK Unified Ideographs (base and extensions A to D) and CJK
/// Compatibility Ideographs.
pub fn is_logographic(c: char) -> bool {
    matches!(
        c as u32,
        0x4E00..=0x9FFF
            | 0x3400..=0x4DBF
            | 0x20000..=0x2A6DF
            | 0x2A700..=0x2B73F
            | 0x2B740..=0x2B81F
            | 0xF900..=0xFAFF
            | 0x2F800..=0x2FA1F
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum HoldoutMode {
    /// Characters occurring at most `max_count` times in the source side.
    FrequencyThreshold { max_count: usize },
    /// Characters missing from an existing model's vocabulary.
    VocabularyMembership { reference_vocab: Vocabulary },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutConfig {
    pub mode: HoldoutMode,
    /// Pairs are kept only if their token length ratio is strictly below this.
    pub length_ratio_max: f64,
}

impl HoldoutConfig {
    pub fn frequency(max_count: usize) -> Self {
        HoldoutConfig {
            mode: HoldoutMode::FrequencyThreshold { max_count },
            length_ratio_max: DEFAULT_LENGTH_RATIO_MAX,
        }
    }

    pub fn membership(reference_vocab: Vocabulary) -> Self {
        HoldoutConfig {
            mode: HoldoutMode::VocabularyMembership { reference_vocab },
            length_ratio_max: DEFAULT_LENGTH_RATIO_MAX,
        }
    }

    pub fn length_ratio_max(mut self, ratio: f64) -> Self {
        self.length_ratio_max = ratio;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let HoldoutMode::FrequencyThreshold { max_count: 0 } = self.mode {
            return Err(Error::Config("max count must be at least 1".into()));
        }
        if self.length_ratio_max.is_nan() || self.length_ratio_max <= 1.0 {
            return Err(Error::Config(format!(
                "length ratio limit must be a number above 1, got {}",
                self.length_ratio_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitResult {
    pub train: Vec<SentencePair>,
    pub unseen_test: Vec<SentencePair>,
    pub trigger_chars: BTreeSet<char>,
    /// Source-side occurrence count of each trigger in the input.
    pub trigger_counts: BTreeMap<char, usize>,
    pub rejected_by_ratio: usize,
}

/// max/min of the whitespace token counts; infinite when either side is
/// empty.
pub fn length_ratio(src: &str, tgt: &str) -> f64 {
    let a = src.split_whitespace().count();
    let b = tgt.split_whitespace().count();
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo == 0 {
        f64::INFINITY
    } else {
        hi as f64 / lo as f64
    }
}

fn count_logographs(bitext: &[SentencePair]) -> BTreeMap<char, usize> {
    bitext
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<char, usize>, (src, _)| {
            for c in src.chars().filter(|&c| is_logographic(c)) {
                *acc.entry(c).or_insert(0) += 1;
            }
            acc
        })
        .map(|m| m.into_iter().collect::<BTreeMap<_, _>>())
        .reduce(BTreeMap::new, |mut a, b| {
            for (c, n) in b {
                *a.entry(c).or_insert(0) += n;
            }
            a
        })
}

enum Route {
    Train,
    Unseen,
    Rejected,
}

pub fn build_unseen_split(
    bitext: &[SentencePair],
    db: &DecompositionDb,
    config: &HoldoutConfig,
) -> Result<SplitResult> {
    config.validate()?;
    if bitext.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = count_logographs(bitext);
    let trigger_counts: BTreeMap<char, usize> = counts
        .into_iter()
        .filter(|&(c, n)| {
            db.is_decomposable(c)
                && match &config.mode {
                    HoldoutMode::FrequencyThreshold { max_count } => n <= *max_count,
                    HoldoutMode::VocabularyMembership { reference_vocab } => !reference_vocab.contains_char(c),
                }
        })
        .collect();
    let trigger_chars: BTreeSet<char> = trigger_counts.keys().copied().collect();

    let routes: Vec<Route> = bitext
        .par_iter()
        .map(|(src, tgt)| {
            if !src.chars().any(|c| trigger_chars.contains(&c)) {
                Route::Train
            } else if length_ratio(src, tgt) < config.length_ratio_max {
                Route::Unseen
            } else {
                Route::Rejected
            }
        })
        .collect();

    let mut result = SplitResult {
        trigger_chars,
        trigger_counts,
        ..Default::default()
    };
    for (pair, route) in bitext.iter().zip(routes) {
        match route {
            Route::Train => result.train.push(pair.clone()),
            Route::Unseen => result.unseen_test.push(pair.clone()),
            Route::Rejected => result.rejected_by_ratio += 1,
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerAudit {
    pub character: char,
    pub unseen_sentences: usize,
    pub train_sentences: usize,
    pub decomposable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub triggers: Vec<TriggerAudit>,
    pub train_sentences: usize,
    pub unseen_sentences: usize,
}

/// A broken split invariant. Line numbers are 1-based within the train or
/// unseen source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TriggerInTrain { character: char, line: usize },
    NoDecomposableTrigger { line: usize },
    UndecomposableTrigger { character: char, lines: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TriggerInTrain { character, line } => {
                write!(
                    f,
                    "trigger {character} (U+{:04X}) occurs in train line {line}",
                    *character as u32
                )
            }
            Violation::NoDecomposableTrigger { line } => {
                write!(f, "unseen line {line} has no decomposable trigger character")
            }
            Violation::UndecomposableTrigger { character, lines } => {
                let lines: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
                write!(
                    f,
                    "trigger {character} (U+{:04X}) has no decomposition; unseen lines {}",
                    *character as u32,
                    lines.join(",")
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct AuditFailure {
    pub violations: Vec<Violation>,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "split audit failed with {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

/// Re-checks a split from scratch: no trigger in any train source, every
/// unseen source carries a decomposable trigger, every trigger decomposes.
pub fn audit_split(result: &SplitResult, db: &DecompositionDb) -> std::result::Result<AuditReport, AuditFailure> {
    let triggers = &result.trigger_chars;
    let mut violations = Vec::new();
    let mut stats: BTreeMap<char, TriggerAudit> = triggers
        .iter()
        .map(|&c| {
            (
                c,
                TriggerAudit {
                    character: c,
                    unseen_sentences: 0,
                    train_sentences: 0,
                    decomposable: db.is_decomposable(c),
                },
            )
        })
        .collect();

    for (i, (src, _)) in result.train.iter().enumerate() {
        let present: BTreeSet<char> = src.chars().filter(|c| triggers.contains(c)).collect();
        for c in present {
            violations.push(Violation::TriggerInTrain {
                character: c,
                line: i + 1,
            });
            stats.get_mut(&c).expect("trigger").train_sentences += 1;
        }
    }
    for (i, (src, _)) in result.unseen_test.iter().enumerate() {
        let present: BTreeSet<char> = src.chars().filter(|c| triggers.contains(c)).collect();
        if !present.iter().any(|&c| db.is_decomposable(c)) {
            violations.push(Violation::NoDecomposableTrigger { line: i + 1 });
        }
        for c in present {
            stats.get_mut(&c).expect("trigger").unseen_sentences += 1;
        }
    }
    for s in stats.values().filter(|s| !s.decomposable) {
        let lines = result
            .unseen_test
            .iter()
            .enumerate()
            .filter(|(_, (src, _))| src.contains(s.character))
            .map(|(i, _)| i + 1)
            .collect();
        violations.push(Violation::UndecomposableTrigger {
            character: s.character,
            lines,
        });
    }

    if violations.is_empty() {
        Ok(AuditReport {
            triggers: stats.into_values().collect(),
            train_sentences: result.train.len(),
            unseen_sentences: result.unseen_test.len(),
        })
    } else {
        Err(AuditFailure { violations })
    }
}

/// Pairs up two aligned one-sentence-per-line readers.
pub fn read_bitext<S: BufRead, T: BufRead>(src: S, tgt: T) -> Result<Vec<SentencePair>> {
    let src: Vec<String> = src.lines().collect::<std::io::Result<_>>()?;
    let tgt: Vec<String> = tgt.lines().collect::<std::io::Result<_>>()?;
    if src.len() != tgt.len() {
        return Err(Error::Misaligned {
            src: src.len(),
            tgt: tgt.len(),
        });
    }
    Ok(src.into_iter().zip(tgt).collect())
}

/// Reads `source<TAB>target` lines.
pub fn read_bitext_tsv<R: BufRead>(reader: R) -> Result<Vec<SentencePair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let Some((src, tgt)) = line.split_once('\t') else {
            return Err(Error::Table {
                line: i + 1,
                message: "expected source<TAB>target".into(),
            });
        };
        out.push((src.to_string(), tgt.to_string()));
    }
    Ok(out)
}

fn write_lines<'a, I: Iterator<Item = &'a str>>(path: &Path, lines: I) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in lines {
        w.write_all(l.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(BufReader::new(File::open(path)?)
        .lines()
        .collect::<std::io::Result<_>>()?)
}

/// Writes the four corpus files and the trigger manifest into `dir`.
pub fn write_split(dir: &Path, result: &SplitResult) -> Result<()> {
    write_lines(&dir.join(TRAIN_SRC), result.train.iter().map(|p| p.0.as_str()))?;
    write_lines(&dir.join(TRAIN_TGT), result.train.iter().map(|p| p.1.as_str()))?;
    write_lines(&dir.join(UNSEEN_SRC), result.unseen_test.iter().map(|p| p.0.as_str()))?;
    write_lines(&dir.join(UNSEEN_TGT), result.unseen_test.iter().map(|p| p.1.as_str()))?;
    let mut w = BufWriter::new(File::create(dir.join(TRIGGERS))?);
    for (c, n) in &result.trigger_counts {
        writeln!(w, "{c}\t{n}")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a split written by [`write_split`]. The ratio-rejected count is
/// not stored and reads back as zero.
pub fn read_split(dir: &Path) -> Result<SplitResult> {
    let train = read_bitext(
        BufReader::new(File::open(dir.join(TRAIN_SRC))?),
        BufReader::new(File::open(dir.join(TRAIN_TGT))?),
    )?;
    let unseen_test = read_bitext(
        BufReader::new(File::open(dir.join(UNSEEN_SRC))?),
        BufReader::new(File::open(dir.join(UNSEEN_TGT))?),
    )?;
    let mut trigger_counts = BTreeMap::new();
    for (i, line) in read_lines(&dir.join(TRIGGERS))?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Table {
            line: i + 1,
            message: format!("bad trigger manifest line {line:?}"),
        };
        let (c, n) = line.split_once('\t').ok_or_else(bad)?;
        let mut chars = c.chars();
        let (Some(c), None) = (chars.next(), chars.next()) else {
            return Err(bad());
        };
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        trigger_counts.insert(c, n);
    }
    Ok(SplitResult {
        train,
        unseen_test,
        trigger_chars: trigger_counts.keys().copied().collect(),
        trigger_counts,
        rejected_by_ratio: 0,
    })
}
