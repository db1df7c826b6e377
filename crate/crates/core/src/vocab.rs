use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::bpe::BpeModel;
use crate::error::Result;

/// Symbols known to a trained model.
///
/// `char_set` is what decides whether a character is unseen; `token_set`
/// holds subword strings once a BPE model has been attached.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    char_set: BTreeSet<char>,
    token_set: BTreeSet<String>,
    pub source_corpus_id: String,
}

/// Collects every non-whitespace scalar of the corpus.
pub fn build_char_vocab<I, S>(corpus: I) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut vocab = Vocabulary::default();
    for sentence in corpus {
        vocab
            .char_set
            .extend(sentence.as_ref().chars().filter(|c| !c.is_whitespace()));
    }
    vocab
}

pub fn is_unseen(vocab: &Vocabulary, c: char) -> bool {
    !vocab.contains_char(c)
}

impl Vocabulary {
    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Self {
        Vocabulary {
            char_set: chars.into_iter().filter(|c| !c.is_whitespace()).collect(),
            ..Default::default()
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.source_corpus_id = id.into();
        self
    }

    pub fn contains_char(&self, c: char) -> bool {
        self.char_set.contains(&c)
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.token_set.contains(token)
    }

    pub fn char_set(&self) -> &BTreeSet<char> {
        &self.char_set
    }

    pub fn token_set(&self) -> &BTreeSet<String> {
        &self.token_set
    }

    /// Records the subwords `model` produces on `corpus` (markers removed).
    /// Every scalar of a new token is also added to `char_set`.
    pub fn attach_bpe<I, S>(&mut self, model: &BpeModel, corpus: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for sentence in corpus {
            for word in sentence.as_ref().split_whitespace() {
                for piece in model.segment_word(word) {
                    self.char_set.extend(piece.chars());
                    self.token_set.insert(piece);
                }
            }
        }
    }

    /// Reads one symbol per line. Only the first whitespace-separated field
    /// is used, so `symbol<SPACE>count` files load too; a trailing
    /// `marker` is removed from each symbol.
    pub fn read_from<R: BufRead>(reader: R, marker: Option<&str>) -> Result<Vocabulary> {
        let mut vocab = Vocabulary::default();
        for line in reader.lines() {
            let line = line?;
            let Some(mut symbol) = line.split_whitespace().next() else {
                continue;
            };
            if let Some(m) = marker.filter(|m| !m.is_empty()) {
                symbol = symbol.strip_suffix(m).filter(|s| !s.is_empty()).unwrap_or(symbol);
            }
            vocab.char_set.extend(symbol.chars());
            vocab.token_set.insert(symbol.to_string());
        }
        Ok(vocab)
    }

    /// Writes every character, then every multi-scalar token, one per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.char_set {
            writeln!(w, "{c}")?;
        }
        for t in self.token_set.iter().filter(|t| t.chars().nth(1).is_some()) {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }
}
