//! Greedy byte-pair encoding over whitespace-separated words.
//!
//! Symbols start as single scalars. Each step merges the most frequent
//! adjacent pair (ties go to the lexicographically smallest pair), and
//! learning stops early once no pair occurs at least twice. There is no
//! end-of-word symbol; merges never cross word boundaries.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::io::{BufRead, Write};
use std::rc::Rc;

use crate::error::{Error, Result};

pub const DEFAULT_MARKER: &str = "@@";

const HEADER_TAG: &str = "#bpe";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    num_merges: usize,
    marker: String,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    pub fn new(merges: Vec<(String, String)>, num_merges: usize, marker: impl Into<String>) -> Self {
        let ranks = merges.iter().enumerate().rev().map(|(i, p)| (p.clone(), i)).collect();
        BpeModel {
            merges,
            num_merges,
            marker: marker.into(),
            ranks,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Merge budget requested at learn time; `merges().len()` may be smaller.
    pub fn num_merges(&self) -> usize {
        self.num_merges
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    /// Splits one word into subwords, without markers.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            symbols = merge_pair(symbols, left, right);
        }
        symbols
    }

    /// Segments every word of a whitespace-tokenized sentence, marking
    /// non-final subwords with the continuation marker.
    pub fn apply(&self, sentence: &str) -> String {
        let mut out = String::with_capacity(sentence.len() * 2);
        for word in sentence.split_whitespace() {
            let pieces = self.segment_word(word);
            let last = pieces.len() - 1;
            for (i, piece) in pieces.iter().enumerate() {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(piece);
                if i < last {
                    out.push_str(&self.marker);
                }
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{HEADER_TAG} marker={} num_merges={}", self.marker, self.num_merges)?;
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<BpeModel> {
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let bad = |line, message: &str| Error::BpeModel {
            line,
            message: message.to_string(),
        };
        let mut fields = header.trim_end_matches('\r').split(' ');
        if fields.next() != Some(HEADER_TAG) {
            return Err(bad(1, "missing `#bpe marker=... num_merges=...` header"));
        }
        let mut marker = None;
        let mut num_merges = None;
        for f in fields {
            if let Some(m) = f.strip_prefix("marker=") {
                marker = Some(m.to_string());
            } else if let Some(n) = f.strip_prefix("num_merges=") {
                num_merges = Some(n.parse::<usize>().map_err(|_| bad(1, "num_merges is not a count"))?);
            } else {
                return Err(bad(1, "unknown header field"));
            }
        }
        let (Some(marker), Some(num_merges)) = (marker, num_merges) else {
            return Err(bad(1, "header needs marker= and num_merges="));
        };
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => return Err(bad(i + 2, "expected `left right`")),
            }
        }
        if merges.len() > num_merges {
            return Err(bad(1, "more merges than num_merges"));
        }
        Ok(BpeModel::new(merges, num_merges, marker))
    }
}

/// Merges every non-overlapping occurrence of `left right`, scanning left to
/// right.
fn merge_pair(symbols: Vec<String>, left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut it = symbols.into_iter().peekable();
    while let Some(s) = it.next() {
        if s == left && it.peek().is_some_and(|n| n == right) {
            let r = it.next().unwrap();
            out.push(s + &r);
        } else {
            out.push(s);
        }
    }
    out
}

/// Applies a model to a sentence.
pub fn apply_bpe(model: &BpeModel, sentence: &str) -> String {
    model.apply(sentence)
}

/// Undoes `apply_bpe` on a single-space-separated sentence.
pub fn strip_markers(segmented: &str, marker: &str) -> String {
    segmented.replace(&format!("{marker} "), "")
}

pub fn learn_bpe<I, S>(corpus: I, num_merges: usize) -> BpeModel
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    learn_bpe_with_marker(corpus, num_merges, DEFAULT_MARKER)
}

type Pair = (u32, u32);

#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    strings: Reverse<(Rc<str>, Rc<str>)>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.count, &self.strings).cmp(&(other.count, &other.strings))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Learner {
    symbols: Vec<Rc<str>>,
    intern: HashMap<Rc<str>, u32>,
    words: Vec<Vec<u32>>,
    freqs: Vec<i64>,
    pair_counts: HashMap<Pair, i64>,
    pair_words: HashMap<Pair, BTreeSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Learner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.intern.get(s) {
            return id;
        }
        let rc: Rc<str> = Rc::from(s);
        let id = self.symbols.len() as u32;
        self.symbols.push(rc.clone());
        self.intern.insert(rc, id);
        id
    }

    fn push(&mut self, pair: Pair) {
        let count = self.pair_counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            let strings = Reverse((
                self.symbols[pair.0 as usize].clone(),
                self.symbols[pair.1 as usize].clone(),
            ));
            self.heap.push(Candidate { count, strings, pair });
        }
    }

    fn account(&mut self, word: usize, sign: i64, touched: &mut BTreeSet<Pair>) {
        let freq = self.freqs[word] * sign;
        for w in self.words[word].windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_insert(0) += freq;
            if sign > 0 {
                self.pair_words.entry(pair).or_default().insert(word);
            }
            touched.insert(pair);
        }
    }

    /// Pops the best pair whose heap entry is still current.
    fn best(&mut self) -> Option<(Pair, i64)> {
        while let Some(c) = self.heap.pop() {
            if self.pair_counts.get(&c.pair).copied() == Some(c.count) {
                return Some((c.pair, c.count));
            }
        }
        None
    }

    fn merge(&mut self, pair: Pair) {
        let merged = format!("{}{}", self.symbols[pair.0 as usize], self.symbols[pair.1 as usize]);
        let new_id = self.intern(&merged);
        let mut touched = BTreeSet::new();
        let words = self.pair_words.remove(&pair).unwrap_or_default();
        for w in words {
            if !self.words[w].windows(2).any(|p| (p[0], p[1]) == pair) {
                continue;
            }
            self.account(w, -1, &mut touched);
            let old = std::mem::take(&mut self.words[w]);
            let mut out = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && (old[i], old[i + 1]) == pair {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(old[i]);
                    i += 1;
                }
            }
            self.words[w] = out;
            self.account(w, 1, &mut touched);
        }
        for p in touched {
            self.push(p);
        }
    }
}

pub fn learn_bpe_with_marker<I, S>(corpus: I, num_merges: usize, marker: &str) -> BpeModel
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut vocab: HashMap<String, i64> = HashMap::new();
    for sentence in corpus {
        for word in sentence.as_ref().split_whitespace() {
            *vocab.entry(word.to_string()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, i64)> = vocab.into_iter().collect();
    entries.sort();

    let mut learner = Learner {
        symbols: Vec::new(),
        intern: HashMap::new(),
        words: Vec::with_capacity(entries.len()),
        freqs: Vec::with_capacity(entries.len()),
        pair_counts: HashMap::new(),
        pair_words: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    for (word, freq) in &entries {
        let ids: Vec<u32> = word
            .chars()
            .map(|c| learner.intern(c.encode_utf8(&mut [0; 4])))
            .collect();
        learner.words.push(ids);
        learner.freqs.push(*freq);
    }
    let mut touched = BTreeSet::new();
    for w in 0..learner.words.len() {
        learner.account(w, 1, &mut touched);
    }
    for p in touched {
        learner.push(p);
    }

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let Some((pair, count)) = learner.best() else { break };
        if count < 2 {
            break;
        }
        merges.push((
            learner.symbols[pair.0 as usize].to_string(),
            learner.symbols[pair.1 as usize].to_string(),
        ));
        learner.merge(pair);
    }
    BpeModel::new(merges, num_merges, marker)
}
