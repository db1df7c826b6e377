//! Ideographic Description Sequences.
//!
//! An IDS is a prefix expression: an ideographic description character
//! (IDC, U+2FF0..=U+2FFB) followed by its operands, each of which is either a
//! component or another IDS. Components without a code point are written in
//! CHISE entity notation, `&NAME;`.

use std::fmt;
use std::io::BufRead;

use crate::error::{IdsError, Result};

/// One of the twelve ideographic description characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Idc {
    LeftToRight,
    AboveToBelow,
    LeftToMiddleToRight,
    AboveToMiddleToBelow,
    FullSurround,
    SurroundFromAbove,
    SurroundFromBelow,
    SurroundFromLeft,
    SurroundFromUpperLeft,
    SurroundFromUpperRight,
    SurroundFromLowerLeft,
    Overlaid,
}

impl Idc {
    pub const ALL: [Idc; 12] = [
        Idc::LeftToRight,
        Idc::AboveToBelow,
        Idc::LeftToMiddleToRight,
        Idc::AboveToMiddleToBelow,
        Idc::FullSurround,
        Idc::SurroundFromAbove,
        Idc::SurroundFromBelow,
        Idc::SurroundFromLeft,
        Idc::SurroundFromUpperLeft,
        Idc::SurroundFromUpperRight,
        Idc::SurroundFromLowerLeft,
        Idc::Overlaid,
    ];

    pub fn from_char(c: char) -> Option<Idc> {
        let offset = (c as u32).checked_sub(0x2FF0)?;
        Idc::ALL.get(offset as usize).copied()
    }

    pub fn as_char(self) -> char {
        // ALL is laid out in code point order starting at U+2FF0.
        char::from_u32(0x2FF0 + self as u32).expect("IDC block is valid")
    }

    /// Number of operands: 3 for ⿲ and ⿳, 2 otherwise.
    pub fn arity(self) -> usize {
        match self {
            Idc::LeftToMiddleToRight | Idc::AboveToMiddleToBelow => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Idc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Any code point in the IDC block, including the later additions
/// (U+2FFC..=U+2FFF, U+31EF) that this parser does not accept.
fn is_description_char(c: char) -> bool {
    matches!(c as u32, 0x2FF0..=0x2FFF | 0x31EF)
}

/// A leaf of a decomposition: either a code point or a named entity for
/// components that have no code point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Char(char),
    Entity(String),
}

impl Component {
    /// Builds a code point component, refusing description characters.
    pub fn char(c: char) -> Option<Component> {
        if is_description_char(c) {
            None
        } else {
            Some(Component::Char(c))
        }
    }

    /// Builds an entity reference; the name must be non-empty and free of
    /// whitespace and entity delimiters.
    pub fn entity(name: impl Into<String>) -> Option<Component> {
        let name = name.into();
        if is_valid_entity_name(&name) {
            Some(Component::Entity(name))
        } else {
            None
        }
    }

    pub fn as_char(&self) -> Option<char> {
        match self {
            Component::Char(c) => Some(*c),
            Component::Entity(_) => None,
        }
    }
}

fn is_valid_entity_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(|c| c.is_whitespace() || c == '&' || c == ';')
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Char(c) => write!(f, "{c}"),
            Component::Entity(name) => write!(f, "&{name};"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DecompositionTree {
    Leaf(Component),
    Node { op: Idc, children: Vec<DecompositionTree> },
}

impl DecompositionTree {
    pub fn leaf(c: char) -> DecompositionTree {
        DecompositionTree::Leaf(Component::Char(c))
    }

    /// Builds an operator node, checking the operand count.
    pub fn node(op: Idc, children: Vec<DecompositionTree>) -> Option<DecompositionTree> {
        (children.len() == op.arity()).then_some(DecompositionTree::Node { op, children })
    }

    pub fn depth(&self) -> usize {
        match self {
            DecompositionTree::Leaf(_) => 0,
            DecompositionTree::Node { children, .. } => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    /// Components in left-to-right order.
    pub fn leaves(&self) -> Vec<&Component> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Component>) {
        match self {
            DecompositionTree::Leaf(c) => out.push(c),
            DecompositionTree::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    fn write_prefix(&self, out: &mut String) {
        match self {
            DecompositionTree::Leaf(c) => {
                use std::fmt::Write;
                let _ = write!(out, "{c}");
            }
            DecompositionTree::Node { op, children } => {
                out.push(op.as_char());
                children.iter().for_each(|c| c.write_prefix(out));
            }
        }
    }
}

impl fmt::Display for DecompositionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_ids(self))
    }
}

/// Parses a complete IDS expression.
pub fn parse_ids(expr: &str) -> std::result::Result<DecompositionTree, IdsError> {
    if expr.is_empty() {
        return Err(IdsError::EmptyInput);
    }
    let mut parser = Parser { src: expr, pos: 0 };
    let tree = parser.tree()?;
    if parser.pos < expr.len() {
        return Err(IdsError::TrailingInput {
            offset: parser.pos,
            rest: expr[parser.pos..].to_string(),
        });
    }
    Ok(tree)
}

pub fn serialize_ids(tree: &DecompositionTree) -> String {
    let mut out = String::new();
    tree.write_prefix(&mut out);
    out
}

enum Token {
    Op(Idc),
    Leaf(Component),
}

struct Parser<'a> {
    src: &'a str,
    /// Byte offset of the next unread scalar.
    pos: usize,
}

impl Parser<'_> {
    fn tree(&mut self) -> std::result::Result<DecompositionTree, IdsError> {
        let start = self.pos;
        match self.token()? {
            None => Err(IdsError::EmptyInput),
            Some(Token::Leaf(c)) => Ok(DecompositionTree::Leaf(c)),
            Some(Token::Op(op)) => {
                let mut children = Vec::with_capacity(op.arity());
                for found in 0..op.arity() {
                    match self.tree() {
                        Ok(child) => children.push(child),
                        Err(IdsError::EmptyInput) => {
                            return Err(IdsError::Arity {
                                op: op.as_char(),
                                offset: start,
                                expected: op.arity(),
                                found,
                            })
                        }
                        Err(e) => return Err(e),
                    }
                }
                Ok(DecompositionTree::Node { op, children })
            }
        }
    }

    fn token(&mut self) -> std::result::Result<Option<Token>, IdsError> {
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok(None);
        };
        let offset = self.pos;
        if let Some(op) = Idc::from_char(c) {
            self.pos += c.len_utf8();
            return Ok(Some(Token::Op(op)));
        }
        if is_description_char(c) || c.is_whitespace() || c.is_control() {
            return Err(IdsError::UnknownToken {
                token: c.to_string(),
                offset,
            });
        }
        if c == '&' {
            let Some(end) = rest.find(';') else {
                return Err(IdsError::UnknownToken {
                    token: rest.to_string(),
                    offset,
                });
            };
            let name = &rest[1..end];
            if !is_valid_entity_name(name) {
                return Err(IdsError::UnknownToken {
                    token: rest[..=end].to_string(),
                    offset,
                });
            }
            self.pos += end + 1;
            return Ok(Some(Token::Leaf(Component::Entity(name.to_string()))));
        }
        self.pos += c.len_utf8();
        Ok(Some(Token::Leaf(Component::Char(c))))
    }
}

/// One well-formed entry of an IDS data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdsRecord {
    pub line: usize,
    pub character: char,
    pub tree: DecompositionTree,
}

/// A skipped line in an IDS data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// Fewer than three tab-separated columns.
    MissingColumn,
    /// Character column is not exactly one scalar.
    BadCharacter,
    /// `U+XXXX` label does not name the character in the second column.
    LabelMismatch,
    Ids(IdsError),
}

impl DiagnosticKind {
    pub fn name(&self) -> &'static str {
        match self {
            DiagnosticKind::MissingColumn => "MissingColumn",
            DiagnosticKind::BadCharacter => "BadCharacter",
            DiagnosticKind::LabelMismatch => "LabelMismatch",
            DiagnosticKind::Ids(e) => e.kind(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line:{} error:{} input:{}", self.line, self.kind.name(), self.input)
    }
}

#[derive(Debug, Clone, Default)]
pub struct IdsFile {
    pub records: Vec<IdsRecord>,
    pub diagnostics: Vec<Diagnostic>,
    /// Non-comment, non-blank lines seen.
    pub entry_lines: usize,
}

pub const COMMENT_PREFIX: &str = ";;";

/// Strips CHISE source annotations from one IDS alternative: a trailing
/// `[GTJK]` tag, or the newer `^...$(GTJK)` wrapper.
fn strip_source_tags(alt: &str) -> &str {
    let mut s = alt.trim();
    if let Some(inner) = s.strip_prefix('^') {
        if let Some(end) = inner.rfind('$') {
            return &inner[..end];
        }
    }
    if s.ends_with(']') {
        if let Some(open) = s.rfind('[') {
            if open > 0 {
                s = &s[..open];
            }
        }
    }
    s
}

fn parse_label(label: &str) -> Option<char> {
    let hex = label.strip_prefix("U+").or_else(|| label.strip_prefix("U-"))?;
    char::from_u32(u32::from_str_radix(hex, 16).ok()?)
}

/// Parses one data line. `Ok(None)` for blank and comment lines.
pub fn parse_ids_line(line_no: usize, raw: &str) -> std::result::Result<Option<IdsRecord>, Diagnostic> {
    let line = raw.strip_suffix('\r').unwrap_or(raw);
    if line.trim().is_empty() || line.starts_with(COMMENT_PREFIX) {
        return Ok(None);
    }
    let diag = |kind| Diagnostic {
        line: line_no,
        kind,
        input: line.to_string(),
    };
    let mut cols = line.split('\t');
    let (Some(label), Some(ch), Some(first)) = (cols.next(), cols.next(), cols.next()) else {
        return Err(diag(DiagnosticKind::MissingColumn));
    };
    let mut scalars = ch.chars();
    let (Some(character), None) = (scalars.next(), scalars.next()) else {
        return Err(diag(DiagnosticKind::BadCharacter));
    };
    if parse_label(label) != Some(character) {
        return Err(diag(DiagnosticKind::LabelMismatch));
    }
    match parse_ids(strip_source_tags(first)) {
        Ok(tree) => Ok(Some(IdsRecord {
            line: line_no,
            character,
            tree,
        })),
        Err(e) => Err(diag(DiagnosticKind::Ids(e))),
    }
}

/// Parses the lines of a CHISE-style IDS file. Line numbers are 1-based.
/// Malformed lines become diagnostics; nothing here is fatal.
pub fn parse_ids_file<I, S>(lines: I) -> IdsFile
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = IdsFile::default();
    for (i, line) in lines.into_iter().enumerate() {
        let line = line.as_ref();
        let stripped = line.strip_suffix('\r').unwrap_or(line);
        if !(stripped.trim().is_empty() || stripped.starts_with(COMMENT_PREFIX)) {
            out.entry_lines += 1;
        }
        match parse_ids_line(i + 1, line) {
            Ok(Some(rec)) => out.records.push(rec),
            Ok(None) => {}
            Err(d) => out.diagnostics.push(d),
        }
    }
    out
}

/// Reads and parses an IDS file from any reader. Only I/O errors are fatal.
pub fn read_ids_file<R: BufRead>(reader: R) -> Result<IdsFile> {
    let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
    Ok(parse_ids_file(lines))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(c: char) -> DecompositionTree {
        DecompositionTree::leaf(c)
    }

    #[test]
    fn arity_table() {
        for op in Idc::ALL {
            let expected = if matches!(op.as_char(), '⿲' | '⿳') { 3 } else { 2 };
            assert_eq!(op.arity(), expected, "{op}");
            assert_eq!(Idc::from_char(op.as_char()), Some(op));
        }
        assert_eq!(Idc::LeftToRight.as_char(), '⿰');
        assert_eq!(Idc::Overlaid.as_char(), '⿻');
        assert_eq!(Idc::from_char('⿼'), None);
    }

    #[test]
    fn parses_binary_node() {
        let t = parse_ids("⿰魚弱").unwrap();
        assert_eq!(
            t,
            DecompositionTree::Node {
                op: Idc::LeftToRight,
                children: vec![leaf('魚'), leaf('弱')]
            }
        );
    }

    #[test]
    fn single_component() {
        assert_eq!(parse_ids("木").unwrap(), leaf('木'));
    }

    #[test]
    fn nested() {
        let t = parse_ids("⿱木⿰木木").unwrap();
        let inner = DecompositionTree::node(Idc::LeftToRight, vec![leaf('木'), leaf('木')]).unwrap();
        let expected = DecompositionTree::node(Idc::AboveToBelow, vec![leaf('木'), inner]).unwrap();
        assert_eq!(t, expected);
        assert_eq!(serialize_ids(&t), "⿱木⿰木木");
    }

    #[test]
    fn ternary() {
        let t = parse_ids("⿲彳山攵").unwrap();
        assert_eq!(t.leaves().len(), 3);
        assert!(matches!(
            parse_ids("⿳亠口"),
            Err(IdsError::Arity {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_ids("⿰魚"),
            Err(IdsError::Arity {
                op: '⿰',
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(parse_ids("⿰"), Err(IdsError::Arity { found: 0, .. })));
        assert_eq!(parse_ids(""), Err(IdsError::EmptyInput));
        assert!(matches!(
            parse_ids("魚弱"),
            Err(IdsError::TrailingInput { offset: 3, .. })
        ));
        assert!(matches!(parse_ids("⿼魚弱"), Err(IdsError::UnknownToken { .. })));
        assert!(matches!(parse_ids("㇯魚弱"), Err(IdsError::UnknownToken { .. })));
        assert!(matches!(
            parse_ids("⿰ 魚弱"),
            Err(IdsError::UnknownToken { offset: 3, .. })
        ));
        assert!(matches!(parse_ids("⿰\u{7}弱"), Err(IdsError::UnknownToken { .. })));
        // Inner arity failure reports the inner operator.
        assert!(matches!(
            parse_ids("⿱木⿰木"),
            Err(IdsError::Arity {
                op: '⿰',
                offset: 6,
                ..
            })
        ));
    }

    #[test]
    fn entities() {
        let t = parse_ids("⿰&CDP-8C4B;弱").unwrap();
        assert_eq!(t.leaves()[0], &Component::Entity("CDP-8C4B".into()));
        assert_eq!(serialize_ids(&t), "⿰&CDP-8C4B;弱");
        assert!(matches!(parse_ids("⿰&;弱"), Err(IdsError::UnknownToken { .. })));
        assert!(matches!(parse_ids("⿰&CDP-8C4B弱"), Err(IdsError::UnknownToken { .. })));
        assert!(matches!(parse_ids("⿰&A B;弱"), Err(IdsError::UnknownToken { .. })));
        assert_eq!(Component::entity(""), None);
        assert_eq!(Component::entity("a b"), None);
        assert_eq!(Component::char('⿰'), None);
    }

    #[test]
    fn serialize_examples() {
        let t = DecompositionTree::node(Idc::SurroundFromUpperLeft, vec![leaf('疒'), leaf('倉')]).unwrap();
        assert_eq!(serialize_ids(&t), "⿸疒倉");
        assert_eq!(serialize_ids(&leaf('木')), "木");
        assert!(DecompositionTree::node(Idc::LeftToRight, vec![leaf('木')]).is_none());
    }

    #[test]
    fn file_lines() {
        let lines = [
            ";; -*- coding: utf-8 -*-",
            "U+9C2F\t鰯\t⿰魚弱",
            "",
            "U+4E0E\t与\t⿹②一[GTKV]\t⿻②一[J]",
            "U+7621\t瘡\t^⿸疒倉$(GHTJKP)",
            "U+9C2F\t鰯\t⿰魚",
            "U+9C2F\t鰯",
            "U+9C2E\t鰯\t⿰魚弱",
            "U+6728\t木木\t木",
            "U+68EE\t森\t⿱木林\r",
        ];
        let file = parse_ids_file(lines);
        let chars: Vec<char> = file.records.iter().map(|r| r.character).collect();
        assert_eq!(chars, vec!['鰯', '与', '瘡', '森']);
        assert_eq!(file.records[0].tree, parse_ids("⿰魚弱").unwrap());
        assert_eq!(serialize_ids(&file.records[1].tree), "⿹②一");
        assert_eq!(serialize_ids(&file.records[2].tree), "⿸疒倉");
        assert_eq!(file.records[3].line, 10);
        assert_eq!(file.entry_lines, 8);
        let kinds: Vec<(usize, &str)> = file.diagnostics.iter().map(|d| (d.line, d.kind.name())).collect();
        assert_eq!(
            kinds,
            vec![
                (6, "ArityError"),
                (7, "MissingColumn"),
                (8, "LabelMismatch"),
                (9, "BadCharacter")
            ]
        );
        assert_eq!(
            file.diagnostics[0].to_string(),
            "line:6 error:ArityError input:U+9C2F\t鰯\t⿰魚"
        );
    }

    #[test]
    fn source_tags() {
        assert_eq!(strip_source_tags("⿰魚弱[GTJ]"), "⿰魚弱");
        assert_eq!(strip_source_tags("^⿰魚弱$(GTJ)"), "⿰魚弱");
        assert_eq!(strip_source_tags("⿰魚弱"), "⿰魚弱");
        assert_eq!(strip_source_tags("["), "[");
    }
}
