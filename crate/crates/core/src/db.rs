//! Character decomposition table plus the base-form and semantic replacement
//! tables used by the inference-time schemes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ids::{Component, DecompositionTree, Idc, IdsFile, IdsRecord};

/// Recursion cap for training decomposition.
pub const DEFAULT_MAX_DEPTH: usize = 8;

/// Bumped whenever an embedded default table changes.
pub const TABLES_VERSION: &str = "1";

/// Positional variant radical → standalone base form. `阝` is mapped to its
/// left-hand reading (阜); the right-hand reading is 邑.
pub const DEFAULT_BASE_FORMS: &[(char, char)] = &[
    ('氵', '水'),
    ('亻', '人'),
    ('扌', '手'),
    ('忄', '心'),
    ('⺗', '心'),
    ('犭', '犬'),
    ('艹', '艸'),
    ('⺾', '艸'),
    ('辶', '辵'),
    ('⻌', '辵'),
    ('飠', '食'),
    ('饣', '食'),
    ('訁', '言'),
    ('讠', '言'),
    ('釒', '金'),
    ('钅', '金'),
    ('礻', '示'),
    ('衤', '衣'),
    ('刂', '刀'),
    ('灬', '火'),
    ('⺮', '竹'),
    ('罒', '网'),
    ('纟', '糸'),
    ('𧾷', '足'),
    ('阝', '阜'),
    ('⻖', '阜'),
    ('⻏', '邑'),
    ('⺼', '肉'),
    ('牜', '牛'),
    ('爫', '爪'),
    ('耂', '老'),
    ('𤣩', '玉'),
    ('攵', '攴'),
    ('丬', '爿'),
];

pub const DEFAULT_SEMANTIC_REPLACEMENTS: &[(char, char)] = &[('疒', '病')];

/// A flattened decomposition symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Idc(Idc),
    Component(Component),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Idc(op) => write!(f, "{op}"),
            Symbol::Component(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatDecomposition {
    pub symbols: Vec<Symbol>,
    pub with_idc: bool,
}

impl FlatDecomposition {
    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.symbols.iter().filter_map(|s| match s {
            Symbol::Component(c) => Some(c),
            Symbol::Idc(_) => None,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for FlatDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.symbols.iter().try_for_each(|s| write!(f, "{s}"))
    }
}

/// Pre-order flattening of a tree; operators are kept only when `with_idc`.
pub fn flatten(tree: &DecompositionTree, with_idc: bool) -> FlatDecomposition {
    fn walk(t: &DecompositionTree, with_idc: bool, out: &mut Vec<Symbol>) {
        match t {
            DecompositionTree::Leaf(c) => out.push(Symbol::Component(c.clone())),
            DecompositionTree::Node { op, children } => {
                if with_idc {
                    out.push(Symbol::Idc(*op));
                }
                children.iter().for_each(|c| walk(c, with_idc, out));
            }
        }
    }
    let mut symbols = Vec::new();
    walk(tree, with_idc, &mut symbols);
    FlatDecomposition { symbols, with_idc }
}

#[derive(Debug, Clone)]
pub struct DecompositionDb {
    trees: HashMap<char, DecompositionTree>,
    base_forms: BTreeMap<char, char>,
    semantic_replacements: BTreeMap<char, char>,
}

impl Default for DecompositionDb {
    fn default() -> Self {
        DecompositionDb {
            trees: HashMap::new(),
            base_forms: DEFAULT_BASE_FORMS.iter().copied().collect(),
            semantic_replacements: DEFAULT_SEMANTIC_REPLACEMENTS.iter().copied().collect(),
        }
    }
}

impl DecompositionDb {
    /// Empty decomposition table with the default auxiliary tables.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<I: IntoIterator<Item = IdsRecord>>(records: I) -> Self {
        let mut db = Self::new();
        for r in records {
            db.insert(r.character, r.tree);
        }
        db
    }

    pub fn from_ids_file(file: IdsFile) -> Self {
        Self::from_records(file.records)
    }

    /// Adds an entry. Self-decompositions (`x → x`) are ignored; returns
    /// whether the entry was stored. A later entry for the same character
    /// does not replace an earlier one.
    pub fn insert(&mut self, character: char, tree: DecompositionTree) -> bool {
        if tree == DecompositionTree::leaf(character) || self.trees.contains_key(&character) {
            return false;
        }
        self.trees.insert(character, tree);
        true
    }

    pub fn with_base_forms(mut self, table: BTreeMap<char, char>) -> Result<Self> {
        check_acyclic(&table)?;
        self.base_forms = table;
        Ok(self)
    }

    pub fn with_semantic_replacements(mut self, table: BTreeMap<char, char>) -> Self {
        self.semantic_replacements = table;
        self
    }

    pub fn get(&self, character: char) -> Option<&DecompositionTree> {
        self.trees.get(&character)
    }

    pub fn is_decomposable(&self, character: char) -> bool {
        self.trees.contains_key(&character)
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn base_forms(&self) -> &BTreeMap<char, char> {
        &self.base_forms
    }

    pub fn semantic_replacements(&self) -> &BTreeMap<char, char> {
        &self.semantic_replacements
    }

    /// Expands `character` and then, level by level, every component that
    /// has its own entry, until nothing changes or `max_depth` levels have
    /// been applied. Depth 1 is the plain no-IDC flattening.
    pub fn expand_recursive(&self, character: char, max_depth: usize) -> Result<FlatDecomposition> {
        let tree = self.get(character).ok_or(Error::NotDecomposable(character))?;
        let mut comps: Vec<Component> = tree.leaves().into_iter().cloned().collect();
        for _ in 1..max_depth.max(1) {
            let mut changed = false;
            let mut next = Vec::with_capacity(comps.len() * 2);
            for comp in comps {
                match comp.as_char().and_then(|c| self.get(c)) {
                    Some(sub) => {
                        next.extend(sub.leaves().into_iter().cloned());
                        changed = true;
                    }
                    None => next.push(comp),
                }
            }
            comps = next;
            if !changed {
                break;
            }
        }
        Ok(FlatDecomposition {
            symbols: comps.into_iter().map(Symbol::Component).collect(),
            with_idc: false,
        })
    }

    /// Maps a variant radical to its base form, following chains.
    pub fn normalize_base_form(&self, component: &Component) -> Component {
        match component {
            Component::Char(c) => {
                let mut cur = *c;
                // The table is acyclic, so this terminates within len() steps.
                for _ in 0..=self.base_forms.len() {
                    match self.base_forms.get(&cur) {
                        Some(&next) => cur = next,
                        None => break,
                    }
                }
                Component::Char(cur)
            }
            Component::Entity(_) => component.clone(),
        }
    }

    pub fn semantic_replacement(&self, component: &Component) -> Option<Component> {
        let c = component.as_char()?;
        self.semantic_replacements.get(&c).map(|&r| Component::Char(r))
    }
}

fn check_acyclic(table: &BTreeMap<char, char>) -> Result<()> {
    for &start in table.keys() {
        let mut cur = start;
        for _ in 0..=table.len() {
            match table.get(&cur) {
                Some(&next) if next == start => return Err(Error::CyclicBaseForms(start)),
                Some(&next) => cur = next,
                None => break,
            }
        }
    }
    Ok(())
}

/// Reads a two-column `from<TAB>to` table of single scalars. Blank lines and
/// lines starting with `;;` or `#` are skipped.
pub fn read_char_table<R: BufRead>(reader: R) -> Result<BTreeMap<char, char>> {
    let mut table = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with(";;") || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Table { line: i + 1, message };
        let mut cols = line.split('\t');
        let (Some(from), Some(to), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(err(format!("expected two tab-separated columns, got {line:?}")));
        };
        let from = single_scalar(from).ok_or_else(|| err(format!("{from:?} is not one character")))?;
        let to = single_scalar(to).ok_or_else(|| err(format!("{to:?} is not one character")))?;
        if table.insert(from, to).is_some() {
            return Err(err(format!("duplicate entry for {from:?}")));
        }
    }
    Ok(table)
}

pub fn write_char_table<W: Write>(mut w: W, table: &BTreeMap<char, char>) -> std::io::Result<()> {
    for (from, to) in table {
        writeln!(w, "{from}\t{to}")?;
    }
    Ok(())
}

fn single_scalar(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::parse_ids;

    fn db(entries: &[(char, &str)]) -> DecompositionDb {
        let mut db = DecompositionDb::new();
        for (c, ids) in entries {
            db.insert(*c, parse_ids(ids).unwrap());
        }
        db
    }

    #[test]
    fn flatten_examples() {
        let t = parse_ids("⿰魚弱").unwrap();
        assert_eq!(flatten(&t, true).to_string(), "⿰魚弱");
        assert_eq!(flatten(&t, true).len(), 3);
        assert_eq!(flatten(&t, false).to_string(), "魚弱");
        let leaf = DecompositionTree::leaf('木');
        assert_eq!(flatten(&leaf, true).to_string(), "木");
        assert_eq!(flatten(&leaf, false).to_string(), "木");
        let nested = parse_ids("⿱木⿰木木").unwrap();
        assert_eq!(flatten(&nested, true).to_string(), "⿱木⿰木木");
        assert_eq!(flatten(&nested, false).to_string(), "木木木");
    }

    #[test]
    fn recursive_expansion() {
        let d = db(&[('森', "⿱木林"), ('林', "⿰木木"), ('校', "⿰木交")]);
        assert_eq!(d.expand_recursive('森', 2).unwrap().to_string(), "木木木");
        assert_eq!(d.expand_recursive('森', 1).unwrap().to_string(), "木林");
        assert_eq!(
            d.expand_recursive('森', DEFAULT_MAX_DEPTH).unwrap().to_string(),
            "木木木"
        );
        assert_eq!(d.expand_recursive('校', 2).unwrap().to_string(), "木交");
        assert!(matches!(d.expand_recursive('木', 2), Err(Error::NotDecomposable('木'))));
    }

    #[test]
    fn cyclic_entries_are_bounded() {
        let d = db(&[('甲', "⿰乙口"), ('乙', "⿰甲口")]);
        let out = d.expand_recursive('甲', 5).unwrap();
        assert_eq!(out.len(), 6);
    }

    #[test]
    fn self_decomposition_dropped() {
        let mut d = DecompositionDb::new();
        assert!(!d.insert('α', DecompositionTree::leaf('α')));
        assert!(d.insert('丷', DecompositionTree::leaf('八')));
        assert!(!d.insert('丷', DecompositionTree::leaf('儿')));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn base_forms() {
        let d = DecompositionDb::new();
        assert_eq!(d.normalize_base_form(&Component::Char('氵')), Component::Char('水'));
        assert_eq!(d.normalize_base_form(&Component::Char('魚')), Component::Char('魚'));
        let e = Component::Entity("CDP-8C4B".into());
        assert_eq!(d.normalize_base_form(&e), e);
        assert_eq!(d.normalize_base_form(&Component::Char('阝')), Component::Char('阜'));
    }

    #[test]
    fn default_tables_are_sane() {
        assert!(DEFAULT_BASE_FORMS.len() >= 30);
        let table: BTreeMap<char, char> = DEFAULT_BASE_FORMS.iter().copied().collect();
        assert_eq!(table.len(), DEFAULT_BASE_FORMS.len());
        check_acyclic(&table).unwrap();
        // No base form is itself a variant, so one lookup suffices.
        assert!(table.values().all(|b| !table.contains_key(b)));
    }

    #[test]
    fn chains_and_cycles() {
        let chain: BTreeMap<char, char> = [('a', 'b'), ('b', 'c')].into_iter().collect();
        let d = DecompositionDb::new().with_base_forms(chain).unwrap();
        let a = Component::Char('a');
        assert_eq!(d.normalize_base_form(&a), Component::Char('c'));
        assert_eq!(d.normalize_base_form(&d.normalize_base_form(&a)), Component::Char('c'));

        let cyc: BTreeMap<char, char> = [('a', 'b'), ('b', 'a')].into_iter().collect();
        assert!(matches!(
            DecompositionDb::new().with_base_forms(cyc),
            Err(Error::CyclicBaseForms(_))
        ));
        let selfloop: BTreeMap<char, char> = [('a', 'a')].into_iter().collect();
        assert!(DecompositionDb::new().with_base_forms(selfloop).is_err());
    }

    #[test]
    fn semantic_replacements() {
        let d = DecompositionDb::new();
        assert_eq!(
            d.semantic_replacement(&Component::Char('疒')),
            Some(Component::Char('病'))
        );
        assert_eq!(d.semantic_replacement(&Component::Char('木')), None);
        let custom: BTreeMap<char, char> = [('心', '情')].into_iter().collect();
        let d = d.with_semantic_replacements(custom);
        assert_eq!(
            d.semantic_replacement(&Component::Char('心')),
            Some(Component::Char('情'))
        );
        assert_eq!(d.semantic_replacement(&Component::Char('疒')), None);
    }

    #[test]
    fn table_io() {
        let text = ";; comment\n氵\t水\n\n# also comment\n亻\t人\r\n";
        let t = read_char_table(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        let mut buf = Vec::new();
        write_char_table(&mut buf, &t).unwrap();
        assert_eq!(read_char_table(buf.as_slice()).unwrap(), t);

        assert!(matches!(
            read_char_table("氵水\n".as_bytes()),
            Err(Error::Table { line: 1, .. })
        ));
        assert!(matches!(
            read_char_table("a\tb\nab\tc\n".as_bytes()),
            Err(Error::Table { line: 2, .. })
        ));
        assert!(matches!(
            read_char_table("a\tb\na\tc\n".as_bytes()),
            Err(Error::Table { line: 2, .. })
        ));
    }
}
