//! Seeded synthetic bitext with planted rare characters.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subchar_core::db::DecompositionDb;
use subchar_core::ids::{DecompositionTree, Idc};

pub struct Synthetic {
    pub bitext: Vec<(String, String)>,
    pub db: DecompositionDb,
    /// The database contents, in insertion order.
    pub entries: Vec<(char, DecompositionTree)>,
    /// Rare decomposable characters and how many times each was planted.
    pub planted: BTreeMap<char, usize>,
    /// Rare characters with no database entry.
    pub undecomposable: Vec<char>,
}

fn chars_from(start: u32, n: u32) -> Vec<char> {
    (start..start + n).filter_map(char::from_u32).collect()
}

pub fn generate(seed: u64, n_pairs: usize) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = chars_from(0x4E00, 60);
    let kana = chars_from(0x3041, 20);
    let rare = chars_from(0x9B00, 20);
    let undecomposable = chars_from(0x3400, 5);

    let mut entries = Vec::new();
    for &c in &rare {
        let l = *common.choose(&mut rng).unwrap();
        let r = *common.choose(&mut rng).unwrap();
        let t = DecompositionTree::node(
            Idc::LeftToRight,
            vec![DecompositionTree::leaf(l), DecompositionTree::leaf(r)],
        )
        .unwrap();
        entries.push((c, t));
    }
    // Frequent characters may be decomposable too; that must not make them triggers.
    for &c in common.iter().take(10) {
        let t = DecompositionTree::node(
            Idc::AboveToBelow,
            vec![DecompositionTree::leaf(common[30]), DecompositionTree::leaf(common[31])],
        )
        .unwrap();
        entries.push((c, t));
    }
    let mut db = DecompositionDb::new();
    for (c, t) in &entries {
        db.insert(*c, t.clone());
    }

    let mut sources: Vec<Vec<String>> = (0..n_pairs)
        .map(|_| {
            (0..rng.gen_range(3..=12))
                .map(|_| {
                    let len = rng.gen_range(1..=3);
                    (0..len)
                        .map(|_| {
                            if rng.gen_bool(0.8) {
                                *common.choose(&mut rng).unwrap()
                            } else {
                                *kana.choose(&mut rng).unwrap()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut planted = BTreeMap::new();
    let indices: Vec<usize> = (0..n_pairs).collect();
    for &c in &rare {
        let k = rng.gen_range(1..=4);
        for &i in indices.choose_multiple(&mut rng, k) {
            let pos = rng.gen_range(0..sources[i].len());
            sources[i][pos].push(c);
        }
        planted.insert(c, k);
    }
    for &c in &undecomposable {
        let i = rng.gen_range(0..n_pairs);
        sources[i].push(c.to_string());
    }

    let words = ["the", "oil", "fish", "was", "most", "in", "air", "of", "and", "a"];
    let bitext = sources
        .into_iter()
        .map(|toks| {
            let n_src = toks.len();
            let n_tgt = match rng.gen_range(0..100) {
                0..=2 => n_src * 5,
                3 => 0,
                _ => ((n_src as f64) * rng.gen_range(0.8..1.6)).round().max(1.0) as usize,
            };
            let tgt: Vec<&str> = (0..n_tgt).map(|_| *words.choose(&mut rng).unwrap()).collect();
            (toks.join(" "), tgt.join(" "))
        })
        .collect();

    Synthetic {
        bitext,
        db,
        entries,
        planted,
        undecomposable,
    }
}

impl Synthetic {
    /// The database as IDS file lines.
    pub fn ids_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(c, t)| format!("U+{:04X}\t{c}\t{}", *c as u32, subchar_core::ids::serialize_ids(t)))
            .collect()
    }
}
