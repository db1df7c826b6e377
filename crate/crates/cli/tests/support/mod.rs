#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

#[path = "../../../core/tests/common/synthetic.rs"]
pub mod synthetic;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subchar"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn subchar")
}

pub fn write(dir: &Path, name: &str, lines: &[impl AsRef<str>]) -> PathBuf {
    let p = dir.join(name);
    let mut s = String::new();
    for l in lines {
        s.push_str(l.as_ref());
        s.push('\n');
    }
    fs::write(&p, s).unwrap();
    p
}

/// Writes a synthetic corpus as `src`, `tgt` and `ids.txt` under `dir`.
pub fn write_synthetic(dir: &Path, syn: &synthetic::Synthetic) -> (PathBuf, PathBuf, PathBuf) {
    let src: Vec<&str> = syn.bitext.iter().map(|p| p.0.as_str()).collect();
    let tgt: Vec<&str> = syn.bitext.iter().map(|p| p.1.as_str()).collect();
    (
        write(dir, "src", &src),
        write(dir, "tgt", &tgt),
        write(dir, "ids.txt", &syn.ids_lines()),
    )
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
