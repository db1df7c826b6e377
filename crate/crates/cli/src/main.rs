use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::LazyLock;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use subchar_core::bpe::{self, BpeModel, DEFAULT_MARKER};
use subchar_core::db::{self, DecompositionDb, DEFAULT_MAX_DEPTH, TABLES_VERSION};
use subchar_core::ids::{read_ids_file, serialize_ids};
use subchar_core::schemes::{apply_inference_scheme, preprocess_corpus, SchemeConfig, SchemeKind};
use subchar_core::testset::{self, HoldoutConfig, DEFAULT_LENGTH_RATIO_MAX};
use subchar_core::vocab::{build_char_vocab, Vocabulary};

static VERSION: LazyLock<String> =
    LazyLock::new(|| format!("{} (default tables v{TABLES_VERSION})", env!("CARGO_PKG_VERSION")));

#[derive(Parser)]
#[command(name = "subchar", version = VERSION.as_str(), about = "Sub-character decomposition for logographic MT corpora")]
struct Cli {
    /// Worker threads for corpus-level work; output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an IDS data file and print its entries in normalized form.
    ParseIds {
        #[arg(long, value_name = "FILE")]
        ids: PathBuf,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Apply a scheme to one character or to each input line.
    Decompose {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, value_name = "CHAR", conflicts_with = "input")]
        char: Option<char>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Learn a BPE merge list.
    LearnBpe {
        #[arg(long, value_name = "N")]
        merges: usize,
        #[arg(long, default_value = DEFAULT_MARKER)]
        marker: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Segment text with a learned BPE model.
    ApplyBpe {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Build a vocabulary file from a corpus.
    BuildVocab {
        /// Also record the subwords this model produces on the corpus.
        #[arg(long, value_name = "FILE")]
        bpe: Option<PathBuf>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Apply a scheme to a one-sentence-per-line corpus.
    Preprocess {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        io: IoArgs,
        /// Summary line destination (always echoed to stderr).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Per-character event log.
        #[arg(long, value_name = "FILE")]
        log: Option<PathBuf>,
    },
    /// Split a bitext into train and an unseen-character test set.
    BuildUnseenSet {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        bitext: BitextArgs,
        #[arg(
            long,
            value_name = "N",
            conflicts_with = "reference_vocab",
            required_unless_present = "reference_vocab"
        )]
        max_count: Option<usize>,
        #[arg(long, value_name = "FILE")]
        reference_vocab: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_LENGTH_RATIO_MAX)]
        ratio: f64,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Re-check a split directory written by build-unseen-set.
    AuditSplit {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
    /// Print a built-in auxiliary table.
    DumpTables {
        #[arg(long, value_enum)]
        table: Table,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    BaseForms,
    Replacements,
}

#[derive(Args)]
struct DbArgs {
    #[arg(long, value_name = "FILE")]
    ids: PathBuf,
    /// Replaces the built-in base-form table.
    #[arg(long, value_name = "FILE")]
    base_forms: Option<PathBuf>,
    /// Replaces the built-in semantic replacement table.
    #[arg(long, value_name = "FILE")]
    replacements: Option<PathBuf>,
}

#[derive(Args)]
struct SchemeArgs {
    /// baseline, train, train-idc, infer-remove, infer-all or infer-left.
    #[arg(long)]
    scheme: String,
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
    #[arg(long)]
    replace_radical: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Characters never decomposed, one per line.
    #[arg(long, value_name = "FILE")]
    exclude_chars: Option<PathBuf>,
}

#[derive(Args)]
struct IoArgs {
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BitextArgs {
    #[arg(long, value_name = "FILE", requires = "tgt", conflicts_with = "tsv")]
    src: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "src")]
    tgt: Option<PathBuf>,
    /// source<TAB>target lines.
    #[arg(long, value_name = "FILE", required_unless_present = "src")]
    tsv: Option<PathBuf>,
}

/// Exit 2 for usage errors, 1 for failures on the data itself.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<subchar_core::Error> for Failure {
    fn from(e: subchar_core::Error) -> Self {
        match e {
            subchar_core::Error::Config(_) => Failure::Usage(e.into()),
            e => Failure::Data(e.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn check_input(flag: &str, path: &Path) -> CliResult<()> {
    match fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        _ => Err(usage(format!(
            "--{flag}: expected a readable file, got {}",
            path.display()
        ))),
    }
}

fn check_output(flag: &str, path: &Path) -> CliResult<()> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if path.is_dir() || !parent.is_dir() {
        return Err(usage(format!("--{flag}: cannot create file {}", path.display())));
    }
    Ok(())
}

fn check_opt_input(flag: &str, path: &Option<PathBuf>) -> CliResult<()> {
    path.as_deref().map_or(Ok(()), |p| check_input(flag, p))
}

fn check_opt_output(flag: &str, path: &Option<PathBuf>) -> CliResult<()> {
    path.as_deref().map_or(Ok(()), |p| check_output(flag, p))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn reader(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(open(p)?),
        None => Box::new(io::stdin().lock()),
    })
}

fn writer(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_lines(r: impl BufRead) -> io::Result<Vec<String>> {
    r.lines().collect()
}

impl DbArgs {
    fn check(&self) -> CliResult<()> {
        check_input("ids", &self.ids)?;
        check_opt_input("base-forms", &self.base_forms)?;
        check_opt_input("replacements", &self.replacements)
    }

    fn load(&self) -> CliResult<DecompositionDb> {
        let file = read_ids_file(open(&self.ids)?)?;
        for d in &file.diagnostics {
            eprintln!("{d}");
        }
        let mut db = DecompositionDb::from_ids_file(file);
        if let Some(p) = &self.base_forms {
            db = db.with_base_forms(db::read_char_table(open(p)?)?)?;
        }
        if let Some(p) = &self.replacements {
            db = db.with_semantic_replacements(db::read_char_table(open(p)?)?);
        }
        Ok(db)
    }
}

impl SchemeArgs {
    fn check(&self) -> CliResult<SchemeConfig> {
        check_opt_input("vocab", &self.vocab)?;
        check_opt_input("exclude-chars", &self.exclude_chars)?;
        let config: SchemeConfig = self.scheme.parse().map_err(|_| {
            usage(format!(
                "--scheme: unknown scheme {:?}; expected one of baseline, train, train-idc, infer-remove, infer-all, infer-left",
                self.scheme
            ))
        })?;
        let config = config.replace_radical(self.replace_radical).max_depth(self.max_depth);
        config
            .validate()
            .map_err(|e| usage(format!("--scheme {}: {e}", self.scheme)))?;
        if config.kind != SchemeKind::TrainDecompose && self.vocab.is_none() {
            return Err(usage(format!("--vocab FILE is required for scheme {}", self.scheme)));
        }
        Ok(config)
    }

    fn load(&self, config: SchemeConfig) -> CliResult<(SchemeConfig, Vocabulary)> {
        let vocab = match &self.vocab {
            Some(p) => Vocabulary::read_from(open(p)?, Some(DEFAULT_MARKER))?,
            None => Vocabulary::default(),
        };
        let mut exclude = BTreeSet::new();
        if let Some(p) = &self.exclude_chars {
            for (i, line) in read_lines(open(p)?)?.iter().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let mut cs = line.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => {
                        exclude.insert(c);
                    }
                    _ => {
                        return Err(Failure::Data(anyhow!(
                            "{}:{}: expected one character per line, got {line:?}",
                            p.display(),
                            i + 1
                        )))
                    }
                }
            }
        }
        Ok((config.exclude(exclude), vocab))
    }
}

impl IoArgs {
    fn check(&self) -> CliResult<()> {
        check_opt_input("input", &self.input)?;
        check_opt_output("output", &self.output)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::ParseIds { ids, output } => {
            check_input("ids", &ids)?;
            check_opt_output("output", &output)?;
            let file = read_ids_file(open(&ids)?)?;
            for d in &file.diagnostics {
                eprintln!("{d}");
            }
            let mut w = writer(&output)?;
            for r in &file.records {
                writeln!(
                    w,
                    "U+{:04X}\t{}\t{}",
                    r.character as u32,
                    r.character,
                    serialize_ids(&r.tree)
                )?;
            }
            w.flush()?;
            eprintln!(
                "entries={} parsed={} diagnostics={}",
                file.entry_lines,
                file.records.len(),
                file.diagnostics.len()
            );
        }
        Command::Decompose {
            db,
            scheme,
            char,
            input,
        } => {
            db.check()?;
            let config = scheme.check()?;
            check_opt_input("input", &input)?;
            let (config, vocab) = scheme.load(config)?;
            let db = db.load()?;
            let lines = match char {
                Some(c) => vec![c.to_string()],
                None => read_lines(reader(&input)?)?,
            };
            let mut w = writer(&None)?;
            for l in &lines {
                writeln!(w, "{}", apply_inference_scheme(&db, &vocab, l, &config).0)?;
            }
            w.flush()?;
        }
        Command::LearnBpe { merges, marker, io } => {
            io.check()?;
            if marker.is_empty() || marker.chars().any(char::is_whitespace) {
                return Err(usage("--marker: expected a non-empty string without whitespace"));
            }
            let corpus = read_lines(reader(&io.input)?)?;
            let model = bpe::learn_bpe_with_marker(&corpus, merges, &marker);
            let mut w = writer(&io.output)?;
            model.write_to(&mut w)?;
            w.flush()?;
        }
        Command::ApplyBpe { model, io } => {
            check_input("model", &model)?;
            io.check()?;
            let model = BpeModel::read_from(open(&model)?)?;
            let r = reader(&io.input)?;
            let mut w = writer(&io.output)?;
            for line in r.lines() {
                writeln!(w, "{}", model.apply(&line?))?;
            }
            w.flush()?;
        }
        Command::BuildVocab { bpe, io } => {
            check_opt_input("bpe", &bpe)?;
            io.check()?;
            let corpus = read_lines(reader(&io.input)?)?;
            let mut vocab = build_char_vocab(&corpus);
            if let Some(p) = &bpe {
                vocab.attach_bpe(&BpeModel::read_from(open(p)?)?, &corpus);
            }
            let mut w = writer(&io.output)?;
            vocab.write_to(&mut w)?;
            w.flush()?;
        }
        Command::Preprocess {
            db,
            scheme,
            io,
            report,
            log,
        } => {
            db.check()?;
            let config = scheme.check()?;
            io.check()?;
            check_opt_output("report", &report)?;
            check_opt_output("log", &log)?;
            let (config, vocab) = scheme.load(config)?;
            let db = db.load()?;
            let input = reader(&io.input)?;
            let mut output = writer(&io.output)?;
            let result = preprocess_corpus(&db, &vocab, input, &mut output, &config)?;
            drop(output);
            let summary = result.summary_line();
            eprintln!("{summary}");
            if let Some(p) = &report {
                fs::write(p, format!("{summary}\n")).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = &log {
                let mut w = writer(&Some(p.clone()))?;
                for e in &result.per_char_log {
                    writeln!(w, "{e}")?;
                }
                w.flush()?;
            }
        }
        Command::BuildUnseenSet {
            db,
            bitext,
            max_count,
            reference_vocab,
            ratio,
            out_dir,
        } => {
            db.check()?;
            check_opt_input("src", &bitext.src)?;
            check_opt_input("tgt", &bitext.tgt)?;
            check_opt_input("tsv", &bitext.tsv)?;
            check_opt_input("reference-vocab", &reference_vocab)?;
            if out_dir.exists() && !out_dir.is_dir() {
                return Err(usage(format!("--out-dir: {} is not a directory", out_dir.display())));
            }
            let config = match (max_count, &reference_vocab) {
                (Some(n), _) => HoldoutConfig::frequency(n),
                (None, Some(p)) => HoldoutConfig::membership(Vocabulary::read_from(open(p)?, Some(DEFAULT_MARKER))?),
                (None, None) => return Err(usage("one of --max-count N or --reference-vocab FILE is required")),
            }
            .length_ratio_max(ratio);
            config
                .validate()
                .map_err(|e| usage(format!("--max-count/--ratio: {e}")))?;
            let db = db.load()?;
            let pairs = match (&bitext.src, &bitext.tgt, &bitext.tsv) {
                (Some(s), Some(t), _) => testset::read_bitext(open(s)?, open(t)?)?,
                (_, _, Some(p)) => testset::read_bitext_tsv(open(p)?)?,
                _ => return Err(usage("expected --src FILE --tgt FILE, or --tsv FILE")),
            };
            let split = testset::build_unseen_split(&pairs, &db, &config)?;
            if split.trigger_chars.is_empty() {
                eprintln!("warning: no trigger characters found; the unseen set is empty");
            }
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            testset::write_split(&out_dir, &split)?;
            eprintln!(
                "pairs={} train={} unseen={} rejected_by_ratio={} triggers={}",
                pairs.len(),
                split.train.len(),
                split.unseen_test.len(),
                split.rejected_by_ratio,
                split.trigger_chars.len()
            );
        }
        Command::AuditSplit { db, dir } => {
            db.check()?;
            if !dir.is_dir() {
                return Err(usage(format!("--dir: {} is not a directory", dir.display())));
            }
            let db = db.load()?;
            let split = testset::read_split(&dir)?;
            let report = testset::audit_split(&split, &db).map_err(|e| Failure::Data(e.into()))?;
            let mut w = writer(&None)?;
            writeln!(
                w,
                "ok train={} unseen={} triggers={}",
                report.train_sentences,
                report.unseen_sentences,
                report.triggers.len()
            )?;
            for t in &report.triggers {
                writeln!(
                    w,
                    "{}\tunseen={}\ttrain={}",
                    t.character, t.unseen_sentences, t.train_sentences
                )?;
            }
            w.flush()?;
        }
        Command::DumpTables { table, output } => {
            check_opt_output("output", &output)?;
            let db = DecompositionDb::new();
            let mut w = writer(&output)?;
            writeln!(w, ";; default tables v{TABLES_VERSION}")?;
            match table {
                Table::BaseForms => db::write_char_table(&mut w, db.base_forms())?,
                Table::Replacements => db::write_char_table(&mut w, db.semantic_replacements())?,
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(usage("--threads: expected a positive integer")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(Failure::Data(e.into())),
        },
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
