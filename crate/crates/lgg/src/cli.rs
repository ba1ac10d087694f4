//! The `lgg` command line.
//!
//! Exit codes: 0 on success, 1 for user errors (bad flags, unreadable or
//! invalid sources, impossible quotas), 2 for internal invariant failures.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lgg_core::annotate::DEFAULT_TOP_BIGRAMS;
use lgg_core::{
    compile, enumerate, sample, stats, tokenize, validate, Classifier, CountedFst, DatasetRecord, Matcher, Provenance,
    RenderedUtterance, ResourceSet, Split,
};
use num_bigint::BigUint;
use serde_json::json;

use crate::app::{dataset_files, generate_parallel, load_sources, write_dataset, AppError, Intents, SourcePaths};
use crate::cache::CompiledFile;
use crate::config::Config;
use crate::export::{self, ExportFormat, ExportOptions};
use crate::load::source_digest;

#[derive(Debug, Parser)]
#[command(name = "lgg", version, about = "Compile local grammar graphs, generate labelled datasets, and annotate text")]
pub struct Cli {
    /// Directory of `.lgg` grammar files
    #[arg(long, global = true, value_name = "DIR")]
    pub grammars: Option<PathBuf>,
    /// Directory of `.lex` lexicon files
    #[arg(long, global = true, value_name = "DIR")]
    pub lexicons: Option<PathBuf>,
    /// Random seed (required by sample and generate)
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Composition config (TOML, or JSON with a .json extension)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file or directory instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Overwrite existing output files
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads for generation; output does not depend on it
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
    /// Record the wall-clock time in the manifest
    #[arg(long, global = true)]
    pub stamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    JsonLines,
}

/// Which transducer a command works on.
#[derive(Debug, Args)]
pub struct Target {
    /// Root grammar to compile
    #[arg(long, conflicts_with_all = ["intent", "fst"])]
    pub root: Option<String>,
    /// Composed intent from the config
    #[arg(long, conflicts_with = "fst")]
    pub intent: Option<String>,
    /// Previously compiled transducer file
    #[arg(long, value_name = "FILE")]
    pub fst: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check grammars and lexicons for structural problems
    Validate,
    /// Compile a root grammar and report its size; --out saves it
    Compile {
        #[arg(long)]
        root: String,
    },
    /// Print the exact number of paths
    Count(Target),
    /// List paths in canonical order
    Enum {
        #[command(flatten)]
        target: Target,
        /// First index (inclusive)
        #[arg(long)]
        start: Option<BigUint>,
        /// Last index (exclusive)
        #[arg(long)]
        end: Option<BigUint>,
    },
    /// Draw paths uniformly at random
    Sample {
        #[command(flatten)]
        target: Target,
        #[arg(short = 'n', long)]
        n: usize,
        /// Allow the same path more than once
        #[arg(long)]
        with_replacement: bool,
    },
    /// Generate a labelled dataset with train/validation/test splits
    Generate,
    /// Convert JSONL datasets to another format
    Export {
        /// Input JSONL files
        #[arg(long = "input", required = true, value_name = "FILE")]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        to: ExportFormat,
        /// Keep provenance in JSONL output
        #[arg(long)]
        provenance: bool,
    },
    /// Mark leftmost-longest matches in text
    Annotate {
        #[command(flatten)]
        target: Target,
        /// Text file, one item per line (`-` for stdin)
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        text: Vec<String>,
    },
    /// Assign an intent label to each text
    Classify {
        #[arg(long)]
        threshold: Option<f64>,
        /// Text file, one item per line (`-` for stdin)
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Report ties and per-intent scores on stderr
        #[arg(long)]
        verbose: bool,
        text: Vec<String>,
    },
    /// Report which corpus lines the intents match
    Coverage {
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOP_BIGRAMS)]
        top_k: usize,
    },
    /// Summarize JSONL datasets
    Stats {
        #[arg(long = "input", required = true, value_name = "FILE")]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug)]
pub enum Failure {
    User(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

fn user(msg: impl std::fmt::Display) -> Failure {
    Failure::User(msg.to_string())
}

fn internal(msg: impl std::fmt::Display) -> Failure {
    Failure::Internal(msg.to_string())
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        user(e)
    }
}

impl From<export::ExportError> for Failure {
    fn from(e: export::ExportError) -> Self {
        user(e)
    }
}

type Res<T> = Result<T, Failure>;

/// Runs the command line with the given arguments and standard streams.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let mut out = Vec::new();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&cli, &mut out, stderr)));
    match result {
        Ok(Ok(())) => match deliver(&cli, &out) {
            Ok(()) => {
                if cli.out.is_none() || matches!(cli.command, Command::Generate | Command::Compile { .. } | Command::Export { .. }) {
                    let _ = stdout.write_all(&out);
                }
                0
            }
            Err(f) => report(stderr, f),
        },
        Ok(Err(f)) => report(stderr, f),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            report(stderr, internal(format!("internal error: {msg}")))
        }
    }
}

fn report(stderr: &mut dyn Write, f: Failure) -> i32 {
    let msg = match &f {
        Failure::User(m) | Failure::Internal(m) => m,
    };
    let _ = writeln!(stderr, "lgg: {msg}");
    f.code()
}

/// Sends stdout-style data to `--out` for the commands that print data.
fn deliver(cli: &Cli, data: &[u8]) -> Res<()> {
    match (&cli.out, &cli.command) {
        (Some(path), Command::Count(_) | Command::Enum { .. } | Command::Sample { .. })
        | (Some(path), Command::Annotate { .. } | Command::Classify { .. } | Command::Coverage { .. })
        | (Some(path), Command::Stats { .. } | Command::Validate) => {
            export::write_file(path, &String::from_utf8_lossy(data), cli.force)?;
            Ok(())
        }
        _ => Ok(()),
    }
}

fn paths(cli: &Cli) -> SourcePaths {
    SourcePaths { grammars: cli.grammars.clone(), lexicons: cli.lexicons.clone() }
}

fn config(cli: &Cli) -> Res<Option<Config>> {
    cli.config.as_deref().map(Config::load).transpose().map_err(user)
}

fn require_config(cli: &Cli) -> Res<Config> {
    config(cli)?.ok_or_else(|| user("this command needs --config"))
}

fn resources(cli: &Cli) -> Res<(ResourceSet, Option<Config>)> {
    let cfg = config(cli)?;
    let rs = load_sources(&paths(cli), cfg.as_ref())?;
    Ok((rs, cfg))
}

fn counted(fst: lgg_core::Fst) -> Res<CountedFst> {
    CountedFst::new(fst).map_err(|e| internal(format!("compiled transducer failed to count: {e}")))
}

/// The transducer named by a target, plus a display name.
fn resolve_target(cli: &Cli, t: &Target) -> Res<(String, CountedFst)> {
    if let Some(path) = &t.fst {
        let (file, cf) = CompiledFile::read(path).map_err(user)?;
        return Ok((file.root, cf));
    }
    if let Some(label) = &t.intent {
        let (rs, cfg) = resources(cli)?;
        let cfg = cfg.ok_or_else(|| user("--intent needs --config"))?;
        let spec = cfg
            .intent_specs()
            .into_iter()
            .find(|s| &s.label == label)
            .ok_or_else(|| user(format!("no intent `{label}` in {}", cfg.path.display())))?;
        let composed = lgg_core::compose_intent(&rs, &spec).map_err(user)?;
        return Ok((label.clone(), composed.counted().clone()));
    }
    let root = t.root.as_ref().ok_or_else(|| user("give one of --root, --intent or --fst"))?;
    let (rs, _) = resources(cli)?;
    let fst = compile(&rs, root).map_err(user)?;
    Ok((root.clone(), counted(fst)?))
}

fn execute(cli: &Cli, out: &mut Vec<u8>, err: &mut dyn Write) -> Res<()> {
    match &cli.command {
        Command::Validate => cmd_validate(cli, out),
        Command::Compile { root } => cmd_compile(cli, root, out),
        Command::Count(t) => {
            let (_, cf) = resolve_target(cli, t)?;
            match cli.format {
                OutputFormat::Text => writeln!(out, "{}", cf.total()),
                OutputFormat::JsonLines => writeln!(out, "{}", json!({ "total": cf.total().to_string() })),
            }
            .map_err(internal)
        }
        Command::Enum { target, start, end } => {
            let (_, cf) = resolve_target(cli, target)?;
            let range = match (start, end) {
                (None, None) => None,
                (s, e) => Some(s.clone().unwrap_or_default()..e.clone().unwrap_or_else(|| cf.total().clone())),
            };
            for u in enumerate(&cf, range).map_err(user)? {
                print_utterance(cli, out, &u)?;
            }
            Ok(())
        }
        Command::Sample { target, n, with_replacement } => {
            let seed = cli.seed.ok_or_else(|| user("sample needs --seed"))?;
            let (_, cf) = resolve_target(cli, target)?;
            for u in sample(&cf, *n, seed, !with_replacement).map_err(user)? {
                print_utterance(cli, out, &u)?;
            }
            Ok(())
        }
        Command::Generate => cmd_generate(cli, out),
        Command::Export { inputs, to, provenance } => {
            let path = cli.out.as_ref().ok_or_else(|| user("export needs --out"))?;
            let mut records = Vec::new();
            for p in inputs {
                records.extend(export::read_jsonl(p)?);
            }
            let opts = ExportOptions { format: *to, include_provenance: *provenance };
            export::export(&records, opts, path, cli.force)?;
            writeln!(out, "{} records -> {}", records.len(), path.display()).map_err(internal)
        }
        Command::Annotate { target, input, text } => cmd_annotate(cli, target, input.as_deref(), text, out),
        Command::Classify { threshold, input, verbose, text } => {
            if let Some(t) = threshold {
                if !(0.0..=1.0).contains(t) {
                    return Err(user("--threshold must be between 0 and 1"));
                }
            }
            let cfg = cli.config.as_ref().ok_or_else(|| user("classify needs --config"))?;
            let intents = Intents::load(&paths(cli), cfg)?;
            for line in input_lines(input.as_deref(), text)? {
                let v = intents.classify(&line, *threshold);
                if *verbose {
                    let r = intents.classifier.classify(&line, threshold.unwrap_or(intents.threshold));
                    if !r.tied.is_empty() {
                        let _ = writeln!(err, "tie: {} also scored {} for {line:?}", r.tied.join(", "), r.score);
                    }
                }
                match cli.format {
                    OutputFormat::Text => writeln!(out, "{}\t{}", v.label, json!(v.score)),
                    OutputFormat::JsonLines => {
                        let mut obj = json!({ "text": line, "label": v.label, "score": v.score });
                        if let Some(u) = v.answer_url {
                            obj["answer_url"] = u.into();
                        }
                        writeln!(out, "{obj}")
                    }
                }
                .map_err(internal)?;
            }
            Ok(())
        }
        Command::Coverage { corpus, top_k } => {
            let cfg = cli.config.as_ref().ok_or_else(|| user("coverage needs --config"))?;
            let intents = Intents::load(&paths(cli), cfg)?;
            let text = std::fs::read_to_string(corpus).map_err(|e| user(format!("{}: {e}", corpus.display())))?;
            let report = intents.classifier.coverage(text.lines(), *top_k);
            print_coverage(cli, out, &report)
        }
        Command::Stats { inputs } => {
            let mut records = Vec::new();
            for p in inputs {
                for r in export::read_jsonl(p)? {
                    records.push(DatasetRecord {
                        text: r.text,
                        intent: r.intent,
                        provenance: Provenance { background: None, core: String::new(), request: None, path_index: BigUint::default() },
                        split: Split::Train,
                    });
                }
            }
            let s = stats(&records);
            match cli.format {
                OutputFormat::JsonLines => writeln!(out, "{}", serde_json::to_string(&s).expect("json")),
                OutputFormat::Text => {
                    let mut t = format!(
                        "records\t{}\ntokens\tmin {} mean {:.2} max {}\nvocabulary\t{}\n",
                        s.total, s.tokens.min, s.tokens.mean, s.tokens.max, s.vocabulary
                    );
                    for (label, i) in &s.intents {
                        t += &format!(
                            "{label}\t{} records\ttokens {}/{:.2}/{}\tvocabulary {}\n",
                            i.records, i.tokens.min, i.tokens.mean, i.tokens.max, i.vocabulary
                        );
                    }
                    out.write_all(t.as_bytes())
                }
            }
            .map_err(internal)
        }
    }
}

fn print_utterance(cli: &Cli, out: &mut Vec<u8>, u: &RenderedUtterance) -> Res<()> {
    match cli.format {
        OutputFormat::Text => writeln!(out, "{}", u.text),
        OutputFormat::JsonLines => writeln!(
            out,
            "{}",
            json!({ "index": u.path_index.to_string(), "text": u.text, "outputs": u.outputs })
        ),
    }
    .map_err(internal)
}

fn cmd_validate(cli: &Cli, out: &mut Vec<u8>) -> Res<()> {
    let (rs, _) = resources(cli)?;
    let report = validate(&rs);
    for d in &report.diagnostics {
        let line = match cli.format {
            OutputFormat::Text => d.to_string(),
            OutputFormat::JsonLines => serde_json::to_string(d).expect("json"),
        };
        writeln!(out, "{line}").map_err(internal)?;
    }
    if report.ok {
        if cli.format == OutputFormat::Text {
            writeln!(out, "ok: {} grammars, {} lexicons", rs.grammars().count(), rs.lexicons().count()).map_err(internal)?;
        }
        Ok(())
    } else {
        let n = report.errors().count();
        Err(user(format!("validation failed with {n} error(s)\n{}", String::from_utf8_lossy(out))))
    }
}

fn cmd_compile(cli: &Cli, root: &str, out: &mut Vec<u8>) -> Res<()> {
    let (rs, cfg) = resources(cli)?;
    let fst = compile(&rs, root).map_err(user)?;
    let cf = counted(fst)?;
    let f = cf.fst();
    match cli.format {
        OutputFormat::Text => writeln!(
            out,
            "{root}: {} states, {} transitions, {} paths ({} empty paths dropped)",
            f.num_states(),
            f.num_transitions(),
            cf.total(),
            f.dropped_empty_paths()
        ),
        OutputFormat::JsonLines => writeln!(
            out,
            "{}",
            json!({
                "root": root,
                "states": f.num_states(),
                "transitions": f.num_transitions(),
                "total": cf.total().to_string(),
                "dropped_empty": f.dropped_empty_paths().to_string(),
            })
        ),
    }
    .map_err(internal)?;
    if let Some(path) = &cli.out {
        let (g, l) = paths(cli).resolve(cfg.as_ref()).expect("sources resolved above");
        let digest = source_digest(&g, l.as_deref()).map_err(user)?;
        export::write_file(path, &CompiledFile::new(root, &digest, &cf).to_json(), cli.force)?;
    }
    Ok(())
}

fn cmd_generate(cli: &Cli, out: &mut Vec<u8>) -> Res<()> {
    let dir = cli.out.as_ref().ok_or_else(|| user("generate needs --out DIR"))?;
    let cfg = require_config(cli)?;
    let composition = cfg.composition(cli.seed).ok_or_else(|| user("generate needs --seed or a `seed` in the config"))?;
    let rs = load_sources(&paths(cli), Some(&cfg))?;
    let ds = generate_parallel(&rs, &composition, cli.jobs.max(1)).map_err(user)?;
    for im in &ds.manifest.intents {
        if im.generated != im.emitted + im.within_intent_duplicates + im.cross_intent_collisions {
            return Err(internal(format!("manifest arithmetic broken for {}", im.label)));
        }
    }
    let stamp = cli.stamp.then(|| {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("{secs}")
    });
    write_dataset(dir, &dataset_files(&ds, stamp), cli.force)?;
    let m = &ds.manifest;
    writeln!(
        out,
        "{} records ({} train, {} validation, {} test), {} collisions -> {}",
        m.emitted,
        m.splits.train,
        m.splits.validation,
        m.splits.test,
        m.collision_count,
        dir.display()
    )
    .map_err(internal)
}

fn input_lines(input: Option<&Path>, text: &[String]) -> Res<Vec<String>> {
    match input {
        Some(p) if p == Path::new("-") => {
            std::io::stdin().lock().lines().collect::<Result<_, _>>().map_err(|e| user(format!("stdin: {e}")))
        }
        Some(p) => {
            let body = std::fs::read_to_string(p).map_err(|e| user(format!("{}: {e}", p.display())))?;
            Ok(body.lines().map(str::to_string).collect())
        }
        None if text.is_empty() => Err(user("give text arguments or --input FILE")),
        None => Ok(text.to_vec()),
    }
}

fn cmd_annotate(cli: &Cli, target: &Target, input: Option<&Path>, text: &[String], out: &mut Vec<u8>) -> Res<()> {
    let matchers: Vec<Matcher> = if target.root.is_none() && target.fst.is_none() && target.intent.is_none() {
        let cfg = cli.config.as_ref().ok_or_else(|| user("annotate needs --root, --intent, --fst or --config"))?;
        let intents = Intents::load(&paths(cli), cfg)?;
        let c: &Classifier = &intents.classifier;
        c.labels().map(|l| c.matcher(l).expect("label present").clone()).collect()
    } else {
        let (name, cf) = resolve_target(cli, target)?;
        vec![Matcher::new(name, cf.fst())]
    };
    for (n, line) in input_lines(input, text)?.iter().enumerate() {
        let tt = tokenize(line);
        let mut matches: Vec<_> = matchers.iter().flat_map(|m| m.match_longest(&tt)).collect();
        matches.sort_by(|a, b| (a.start, a.end, &a.name).cmp(&(b.start, b.end, &b.name)));
        match cli.format {
            OutputFormat::Text => {
                let mut s = String::new();
                for m in &matches {
                    s += &format!("{}\t{}..{}\t{}\t{}\t{}\n", n + 1, m.start, m.end, m.name, m.text, m.outputs.join(" "));
                }
                out.write_all(s.as_bytes())
            }
            OutputFormat::JsonLines => writeln!(out, "{}", json!({ "line": n + 1, "text": line, "matches": matches })),
        }
        .map_err(internal)?;
    }
    Ok(())
}

fn print_coverage(cli: &Cli, out: &mut Vec<u8>, r: &lgg_core::CoverageReport) -> Res<()> {
    let mut s = String::new();
    match cli.format {
        OutputFormat::JsonLines => {
            for l in &r.lines {
                s += &json!({ "line": l.line, "text": l.text, "intents": l.intents(), "matches": l.matches }).to_string();
                s.push('\n');
            }
            s += &json!({
                "summary": {
                    "lines": r.lines.len(),
                    "unmatched_lines": r.unmatched_lines,
                    "intents": r.intents,
                    "unmatched_bigrams": r.unmatched_bigrams,
                }
            })
            .to_string();
            s.push('\n');
        }
        OutputFormat::Text => {
            for l in &r.lines {
                let names: Vec<&str> = l.intents().into_iter().collect();
                let spans: Vec<String> = l.matches.iter().map(|m| format!("{}:{}..{}", m.name, m.start, m.end)).collect();
                s += &format!("{}\t{}\t{}\n", l.line, if names.is_empty() { "-".into() } else { names.join(",") }, spans.join(" "));
            }
            s += &format!("\nlines\t{}\nunmatched\t{}\n", r.lines.len(), r.unmatched_lines);
            for i in &r.intents {
                s += &format!("{}\t{}\t{:.1}%\n", i.label, i.matched_lines, i.percent);
            }
            if !r.unmatched_bigrams.is_empty() {
                s += "\nunmatched bigrams\n";
                for b in &r.unmatched_bigrams {
                    s += &format!("{}\t{} {}\n", b.count, b.first, b.second);
                }
            }
        }
    }
    out.write_all(s.as_bytes()).map_err(internal)
}

/// Entry point of the `lgg` binary.
pub fn main() -> ! {
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    let code = run(std::env::args_os(), &mut stdout, &mut std::io::stderr());
    let _ = stdout.flush();
    std::process::exit(code)
}
