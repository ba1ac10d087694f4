//! Reading `.lgg` and `.lex` files from disk.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use lgg_core::{parse_grammar, parse_lexicon, Grammar, Lexicon, ParseError, ResourceError, ResourceSet};

#[derive(Debug)]
pub enum LoadError {
    Io { path: PathBuf, source: std::io::Error },
    /// Every file that failed, not just the first.
    Files(Vec<FileError>),
    Resource(ResourceError),
}

#[derive(Debug)]
pub struct FileError {
    pub path: PathBuf,
    pub problem: FileProblem,
}

#[derive(Debug)]
pub enum FileProblem {
    Io(std::io::Error),
    Parse(ParseError),
    /// The declared graph name differs from the file stem.
    NameMismatch { declared: String },
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.path.display();
        match &self.problem {
            FileProblem::Io(e) => write!(f, "{p}: {e}"),
            FileProblem::Parse(e) => write!(f, "{p}:{}:{}: {}", e.line, e.column, e.kind),
            FileProblem::NameMismatch { declared } => {
                write!(f, "{p}: declares graph `{declared}` but the file stem must match the graph name")
            }
        }
    }
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            LoadError::Files(errs) => {
                for (i, e) in errs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
            LoadError::Resource(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LoadError {}

/// Files in `dir` with the given extension, sorted by name.
fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, LoadError> {
    let io = |source| LoadError::Io { path: dir.to_path_buf(), source };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_grammar_file(path: &Path) -> Result<Grammar, FileError> {
    let fail = |problem| FileError { path: path.to_path_buf(), problem };
    let text = fs::read_to_string(path).map_err(|e| fail(FileProblem::Io(e)))?;
    let g = parse_grammar(&text).map_err(|e| fail(FileProblem::Parse(e)))?;
    if g.name() != stem(path) {
        return Err(fail(FileProblem::NameMismatch { declared: g.name().to_string() }));
    }
    Ok(g)
}

pub fn load_lexicon_file(path: &Path) -> Result<Lexicon, FileError> {
    let fail = |problem| FileError { path: path.to_path_buf(), problem };
    let text = fs::read_to_string(path).map_err(|e| fail(FileProblem::Io(e)))?;
    parse_lexicon(&stem(path), &text).map_err(|e| fail(FileProblem::Parse(e)))
}

/// Parses every `*.lgg` in `grammar_dir` and every `*.lex` in `lexicon_dir`,
/// then resolves cross references.
pub fn load_resource_set(grammar_dir: &Path, lexicon_dir: Option<&Path>) -> Result<ResourceSet, LoadError> {
    let mut errors = Vec::new();
    let mut grammars = Vec::new();
    for path in files_with_ext(grammar_dir, "lgg")? {
        match load_grammar_file(&path) {
            Ok(g) => grammars.push(g),
            Err(e) => errors.push(e),
        }
    }
    let mut lexicons = Vec::new();
    if let Some(dir) = lexicon_dir {
        for path in files_with_ext(dir, "lex")? {
            match load_lexicon_file(&path) {
                Ok(l) => lexicons.push(l),
                Err(e) => errors.push(e),
            }
        }
    }
    if !errors.is_empty() {
        return Err(LoadError::Files(errors));
    }
    ResourceSet::new(grammars, lexicons).map_err(LoadError::Resource)
}

/// Raw bytes of every source file, in a fixed order, for cache keys.
pub fn source_digest(grammar_dir: &Path, lexicon_dir: Option<&Path>) -> Result<String, LoadError> {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    let mut files = files_with_ext(grammar_dir, "lgg")?;
    if let Some(dir) = lexicon_dir {
        files.extend(files_with_ext(dir, "lex")?);
    }
    for path in files {
        let bytes = fs::read(&path).map_err(|source| LoadError::Io { path: path.clone(), source })?;
        h.update(path.file_name().unwrap_or_default().as_encoded_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
