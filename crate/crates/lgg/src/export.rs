//! JSON Lines and NLU YAML datasets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use lgg_core::{DatasetRecord, Provenance};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    Jsonl,
    NluYaml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportOptions {
    pub format: ExportFormat,
    pub include_provenance: bool,
}

/// Provenance as written to disk; the path index is a decimal string since
/// it may exceed 64 bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceJson {
    pub background: Option<String>,
    pub core: String,
    pub request: Option<String>,
    pub path_index: String,
}

impl From<&Provenance> for ProvenanceJson {
    fn from(p: &Provenance) -> Self {
        ProvenanceJson {
            background: p.background.clone(),
            core: p.core.clone(),
            request: p.request.clone(),
            path_index: p.path_index.to_string(),
        }
    }
}

/// One line of a JSONL dataset. Field order is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub text: String,
    pub intent: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<ProvenanceJson>,
}

impl From<&DatasetRecord> for Record {
    fn from(r: &DatasetRecord) -> Self {
        Record { text: r.text.clone(), intent: r.intent.clone(), provenance: Some((&r.provenance).into()) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("no records to export")]
    Empty,
    #[error("intent label `{0}` cannot be written as an NLU YAML intent name")]
    BadLabel(String),
    #[error("text {0:?} contains a control character")]
    BadText(String),
    #[error("{0} already exists (use --force to overwrite)")]
    Exists(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: String, line: usize, source: serde_json::Error },
}

pub fn to_jsonl(records: &[Record], include_provenance: bool) -> Result<String, ExportError> {
    if records.is_empty() {
        return Err(ExportError::Empty);
    }
    let mut out = String::new();
    for r in records {
        let line = if include_provenance {
            serde_json::to_string(r)
        } else {
            serde_json::to_string(&Record { provenance: None, ..r.clone() })
        };
        out.push_str(&line.expect("records serialize"));
        out.push('\n');
    }
    Ok(out)
}

/// Names usable unquoted as a YAML mapping value.
pub fn is_valid_label(label: &str) -> bool {
    let mut chars = label.chars();
    chars.next().is_some_and(|c| c.is_alphanumeric() || c == '_')
        && label.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '/'))
}

/// Intents in lexicographic order, records in input order within each.
pub fn to_nlu_yaml(records: &[Record]) -> Result<String, ExportError> {
    if records.is_empty() {
        return Err(ExportError::Empty);
    }
    let mut by_intent: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in records {
        if !is_valid_label(&r.intent) {
            return Err(ExportError::BadLabel(r.intent.clone()));
        }
        if r.text.chars().any(char::is_control) || r.text.trim() != r.text || r.text.is_empty() {
            return Err(ExportError::BadText(r.text.clone()));
        }
        by_intent.entry(&r.intent).or_default().push(&r.text);
    }
    let mut out = String::from("version: \"3.1\"\nnlu:\n");
    for (intent, texts) in by_intent {
        writeln!(out, "- intent: {intent}\n  examples: |").unwrap();
        for t in texts {
            writeln!(out, "    - {t}").unwrap();
        }
    }
    Ok(out)
}

pub fn render(records: &[Record], opts: ExportOptions) -> Result<String, ExportError> {
    match opts.format {
        ExportFormat::Jsonl => to_jsonl(records, opts.include_provenance),
        ExportFormat::NluYaml => to_nlu_yaml(records),
    }
}

/// Writes `contents` unless `path` exists and `force` is off.
pub fn write_file(path: &Path, contents: &str, force: bool) -> Result<(), ExportError> {
    if !force && path.exists() {
        return Err(ExportError::Exists(path.display().to_string()));
    }
    std::fs::write(path, contents).map_err(|source| ExportError::Io { path: path.display().to_string(), source })
}

/// Nothing is written when the export fails.
pub fn export(records: &[Record], opts: ExportOptions, path: &Path, force: bool) -> Result<(), ExportError> {
    let body = render(records, opts)?;
    write_file(path, &body, force)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Record>, ExportError> {
    let io = |source| ExportError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line)
            .map_err(|source| ExportError::Json { path: path.display().to_string(), line: i + 1, source })?;
        out.push(r);
    }
    Ok(out)
}
