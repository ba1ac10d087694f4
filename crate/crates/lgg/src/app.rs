//! Pieces shared by the command line and the HTTP service.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lgg_core::annotate::DEFAULT_THRESHOLD;
use lgg_core::dataset::{generate_intent, merge, IntentBatch};
use lgg_core::{compose_intent, Classifier, ComposeError, ComposedIntent, CompositionConfig, Dataset, ResourceSet, Split};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::export::{Record, ExportError};
use crate::load::{load_resource_set, LoadError};

/// Where grammar and lexicon files live. Explicit paths win over the
/// config's.
#[derive(Debug, Clone, Default)]
pub struct SourcePaths {
    pub grammars: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
}

impl SourcePaths {
    pub fn resolve(&self, config: Option<&Config>) -> Option<(PathBuf, Option<PathBuf>)> {
        let file = config.map(|c| &c.file);
        let grammars = self.grammars.clone().or_else(|| file.and_then(|f| f.grammars.clone()))?;
        let lexicons = self.lexicons.clone().or_else(|| file.and_then(|f| f.lexicons.clone()));
        Some((grammars, lexicons))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("no grammar directory given (use --grammars or set `grammars` in the config)")]
    NoGrammarDir,
    #[error("{0}")]
    Load(#[from] LoadError),
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("{0}")]
    Compose(#[from] ComposeError),
    #[error("{0}")]
    Export(#[from] ExportError),
}

pub fn load_sources(paths: &SourcePaths, config: Option<&Config>) -> Result<ResourceSet, AppError> {
    let (g, l) = paths.resolve(config).ok_or(AppError::NoGrammarDir)?;
    Ok(load_resource_set(&g, l.as_deref())?)
}

/// The answer both front ends give for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: String,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answer_url: Option<String>,
}

/// Compiled intents ready for classification; immutable once built.
pub struct Intents {
    pub rs: ResourceSet,
    pub composed: Vec<ComposedIntent>,
    pub classifier: Classifier,
    pub urls: BTreeMap<String, String>,
    pub threshold: f64,
    pub content_hash: String,
}

impl Intents {
    pub fn build(rs: ResourceSet, config: &Config) -> Result<Intents, AppError> {
        let specs = config.intent_specs();
        if specs.is_empty() {
            return Err(ComposeError::NoIntents.into());
        }
        let mut composed = Vec::with_capacity(specs.len());
        let mut classifier = Classifier::new();
        for spec in &specs {
            let c = compose_intent(&rs, spec)?;
            if classifier.matcher(&spec.label).is_some() {
                return Err(ComposeError::DuplicateLabel(spec.label.clone()).into());
            }
            classifier.insert(spec.label.clone(), c.fst());
            composed.push(c);
        }
        Ok(Intents {
            content_hash: rs.content_hash(),
            rs,
            composed,
            classifier,
            urls: config.answer_urls(),
            threshold: config.file.threshold.unwrap_or(DEFAULT_THRESHOLD),
        })
    }

    pub fn load(paths: &SourcePaths, config_path: &Path) -> Result<Intents, AppError> {
        let config = Config::load(config_path)?;
        let rs = load_sources(paths, Some(&config))?;
        Intents::build(rs, &config)
    }

    pub fn classify(&self, text: &str, threshold: Option<f64>) -> Verdict {
        let r = self.classifier.classify(text, threshold.unwrap_or(self.threshold));
        let answer_url = if r.is_unknown() { None } else { self.urls.get(&r.label).cloned() };
        Verdict { label: r.label, score: r.score, answer_url }
    }
}

/// Generates each intent on one of `jobs` threads, then merges. The result
/// does not depend on `jobs`.
pub fn generate_parallel(rs: &ResourceSet, cfg: &CompositionConfig, jobs: usize) -> Result<Dataset, ComposeError> {
    cfg.check(rs)?;
    let specs = cfg.sorted_intents();
    let jobs = jobs.clamp(1, specs.len().max(1));
    let batches: Vec<Result<IntentBatch, ComposeError>> = if jobs == 1 {
        specs.iter().map(|s| generate_intent(rs, s, cfg)).collect()
    } else {
        let mut slots: Vec<Option<Result<IntentBatch, ComposeError>>> = (0..specs.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    let specs = &specs;
                    scope.spawn(move || {
                        (j..specs.len()).step_by(jobs).map(|i| (i, generate_intent(rs, specs[i], cfg))).collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("generation thread panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every intent scheduled")).collect()
    };
    let batches = batches.into_iter().collect::<Result<Vec<_>, _>>()?;
    merge(batches, cfg, rs.content_hash())
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    #[serde(flatten)]
    manifest: &'a lgg_core::Manifest,
    #[serde(skip_serializing_if = "Option::is_none")]
    stamp: Option<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn split_file(split: Split) -> String {
    format!("{}.jsonl", split.name())
}

/// Renders the files of a dataset: one JSONL per split plus the manifest.
/// `stamp` adds a wall-clock field to the manifest.
pub fn dataset_files(ds: &Dataset, stamp: Option<String>) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for split in Split::ALL {
        let mut body = String::new();
        for r in ds.split(split) {
            body.push_str(&serde_json::to_string(&Record::from(r)).expect("records serialize"));
            body.push('\n');
        }
        files.push((split_file(split), body));
    }
    let manifest = ManifestFile { manifest: &ds.manifest, stamp };
    files.push((MANIFEST_FILE.into(), serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"));
    files
}

/// Writes all files or none: existing files are refused up front unless
/// `force` is set.
pub fn write_dataset(dir: &Path, files: &[(String, String)], force: bool) -> Result<(), ExportError> {
    let io = |path: &Path, source| ExportError::Io { path: path.display().to_string(), source };
    if !force {
        for (name, _) in files {
            let p = dir.join(name);
            if p.exists() {
                return Err(ExportError::Exists(p.display().to_string()));
            }
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io(&p, e))?;
    }
    Ok(())
}
