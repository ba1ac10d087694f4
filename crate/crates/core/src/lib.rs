//! Local grammar graphs compiled into acyclic finite-state transducers.
//!
//! The same compiled resource serves two directions. In generation mode its
//! paths are counted exactly, enumerated in a canonical order, unranked, and
//! sampled uniformly to produce labelled utterances. In parsing mode it is
//! matched leftmost-longest against tokenized text to annotate, classify, and
//! report corpus coverage.
//!
//! The crate is `no_std` and needs only `alloc`; reading files, the command
//! line and the HTTP service live in the `lgg` crate.
#![no_std]
extern crate alloc;

pub mod annotate;
pub mod compose;
pub mod dataset;
pub mod error;
pub mod fst;
pub mod grammar;
pub mod pathgen;
pub mod resource;
pub mod stats;
pub mod token;

pub use error::*;
pub use fst::{compile, compile_with, count_paths, CompileOptions, CountedFst, EmptyPaths, Fst, PathCountTable, StateId, Transition};
pub use grammar::{parse_grammar, parse_lexicon, GraphNode, Grammar, Lexicon, NodeContent, NodeId, NodeKind};
pub use resource::{validate, Diagnostic, Issue, ResourceSet, Severity, ValidationReport};
pub use token::{render, Token, TokenString};
pub use pathgen::{enumerate, render_path, sample, unrank, RenderedUtterance};
pub use compose::{compose_intent, Block, ComposedIntent, IntentSpec};
pub use dataset::{generate_dataset, CompositionConfig, Dataset, DatasetRecord, DedupPolicy, Manifest, Provenance, Quota, Split, SplitRatios};
pub use annotate::{match_longest, tokenize, ClassificationResult, Classifier, CoverageReport, Match, Matcher, TokenizedText};
pub use stats::{stats, DatasetStats};
