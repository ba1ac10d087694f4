use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// A located error in a `.lgg` or `.lex` source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("malformed escape `\\{0}`")]
    MalformedEscape(char),
    #[error("unterminated quoted string")]
    Unterminated,
    #[error("{0}")]
    Structure(#[from] StructureError),
}

/// Violations of the structural invariants of a single grammar.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("missing start node (id 0, <START>)")]
    MissingStart,
    #[error("missing end node (id 1, <END>)")]
    MissingEnd,
    #[error("node {0}: <START> is only allowed on node 0")]
    MisplacedStart(u32),
    #[error("node {0}: <END> is only allowed on node 1")]
    MisplacedEnd(u32),
    #[error("node {0}: start and end nodes cannot carry an output")]
    OutputOnBoundary(u32),
    #[error("node {0}: a terminal box needs at least one alternative")]
    NoAlternatives(u32),
    #[error("edge {0} -> {1} references an unknown node")]
    UnknownNode(u32, u32),
    #[error("edge {0} -> {1} leaves the end node")]
    EdgeFromEnd(u32, u32),
    #[error("edge {0} -> {1} enters the start node")]
    EdgeIntoStart(u32, u32),
    #[error("invalid graph name `{0}`")]
    InvalidName(String),
}

/// Cross-reference failures when assembling a [`crate::ResourceSet`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResourceError {
    #[error("unresolved references: {}", format_refs(.0))]
    Unresolved(Vec<UnresolvedRef>),
    #[error("recursive subgraph calls: {}", .0.join(" -> "))]
    Recursion(Vec<String>),
    #[error("duplicate grammar `{0}`")]
    DuplicateGrammar(String),
    #[error("duplicate lexicon `{0}`")]
    DuplicateLexicon(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnresolvedRef {
    pub grammar: String,
    pub node: u32,
    pub target: RefTarget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefTarget {
    Graph(String),
    Lexicon(String),
}

fn format_refs(refs: &[UnresolvedRef]) -> String {
    let parts: Vec<String> = refs
        .iter()
        .map(|r| match &r.target {
            RefTarget::Graph(g) => alloc::format!("{}#{} calls :{g}", r.grammar, r.node),
            RefTarget::Lexicon(l) => alloc::format!("{}#{} uses @{l}", r.grammar, r.node),
        })
        .collect();
    parts.join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("unknown graph `{0}`")]
    UnknownGraph(String),
    #[error("recursive subgraph calls: {}", .0.join(" -> "))]
    Recursion(Vec<String>),
    #[error("grammar `{graph}` failed validation: {detail}")]
    Invalid { graph: String, detail: String },
    #[error("`{0}` has an empty language once empty paths are removed")]
    EmptyLanguage(String),
    #[error("`{0}` has paths that render an empty utterance")]
    EmptyPath(String),
}

/// Structural problems in a transducer built outside the compiler, or a
/// cycle found while counting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FstError {
    #[error("cycle through transition {src} -> {dst}")]
    Cycle { src: usize, dst: usize },
    #[error("transition {src} -> {dst} targets a missing state")]
    BadState { src: usize, dst: usize },
    #[error("transition {src} -> {dst} consumes no token")]
    Epsilon { src: usize, dst: usize },
    #[error("start or final state out of range")]
    BadEndpoint,
    #[error("the final state has outgoing transitions")]
    FinalHasTransitions,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path index {index} out of bounds (total {total})")]
    OutOfBounds { index: String, total: String },
    #[error("invalid range {start}..{end} (total {total})")]
    BadRange { start: String, end: String, total: String },
    #[error("cannot draw {requested} distinct paths from {total}")]
    NotEnoughPaths { requested: String, total: String },
    #[error("sample size must be at least 1")]
    ZeroSample,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error("intent `{intent}`: unknown graph `{graph}`")]
    MissingGraph { intent: String, graph: String },
    #[error("duplicate intent label `{0}`")]
    DuplicateLabel(String),
    #[error("intent `{0}`: composed language is empty")]
    EmptyLanguage(String),
    #[error("intent `{intent}`: {source}")]
    Compile {
        intent: String,
        #[source]
        source: CompileError,
    },
    #[error("configuration has no intents")]
    NoIntents,
    #[error("split ratios must be non-negative and sum to 1 (got {0}, {1}, {2})")]
    BadSplit(f64, f64, f64),
    #[error("intent `{intent}`: quota {quota} exceeds the {available} distinct utterances available")]
    QuotaExceeded { intent: String, quota: u64, available: u64 },
    #[error("intent `{0}` is empty after deduplication")]
    EmptyAfterDedup(String),
}
