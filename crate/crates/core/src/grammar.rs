//! Grammar graphs, lexicons, and their line-based text formats.
//!
//! A `.lgg` file holds exactly one graph:
//!
//! ```text
//! graph Greet
//! node 0 <START>
//! node 1 <END>
//! node 2 "hello" | "hi"
//! node 3 "world" | "there" | "friend" / "GREETING"
//! edge 0 2
//! edge 2 3
//! edge 3 1
//! end
//! ```
//!
//! Edge order is significant: it fixes the order in which paths are
//! enumerated after compilation.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind, StructureError};
use crate::token::{nfc, TokenString};

pub type NodeId = u32;

pub const START: NodeId = 0;
pub const END: NodeId = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NodeKind {
    Start,
    End,
    Epsilon,
    /// Alternatives; an empty `TokenString` is an epsilon alternative.
    Terminals(Vec<TokenString>),
    SubgraphCall(String),
    LexiconRef(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeContent {
    pub kind: NodeKind,
    pub output: Option<String>,
}

impl NodeContent {
    pub fn new(kind: NodeKind) -> Self {
        NodeContent { kind, output: None }
    }

    pub fn with_output(mut self, output: impl Into<String>) -> Self {
        self.output = Some(output.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphNode {
    pub id: NodeId,
    pub content: NodeContent,
}

/// A named acyclic graph of boxes.
///
/// Construction checks everything that can be checked locally (ids, start
/// and end boxes, edge endpoints). Reachability and acyclicity are reported
/// by [`crate::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    name: String,
    nodes: Vec<GraphNode>,
    edges: Vec<(NodeId, NodeId)>,
    index: BTreeMap<NodeId, usize>,
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

impl Grammar {
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<GraphNode>,
        edges: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, StructureError> {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(StructureError::InvalidName(name));
        }
        let mut index = BTreeMap::new();
        for (pos, node) in nodes.iter().enumerate() {
            if index.insert(node.id, pos).is_some() {
                return Err(StructureError::DuplicateNode(node.id));
            }
            check_node(node)?;
        }
        match index.get(&START).map(|&p| &nodes[p].content.kind) {
            Some(NodeKind::Start) => {}
            _ => return Err(StructureError::MissingStart),
        }
        match index.get(&END).map(|&p| &nodes[p].content.kind) {
            Some(NodeKind::End) => {}
            _ => return Err(StructureError::MissingEnd),
        }
        for &(src, dst) in &edges {
            if !index.contains_key(&src) || !index.contains_key(&dst) {
                return Err(StructureError::UnknownNode(src, dst));
            }
            if src == END {
                return Err(StructureError::EdgeFromEnd(src, dst));
            }
            if dst == START {
                return Err(StructureError::EdgeIntoStart(src, dst));
            }
        }
        Ok(Grammar { name, nodes, edges, index })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&GraphNode> {
        self.index.get(&id).map(|&p| &self.nodes[p])
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Successors of every node, each list in edge order.
    pub fn adjacency(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> =
            self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for &(src, dst) in &self.edges {
            adj.entry(src).or_default().push(dst);
        }
        adj
    }

    /// Names of graphs called from this one, in first-call order.
    pub fn calls(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for node in &self.nodes {
            if let NodeKind::SubgraphCall(name) = &node.content.kind {
                if seen.insert(name.as_str()) {
                    out.push(name.as_str());
                }
            }
        }
        out
    }

    /// Serializes back to `.lgg` text. Reparsing yields an equal grammar.
    pub fn to_lgg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {}", self.name);
        for node in &self.nodes {
            let _ = write!(out, "node {} ", node.id);
            match &node.content.kind {
                NodeKind::Start => out.push_str("<START>"),
                NodeKind::End => out.push_str("<END>"),
                NodeKind::Epsilon => out.push_str("<E>"),
                NodeKind::SubgraphCall(g) => {
                    let _ = write!(out, ":{g}");
                }
                NodeKind::LexiconRef(l) => {
                    let _ = write!(out, "@{l}");
                }
                NodeKind::Terminals(alts) => {
                    for (i, alt) in alts.iter().enumerate() {
                        if i > 0 {
                            out.push_str(" | ");
                        }
                        out.push_str(&quote(&alt.notation()));
                    }
                }
            }
            if let Some(o) = &node.content.output {
                let _ = write!(out, " / {}", quote(o));
            }
            out.push('\n');
        }
        for (src, dst) in &self.edges {
            let _ = writeln!(out, "edge {src} {dst}");
        }
        out.push_str("end\n");
        out
    }
}

fn check_node(node: &GraphNode) -> Result<(), StructureError> {
    match &node.content.kind {
        NodeKind::Start if node.id != START => return Err(StructureError::MisplacedStart(node.id)),
        NodeKind::End if node.id != END => return Err(StructureError::MisplacedEnd(node.id)),
        NodeKind::Start | NodeKind::End if node.content.output.is_some() => {
            return Err(StructureError::OutputOnBoundary(node.id))
        }
        NodeKind::Terminals(alts) if alts.is_empty() => {
            return Err(StructureError::NoAlternatives(node.id))
        }
        _ => {}
    }
    Ok(())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// A named word list; entries may be multiword.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lexicon {
    name: String,
    entries: Vec<TokenString>,
}

impl Lexicon {
    /// Deduplicates entries, keeping first occurrences. Returns `None` when
    /// no entries remain or the name is not a valid identifier.
    pub fn new(name: impl Into<String>, entries: Vec<TokenString>) -> Option<Self> {
        let name = name.into();
        if !is_valid_name(&name) {
            return None;
        }
        let mut seen = BTreeSet::new();
        let entries: Vec<TokenString> = entries
            .into_iter()
            .filter(|e| !e.is_epsilon() && seen.insert(e.clone()))
            .collect();
        if entries.is_empty() {
            return None;
        }
        Some(Lexicon { name, entries })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[TokenString] {
        &self.entries
    }
}

/// Parses a `.lex` file: one entry per line, `#` comment lines, blank lines
/// ignored.
pub fn parse_lexicon(name: &str, source: &str) -> Result<Lexicon, ParseError> {
    let mut entries = Vec::new();
    for (lineno, line) in source.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match TokenString::from_notation(trimmed) {
            Some(ts) => entries.push(ts),
            None => {
                return Err(ParseError {
                    line: lineno + 1,
                    column: 1,
                    kind: ParseErrorKind::Syntax("bare `^` is not a token".to_owned()),
                })
            }
        }
    }
    Lexicon::new(name, entries).ok_or_else(|| ParseError {
        line: source.lines().count().max(1),
        column: 1,
        kind: if is_valid_name(name) {
            ParseErrorKind::Syntax(format!("lexicon `{name}` has no entries"))
        } else {
            ParseErrorKind::Syntax(format!("invalid lexicon name `{name}`"))
        },
    })
}

#[derive(Debug, PartialEq)]
enum Lexeme {
    Word(String),
    Quoted(String),
    Pipe,
    Slash,
}

struct Located {
    lexeme: Lexeme,
    column: usize,
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

fn syntax(line: usize, column: usize, msg: impl Into<String>) -> ParseError {
    err(line, column, ParseErrorKind::Syntax(msg.into()))
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Located>, ParseError> {
    let mut out = Vec::new();
    let mut chars = line.char_indices().peekable();
    // columns are 1-based character positions
    let col_of = |byte: usize| line[..byte].chars().count() + 1;
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let column = col_of(pos);
        match c {
            '#' => break,
            '|' => {
                chars.next();
                out.push(Located { lexeme: Lexeme::Pipe, column });
            }
            '/' => {
                chars.next();
                out.push(Located { lexeme: Lexeme::Slash, column });
            }
            '"' => {
                chars.next();
                let mut buf = String::new();
                let mut closed = false;
                while let Some((p, ch)) = chars.next() {
                    match ch {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => buf.push(e),
                            Some((_, e)) => {
                                return Err(err(lineno, col_of(p), ParseErrorKind::MalformedEscape(e)))
                            }
                            None => {
                                return Err(err(
                                    lineno,
                                    col_of(p),
                                    ParseErrorKind::MalformedEscape(' '),
                                ))
                            }
                        },
                        _ => buf.push(ch),
                    }
                }
                if !closed {
                    return Err(err(lineno, column, ParseErrorKind::Unterminated));
                }
                out.push(Located { lexeme: Lexeme::Quoted(buf), column });
            }
            _ => {
                let mut buf = String::new();
                while let Some(&(_, ch)) = chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '|' | '/' | '"' | '#') {
                        break;
                    }
                    buf.push(ch);
                    chars.next();
                }
                out.push(Located { lexeme: Lexeme::Word(buf), column });
            }
        }
    }
    Ok(out)
}

fn parse_id(lx: Option<&Located>, lineno: usize, eol: usize) -> Result<NodeId, ParseError> {
    match lx {
        Some(Located { lexeme: Lexeme::Word(w), column }) => w
            .parse::<NodeId>()
            .map_err(|_| syntax(lineno, *column, format!("expected a node id, found `{w}`"))),
        Some(l) => Err(syntax(lineno, l.column, "expected a node id")),
        None => Err(syntax(lineno, eol, "expected a node id")),
    }
}

fn parse_node(items: &[Located], lineno: usize, eol: usize) -> Result<GraphNode, ParseError> {
    let id = parse_id(items.get(1), lineno, eol)?;
    let Some(head) = items.get(2) else {
        return Err(syntax(lineno, eol, "expected node content"));
    };
    let mut rest = 3;
    let kind = match &head.lexeme {
        Lexeme::Word(w) if w == "<START>" => NodeKind::Start,
        Lexeme::Word(w) if w == "<END>" => NodeKind::End,
        Lexeme::Word(w) if w == "<E>" => NodeKind::Epsilon,
        Lexeme::Word(w) if w.starts_with(':') || w.starts_with('@') => {
            let name = &w[1..];
            if !is_valid_name(name) {
                return Err(syntax(lineno, head.column, format!("invalid name `{name}`")));
            }
            if w.starts_with(':') {
                NodeKind::SubgraphCall(name.to_owned())
            } else {
                NodeKind::LexiconRef(name.to_owned())
            }
        }
        Lexeme::Quoted(_) => {
            let mut alts = Vec::new();
            rest = 2;
            loop {
                match items.get(rest) {
                    Some(Located { lexeme: Lexeme::Quoted(q), column }) => {
                        let alt = TokenString::from_notation(q).ok_or_else(|| {
                            syntax(lineno, *column, "bare `^` is not a token")
                        })?;
                        alts.push(alt);
                        rest += 1;
                    }
                    Some(l) => return Err(syntax(lineno, l.column, "expected a quoted alternative")),
                    None => return Err(syntax(lineno, eol, "expected a quoted alternative")),
                }
                match items.get(rest) {
                    Some(Located { lexeme: Lexeme::Pipe, .. }) => rest += 1,
                    _ => break,
                }
            }
            NodeKind::Terminals(alts)
        }
        Lexeme::Word(w) => {
            return Err(syntax(lineno, head.column, format!("unexpected `{w}` in node content")))
        }
        Lexeme::Pipe | Lexeme::Slash => {
            return Err(syntax(lineno, head.column, "expected node content"))
        }
    };
    let mut content = NodeContent::new(kind);
    match items.get(rest) {
        None => {}
        Some(Located { lexeme: Lexeme::Slash, column }) => match items.get(rest + 1) {
            Some(Located { lexeme: Lexeme::Quoted(o), .. }) => {
                content.output = Some(nfc(o));
                if let Some(extra) = items.get(rest + 2) {
                    return Err(syntax(lineno, extra.column, "trailing content after output"));
                }
            }
            _ => return Err(syntax(lineno, *column, "expected a quoted output after `/`")),
        },
        Some(l) => return Err(syntax(lineno, l.column, "trailing content in node line")),
    }
    let node = GraphNode { id, content };
    check_node(&node).map_err(|e| err(lineno, 1, e.into()))?;
    Ok(node)
}

/// Parses one `.lgg` source into a [`Grammar`].
pub fn parse_grammar(source: &str) -> Result<Grammar, ParseError> {
    let mut name: Option<String> = None;
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut node_lines: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut edges = Vec::new();
    let mut edge_lines = Vec::new();
    let mut finished: Option<usize> = None;
    let mut last_line = 1;

    for (i, raw) in source.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let items = lex_line(raw, lineno)?;
        let Some(first) = items.first() else { continue };
        let eol = raw.chars().count() + 1;
        if finished.is_some() {
            return Err(syntax(lineno, first.column, "content after `end`"));
        }
        let keyword = match &first.lexeme {
            Lexeme::Word(w) => w.as_str(),
            _ => return Err(syntax(lineno, first.column, "expected a keyword")),
        };
        match keyword {
            "graph" => {
                if name.is_some() {
                    return Err(syntax(lineno, first.column, "only one graph per file"));
                }
                match items.get(1) {
                    Some(Located { lexeme: Lexeme::Word(n), column }) => {
                        if !is_valid_name(n) {
                            return Err(syntax(lineno, *column, format!("invalid graph name `{n}`")));
                        }
                        if let Some(extra) = items.get(2) {
                            return Err(syntax(lineno, extra.column, "trailing content after graph name"));
                        }
                        name = Some(n.clone());
                    }
                    Some(l) => return Err(syntax(lineno, l.column, "expected a graph name")),
                    None => return Err(syntax(lineno, eol, "expected a graph name")),
                }
            }
            _ if name.is_none() => {
                return Err(syntax(lineno, first.column, "expected `graph <Name>` first"))
            }
            "node" => {
                let node = parse_node(&items, lineno, eol)?;
                if node_lines.insert(node.id, lineno).is_some() {
                    return Err(err(
                        lineno,
                        items[1].column,
                        StructureError::DuplicateNode(node.id).into(),
                    ));
                }
                nodes.push(node);
            }
            "edge" => {
                let src = parse_id(items.get(1), lineno, eol)?;
                let dst = parse_id(items.get(2), lineno, eol)?;
                if let Some(extra) = items.get(3) {
                    return Err(syntax(lineno, extra.column, "trailing content after edge"));
                }
                edges.push((src, dst));
                edge_lines.push(lineno);
            }
            "end" => {
                if let Some(extra) = items.get(1) {
                    return Err(syntax(lineno, extra.column, "trailing content after `end`"));
                }
                finished = Some(lineno);
            }
            other => {
                return Err(syntax(lineno, first.column, format!("unknown keyword `{other}`")))
            }
        }
    }

    let Some(end_line) = finished else {
        return Err(syntax(last_line, 1, "missing `end`"));
    };
    let name = name.expect("graph name is set before `end`");
    let edges_src = edges.clone();
    Grammar::new(name, nodes, edges).map_err(|e| {
        let line = match &e {
            StructureError::UnknownNode(s, d)
            | StructureError::EdgeFromEnd(s, d)
            | StructureError::EdgeIntoStart(s, d) => edges_src
                .iter()
                .zip(&edge_lines)
                .find(|(e, _)| **e == (*s, *d))
                .map(|(_, &l)| l)
                .unwrap_or(end_line),
            StructureError::DuplicateNode(id) => node_lines.get(id).copied().unwrap_or(end_line),
            _ => end_line,
        };
        err(line, 1, e.into())
    })
}
