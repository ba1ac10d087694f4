use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};

use crate::error::{RefTarget, ResourceError, UnresolvedRef};
use crate::grammar::{Grammar, Lexicon, NodeId, NodeKind, END, START};

/// Every grammar and lexicon of a project, cross-checked.
///
/// Immutable once built: all subgraph calls and lexicon references resolve
/// and the call graph has no cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceSet {
    grammars: BTreeMap<String, Grammar>,
    lexicons: BTreeMap<String, Lexicon>,
}

impl ResourceSet {
    pub fn new(grammars: Vec<Grammar>, lexicons: Vec<Lexicon>) -> Result<Self, ResourceError> {
        let mut gmap = BTreeMap::new();
        for g in grammars {
            let name = g.name().to_string();
            if gmap.insert(name.clone(), g).is_some() {
                return Err(ResourceError::DuplicateGrammar(name));
            }
        }
        let mut lmap = BTreeMap::new();
        for l in lexicons {
            let name = l.name().to_string();
            if lmap.insert(name.clone(), l).is_some() {
                return Err(ResourceError::DuplicateLexicon(name));
            }
        }

        let mut unresolved = Vec::new();
        for g in gmap.values() {
            for node in g.nodes() {
                let target = match &node.content.kind {
                    NodeKind::SubgraphCall(c) if !gmap.contains_key(c) => RefTarget::Graph(c.clone()),
                    NodeKind::LexiconRef(l) if !lmap.contains_key(l) => RefTarget::Lexicon(l.clone()),
                    _ => continue,
                };
                unresolved.push(UnresolvedRef { grammar: g.name().to_string(), node: node.id, target });
            }
        }
        if !unresolved.is_empty() {
            return Err(ResourceError::Unresolved(unresolved));
        }
        if let Some(cycle) = find_call_cycle(&gmap) {
            return Err(ResourceError::Recursion(cycle));
        }
        Ok(ResourceSet { grammars: gmap, lexicons: lmap })
    }

    pub fn grammar(&self, name: &str) -> Option<&Grammar> {
        self.grammars.get(name)
    }

    pub fn lexicon(&self, name: &str) -> Option<&Lexicon> {
        self.lexicons.get(name)
    }

    /// Grammars sorted by name.
    pub fn grammars(&self) -> impl Iterator<Item = &Grammar> {
        self.grammars.values()
    }

    pub fn lexicons(&self) -> impl Iterator<Item = &Lexicon> {
        self.lexicons.values()
    }

    /// Names reachable from `root` through subgraph calls, `root` first.
    pub fn closure<'a>(&'a self, root: &'a str) -> Vec<&'a str> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(name) = stack.pop() {
            if !seen.insert(name) {
                continue;
            }
            order.push(name);
            if let Some(g) = self.grammars.get(name) {
                for c in g.calls().into_iter().rev() {
                    stack.push(c);
                }
            }
        }
        order
    }

    /// SHA-256 over the canonical text of every grammar and lexicon, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for g in self.grammars.values() {
            h.update(g.to_lgg().as_bytes());
        }
        for l in self.lexicons.values() {
            h.update(b"lexicon ");
            h.update(l.name().as_bytes());
            h.update(b"\n");
            for e in l.entries() {
                h.update(e.notation().as_bytes());
                h.update(b"\n");
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push(DIGITS[(b >> 4) as usize] as char);
        s.push(DIGITS[(b & 0xf) as usize] as char);
    }
    s
}

fn find_call_cycle(grammars: &BTreeMap<String, Grammar>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        name: &'a str,
        grammars: &'a BTreeMap<String, Grammar>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match marks.get(name) {
            Some(Mark::Done) => return None,
            Some(Mark::Active) => {
                let pos = stack.iter().position(|n| *n == name).unwrap_or(0);
                let mut cycle: Vec<String> = stack[pos..].iter().map(|s| s.to_string()).collect();
                cycle.push(name.to_string());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(name, Mark::Active);
        stack.push(name);
        if let Some(g) = grammars.get(name) {
            for callee in g.calls() {
                if let Some(c) = visit(callee, grammars, marks, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        marks.insert(name, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for name in grammars.keys() {
        let mut stack = Vec::new();
        if let Some(c) = visit(name, grammars, &mut marks, &mut stack) {
            return Some(c);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Issue {
    /// Not reachable from the start node.
    Unreachable { node: NodeId },
    /// No path from this node to the end node.
    DeadEnd { node: NodeId },
    Cycle { src: NodeId, dst: NodeId },
    /// Every path of the graph renders nothing.
    EmptyLanguage,
    /// A `""` alternative, which behaves like an epsilon box.
    EmptyAlternative { node: NodeId, alternative: usize },
    DuplicateEdge { src: NodeId, dst: NodeId },
}

impl Issue {
    pub fn severity(&self) -> Severity {
        match self {
            Issue::Unreachable { .. } | Issue::DeadEnd { .. } | Issue::Cycle { .. } | Issue::EmptyLanguage => {
                Severity::Error
            }
            Issue::EmptyAlternative { .. } | Issue::DuplicateEdge { .. } => Severity::Warning,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Unreachable { node } => write!(f, "node {node} is unreachable from the start node"),
            Issue::DeadEnd { node } => write!(f, "node {node} has no path to the end node"),
            Issue::Cycle { src, dst } => write!(f, "edge {src} -> {dst} lies on a cycle"),
            Issue::EmptyLanguage => write!(f, "every path renders an empty utterance"),
            Issue::EmptyAlternative { node, alternative } => {
                write!(f, "node {node}: alternative {alternative} is empty")
            }
            Issue::DuplicateEdge { src, dst } => write!(f, "edge {src} -> {dst} is declared twice"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostic {
    pub grammar: String,
    pub severity: Severity,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub issue: Issue,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.grammar, self.issue)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub ok: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

/// Structural checks over every grammar of the set.
pub fn validate(rs: &ResourceSet) -> ValidationReport {
    let mut diagnostics = Vec::new();
    let nonempty = nonempty_languages(rs);
    for g in rs.grammars() {
        for issue in grammar_issues(g) {
            diagnostics.push(Diagnostic {
                grammar: g.name().to_string(),
                severity: issue.severity(),
                issue,
            });
        }
        if nonempty.get(g.name()) == Some(&false) {
            diagnostics.push(Diagnostic {
                grammar: g.name().to_string(),
                severity: Severity::Error,
                issue: Issue::EmptyLanguage,
            });
        }
    }
    let ok = diagnostics.iter().all(|d| d.severity != Severity::Error);
    ValidationReport { ok, diagnostics }
}

/// Issues local to one grammar, in node declaration order per category.
pub fn grammar_issues(g: &Grammar) -> Vec<Issue> {
    let mut issues = Vec::new();
    let adj = g.adjacency();
    let mut radj: BTreeMap<NodeId, Vec<NodeId>> = adj.keys().map(|&k| (k, Vec::new())).collect();
    let mut seen_edges = BTreeSet::new();
    for &(s, d) in g.edges() {
        radj.entry(d).or_default().push(s);
        if !seen_edges.insert((s, d)) {
            issues.push(Issue::DuplicateEdge { src: s, dst: d });
        }
    }

    let forward = reach(START, &adj);
    let backward = reach(END, &radj);
    for node in g.nodes() {
        if !forward.contains(&node.id) {
            issues.push(Issue::Unreachable { node: node.id });
        } else if !backward.contains(&node.id) {
            issues.push(Issue::DeadEnd { node: node.id });
        }
    }
    if let Some((src, dst)) = node_cycle(g, &adj) {
        issues.push(Issue::Cycle { src, dst });
    }
    for node in g.nodes() {
        if let NodeKind::Terminals(alts) = &node.content.kind {
            for (i, alt) in alts.iter().enumerate() {
                if alt.is_epsilon() {
                    issues.push(Issue::EmptyAlternative { node: node.id, alternative: i });
                }
            }
        }
    }
    issues
}

fn reach(from: NodeId, adj: &BTreeMap<NodeId, Vec<NodeId>>) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if seen.insert(n) {
            if let Some(next) = adj.get(&n) {
                stack.extend(next.iter().copied());
            }
        }
    }
    seen
}

/// Returns an edge lying on a cycle, if any.
pub(crate) fn node_cycle(g: &Grammar, adj: &BTreeMap<NodeId, Vec<NodeId>>) -> Option<(NodeId, NodeId)> {
    let mut indeg: BTreeMap<NodeId, usize> = adj.keys().map(|&k| (k, 0)).collect();
    for &(_, d) in g.edges() {
        *indeg.entry(d).or_default() += 1;
    }
    let mut queue: Vec<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&k, _)| k).collect();
    let mut removed = BTreeSet::new();
    while let Some(n) = queue.pop() {
        removed.insert(n);
        for &m in adj.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indeg.get_mut(&m).expect("edge target indexed");
            *d -= 1;
            if *d == 0 {
                queue.push(m);
            }
        }
    }
    // Every leftover node has a leftover predecessor; walk backwards until
    // a node repeats.
    let mut pred: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for &(s, d) in g.edges() {
        if !removed.contains(&s) && !removed.contains(&d) {
            pred.entry(d).or_insert(s);
        }
    }
    let mut x = g.nodes().iter().map(|n| n.id).find(|id| !removed.contains(id))?;
    let mut visited = BTreeSet::new();
    loop {
        visited.insert(x);
        let p = pred[&x];
        if visited.contains(&p) {
            return Some((p, x));
        }
        x = p;
    }
}

/// For each grammar, whether some start-to-end path consumes a token.
/// Grammars with cycles are treated as non-empty; the cycle is reported
/// separately.
fn nonempty_languages(rs: &ResourceSet) -> BTreeMap<String, bool> {
    fn solve<'a>(rs: &'a ResourceSet, name: &'a str, memo: &mut BTreeMap<String, bool>) -> bool {
        if let Some(&v) = memo.get(name) {
            return v;
        }
        let Some(g) = rs.grammar(name) else { return false };
        let adj = g.adjacency();
        if node_cycle(g, &adj).is_some() {
            memo.insert(name.to_string(), true);
            return true;
        }
        // consumes(n): node n itself can consume a token
        let mut consumes = BTreeMap::new();
        for node in g.nodes() {
            let c = match &node.content.kind {
                NodeKind::Terminals(alts) => alts.iter().any(|a| !a.is_epsilon()),
                NodeKind::LexiconRef(_) => true,
                NodeKind::SubgraphCall(callee) => solve(rs, callee, memo),
                NodeKind::Start | NodeKind::End | NodeKind::Epsilon => false,
            };
            consumes.insert(node.id, c);
        }
        // A consuming node on any start-to-end path makes the language non-empty.
        let forward = reach(START, &adj);
        let mut radj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(s, d) in g.edges() {
            radj.entry(d).or_default().push(s);
        }
        let backward = reach(END, &radj);
        let v = g
            .nodes()
            .iter()
            .any(|n| consumes[&n.id] && forward.contains(&n.id) && backward.contains(&n.id));
        memo.insert(name.to_string(), v);
        v
    }
    let mut memo = BTreeMap::new();
    for g in rs.grammars() {
        solve(rs, g.name(), &mut memo);
    }
    memo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_grammar, parse_lexicon};

    fn g(src: &str) -> Grammar {
        parse_grammar(src).unwrap()
    }

    const GREET: &str = "graph Greet\nnode 0 <START>\nnode 1 <END>\nnode 2 \"hello\" | \"hi\"\nnode 3 \"world\" | \"there\" | \"friend\"\nedge 0 2\nedge 2 3\nedge 3 1\nend\n";

    #[test]
    fn resolves_calls() {
        let main = g("graph Main\nnode 0 <START>\nnode 1 <END>\nnode 2 :Greet\nedge 0 2\nedge 2 1\nend\n");
        let rs = ResourceSet::new(vec![main, g(GREET)], vec![]).unwrap();
        assert_eq!(rs.grammars().count(), 2);
        assert_eq!(rs.closure("Main"), vec!["Main", "Greet"]);
    }

    #[test]
    fn reports_recursion_as_name_sequence() {
        let a = g("graph A\nnode 0 <START>\nnode 1 <END>\nnode 2 :B\nedge 0 2\nedge 2 1\nend\n");
        let b = g("graph B\nnode 0 <START>\nnode 1 <END>\nnode 2 :A\nedge 0 2\nedge 2 1\nend\n");
        let e = ResourceSet::new(vec![a, b], vec![]).unwrap_err();
        assert_eq!(e, ResourceError::Recursion(vec!["A".into(), "B".into(), "A".into()]));
    }

    #[test]
    fn lists_every_unresolved_reference() {
        let m = g("graph Main\nnode 0 <START>\nnode 1 <END>\nnode 2 @family_member\nnode 3 :Missing\nedge 0 2\nedge 2 3\nedge 3 1\nend\n");
        match ResourceSet::new(vec![m], vec![]).unwrap_err() {
            ResourceError::Unresolved(refs) => {
                assert_eq!(refs.len(), 2);
                assert_eq!(refs[0].target, RefTarget::Lexicon("family_member".into()));
                assert_eq!(refs[1].target, RefTarget::Graph("Missing".into()));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn greet_validates_clean() {
        let rs = ResourceSet::new(vec![g(GREET)], vec![]).unwrap();
        let report = validate(&rs);
        assert!(report.ok);
        assert!(report.diagnostics.is_empty());
    }

    #[test]
    fn dead_end_and_unreachable() {
        let src = "graph G\nnode 0 <START>\nnode 1 <END>\nnode 2 \"a\"\nnode 5 \"b\"\nnode 6 \"orphan\"\nedge 0 2\nedge 2 1\nedge 2 5\nend\n";
        let rs = ResourceSet::new(vec![g(src)], vec![]).unwrap();
        let report = validate(&rs);
        assert!(!report.ok);
        let issues: Vec<&Issue> = report.errors().map(|d| &d.issue).collect();
        assert!(issues.contains(&&Issue::DeadEnd { node: 5 }));
        assert!(issues.contains(&&Issue::Unreachable { node: 6 }));
    }

    #[test]
    fn cycles_and_empty_languages_are_errors() {
        let cyc = "graph C\nnode 0 <START>\nnode 1 <END>\nnode 2 \"a\"\nnode 3 \"b\"\nedge 0 2\nedge 2 3\nedge 3 2\nedge 3 1\nend\n";
        let empty = "graph Z\nnode 0 <START>\nnode 1 <END>\nnode 2 <E>\nnode 3 \"\"\nedge 0 2\nedge 2 3\nedge 3 1\nend\n";
        let rs = ResourceSet::new(vec![g(cyc), g(empty)], vec![]).unwrap();
        let report = validate(&rs);
        let kinds: Vec<(&str, &Issue)> = report.diagnostics.iter().map(|d| (d.grammar.as_str(), &d.issue)).collect();
        assert!(kinds.contains(&("C", &Issue::Cycle { src: 3, dst: 2 })));
        assert!(kinds.contains(&("Z", &Issue::EmptyLanguage)));
        assert!(kinds.contains(&("Z", &Issue::EmptyAlternative { node: 3, alternative: 0 })));
    }

    #[test]
    fn content_hash_tracks_lexicons() {
        let l1 = parse_lexicon("w", "a\nb\n").unwrap();
        let l2 = parse_lexicon("w", "a\nc\n").unwrap();
        let r1 = ResourceSet::new(vec![g(GREET)], vec![l1.clone()]).unwrap();
        let r2 = ResourceSet::new(vec![g(GREET)], vec![l2]).unwrap();
        let r3 = ResourceSet::new(vec![g(GREET)], vec![l1]).unwrap();
        assert_ne!(r1.content_hash(), r2.content_hash());
        assert_eq!(r1.content_hash(), r3.content_hash());
        assert_eq!(r1.content_hash().len(), 64);
    }
}
