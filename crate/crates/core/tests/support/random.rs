//! Seeded random resource sets for property tests, plus a naive reference
//! walk over uncompiled grammars.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lgg_core::{parse_grammar, parse_lexicon, render, Grammar, NodeKind, ResourceSet, Token};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &["a", "b", "c", "d", "hi", "there", "이혼", "싶어요", "^요", "^s", "?", "^.", "ok,"];

fn below(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    rng.next_u32() % n
}

fn alternative(rng: &mut ChaCha8Rng) -> String {
    let len = 1 + below(rng, 2);
    (0..len).map(|_| WORDS[below(rng, WORDS.len() as u32) as usize]).collect::<Vec<_>>().join(" ")
}

/// Sources of a random resource set: grammars `G0..Gk` (the last one is the
/// root) and lexicons `lex0..`.
pub struct RandomSources {
    pub grammars: Vec<String>,
    pub lexicons: Vec<(String, String)>,
    pub root: String,
}

impl RandomSources {
    pub fn resource_set(&self) -> ResourceSet {
        let gs = self.grammars.iter().map(|s| parse_grammar(s).expect("generated grammar parses")).collect();
        let ls = self.lexicons.iter().map(|(n, s)| parse_lexicon(n, s).expect("generated lexicon parses")).collect();
        ResourceSet::new(gs, ls).expect("generated resources resolve")
    }
}

pub fn random_sources(seed: u64) -> RandomSources {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_lex = below(&mut rng, 3) as usize;
    let lexicons: Vec<(String, String)> = (0..n_lex)
        .map(|i| {
            let entries: Vec<String> = (0..1 + below(&mut rng, 4)).map(|_| alternative(&mut rng)).collect();
            (format!("lex{i}"), entries.join("\n") + "\n")
        })
        .collect();
    let n_graphs = 1 + below(&mut rng, 3) as usize;
    let grammars = (0..n_graphs).map(|gi| random_grammar(&mut rng, gi, n_lex)).collect();
    RandomSources { grammars, lexicons, root: format!("G{}", n_graphs - 1) }
}

fn random_grammar(rng: &mut ChaCha8Rng, gi: usize, n_lex: usize) -> String {
    let inner = 1 + below(rng, 5) as u32;
    let mut src = format!("graph G{gi}\nnode 0 <START>\nnode 1 <END>\n");
    for id in 2..2 + inner {
        let content = match below(rng, 10) {
            0 => "<E>".to_string(),
            1 if gi > 0 => format!(":G{}", below(rng, gi as u32)),
            2 if n_lex > 0 => format!("@lex{}", below(rng, n_lex as u32)),
            _ => {
                let alts: Vec<String> = (0..1 + below(rng, 3)).map(|_| format!("\"{}\"", alternative(rng))).collect();
                alts.join(" | ")
            }
        };
        let output = if below(rng, 6) == 0 { format!(" / \"o{id}\"") } else { String::new() };
        writeln!(src, "node {id} {content}{output}").unwrap();
    }
    // Nodes 2.. are in topological order; each gets an edge in from an
    // earlier node and an edge out to a later one.
    let order: Vec<u32> = std::iter::once(0).chain(2..2 + inner).chain(std::iter::once(1)).collect();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let add = |e: (u32, u32), edges: &mut Vec<(u32, u32)>| {
        if !edges.contains(&e) {
            edges.push(e);
        }
    };
    for k in 1..order.len() - 1 {
        let from = order[below(rng, k as u32) as usize];
        add((from, order[k]), &mut edges);
        let to = order[k + 1 + below(rng, (order.len() - k - 1) as u32) as usize];
        add((order[k], to), &mut edges);
    }
    for _ in 0..below(rng, 4) {
        let a = below(rng, order.len() as u32 - 1) as usize;
        let b = a + 1 + below(rng, (order.len() - a - 1) as u32) as usize;
        if (order[a], order[b]) != (0, 1) {
            add((order[a], order[b]), &mut edges);
        }
    }
    for (a, b) in edges {
        writeln!(src, "edge {a} {b}").unwrap();
    }
    src.push_str("end\n");
    src
}

/// Every path of `root` as a token sequence, by direct recursion over the
/// grammar graphs, empty renderings included.
pub fn naive_paths(rs: &ResourceSet, root: &str) -> Vec<Vec<Token>> {
    fn walk(rs: &ResourceSet, g: &Grammar, memo: &mut BTreeMap<String, Vec<Vec<Token>>>) -> Vec<Vec<Token>> {
        let adj = g.adjacency();
        let mut out = Vec::new();
        let mut stack: Vec<(u32, Vec<Token>)> = vec![(0, Vec::new())];
        // depth-first with explicit prefixes; grammars here are tiny
        while let Some((node, prefix)) = stack.pop() {
            let content: Vec<Vec<Token>> = match &g.node(node).unwrap().content.kind {
                NodeKind::Start | NodeKind::End | NodeKind::Epsilon => vec![Vec::new()],
                NodeKind::Terminals(alts) => alts.iter().map(|a| a.0.clone()).collect(),
                NodeKind::LexiconRef(l) => rs.lexicon(l).unwrap().entries().iter().map(|a| a.0.clone()).collect(),
                NodeKind::SubgraphCall(c) => {
                    if !memo.contains_key(c) {
                        let sub = walk(rs, rs.grammar(c).unwrap(), memo);
                        memo.insert(c.clone(), sub);
                    }
                    memo[c].clone()
                }
            };
            for piece in content {
                let mut p = prefix.clone();
                p.extend(piece);
                if node == 1 {
                    out.push(p);
                } else {
                    for &next in adj.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
                        stack.push((next, p.clone()));
                    }
                }
            }
        }
        out
    }
    walk(rs, rs.grammar(root).unwrap(), &mut BTreeMap::new())
}

/// Rendered texts of the non-empty naive paths, sorted.
pub fn naive_texts(rs: &ResourceSet, root: &str) -> Vec<String> {
    let mut v: Vec<String> =
        naive_paths(rs, root).into_iter().filter(|p| !p.is_empty()).map(|p| render(p.iter())).collect();
    v.sort();
    v
}
