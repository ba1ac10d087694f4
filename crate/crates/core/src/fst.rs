//! Compilation of grammar graphs into epsilon-free acyclic transducers, and
//! exact path counting over them.
//!
//! Compilation runs in two stages. Every subgraph call is first inlined into
//! an epsilon automaton, with lexicon references expanded to one arc per
//! entry. Epsilon arcs are then removed by enumerating epsilon *paths*, not
//! epsilon-reachable states, so the number of start-to-final paths of the
//! result equals the number of grammar paths (minus any that render nothing).
//!
//! Transition order follows source order: at each state, arcs are visited in
//! edge order and alternatives in declaration order, depth first. When a
//! consumed token can either continue or finish the utterance, the
//! continuing transition comes first.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{CompileError, FstError};
use crate::grammar::{NodeKind, END, START};
use crate::resource::{grammar_issues, ResourceSet, Severity};
use crate::token::TokenString;

pub type StateId = usize;

/// One token-consuming step. `outputs` collects the emissions of the box
/// and of any epsilon boxes folded into this step, in path order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub input: TokenString,
    pub outputs: Vec<String>,
    pub dst: StateId,
}

/// An epsilon-free acyclic transducer with a single start and final state.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fst {
    states: Vec<Vec<Transition>>,
    start: StateId,
    final_state: StateId,
    dropped_empty: BigUint,
}

impl Fst {
    /// Builds a transducer from raw parts, checking state references, that
    /// no transition is an epsilon and that the final state has no outgoing
    /// transitions. Acyclicity is checked by [`count_paths`].
    pub fn from_parts(
        states: Vec<Vec<Transition>>,
        start: StateId,
        final_state: StateId,
    ) -> Result<Self, FstError> {
        let fst = Fst { states, start, final_state, dropped_empty: BigUint::zero() };
        fst.check()?;
        Ok(fst)
    }

    /// The structural checks of [`Fst::from_parts`], for transducers that
    /// arrive by other routes such as deserialization.
    pub fn check(&self) -> Result<(), FstError> {
        let n = self.states.len();
        if self.start >= n || self.final_state >= n {
            return Err(FstError::BadEndpoint);
        }
        if !self.states[self.final_state].is_empty() {
            return Err(FstError::FinalHasTransitions);
        }
        for (src, ts) in self.states.iter().enumerate() {
            for t in ts {
                if t.dst >= n {
                    return Err(FstError::BadState { src, dst: t.dst });
                }
                if t.input.is_epsilon() {
                    return Err(FstError::Epsilon { src, dst: t.dst });
                }
            }
        }
        Ok(())
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn final_state(&self) -> StateId {
        self.final_state
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.states.iter().map(Vec::len).sum()
    }

    pub fn transitions(&self, state: StateId) -> &[Transition] {
        &self.states[state]
    }

    /// Number of all-epsilon paths removed during compilation.
    pub fn dropped_empty_paths(&self) -> &BigUint {
        &self.dropped_empty
    }

    /// Union of several transducers. Paths of `parts[0]` come first in
    /// canonical order, then those of `parts[1]`, and so on.
    pub fn union(parts: &[Fst]) -> Fst {
        let mut states: Vec<Vec<Transition>> = vec![Vec::new(), Vec::new()];
        let mut dropped = BigUint::zero();
        for part in parts {
            dropped += &part.dropped_empty;
            let base = states.len();
            let remap = |s: StateId| if s == part.final_state { 1 } else { base + s };
            for ts in &part.states {
                states.push(
                    ts.iter()
                        .map(|t| Transition { dst: remap(t.dst), ..t.clone() })
                        .collect(),
                );
            }
            let entry: Vec<Transition> = part.states[part.start]
                .iter()
                .map(|t| Transition { dst: remap(t.dst), ..t.clone() })
                .collect();
            states[0].extend(entry);
        }
        let mut fst = Fst { states, start: 0, final_state: 1, dropped_empty: dropped };
        fst.trim();
        fst
    }

    /// Drops states unreachable from the start, renumbering the rest in
    /// discovery order (start 0, final 1).
    fn trim(&mut self) {
        let mut ids: Vec<Option<StateId>> = vec![None; self.states.len()];
        let mut order = vec![self.start, self.final_state];
        ids[self.start] = Some(0);
        ids[self.final_state] = Some(1);
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for t in &self.states[s] {
                if ids[t.dst].is_none() {
                    ids[t.dst] = Some(order.len());
                    order.push(t.dst);
                }
            }
            i += 1;
        }
        let mut states = Vec::with_capacity(order.len());
        for &s in &order {
            states.push(
                self.states[s]
                    .iter()
                    .map(|t| Transition { dst: ids[t.dst].expect("reached"), ..t.clone() })
                    .collect(),
            );
        }
        self.states = states;
        self.start = 0;
        self.final_state = 1;
    }
}

/// What to do with grammar paths that render an empty utterance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EmptyPaths {
    /// Remove them; the count is kept in [`Fst::dropped_empty_paths`].
    #[default]
    Drop,
    Reject,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompileOptions {
    pub empty_paths: EmptyPaths,
}

/// Compiles `root` with default options.
pub fn compile(rs: &ResourceSet, root: &str) -> Result<Fst, CompileError> {
    compile_with(rs, root, CompileOptions::default())
}

pub fn compile_with(rs: &ResourceSet, root: &str, opts: CompileOptions) -> Result<Fst, CompileError> {
    let mut nfa = Nfa::default();
    let (entry, exit) = nfa.inline(rs, root, &mut Vec::new())?;
    nfa.remove_epsilons(entry, exit, opts, root)
}

/// Checks the grammars reachable from `root` for structural errors.
pub(crate) fn check_closure(rs: &ResourceSet, root: &str) -> Result<(), CompileError> {
    if rs.grammar(root).is_none() {
        return Err(CompileError::UnknownGraph(root.to_string()));
    }
    for name in rs.closure(root) {
        let g = rs.grammar(name).ok_or_else(|| CompileError::UnknownGraph(name.to_string()))?;
        if let Some(issue) = grammar_issues(g).into_iter().find(|i| i.severity() == Severity::Error) {
            return Err(CompileError::Invalid { graph: name.to_string(), detail: issue.to_string() });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Arc {
    /// Empty for epsilon arcs.
    input: TokenString,
    output: Option<String>,
    dst: usize,
}

/// Epsilon automaton used as the intermediate form of compilation.
#[derive(Debug, Default)]
pub(crate) struct Nfa {
    arcs: Vec<Vec<Arc>>,
}

impl Nfa {
    pub(crate) fn state(&mut self) -> usize {
        self.arcs.push(Vec::new());
        self.arcs.len() - 1
    }

    pub(crate) fn eps(&mut self, from: usize, to: usize) {
        self.arcs[from].push(Arc { input: TokenString::epsilon(), output: None, dst: to });
    }

    /// Inlines a fresh copy of `name`, returning its (entry, exit) states.
    pub(crate) fn inline(
        &mut self,
        rs: &ResourceSet,
        name: &str,
        stack: &mut Vec<String>,
    ) -> Result<(usize, usize), CompileError> {
        if stack.iter().any(|s| s == name) {
            let mut cycle = stack.clone();
            cycle.push(name.to_string());
            return Err(CompileError::Recursion(cycle));
        }
        if stack.is_empty() {
            check_closure(rs, name)?;
        }
        let g = rs.grammar(name).ok_or_else(|| CompileError::UnknownGraph(name.to_string()))?;
        stack.push(name.to_string());

        // Start and end boxes get one state; every other box an (in, out) pair.
        let mut ports: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for node in g.nodes() {
            let content = &node.content;
            let (inp, out) = match &content.kind {
                NodeKind::Start | NodeKind::End => {
                    let s = self.state();
                    (s, s)
                }
                NodeKind::Epsilon => {
                    let (i, o) = (self.state(), self.state());
                    self.arcs[i].push(Arc { input: TokenString::epsilon(), output: content.output.clone(), dst: o });
                    (i, o)
                }
                NodeKind::Terminals(alts) => {
                    let (i, o) = (self.state(), self.state());
                    for alt in alts {
                        self.arcs[i].push(Arc { input: alt.clone(), output: content.output.clone(), dst: o });
                    }
                    (i, o)
                }
                NodeKind::LexiconRef(lex) => {
                    let lexicon = rs.lexicon(lex).ok_or_else(|| CompileError::Invalid {
                        graph: name.to_string(),
                        detail: alloc::format!("unknown lexicon `{lex}`"),
                    })?;
                    let (i, o) = (self.state(), self.state());
                    for entry in lexicon.entries() {
                        self.arcs[i].push(Arc { input: entry.clone(), output: content.output.clone(), dst: o });
                    }
                    (i, o)
                }
                NodeKind::SubgraphCall(callee) => {
                    let i = self.state();
                    let (ce, cx) = self.inline(rs, callee, stack)?;
                    let o = self.state();
                    self.arcs[i].push(Arc { input: TokenString::epsilon(), output: content.output.clone(), dst: ce });
                    self.eps(cx, o);
                    (i, o)
                }
            };
            ports.insert(node.id, (inp, out));
        }
        for &(src, dst) in g.edges() {
            let from = ports[&src].1;
            let to = ports[&dst].0;
            self.eps(from, to);
        }
        stack.pop();
        Ok((ports[&START].0, ports[&END].1))
    }

    /// Epsilon paths from `x` ending in a consuming arc: (outputs along the
    /// epsilon path, state, arc index), in depth-first source order.
    fn closure(&self, x: usize) -> Vec<(Vec<String>, usize, usize)> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.closure_rec(x, &mut prefix, &mut out);
        out
    }

    fn closure_rec(&self, x: usize, prefix: &mut Vec<String>, out: &mut Vec<(Vec<String>, usize, usize)>) {
        for (i, arc) in self.arcs[x].iter().enumerate() {
            if arc.input.is_epsilon() {
                let pushed = arc.output.is_some();
                if let Some(o) = &arc.output {
                    prefix.push(o.clone());
                }
                self.closure_rec(arc.dst, prefix, out);
                if pushed {
                    prefix.pop();
                }
            } else {
                out.push((prefix.clone(), x, i));
            }
        }
    }

    /// Outputs of every epsilon path from `x` to `fin`.
    fn finals(&self, x: usize, fin: usize, memo: &mut BTreeMap<usize, Vec<Vec<String>>>) -> Vec<Vec<String>> {
        if let Some(v) = memo.get(&x) {
            return v.clone();
        }
        let mut res = Vec::new();
        if x == fin {
            res.push(Vec::new());
        }
        for arc in &self.arcs[x] {
            if arc.input.is_epsilon() {
                for tail in self.finals(arc.dst, fin, memo) {
                    let mut v = Vec::with_capacity(tail.len() + 1);
                    v.extend(arc.output.iter().cloned());
                    v.extend(tail);
                    res.push(v);
                }
            }
        }
        memo.insert(x, res.clone());
        res
    }

    pub(crate) fn remove_epsilons(
        &self,
        entry: usize,
        exit: usize,
        opts: CompileOptions,
        label: &str,
    ) -> Result<Fst, CompileError> {
        let mut finals_memo = BTreeMap::new();
        let mut has_continuation: BTreeMap<usize, bool> = BTreeMap::new();
        let mut ids: BTreeMap<usize, StateId> = BTreeMap::new();
        let mut states: Vec<Vec<Transition>> = vec![Vec::new(), Vec::new()];
        ids.insert(entry, 0);
        let mut queue = vec![entry];
        let mut qi = 0;

        let dropped = self.finals(entry, exit, &mut finals_memo).len();
        if dropped > 0 && opts.empty_paths == EmptyPaths::Reject {
            return Err(CompileError::EmptyPath(label.to_string()));
        }

        while qi < queue.len() {
            let x = queue[qi];
            qi += 1;
            let me = ids[&x];
            let mut out = Vec::new();
            for (prefix, u, ai) in self.closure(x) {
                let arc = &self.arcs[u][ai];
                let v = arc.dst;
                let mut outputs = prefix;
                outputs.extend(arc.output.iter().cloned());
                let cont = *has_continuation.entry(v).or_insert_with(|| !self.closure(v).is_empty());
                if cont {
                    let next = match ids.get(&v) {
                        Some(&id) => id,
                        None => {
                            let id = states.len();
                            states.push(Vec::new());
                            ids.insert(v, id);
                            queue.push(v);
                            id
                        }
                    };
                    out.push(Transition { input: arc.input.clone(), outputs: outputs.clone(), dst: next });
                }
                for tail in self.finals(v, exit, &mut finals_memo) {
                    let mut o = outputs.clone();
                    o.extend(tail);
                    out.push(Transition { input: arc.input.clone(), outputs: o, dst: 1 });
                }
            }
            states[me] = out;
        }

        let fst = Fst { states, start: 0, final_state: 1, dropped_empty: BigUint::from(dropped) };
        if fst.states[0].is_empty() {
            return Err(CompileError::EmptyLanguage(label.to_string()));
        }
        Ok(fst)
    }
}

/// Exact number of paths from each state to the final state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCountTable {
    counts: Vec<BigUint>,
    start: StateId,
}

impl PathCountTable {
    pub fn get(&self, state: StateId) -> &BigUint {
        &self.counts[state]
    }

    pub fn total(&self) -> &BigUint {
        &self.counts[self.start]
    }

    pub fn as_slice(&self) -> &[BigUint] {
        &self.counts
    }
}

/// Counts paths by dynamic programming in reverse topological order.
pub fn count_paths(fst: &Fst) -> Result<PathCountTable, FstError> {
    let order = topo_order(fst)?;
    let mut counts = vec![BigUint::zero(); fst.states.len()];
    for &s in order.iter().rev() {
        let mut c = if s == fst.final_state { BigUint::one() } else { BigUint::zero() };
        for t in &fst.states[s] {
            c += &counts[t.dst];
        }
        counts[s] = c;
    }
    Ok(PathCountTable { counts, start: fst.start })
}

/// Topological order of all states; reports a back edge on a cycle.
fn topo_order(fst: &Fst) -> Result<Vec<StateId>, FstError> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let n = fst.states.len();
    let mut color = vec![WHITE; n];
    let mut post = Vec::with_capacity(n);
    for root in 0..n {
        if color[root] != WHITE {
            continue;
        }
        let mut stack: Vec<(StateId, usize)> = vec![(root, 0)];
        color[root] = GRAY;
        while let Some(top) = stack.last_mut() {
            let s = top.0;
            if let Some(t) = fst.states[s].get(top.1) {
                top.1 += 1;
                match color[t.dst] {
                    WHITE => {
                        color[t.dst] = GRAY;
                        stack.push((t.dst, 0));
                    }
                    GRAY => return Err(FstError::Cycle { src: s, dst: t.dst }),
                    _ => {}
                }
            } else {
                color[s] = BLACK;
                post.push(s);
                stack.pop();
            }
        }
    }
    post.reverse();
    Ok(post)
}

/// A transducer together with its path-count table: the unit that
/// enumeration, unranking and sampling operate on.
#[derive(Debug, Clone)]
pub struct CountedFst {
    fst: Fst,
    counts: PathCountTable,
}

impl CountedFst {
    pub fn new(fst: Fst) -> Result<Self, FstError> {
        let counts = count_paths(&fst)?;
        Ok(CountedFst { fst, counts })
    }

    pub fn fst(&self) -> &Fst {
        &self.fst
    }

    pub fn counts(&self) -> &PathCountTable {
        &self.counts
    }

    pub fn total(&self) -> &BigUint {
        self.counts.total()
    }

    pub fn into_fst(self) -> Fst {
        self.fst
    }
}
