//! Parsing mode: tokenization, leftmost-longest matching, rule-based
//! classification and corpus coverage.
//!
//! Text is split on whitespace, the marks `. , ? !` become tokens of their
//! own, and every token is NFC-normalized with Latin letters case-folded.
//! Grammar tokens go through the same normalization and are cut into pieces
//! at those marks. A piece flagged as glued extends the word in progress, so
//! `이혼 ^하고` matches the text token `이혼하고`; any other piece must start
//! a fresh text token.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::fst::{Fst, StateId};
use crate::token::nfc;

pub const PUNCTUATION: [char; 4] = ['.', ',', '?', '!'];
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_TOP_BIGRAMS: usize = 50;
pub const UNKNOWN: &str = "unknown";

fn is_punct(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

fn is_latin(c: char) -> bool {
    matches!(c as u32, 0x41..=0x5A | 0xC0..=0x24F | 0x1E00..=0x1EFF)
}

/// NFC, then lower-case Latin letters; other scripts are left alone.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in nfc(s).chars() {
        if is_latin(c) {
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TextToken {
    /// Normalized form.
    pub surface: String,
    /// Byte range in the original string.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub original: String,
    pub tokens: Vec<TextToken>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    /// The original text covered by tokens `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        if start >= end {
            return "";
        }
        &self.original[self.tokens[start].span.start..self.tokens[end - 1].span.end]
    }
}

pub fn tokenize(text: &str) -> TokenizedText {
    let mut tokens = Vec::new();
    let mut push = |start: usize, end: usize| {
        if start < end {
            tokens.push(TextToken { surface: normalize(&text[start..end]), span: start..end });
        }
    };
    let mut word_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_punct(c) {
            if let Some(s) = word_start.take() {
                push(s, i);
            }
            if is_punct(c) {
                push(i, i + c.len_utf8());
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        push(s, text.len());
    }
    TokenizedText { original: text.into(), tokens }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Match {
    pub name: String,
    /// Token range `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub outputs: Vec<String>,
}

impl Match {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone)]
struct Piece {
    text: String,
    attach: bool,
    punct: bool,
}

#[derive(Debug, Clone)]
struct Arc {
    pieces: Vec<Piece>,
    outputs: Vec<String>,
    dst: StateId,
}

/// A transducer prepared for matching.
#[derive(Debug, Clone)]
pub struct Matcher {
    name: String,
    arcs: Vec<Vec<Arc>>,
    start: StateId,
    final_state: StateId,
}

/// Position in the text: token index, bytes of that token already matched,
/// and whether a glued piece may extend it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cursor {
    tok: usize,
    off: usize,
    open: bool,
}

type Memo = BTreeMap<(StateId, Cursor), Option<(usize, usize)>>;

impl Matcher {
    pub fn new(name: impl Into<String>, fst: &Fst) -> Self {
        let arcs = (0..fst.num_states())
            .map(|s| {
                fst.transitions(s)
                    .iter()
                    .map(|t| {
                        let mut pieces = Vec::new();
                        for tok in &t.input.0 {
                            let norm = normalize(&tok.text);
                            let mut first = true;
                            let mut run = String::new();
                            for c in norm.chars() {
                                if is_punct(c) {
                                    if !run.is_empty() {
                                        pieces.push(Piece { text: core::mem::take(&mut run), attach: tok.glue || !first, punct: false });
                                        first = false;
                                    }
                                    pieces.push(Piece { text: c.into(), attach: tok.glue || !first, punct: true });
                                    first = false;
                                } else {
                                    run.push(c);
                                }
                            }
                            if !run.is_empty() {
                                pieces.push(Piece { text: run, attach: tok.glue || !first, punct: false });
                            }
                        }
                        Arc { pieces, outputs: t.outputs.clone(), dst: t.dst }
                    })
                    .collect()
            })
            .collect();
        Matcher { name: name.into(), arcs, start: fst.start(), final_state: fst.final_state() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Consumes an arc's pieces from `cur`.
    fn advance(&self, arc: &Arc, mut cur: Cursor, toks: &[TextToken]) -> Option<Cursor> {
        for p in &arc.pieces {
            let join = p.attach && cur.open && !p.punct;
            if !join {
                if cur.off > 0 {
                    if cur.off != toks[cur.tok].surface.len() {
                        return None;
                    }
                    cur.tok += 1;
                    cur.off = 0;
                }
                if cur.tok >= toks.len() {
                    return None;
                }
            }
            let word = &toks[cur.tok].surface;
            if !word[cur.off..].starts_with(p.text.as_str()) {
                return None;
            }
            cur.off += p.text.len();
            if p.punct && cur.off != word.len() {
                return None;
            }
            cur.open = !p.punct;
        }
        Some(cur)
    }

    /// Furthest token end reachable from `(state, cur)` and the arc taken
    /// first to get there.
    fn best(&self, state: StateId, cur: Cursor, toks: &[TextToken], memo: &mut Memo) -> Option<(usize, usize)> {
        if let Some(r) = memo.get(&(state, cur)) {
            return *r;
        }
        let mut best: Option<(usize, usize)> = None;
        if state == self.final_state && cur.off > 0 && cur.off == toks[cur.tok].surface.len() {
            best = Some((cur.tok + 1, usize::MAX));
        }
        for (k, arc) in self.arcs[state].iter().enumerate() {
            if let Some(next) = self.advance(arc, cur, toks) {
                if let Some((end, _)) = self.best(arc.dst, next, toks, memo) {
                    if best.is_none_or(|(b, _)| end > b) {
                        best = Some((end, k));
                    }
                }
            }
        }
        memo.insert((state, cur), best);
        best
    }

    /// Longest match starting at token `start`, with its outputs.
    fn longest_at(&self, start: usize, tt: &TokenizedText, memo: &mut Memo) -> Option<(usize, Vec<String>)> {
        let toks = &tt.tokens;
        let mut cur = Cursor { tok: start, off: 0, open: false };
        let (end, _) = self.best(self.start, cur, toks, memo)?;
        let mut outputs = Vec::new();
        let mut state = self.start;
        while let Some(Some((_, k))) = memo.get(&(state, cur)).copied() {
            if k == usize::MAX {
                break;
            }
            let arc = &self.arcs[state][k];
            outputs.extend(arc.outputs.iter().cloned());
            cur = self.advance(arc, cur, toks).expect("memoized arc applies");
            state = arc.dst;
        }
        Some((end, outputs))
    }

    /// Leftmost-longest, non-overlapping matches.
    pub fn match_longest(&self, tt: &TokenizedText) -> Vec<Match> {
        let mut memo = Memo::new();
        let mut out = Vec::new();
        let mut i = 0;
        while i < tt.len() {
            match self.longest_at(i, tt, &mut memo) {
                Some((end, outputs)) => {
                    out.push(Match { name: self.name.clone(), start: i, end, text: tt.slice(i, end).into(), outputs });
                    i = end;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Whether the whole text is one match.
    pub fn accepts(&self, tt: &TokenizedText) -> bool {
        !tt.is_empty() && self.best(self.start, Cursor { tok: 0, off: 0, open: false }, &tt.tokens, &mut Memo::new()).map(|b| b.0) == Some(tt.len())
    }
}

/// Leftmost-longest matches of `fst` in `tt`.
pub fn match_longest(name: &str, fst: &Fst, tt: &TokenizedText) -> Vec<Match> {
    Matcher::new(name, fst).match_longest(tt)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentScore {
    pub label: String,
    pub score: f64,
    pub matches: Vec<Match>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassificationResult {
    pub label: String,
    /// Best coverage fraction, reported even when the label is unknown.
    pub score: f64,
    /// Labels that share the best score with the winner.
    pub tied: Vec<String>,
    pub scores: Vec<IntentScore>,
}

impl ClassificationResult {
    pub fn is_unknown(&self) -> bool {
        self.label == UNKNOWN
    }
}

/// A label-indexed set of matchers.
#[derive(Debug, Clone, Default)]
pub struct Classifier {
    matchers: BTreeMap<String, Matcher>,
}

impl Classifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, fst: &Fst) {
        let label = label.into();
        self.matchers.insert(label.clone(), Matcher::new(label, fst));
    }

    pub fn len(&self) -> usize {
        self.matchers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchers.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.matchers.keys().map(String::as_str)
    }

    pub fn matcher(&self, label: &str) -> Option<&Matcher> {
        self.matchers.get(label)
    }

    pub fn classify(&self, text: &str, threshold: f64) -> ClassificationResult {
        self.classify_tokens(&tokenize(text), threshold)
    }

    pub fn classify_tokens(&self, tt: &TokenizedText, threshold: f64) -> ClassificationResult {
        let mut scores = Vec::with_capacity(self.matchers.len());
        let mut best: Option<(usize, &str)> = None;
        for (label, m) in &self.matchers {
            let matches = if tt.is_empty() { Vec::new() } else { m.match_longest(tt) };
            let longest = matches.iter().map(Match::len).max().unwrap_or(0);
            // labels arrive sorted, so a strict comparison keeps the smallest on ties
            if longest > 0 && best.is_none_or(|(b, _)| longest > b) {
                best = Some((longest, label));
            }
            scores.push(IntentScore { label: label.clone(), score: fraction(longest, tt.len()), matches });
        }
        let Some((longest, winner)) = best else {
            return ClassificationResult { label: UNKNOWN.into(), score: 0.0, tied: Vec::new(), scores };
        };
        let score = fraction(longest, tt.len());
        let tied = scores.iter().filter(|s| s.score == score && s.label != winner).map(|s| s.label.clone()).collect();
        let label = if score < threshold { UNKNOWN.into() } else { winner.into() };
        ClassificationResult { label, score, tied, scores }
    }

    pub fn coverage<'a>(&self, lines: impl IntoIterator<Item = &'a str>, top_k: usize) -> CoverageReport {
        let mut report = CoverageReport::default();
        let mut per_intent: BTreeMap<&str, usize> = self.labels().map(|l| (l, 0)).collect();
        let mut bigrams: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (number, line) in lines.into_iter().enumerate() {
            let tt = tokenize(line);
            if tt.is_empty() {
                continue;
            }
            let mut matches = Vec::new();
            for (label, m) in &self.matchers {
                let found = m.match_longest(&tt);
                if !found.is_empty() {
                    *per_intent.get_mut(label.as_str()).expect("known label") += 1;
                }
                matches.extend(found);
            }
            if matches.is_empty() {
                report.unmatched_lines += 1;
                for w in tt.tokens.windows(2) {
                    *bigrams.entry((w[0].surface.clone(), w[1].surface.clone())).or_default() += 1;
                }
            }
            report.lines.push(LineCoverage { line: number + 1, text: line.into(), matches });
        }
        let n = report.lines.len();
        report.intents = per_intent
            .into_iter()
            .map(|(label, matched)| IntentCoverage {
                label: label.into(),
                matched_lines: matched as u64,
                percent: if n == 0 { 0.0 } else { 100.0 * matched as f64 / n as f64 },
            })
            .collect();
        let mut ranked: Vec<((String, String), u64)> = bigrams.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(top_k);
        report.unmatched_bigrams = ranked.into_iter().map(|((a, b), count)| Bigram { first: a, second: b, count }).collect();
        report
    }
}

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineCoverage {
    /// 1-based line number in the corpus.
    pub line: usize,
    pub text: String,
    pub matches: Vec<Match>,
}

impl LineCoverage {
    pub fn intents(&self) -> BTreeSet<&str> {
        self.matches.iter().map(|m| m.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentCoverage {
    pub label: String,
    pub matched_lines: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bigram {
    pub first: String,
    pub second: String,
    pub count: u64,
}

/// Blank corpus lines are skipped and not counted.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageReport {
    pub lines: Vec<LineCoverage>,
    pub unmatched_lines: u64,
    pub intents: Vec<IntentCoverage>,
    pub unmatched_bigrams: Vec<Bigram>,
}
