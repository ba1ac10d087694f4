//! Per-intent composition of background, core and request graphs.
//!
//! An intent's language is `(background | nothing) · core · (request_1 | … |
//! request_k | nothing)`, where the "nothing" branches exist only when the
//! intent allows them. Each combination of background choice and request
//! choice is compiled as its own block; the blocks are then joined by union
//! so that a path index identifies its block, and therefore its provenance,
//! by simple range lookup.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{CompileError, ComposeError};
use crate::fst::{CompileOptions, CountedFst, Fst};
use crate::fst::Nfa;
use crate::resource::ResourceSet;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentSpec {
    pub label: String,
    pub background: Option<String>,
    pub core: String,
    pub requests: Vec<String>,
    pub allow_empty_background: bool,
    pub allow_empty_request: bool,
}

impl IntentSpec {
    /// An intent made of its core graph alone.
    pub fn core_only(label: impl Into<String>, core: impl Into<String>) -> Self {
        IntentSpec {
            label: label.into(),
            background: None,
            core: core.into(),
            requests: Vec::new(),
            allow_empty_background: false,
            allow_empty_request: false,
        }
    }

    fn background_choices(&self) -> Vec<Option<&str>> {
        match &self.background {
            Some(bg) if self.allow_empty_background => vec![Some(bg.as_str()), None],
            Some(bg) => vec![Some(bg.as_str())],
            None => vec![None],
        }
    }

    fn request_choices(&self) -> Vec<Option<&str>> {
        let mut out: Vec<Option<&str>> = self.requests.iter().map(|r| Some(r.as_str())).collect();
        if self.allow_empty_request || self.requests.is_empty() {
            out.push(None);
        }
        out
    }

    /// Every graph this intent names, checked against `rs`.
    pub fn check(&self, rs: &ResourceSet) -> Result<(), ComposeError> {
        let names = self.background.iter().chain(core::iter::once(&self.core)).chain(&self.requests);
        for name in names {
            if rs.grammar(name).is_none() {
                return Err(ComposeError::MissingGraph { intent: self.label.clone(), graph: name.clone() });
            }
        }
        Ok(())
    }
}

/// A contiguous range of composed path indices sharing one background and
/// request choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub background: Option<String>,
    pub request: Option<String>,
    pub offset: BigUint,
    pub count: BigUint,
}

#[derive(Debug, Clone)]
pub struct ComposedIntent {
    pub label: String,
    pub core: String,
    counted: CountedFst,
    blocks: Vec<Block>,
}

impl ComposedIntent {
    pub fn counted(&self) -> &CountedFst {
        &self.counted
    }

    pub fn fst(&self) -> &Fst {
        self.counted.fst()
    }

    pub fn total(&self) -> &BigUint {
        self.counted.total()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The block containing path `idx`.
    pub fn block_of(&self, idx: &BigUint) -> Option<&Block> {
        let pos = self.blocks.partition_point(|b| &b.offset <= idx);
        let b = self.blocks.get(pos.checked_sub(1)?)?;
        (idx < &(&b.offset + &b.count)).then_some(b)
    }
}

/// Compiles and counts the composed language of one intent.
pub fn compose_intent(rs: &ResourceSet, spec: &IntentSpec) -> Result<ComposedIntent, ComposeError> {
    spec.check(rs)?;
    let wrap = |source: CompileError| ComposeError::Compile { intent: spec.label.clone(), source };
    let mut parts = Vec::new();
    let mut blocks = Vec::new();
    let mut offset = BigUint::zero();
    for bg in spec.background_choices() {
        for req in spec.request_choices() {
            let mut nfa = Nfa::default();
            let entry = nfa.state();
            let mut tail = entry;
            for name in bg.into_iter().chain(core::iter::once(spec.core.as_str())).chain(req) {
                let (e, x) = nfa.inline(rs, name, &mut Vec::new()).map_err(wrap)?;
                nfa.eps(tail, e);
                tail = x;
            }
            let fst = match nfa.remove_epsilons(entry, tail, CompileOptions::default(), &spec.label) {
                Ok(f) => f,
                Err(CompileError::EmptyLanguage(_)) => continue,
                Err(e) => return Err(wrap(e)),
            };
            let count = CountedFst::new(fst.clone()).expect("compiled transducers are acyclic").total().clone();
            blocks.push(Block {
                background: bg.map(ToString::to_string),
                request: req.map(ToString::to_string),
                offset: offset.clone(),
                count: count.clone(),
            });
            offset += count;
            parts.push(fst);
        }
    }
    if parts.is_empty() {
        return Err(ComposeError::EmptyLanguage(spec.label.clone()));
    }
    let counted = CountedFst::new(Fst::union(&parts)).expect("union of acyclic transducers is acyclic");
    debug_assert_eq!(counted.total(), &offset);
    Ok(ComposedIntent { label: spec.label.clone(), core: spec.core.clone(), counted, blocks })
}
