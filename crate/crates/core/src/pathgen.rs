//! Enumeration, unranking and uniform sampling of transducer paths.
//!
//! Canonical order is depth first over each state's transitions in compiled
//! order, so path `i` of [`enumerate`] is exactly [`unrank`]`(i)`.
//!
//! Sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `SeedableRng::seed_from_u64`. A uniform index below `bound` is drawn by
//! taking `ceil(bits(bound - 1) / 64)` successive `next_u64` words as the
//! little-endian limbs of a candidate, masking the top limb to the bit
//! length, and rejecting candidates `>= bound`. Both algorithms are frozen:
//! the same seed gives the same samples on every platform.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::PathError;
use crate::fst::{CountedFst, StateId, Transition};
use crate::token::render;

/// One generated utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RenderedUtterance {
    pub text: String,
    pub outputs: Vec<String>,
    pub path_index: BigUint,
}

/// Renders a transition sequence: tokens joined by single spaces except
/// glue-flagged ones.
pub fn render_path(path: &[&Transition]) -> String {
    render(path.iter().flat_map(|t| t.input.tokens()))
}

fn utterance(path: &[&Transition], index: BigUint) -> RenderedUtterance {
    RenderedUtterance {
        text: render_path(path),
        outputs: path.iter().flat_map(|t| t.outputs.iter().cloned()).collect(),
        path_index: index,
    }
}

fn out_of_bounds(idx: &BigUint, total: &BigUint) -> PathError {
    PathError::OutOfBounds { index: idx.to_string(), total: total.to_string() }
}

/// The transitions of path `idx`, choosing at each state by subtracting
/// successor counts until the residual index fits.
pub fn path_at<'a>(cf: &'a CountedFst, idx: &BigUint) -> Result<Vec<&'a Transition>, PathError> {
    Ok(descend(cf, idx)?.into_iter().map(|(s, i)| &cf.fst().transitions(s)[i]).collect())
}

/// (state, transition index) choices of path `idx`.
fn descend(cf: &CountedFst, idx: &BigUint) -> Result<Vec<(StateId, usize)>, PathError> {
    let total = cf.total();
    if idx >= total {
        return Err(out_of_bounds(idx, total));
    }
    let fst = cf.fst();
    let counts = cf.counts();
    let mut rest = idx.clone();
    let mut state = fst.start();
    let mut choices = Vec::new();
    while state != fst.final_state() {
        let mut chosen = None;
        for (i, t) in fst.transitions(state).iter().enumerate() {
            let c = counts.get(t.dst);
            if &rest < c {
                chosen = Some(i);
                break;
            }
            rest -= c;
        }
        let i = chosen.expect("path counts are consistent with transitions");
        choices.push((state, i));
        state = fst.transitions(state)[i].dst;
    }
    Ok(choices)
}

/// The `idx`-th utterance in canonical order.
pub fn unrank(cf: &CountedFst, idx: &BigUint) -> Result<RenderedUtterance, PathError> {
    let path = path_at(cf, idx)?;
    Ok(utterance(&path, idx.clone()))
}

/// Lazy canonical-order iterator over a range of path indices. Memory use
/// is bounded by the depth of the transducer.
pub struct Enumerate<'a> {
    cf: &'a CountedFst,
    choices: Vec<(StateId, usize)>,
    next: BigUint,
    end: BigUint,
}

/// Enumerates `range` (the whole path set when `None`) in canonical order.
pub fn enumerate<'a>(cf: &'a CountedFst, range: Option<Range<BigUint>>) -> Result<Enumerate<'a>, PathError> {
    let total = cf.total();
    let range = range.unwrap_or_else(|| BigUint::zero()..total.clone());
    if range.start > range.end || &range.end > total {
        return Err(PathError::BadRange {
            start: range.start.to_string(),
            end: range.end.to_string(),
            total: total.to_string(),
        });
    }
    let choices = if range.start < range.end { descend(cf, &range.start)? } else { Vec::new() };
    Ok(Enumerate { cf, choices, next: range.start, end: range.end })
}

impl Enumerate<'_> {
    /// Moves `choices` to the next path in canonical order.
    fn advance(&mut self) {
        let fst = self.cf.fst();
        let counts = self.cf.counts();
        while let Some((state, i)) = self.choices.pop() {
            let ts = fst.transitions(state);
            if let Some(j) = (i + 1..ts.len()).find(|&j| !counts.get(ts[j].dst).is_zero()) {
                self.choices.push((state, j));
                let mut s = ts[j].dst;
                while s != fst.final_state() {
                    let k = fst
                        .transitions(s)
                        .iter()
                        .position(|t| !counts.get(t.dst).is_zero())
                        .expect("live state has a live transition");
                    self.choices.push((s, k));
                    s = fst.transitions(s)[k].dst;
                }
                return;
            }
        }
    }
}

impl Iterator for Enumerate<'_> {
    type Item = RenderedUtterance;

    fn next(&mut self) -> Option<RenderedUtterance> {
        if self.next >= self.end {
            return None;
        }
        let fst = self.cf.fst();
        let path: Vec<&Transition> = self.choices.iter().map(|&(s, i)| &fst.transitions(s)[i]).collect();
        let out = utterance(&path, self.next.clone());
        self.next += 1u32;
        if self.next < self.end {
            self.advance();
        }
        Some(out)
    }
}

/// The frozen generator: ChaCha8 seeded through `seed_from_u64`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform integer in `[0, bound)`; `bound` must be non-zero.
pub fn uniform_below<R: RngCore>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "empty range");
    let top = bound - 1u32;
    let bits = top.bits();
    if bits == 0 {
        return BigUint::zero();
    }
    let words = bits.div_ceil(64) as usize;
    let spare = (words as u64) * 64 - bits;
    loop {
        let mut limbs: Vec<u32> = Vec::with_capacity(words * 2);
        for w in 0..words {
            let mut x = rng.next_u64();
            if w == words - 1 {
                x &= u64::MAX >> spare;
            }
            limbs.push(x as u32);
            limbs.push((x >> 32) as u32);
        }
        let cand = BigUint::from_slice(&limbs);
        if &cand < bound {
            return cand;
        }
    }
}

/// Same draw as [`uniform_below`] for bounds that fit in `u64`.
pub fn uniform_below_u64<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    let top = bound - 1;
    if top == 0 {
        return 0;
    }
    let mask = u64::MAX >> top.leading_zeros();
    loop {
        let x = rng.next_u64() & mask;
        if x < bound {
            return x;
        }
    }
}

/// Fisher-Yates shuffle driven by [`uniform_below_u64`].
pub fn shuffle<T, R: RngCore>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_below_u64(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// An endless-until-exhausted stream of distinct uniform indices below
/// `total`.
///
/// Starts by rejection against a set of drawn indices; once more than half
/// of the range has been drawn, the remaining indices are materialized and
/// shuffled.
pub struct DistinctIndices {
    total: BigUint,
    rng: ChaCha8Rng,
    seen: BTreeSet<BigUint>,
    rest: Option<Vec<BigUint>>,
}

impl DistinctIndices {
    pub fn new(total: BigUint, rng: ChaCha8Rng) -> Self {
        DistinctIndices { total, rng, seen: BTreeSet::new(), rest: None }
    }

    /// Starts in shuffled mode: the whole range is materialized up front.
    fn shuffled(total: BigUint, mut rng: ChaCha8Rng) -> Self {
        let n = total.to_u64().expect("small range");
        let mut all: Vec<BigUint> = (0..n).map(BigUint::from).collect();
        shuffle(&mut rng, &mut all);
        all.reverse();
        DistinctIndices { total, rng, seen: BTreeSet::new(), rest: Some(all) }
    }

    pub fn drawn(&self) -> usize {
        self.seen.len()
    }
}

impl Iterator for DistinctIndices {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        if let Some(rest) = &mut self.rest {
            return rest.pop();
        }
        if BigUint::from(self.seen.len()) * 2u32 > self.total {
            let n = self.total.to_u64().expect("more than half drawn, so small");
            let mut rest: Vec<BigUint> =
                (0..n).map(BigUint::from).filter(|i| !self.seen.contains(i)).collect();
            shuffle(&mut self.rng, &mut rest);
            rest.reverse();
            let next = rest.pop();
            self.rest = Some(rest);
            return next;
        }
        loop {
            let i = uniform_below(&mut self.rng, &self.total);
            if self.seen.insert(i.clone()) {
                return Some(i);
            }
        }
    }
}

/// Draws `n` utterances uniformly over paths.
///
/// With `distinct`, no path is drawn twice; when `n` exceeds half the total
/// the whole range is shuffled instead of rejection sampling.
pub fn sample(cf: &CountedFst, n: usize, seed: u64, distinct: bool) -> Result<Vec<RenderedUtterance>, PathError> {
    if n == 0 {
        return Err(PathError::ZeroSample);
    }
    let total = cf.total();
    let mut rng = seeded_rng(seed);
    let indices: Vec<BigUint> = if distinct {
        let want = BigUint::from(n);
        if &want > total {
            return Err(PathError::NotEnoughPaths { requested: n.to_string(), total: total.to_string() });
        }
        let stream = if want * 2u32 > *total {
            DistinctIndices::shuffled(total.clone(), rng)
        } else {
            DistinctIndices::new(total.clone(), rng)
        };
        stream.take(n).collect()
    } else {
        (0..n).map(|_| uniform_below(&mut rng, total)).collect()
    };
    indices.iter().map(|i| unrank(cf, i)).collect()
}

/// Number of paths as `u64`, when it fits.
pub fn total_u64(cf: &CountedFst) -> Option<u64> {
    cf.total().to_u64()
}

/// `[0, total)` split into `parts` contiguous ranges of near-equal size, in
/// order. Concatenating the enumerations of the parts gives the full
/// enumeration.
pub fn split_range(total: &BigUint, parts: usize) -> Vec<Range<BigUint>> {
    let parts = parts.max(1);
    let size = total / BigUint::from(parts);
    let extra = (total % BigUint::from(parts)).to_usize().unwrap_or(0);
    let mut out = Vec::with_capacity(parts);
    let mut lo = BigUint::zero();
    for p in 0..parts {
        let mut len = size.clone();
        if p < extra {
            len += BigUint::one();
        }
        let hi = &lo + &len;
        out.push(lo..hi.clone());
        lo = hi;
    }
    out
}
