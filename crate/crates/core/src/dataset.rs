//! Labelled dataset generation from a set of composed intents.
//!
//! Each intent is an independent job: it draws distinct composed paths with
//! its own generator until the quota of distinct texts is met, so intents can
//! run in any order or in parallel. A single merge pass then applies the
//! cross-intent deduplication policy, splits every intent independently and
//! orders records by (intent label, path index).
//!
//! Per-intent generators are ChaCha8 seeded with the first 32 bytes of
//! `SHA-256(seed as u64 little-endian ‖ label ‖ 0x00 ‖ purpose)`, where the
//! purpose is `sample` or `split`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256};

use crate::compose::{compose_intent, IntentSpec};
use crate::error::ComposeError;
use crate::pathgen::{enumerate, shuffle, unrank, DistinctIndices};
use crate::resource::ResourceSet;

pub const DEFAULT_ALL_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Quota {
    Count(u64),
    /// Every path, up to the configured cap.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DedupPolicy {
    WithinIntent,
    /// Also drop any text produced by two or more intents, from all of them.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.8, validation: 0.1, test: 0.1 }
    }
}

impl SplitRatios {
    pub fn is_valid(&self) -> bool {
        let parts = [self.train, self.validation, self.test];
        parts.iter().all(|r| r.is_finite() && *r >= 0.0) && (parts.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }

    /// Split sizes for `n` records by largest remainder; ties favour train,
    /// then validation.
    pub fn sizes(&self, n: usize) -> SplitSizes {
        let ratios = [self.train, self.validation, self.test];
        let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
        let mut sizes: Vec<usize> = exact.iter().map(|e| (e + 1e-9) as usize).collect();
        let mut assigned: usize = sizes.iter().sum();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - sizes[a] as f64;
            let fb = exact[b] - sizes[b] as f64;
            fb.partial_cmp(&fa).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let mut k = 0;
        while assigned < n {
            sizes[order[k % 3]] += 1;
            assigned += 1;
            k += 1;
        }
        while assigned > n {
            let i = (0..3).rev().find(|&i| sizes[i] > 0).expect("non-empty");
            sizes[i] -= 1;
            assigned -= 1;
        }
        SplitSizes { train: sizes[0], validation: sizes[1], test: sizes[2] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionConfig {
    pub intents: Vec<IntentSpec>,
    pub quota_per_intent: Quota,
    pub all_cap: u64,
    pub seed: u64,
    pub dedup: DedupPolicy,
    pub split: SplitRatios,
}

impl CompositionConfig {
    pub fn new(intents: Vec<IntentSpec>, quota_per_intent: Quota, seed: u64) -> Self {
        CompositionConfig {
            intents,
            quota_per_intent,
            all_cap: DEFAULT_ALL_CAP,
            seed,
            dedup: DedupPolicy::Global,
            split: SplitRatios::default(),
        }
    }

    /// Checks labels, ratios and graph names.
    pub fn check(&self, rs: &ResourceSet) -> Result<(), ComposeError> {
        if self.intents.is_empty() {
            return Err(ComposeError::NoIntents);
        }
        let mut labels = BTreeSet::new();
        for spec in &self.intents {
            if !labels.insert(spec.label.as_str()) {
                return Err(ComposeError::DuplicateLabel(spec.label.clone()));
            }
            spec.check(rs)?;
        }
        if !self.split.is_valid() {
            let s = self.split;
            return Err(ComposeError::BadSplit(s.train, s.validation, s.test));
        }
        Ok(())
    }

    /// Intents sorted by label, the order of every output.
    pub fn sorted_intents(&self) -> Vec<&IntentSpec> {
        let mut v: Vec<&IntentSpec> = self.intents.iter().collect();
        v.sort_by(|a, b| a.label.cmp(&b.label));
        v
    }
}

/// Deterministic per-intent generator.
pub fn derived_rng(seed: u64, label: &str, purpose: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update([0u8]);
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub background: Option<String>,
    pub core: String,
    pub request: Option<String>,
    pub path_index: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub text: String,
    pub intent: String,
    pub provenance: Provenance,
    pub split: Split,
}

/// The distinct texts one intent produced, before cross-intent merging.
#[derive(Debug, Clone)]
pub struct IntentBatch {
    pub label: String,
    pub total_paths: BigUint,
    /// Kept texts in draw order.
    pub items: Vec<(String, Provenance)>,
    pub generated: u64,
    pub within_intent_duplicates: u64,
}

/// Draws the texts of one intent.
pub fn generate_intent(rs: &ResourceSet, spec: &IntentSpec, cfg: &CompositionConfig) -> Result<IntentBatch, ComposeError> {
    let composed = compose_intent(rs, spec)?;
    let total = composed.total().clone();
    let provenance = |idx: &BigUint| {
        let b = composed.block_of(idx).expect("index within composed total");
        Provenance {
            background: b.background.clone(),
            core: spec.core.clone(),
            request: b.request.clone(),
            path_index: idx.clone(),
        }
    };

    let mut seen = BTreeSet::new();
    let mut items = Vec::new();
    let mut generated = 0u64;
    let mut dups = 0u64;
    let mut keep = |text: String, idx: &BigUint, items: &mut Vec<(String, Provenance)>| {
        generated += 1;
        if seen.insert(text.clone()) {
            items.push((text, provenance(idx)));
        } else {
            dups += 1;
        }
    };

    let full = matches!(cfg.quota_per_intent, Quota::All) && total <= BigUint::from(cfg.all_cap);
    if full {
        for u in enumerate(composed.counted(), None).expect("full range") {
            keep(u.text, &u.path_index, &mut items);
        }
    } else {
        let target = match cfg.quota_per_intent {
            Quota::Count(q) => q,
            Quota::All => cfg.all_cap,
        };
        if let Quota::Count(q) = cfg.quota_per_intent {
            if BigUint::from(q) > total {
                return Err(ComposeError::QuotaExceeded {
                    intent: spec.label.clone(),
                    quota: q,
                    available: total.to_u64().unwrap_or(u64::MAX),
                });
            }
        }
        let mut stream = DistinctIndices::new(total.clone(), derived_rng(cfg.seed, &spec.label, "sample"));
        while (items.len() as u64) < target {
            let Some(idx) = stream.next() else { break };
            let u = unrank(composed.counted(), &idx).expect("index below total");
            keep(u.text, &idx, &mut items);
        }
        if let Quota::Count(q) = cfg.quota_per_intent {
            if (items.len() as u64) < q {
                return Err(ComposeError::QuotaExceeded {
                    intent: spec.label.clone(),
                    quota: q,
                    available: items.len() as u64,
                });
            }
        }
    }
    Ok(IntentBatch {
        label: spec.label.clone(),
        total_paths: total,
        items,
        generated,
        within_intent_duplicates: dups,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    fn add(&mut self, o: SplitSizes) {
        self.train += o.train;
        self.validation += o.validation;
        self.test += o.test;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentManifest {
    pub label: String,
    /// Decimal; may exceed 64 bits.
    pub total_paths: String,
    pub generated: u64,
    pub within_intent_duplicates: u64,
    pub cross_intent_collisions: u64,
    pub emitted: u64,
    pub splits: SplitSizes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Collision {
    pub text: String,
    pub intents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Manifest {
    pub seed: u64,
    pub content_hash: String,
    pub dedup: DedupPolicy,
    pub intents: Vec<IntentManifest>,
    /// Distinct texts produced by more than one intent.
    pub collision_count: u64,
    /// The first few collisions in text order.
    pub collision_samples: Vec<Collision>,
    pub splits: SplitSizes,
    pub emitted: u64,
}

pub const COLLISION_SAMPLES: usize = 20;

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Ordered by (intent label, path index).
    pub records: Vec<DatasetRecord>,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

/// Applies the dedup policy, splits each intent, and builds the manifest.
/// `batches` may come in any order.
pub fn merge(mut batches: Vec<IntentBatch>, cfg: &CompositionConfig, content_hash: String) -> Result<Dataset, ComposeError> {
    batches.sort_by(|a, b| a.label.cmp(&b.label));

    let mut owners: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    if cfg.dedup == DedupPolicy::Global {
        for b in &batches {
            for (text, _) in &b.items {
                owners.entry(text.as_str()).or_default().push(b.label.as_str());
            }
        }
    }
    let colliding: BTreeSet<String> =
        owners.iter().filter(|(_, o)| o.len() > 1).map(|(t, _)| t.to_string()).collect();
    let collision_samples: Vec<Collision> = owners
        .iter()
        .filter(|(_, o)| o.len() > 1)
        .take(COLLISION_SAMPLES)
        .map(|(t, o)| Collision { text: t.to_string(), intents: o.iter().map(|s| s.to_string()).collect() })
        .collect();
    drop(owners);

    let mut records = Vec::new();
    let mut intents = Vec::new();
    let mut splits = SplitSizes::default();
    for b in batches {
        let mut kept: Vec<(String, Provenance)> = Vec::with_capacity(b.items.len());
        let mut collided = 0u64;
        for item in b.items {
            if colliding.contains(&item.0) {
                collided += 1;
            } else {
                kept.push(item);
            }
        }
        if kept.is_empty() {
            return Err(ComposeError::EmptyAfterDedup(b.label));
        }
        kept.sort_by(|a, b| a.1.path_index.cmp(&b.1.path_index));

        let sizes = cfg.split.sizes(kept.len());
        let mut order: Vec<usize> = (0..kept.len()).collect();
        shuffle(&mut derived_rng(cfg.seed, &b.label, "split"), &mut order);
        let mut assignment = alloc::vec![Split::Test; kept.len()];
        for (rank, &pos) in order.iter().enumerate() {
            assignment[pos] = if rank < sizes.train {
                Split::Train
            } else if rank < sizes.train + sizes.validation {
                Split::Validation
            } else {
                Split::Test
            };
        }

        let emitted = kept.len() as u64;
        debug_assert_eq!(b.generated, emitted + b.within_intent_duplicates + collided);
        intents.push(IntentManifest {
            label: b.label.clone(),
            total_paths: b.total_paths.to_string(),
            generated: b.generated,
            within_intent_duplicates: b.within_intent_duplicates,
            cross_intent_collisions: collided,
            emitted,
            splits: sizes,
        });
        splits.add(sizes);
        for ((text, provenance), split) in kept.into_iter().zip(assignment) {
            records.push(DatasetRecord { text, intent: b.label.clone(), provenance, split });
        }
    }

    let manifest = Manifest {
        seed: cfg.seed,
        content_hash,
        dedup: cfg.dedup,
        emitted: records.len() as u64,
        intents,
        collision_count: colliding.len() as u64,
        collision_samples,
        splits,
    };
    Ok(Dataset { records, manifest })
}

/// Sequential end-to-end generation.
pub fn generate_dataset(rs: &ResourceSet, cfg: &CompositionConfig) -> Result<Dataset, ComposeError> {
    cfg.check(rs)?;
    let batches = cfg
        .sorted_intents()
        .into_iter()
        .map(|spec| generate_intent(rs, spec, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    merge(batches, cfg, rs.content_hash())
}
