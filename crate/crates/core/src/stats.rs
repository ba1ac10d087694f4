//! Summary statistics over dataset records.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;

use crate::annotate::tokenize;
use crate::dataset::DatasetRecord;

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LengthStats {
    pub min: usize,
    pub mean: f64,
    pub max: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentStats {
    pub records: usize,
    pub tokens: LengthStats,
    pub vocabulary: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetStats {
    pub total: usize,
    /// Token counts over all records.
    pub tokens: LengthStats,
    pub vocabulary: usize,
    pub intents: BTreeMap<String, IntentStats>,
}

#[derive(Default)]
struct Acc<'a> {
    n: usize,
    sum: usize,
    min: usize,
    max: usize,
    vocab: BTreeSet<&'a str>,
}

impl<'a> Acc<'a> {
    fn add(&mut self, len: usize, words: impl Iterator<Item = &'a str>) {
        self.min = if self.n == 0 { len } else { self.min.min(len) };
        self.max = self.max.max(len);
        self.sum += len;
        self.n += 1;
        self.vocab.extend(words);
    }

    fn lengths(&self) -> LengthStats {
        let mean = if self.n == 0 { 0.0 } else { self.sum as f64 / self.n as f64 };
        LengthStats { min: self.min, mean, max: self.max }
    }
}

/// Lengths and vocabularies use the annotator's tokenization.
pub fn stats<'a>(records: impl IntoIterator<Item = &'a DatasetRecord>) -> DatasetStats {
    let tokenized: alloc::vec::Vec<_> = records.into_iter().map(|r| (r.intent.as_str(), tokenize(&r.text))).collect();
    let mut all = Acc::default();
    let mut per: BTreeMap<&str, Acc> = BTreeMap::new();
    for (intent, tt) in &tokenized {
        all.add(tt.len(), tt.surfaces());
        per.entry(intent).or_default().add(tt.len(), tt.surfaces());
    }
    DatasetStats {
        total: all.n,
        tokens: all.lengths(),
        vocabulary: all.vocab.len(),
        intents: per
            .into_iter()
            .map(|(k, a)| (k.into(), IntentStats { records: a.n, tokens: a.lengths(), vocabulary: a.vocab.len() }))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Split};
    use alloc::format;
    use alloc::vec::Vec;

    fn rec(text: &str, intent: &str) -> DatasetRecord {
        DatasetRecord {
            text: text.into(),
            intent: intent.into(),
            provenance: Provenance { background: None, core: "C".into(), request: None, path_index: 0u32.into() },
            split: Split::Train,
        }
    }

    #[test]
    fn counts_and_lengths() {
        let recs: Vec<DatasetRecord> =
            (0..20).flat_map(|i| (0..100).map(move |j| rec(&format!("w{j} x y"), &format!("I{i:02}")))).collect();
        let s = stats(&recs);
        assert_eq!(s.total, 2000);
        assert!(s.intents.values().all(|i| i.records == 100));
        assert_eq!(s.intents.len(), 20);
        assert_eq!(s.tokens, LengthStats { min: 3, mean: 3.0, max: 3 });
        assert_eq!(s.intents["I00"].vocabulary, 102);
        assert_eq!(s.vocabulary, 102);
    }

    #[test]
    fn empty() {
        assert_eq!(stats(&[]), DatasetStats::default());
    }
}
