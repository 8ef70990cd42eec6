//! In-memory feature database, ranked queries and retrieval rates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::signature::{Signature, SignatureConfig};
use crate::similarity::{distance, SimilarityValue};

/// One ranked query result.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub class: String,
    pub patch_id: u32,
    pub value: SimilarityValue,
}

fn rank(a: &Hit, b: &Hit) -> Ordering {
    a.value
        .cmp(&b.value)
        .then_with(|| a.class.cmp(&b.class))
        .then_with(|| a.patch_id.cmp(&b.patch_id))
}

/// Signatures sharing one config, unique by `(class, patch_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDb {
    config: SignatureConfig,
    records: Vec<Signature>,
    ids: BTreeSet<(String, u32)>,
}

impl FeatureDb {
    pub fn new(config: SignatureConfig) -> Self {
        Self {
            config,
            records: Vec::new(),
            ids: BTreeSet::new(),
        }
    }

    /// Builds a database from records; the config is taken from the first one.
    pub fn from_records(records: Vec<Signature>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyDatabase)?;
        let mut db = Self::new(*first.config());
        for r in records {
            db.insert(r)?;
        }
        Ok(db)
    }

    pub fn insert(&mut self, record: Signature) -> Result<()> {
        if record.fingerprint() != self.fingerprint() {
            return Err(Error::ConfigMismatch(format!(
                "record fingerprint {:016x} vs database {:016x}",
                record.fingerprint(),
                self.fingerprint()
            )));
        }
        if let Some(first) = self.records.first() {
            first.check_compatible(&record)?;
        }
        let key = (String::from(record.class_label()), record.patch_id());
        if !self.ids.insert(key) {
            return Err(Error::DuplicateRecord {
                class: record.class_label().into(),
                patch_id: record.patch_id(),
            });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn config(&self) -> &SignatureConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> u64 {
        self.config.fingerprint()
    }

    pub fn records(&self) -> &[Signature] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorts records by `(class, patch_id)`.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            a.class_label()
                .cmp(b.class_label())
                .then(a.patch_id().cmp(&b.patch_id()))
        });
    }

    /// The `n` nearest records to `q`, ascending by distance, ties broken by
    /// `(class, patch_id)`. A record with `q`'s own id is never returned.
    pub fn query(&self, q: &Signature, n: usize) -> Result<Vec<Hit>> {
        if n == 0 {
            return Err(Error::InvalidParameter("query size must be at least 1".into()));
        }
        if q.fingerprint() != self.fingerprint() {
            return Err(Error::ConfigMismatch(format!(
                "query fingerprint {:016x} vs database {:016x}",
                q.fingerprint(),
                self.fingerprint()
            )));
        }
        let mut hits = Vec::with_capacity(self.records.len());
        for r in &self.records {
            if r.class_label() == q.class_label() && r.patch_id() == q.patch_id() {
                continue;
            }
            hits.push(Hit {
                class: r.class_label().into(),
                patch_id: r.patch_id(),
                value: distance(q, r)?,
            });
        }
        if hits.len() > n {
            hits.select_nth_unstable_by(n - 1, rank);
            hits.truncate(n);
        }
        hits.sort_by(rank);
        Ok(hits)
    }

    /// Per-record same-class precision among the `c - 1` nearest neighbours,
    /// averaged per class and overall.
    pub fn retrieval_rate(&self) -> Result<RetrievalRate> {
        let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.records {
            *sizes.entry(r.class_label()).or_default() += 1;
        }
        let c = *sizes.values().next().ok_or(Error::EmptyDatabase)?;
        if let Some((name, &size)) = sizes.iter().find(|(_, &s)| s != c) {
            return Err(Error::UnequalClassSizes(format!(
                "class {name} has {size} records, expected {c}"
            )));
        }
        if c < 2 {
            let name = sizes.keys().next().copied().unwrap_or_default();
            return Err(Error::SingletonClass(name.into()));
        }
        let mut per_class: BTreeMap<String, f64> = BTreeMap::new();
        let mut overall = 0.0;
        for q in &self.records {
            let hits = self.query(q, c - 1)?;
            let same = hits.iter().filter(|h| h.class == q.class_label()).count();
            let rate = same as f64 / (c - 1) as f64;
            *per_class.entry(q.class_label().into()).or_default() += rate;
            overall += rate;
        }
        per_class.values_mut().for_each(|v| *v /= c as f64);
        Ok(RetrievalRate {
            overall: overall / self.records.len() as f64,
            per_class,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalRate {
    pub overall: f64,
    pub per_class: BTreeMap<String, f64>,
}
