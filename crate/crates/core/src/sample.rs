use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::answer::{normalize_answer, TaskKind};
use crate::error::{Error, Result};

/// Provenance marker carried by a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Original,
    Relabeled,
    InjectedNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub query: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    #[serde(default)]
    pub tags: BTreeSet<Tag>,
    /// Record fields this crate does not interpret, kept for round-trips.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Sample {
    /// A fresh sample tagged `original`.
    pub fn new(id: impl Into<String>, query: impl Into<String>, label: impl Into<String>) -> Self {
        let mut tags = BTreeSet::new();
        tags.insert(Tag::Original);
        Sample {
            id: id.into(),
            query: query.into(),
            label: label.into(),
            ground_truth: None,
            tags,
            extra: Map::new(),
        }
    }

    pub fn with_ground_truth(mut self, truth: impl Into<String>) -> Self {
        self.ground_truth = Some(truth.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |field| Error::EmptyField { id: self.id.clone(), field };
        if self.id.trim().is_empty() {
            return Err(empty("id"));
        }
        if self.query.trim().is_empty() {
            return Err(empty("query"));
        }
        if self.label.trim().is_empty() {
            return Err(empty("label"));
        }
        if matches!(&self.ground_truth, Some(t) if t.trim().is_empty()) {
            return Err(empty("ground_truth"));
        }
        Ok(())
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    /// `Some(true)` when the label disagrees with the known ground truth.
    pub fn is_mislabeled(&self, kind: TaskKind) -> Option<bool> {
        let truth = self.ground_truth.as_deref()?;
        let truth = normalize_answer(truth, kind);
        Some(truth.is_empty() || normalize_answer(&self.label, kind) != truth)
    }
}

/// An ordered, id-unique collection of samples of one task kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    task_kind: TaskKind,
    samples: Vec<Sample>,
    positions: BTreeMap<String, usize>,
}

impl Dataset {
    pub fn new(task_kind: TaskKind, samples: Vec<Sample>) -> Result<Self> {
        let mut positions = BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            s.validate()?;
            if positions.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Dataset { task_kind, samples, positions })
    }

    pub fn empty(task_kind: TaskKind) -> Self {
        Dataset { task_kind, samples: Vec::new(), positions: BTreeMap::new() }
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.positions.get(id).map(|&i| &self.samples[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.id.as_str())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Sample;
    type IntoIter = core::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}
