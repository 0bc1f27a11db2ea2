//! Exact cosine kNN over query embeddings.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVector);
        }
        let norm = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>());
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(EmbeddingVector { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        EmbeddingVector::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch { expected: a.dimension(), found: b.dimension() });
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: String,
    pub similarity: f64,
}

/// Immutable once built; all vectors share one dimension and ids are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    dimension: usize,
    entries: Vec<(String, EmbeddingVector)>,
    ids: BTreeSet<String>,
}

impl EmbeddingIndex {
    pub fn new(dimension: usize) -> Self {
        EmbeddingIndex { dimension, entries: Vec::new(), ids: BTreeSet::new() }
    }

    pub fn from_entries(
        dimension: usize,
        entries: impl IntoIterator<Item = (String, EmbeddingVector)>,
    ) -> Result<Self> {
        let mut index = EmbeddingIndex::new(dimension);
        for (id, v) in entries {
            index.insert(id, v)?;
        }
        Ok(index)
    }

    pub fn insert(&mut self, id: String, vector: EmbeddingVector) -> Result<()> {
        if vector.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: vector.dimension(),
            });
        }
        if !self.ids.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        self.entries.push((id, vector));
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, EmbeddingVector)] {
        &self.entries
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    /// The `min(k, len)` most similar entries, most similar first; equal
    /// similarities are ordered by ascending id.
    pub fn knn(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::InvalidK(k));
        }
        if query.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: query.dimension(),
            });
        }
        let mut scored: Vec<(f64, &str)> = Vec::with_capacity(self.entries.len());
        for (id, v) in &self.entries {
            scored.push((cosine_similarity(query, v)?, id.as_str()));
        }
        let order = |a: &(f64, &str), b: &(f64, &str)| -> Ordering {
            b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
        };
        let take = k.min(scored.len());
        if take < scored.len() {
            scored.select_nth_unstable_by(take, order);
            scored.truncate(take);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(similarity, id)| Neighbor { id: String::from(id), similarity })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    fn index(entries: &[(&str, &[f64])]) -> EmbeddingIndex {
        EmbeddingIndex::from_entries(
            entries[0].1.len(),
            entries.iter().map(|(id, x)| (String::from(*id), v(x))),
        )
        .unwrap()
    }

    #[test]
    fn identical_vector_ranks_first() {
        let idx = index(&[("a", &[1.0, 2.0, 0.5]), ("b", &[0.3, -1.0, 2.0]), ("c", &[3.0, 0.0, 0.0])]);
        let hits = idx.knn(&v(&[0.3, -1.0, 2.0]), 2).unwrap();
        assert_eq!(hits[0].id, "b");
        assert!((hits[0].similarity - 1.0).abs() < 1e-9);
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn orthogonal_query_has_zero_similarity() {
        let idx = index(&[("a", &[1.0, 0.0, 0.0]), ("b", &[0.0, 2.0, 0.0])]);
        let hits = idx.knn(&v(&[0.0, 0.0, 5.0]), 5).unwrap();
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|h| h.similarity == 0.0));
        // all tied: ascending id
        assert_eq!(hits[0].id, "a");
    }

    #[test]
    fn ties_break_by_id() {
        let idx = index(&[("s3", &[1.0, 1.0]), ("s1", &[2.0, 2.0]), ("s2", &[0.0, 1.0])]);
        let hits = idx.knn(&v(&[1.0, 1.0]), 2).unwrap();
        assert_eq!(hits.iter().map(|h| h.id.as_str()).collect::<Vec<_>>(), ["s1", "s3"]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let idx = index(&[("a", &[1.0, 0.0])]);
        assert!(matches!(idx.knn(&v(&[1.0, 0.0, 0.0]), 1), Err(Error::DimensionMismatch { .. })));
        let mut idx = EmbeddingIndex::new(2);
        assert!(idx.insert("x".into(), v(&[1.0])).is_err());
    }

    #[test]
    fn rejects_zero_and_duplicates() {
        assert_eq!(EmbeddingVector::new(vec![0.0, 0.0]), Err(Error::ZeroVector));
        let mut idx = EmbeddingIndex::new(1);
        idx.insert("a".into(), v(&[1.0])).unwrap();
        assert_eq!(idx.insert("a".into(), v(&[2.0])), Err(Error::DuplicateId("a".into())));
        assert_eq!(idx.knn(&v(&[1.0]), 0), Err(Error::InvalidK(0)));
    }
}
