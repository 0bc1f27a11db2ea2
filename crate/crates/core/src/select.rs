//! Entropy scoring of context-enhanced responses and top-β selection.

use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use crate::answer::TaskKind;
use crate::error::{Error, Result};
use crate::prediction::TokenLogprob;
use crate::sample::{Dataset, Sample};

/// Mean negative log-probability per response token.
pub fn entropy_score(token_logprobs: Option<&[TokenLogprob]>) -> Result<f64> {
    let tokens = match token_logprobs {
        Some(t) if !t.is_empty() => t,
        _ => return Err(Error::MissingLogprobs),
    };
    let mut total = 0.0;
    for t in tokens {
        if t.logprob.is_nan() || t.logprob > 0.0 {
            return Err(Error::InvalidLogprob(t.logprob));
        }
        total -= t.logprob;
    }
    Ok(total / tokens.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample: Sample,
    /// `None` when no confidence signal could be obtained; ranked last.
    pub entropy: Option<f64>,
    pub token_count: usize,
}

/// `⌈β·n⌉`, robust to products such as `0.3 * 10` landing a hair above an
/// integer.
pub fn selection_count(beta: f64, n: usize) -> Result<usize> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidBeta(beta));
    }
    let exact = beta * n as f64;
    let nearest = libm::round(exact);
    let count = if (exact - nearest).abs() <= 1e-9 * exact.max(1.0) {
        nearest
    } else {
        libm::ceil(exact)
    };
    Ok((count as usize).min(n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Positions into the scored list, ascending.
    pub kept: Vec<usize>,
    /// Largest entropy among kept scored samples.
    pub cutoff: Option<f64>,
}

fn rank_order(a: &ScoredSample, b: &ScoredSample) -> Ordering {
    match (a.entropy, b.entropy) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.sample.id.cmp(&b.sample.id))
}

impl Selection {
    pub fn compute(scored: &[ScoredSample], beta: f64) -> Result<Self> {
        let count = selection_count(beta, scored.len())?;
        if scored.is_empty() {
            return Err(Error::EmptyInput("scored samples"));
        }
        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&i, &j| rank_order(&scored[i], &scored[j]));
        order.truncate(count);
        let cutoff = order
            .iter()
            .filter_map(|&i| scored[i].entropy)
            .max_by(f64::total_cmp);
        order.sort_unstable();
        Ok(Selection { kept: order, cutoff })
    }
}

/// The `⌈β·n⌉` lowest-entropy samples in their original order.
pub fn select(scored: &[ScoredSample], beta: f64, kind: TaskKind) -> Result<Dataset> {
    let selection = Selection::compute(scored, beta)?;
    Dataset::new(kind, selection.kept.iter().map(|&i| scored[i].sample.clone()).collect())
}

/// Clean samples first, then the selected relabels.
pub fn assemble_ft(clean: &Dataset, selected: &Dataset) -> Result<Dataset> {
    if clean.task_kind() != selected.task_kind() {
        return Err(Error::TaskKindMismatch);
    }
    if let Some(id) = selected.ids().find(|id| clean.contains(id)) {
        return Err(Error::IdCollision(id.into()));
    }
    let samples = clean.iter().chain(selected.iter()).cloned().collect();
    Dataset::new(clean.task_kind(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Tag;
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;

    fn lps(values: &[f64]) -> Vec<TokenLogprob> {
        values.iter().map(|&logprob| TokenLogprob { token: String::from("t"), logprob }).collect()
    }

    fn scored(id: &str, entropy: Option<f64>) -> ScoredSample {
        ScoredSample { sample: Sample::new(id, "q", "l"), entropy, token_count: 1 }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_score(Some(&lps(&[0.0, 0.0, 0.0]))).unwrap(), 0.0);
        assert_eq!(entropy_score(Some(&lps(&[-0.5, -1.0, -1.5]))).unwrap(), 1.0);
        assert_eq!(entropy_score(None), Err(Error::MissingLogprobs));
        assert_eq!(entropy_score(Some(&[])), Err(Error::MissingLogprobs));
        assert_eq!(entropy_score(Some(&lps(&[0.1]))), Err(Error::InvalidLogprob(0.1)));
    }

    #[test]
    fn selection_count_uses_ceiling() {
        assert_eq!(selection_count(0.5, 10).unwrap(), 5);
        assert_eq!(selection_count(0.5, 7).unwrap(), 4);
        assert_eq!(selection_count(0.3, 10).unwrap(), 3);
        assert_eq!(selection_count(0.7, 10).unwrap(), 7);
        assert_eq!(selection_count(1.0, 3).unwrap(), 3);
        assert_eq!(selection_count(0.01, 3).unwrap(), 1);
        assert!(selection_count(0.0, 3).is_err());
        assert!(selection_count(1.2, 3).is_err());
        assert!(selection_count(f64::NAN, 3).is_err());
    }

    #[test]
    fn keeps_lowest_entropy_half() {
        let items: Vec<_> = (0..10)
            .map(|i| scored(&format!("s{i:02}"), Some(((i * 7) % 10) as f64)))
            .collect();
        let ds = select(&items, 0.5, TaskKind::ShortAnswer).unwrap();
        let ids: Vec<_> = ds.ids().collect();
        // entropies: s00=0 s01=7 s02=4 s03=1 s04=8 s05=5 s06=2 s07=9 s08=6 s09=3
        assert_eq!(ids, ["s00", "s02", "s03", "s06", "s09"]);
    }

    #[test]
    fn equal_entropies_keep_smallest_ids() {
        let items = vec![
            scored("s3", Some(1.0)),
            scored("s1", Some(1.0)),
            scored("s0", Some(1.0)),
            scored("s2", Some(1.0)),
        ];
        let ds = select(&items, 0.5, TaskKind::ShortAnswer).unwrap();
        // original order among the kept
        assert_eq!(ds.ids().collect::<Vec<_>>(), ["s1", "s0"]);
    }

    #[test]
    fn unscored_rank_last() {
        let items = vec![scored("a", None), scored("b", Some(9.0)), scored("c", None)];
        let sel = Selection::compute(&items, 0.5).unwrap();
        assert_eq!(sel.kept, [0, 1]);
        assert_eq!(sel.cutoff, Some(9.0));
    }

    #[test]
    fn select_rejects_bad_input() {
        assert_eq!(select(&[], 0.5, TaskKind::FreeText), Err(Error::EmptyInput("scored samples")));
        assert_eq!(
            select(&[scored("a", Some(0.0))], 1.2, TaskKind::FreeText),
            Err(Error::InvalidBeta(1.2))
        );
    }

    #[test]
    fn assemble_orders_clean_first() {
        let clean =
            Dataset::new(TaskKind::FreeText, (0..80).map(|i| Sample::new(format!("c{i}"), "q", "l")).collect())
                .unwrap();
        let mut relabeled = Sample::new("r0", "q", "l");
        relabeled.tags = [Tag::Relabeled].into_iter().collect();
        let selected = Dataset::new(TaskKind::FreeText, vec![relabeled]).unwrap();
        let ft = assemble_ft(&clean, &selected).unwrap();
        assert_eq!(ft.len(), 81);
        assert!(ft.samples()[..80].iter().all(|s| s.has_tag(Tag::Original)));
        assert!(ft.samples()[80].has_tag(Tag::Relabeled));

        let empty = Dataset::empty(TaskKind::FreeText);
        assert_eq!(assemble_ft(&clean, &empty).unwrap(), clean);

        let overlap = Dataset::new(TaskKind::FreeText, vec![Sample::new("c3", "q", "l")]).unwrap();
        assert_eq!(assemble_ft(&clean, &overlap), Err(Error::IdCollision("c3".into())));
    }
}
