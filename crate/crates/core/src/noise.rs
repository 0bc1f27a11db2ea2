//! Seeded label-noise injection and a synthetic multiple-choice corpus.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::answer::{display_answer, normalize_answer, option_index, TaskKind, OPTION_LETTERS};
use crate::error::{Error, Result};
use crate::sample::{Dataset, Sample, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Replace the option letter with a different option, uniformly.
    UniformFlip,
    /// Permute labels among the corrupted samples.
    ShuffleLabels,
    /// Replace the label with a plausible wrong text.
    CorruptText,
}

impl NoiseModel {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseModel::UniformFlip => "uniform-flip",
            NoiseModel::ShuffleLabels => "shuffle-labels",
            NoiseModel::CorruptText => "corrupt-text",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rate: f64,
    pub model: NoiseModel,
    pub seed: u64,
}

/// Number of answer options implied by the labels of a multiple-choice
/// dataset; at least four.
pub fn option_count(ds: &Dataset) -> usize {
    ds.iter()
        .flat_map(|s| core::iter::once(&s.label).chain(s.ground_truth.as_ref()))
        .filter_map(|t| option_index(&normalize_answer(t, TaskKind::MultipleChoice)))
        .map(|i| i + 1)
        .max()
        .unwrap_or(0)
        .max(4)
}

/// Corrupt exactly `round(rate · n)` labels chosen by a seeded draw.
///
/// Corrupted samples keep their ground truth and gain the `injected-noise`
/// tag. Samples without a ground truth get `ground_truth = label` first.
pub fn inject_noise(ds: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::InvalidNoiseRate(spec.rate));
    }
    let kind = ds.task_kind();
    if spec.model == NoiseModel::UniformFlip && kind != TaskKind::MultipleChoice {
        return Err(Error::IncompatibleNoiseModel { model: spec.model.as_str(), task: kind.as_str() });
    }

    let mut samples: Vec<Sample> = ds.samples().to_vec();
    for s in &mut samples {
        match &s.ground_truth {
            None => s.ground_truth = Some(s.label.clone()),
            Some(_) if s.is_mislabeled(kind) == Some(true) => {
                return Err(Error::AlreadyNoisy(s.id.clone()))
            }
            Some(_) => {}
        }
    }

    let n = samples.len();
    let count = (libm::round(spec.rate * n as f64) as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen = rand::seq::index::sample(&mut rng, n, count).into_vec();
    chosen.sort_unstable();

    let new_labels = match spec.model {
        NoiseModel::UniformFlip => {
            let options = option_count(ds);
            chosen
                .iter()
                .map(|&i| flip_option(&samples[i], options, &mut rng))
                .collect::<Result<Vec<_>>>()?
        }
        NoiseModel::ShuffleLabels => shuffle_labels(&samples, &chosen, kind, &mut rng)?,
        NoiseModel::CorruptText => {
            let pool = label_pool(&samples, kind);
            chosen
                .iter()
                .map(|&i| corrupt_text(&samples[i], &pool, kind, &mut rng))
                .collect::<Result<Vec<_>>>()?
        }
    };

    for (&i, label) in chosen.iter().zip(new_labels) {
        let s = &mut samples[i];
        s.label = label;
        s.tags.insert(Tag::InjectedNoise);
        if s.is_mislabeled(kind) != Some(true) {
            return Err(Error::NoDistractor(s.id.clone()));
        }
    }
    Dataset::new(kind, samples)
}

fn truth(s: &Sample, kind: TaskKind) -> String {
    normalize_answer(s.ground_truth.as_deref().unwrap_or(&s.label), kind)
}

fn flip_option(s: &Sample, options: usize, rng: &mut ChaCha8Rng) -> Result<String> {
    let current = option_index(&truth(s, TaskKind::MultipleChoice))
        .ok_or_else(|| Error::NoDistractor(s.id.clone()))?;
    let r = rng.random_range(0..options - 1);
    let pick = if r >= current { r + 1 } else { r };
    let letter = &OPTION_LETTERS[pick..pick + 1];
    Ok(display_answer(letter, TaskKind::MultipleChoice))
}

/// Distinct labels in first-appearance order, deduplicated by normalized form.
fn label_pool(samples: &[Sample], kind: TaskKind) -> Vec<(String, String)> {
    let mut seen = BTreeSet::new();
    samples
        .iter()
        .filter_map(|s| {
            let norm = normalize_answer(&s.label, kind);
            (!norm.is_empty() && seen.insert(norm.clone())).then(|| (norm, s.label.clone()))
        })
        .collect()
}

fn pick_from_pool(
    pool: &[(String, String)],
    truth: &str,
    rng: &mut ChaCha8Rng,
) -> Option<String> {
    let candidates: Vec<&String> =
        pool.iter().filter(|(norm, _)| norm != truth).map(|(_, raw)| raw).collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.random_range(0..candidates.len())].clone())
    }
}

fn shuffle_labels(
    samples: &[Sample],
    chosen: &[usize],
    kind: TaskKind,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<String>> {
    let mut cycle: Vec<usize> = (0..chosen.len()).collect();
    cycle.shuffle(rng);
    let mut labels: Vec<String> = alloc::vec![String::new(); chosen.len()];
    for w in 0..cycle.len() {
        let donor = cycle[(w + 1) % cycle.len()];
        labels[cycle[w]] = samples[chosen[donor]].label.clone();
    }

    let truths: Vec<String> = chosen.iter().map(|&i| truth(&samples[i], kind)).collect();
    let norms = |labels: &[String]| -> Vec<String> {
        labels.iter().map(|l| normalize_answer(l, kind)).collect()
    };
    let mut normalized = norms(&labels);
    for j in 0..labels.len() {
        if normalized[j] != truths[j] {
            continue;
        }
        let partner = (0..labels.len()).find(|&q| {
            q != j && normalized[q] != truths[j] && normalized[j] != truths[q]
        });
        if let Some(q) = partner {
            labels.swap(j, q);
            normalized.swap(j, q);
        }
    }

    let pool = label_pool(samples, kind);
    for j in 0..labels.len() {
        if normalized[j] == truths[j] {
            labels[j] = pick_from_pool(&pool, &truths[j], rng)
                .ok_or_else(|| Error::NoDistractor(samples[chosen[j]].id.clone()))?;
        }
    }
    Ok(labels)
}

fn corrupt_text(
    s: &Sample,
    pool: &[(String, String)],
    kind: TaskKind,
    rng: &mut ChaCha8Rng,
) -> Result<String> {
    let raw_truth = s.ground_truth.as_deref().unwrap_or(&s.label).trim();
    if let Ok(number) = raw_truth.parse::<i64>() {
        let offset: i64 = rng.random_range(1..=9);
        let signed = if rng.random_bool(0.5) { offset } else { -offset };
        return Ok(format!("{}", number.saturating_add(signed)));
    }
    let norm = truth(s, kind);
    Ok(pick_from_pool(pool, &norm, rng).unwrap_or_else(|| format!("not {raw_truth}")))
}

const DOMAINS: [&str; 8] = [
    "astronomy", "cell biology", "contract law", "thermodynamics",
    "macroeconomics", "organic chemistry", "world history", "linear algebra",
];

const CONCEPTS: [&str; 16] = [
    "equilibrium", "diffusion", "inflation", "entropy", "mitosis", "orbit", "treaty",
    "eigenvalue", "catalyst", "tariff", "membrane", "momentum", "precedent", "isotope",
    "gradient", "revolution",
];

/// A multiple-choice corpus with uniformly drawn answer letters and
/// `ground_truth == label`. Queries are unique and cluster by domain.
pub fn synthetic_corpus(n: usize, options: usize, seed: u64) -> Dataset {
    let options = options.clamp(2, OPTION_LETTERS.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = format!("{}", n.saturating_sub(1)).len().max(6);
    let samples = (0..n)
        .map(|i| {
            let domain = DOMAINS[rng.random_range(0..DOMAINS.len())];
            let subject = CONCEPTS[rng.random_range(0..CONCEPTS.len())];
            let mut query = format!(
                "Item {i}: In {domain}, which statement about {subject} is correct?"
            );
            for o in 0..options {
                let c = CONCEPTS[rng.random_range(0..CONCEPTS.len())];
                let letter = display_answer(&OPTION_LETTERS[o..o + 1], TaskKind::MultipleChoice);
                query.push_str(&format!("\n({letter}) It is governed by {c} in {domain}."));
            }
            let answer = rng.random_range(0..options);
            let label = display_answer(&OPTION_LETTERS[answer..answer + 1], TaskKind::MultipleChoice);
            Sample::new(format!("s{i:0width$}"), query, label.clone()).with_ground_truth(label)
        })
        .collect();
    Dataset::new(TaskKind::MultipleChoice, samples).expect("synthetic ids are unique")
}
