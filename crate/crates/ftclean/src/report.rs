//! Curation report and per-sample records.

use std::collections::BTreeMap;

use ftclean_core::{CheckerPolicy, ReviewOutcome, TaskKind, Verdict};
use serde::{Deserialize, Serialize};

use crate::denoise::{DenoiseRecord, ScoreSource};
use crate::detect::DetectionRecord;
use crate::pipeline::{Curation, Prepared, Settings};

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub task_kind: TaskKind,
    pub k: usize,
    pub beta: f64,
    pub reflection_iterations: usize,
    pub checker_policy: CheckerPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSection {
    pub total: usize,
    pub clean: usize,
    pub noisy: usize,
    pub errors: usize,
    /// Agreement pattern name to count; failed samples count as `error`.
    pub patterns: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSection {
    pub noisy: usize,
    pub relabeled: usize,
    pub outcomes: BTreeMap<ReviewOutcome, usize>,
    /// Share of samples with two parseable candidates whose candidates agreed.
    pub candidate_agreement_rate: Option<f64>,
    pub index_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSection {
    pub scored: usize,
    pub unscored: usize,
    pub score_sources: BTreeMap<String, usize>,
    pub kept: usize,
    pub dropped: usize,
    pub cutoff: Option<f64>,
    pub entropy_histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub clean: usize,
    pub selected: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub settings: RunSettings,
    pub detection: DetectionSection,
    pub denoise: DenoiseSection,
    pub selection: SelectionSection,
    pub output: OutputSection,
}

/// One line of the records sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub verdict: Verdict,
    pub in_output: bool,
    pub selected: Option<bool>,
    pub detection: DetectionRecord,
    pub denoise: Option<DenoiseRecord>,
}

pub fn entropy_histogram(values: impl IntoIterator<Item = f64>) -> Vec<HistogramBin> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values {
        *counts.entry((v / HISTOGRAM_BIN_WIDTH).floor().max(0.0) as usize).or_default() += 1;
    }
    let Some(&last) = counts.keys().next_back() else { return Vec::new() };
    (0..=last)
        .map(|b| HistogramBin {
            lo: b as f64 * HISTOGRAM_BIN_WIDTH,
            hi: (b + 1) as f64 * HISTOGRAM_BIN_WIDTH,
            count: counts.get(&b).copied().unwrap_or(0),
        })
        .collect()
}

impl CurationReport {
    pub fn build(settings: &Settings, prepared: &Prepared, curation: &Curation) -> Self {
        let part = &prepared.partition;
        let mut patterns = BTreeMap::new();
        for r in part.records.values() {
            let name = r.pattern.map_or("error", |p| p.name());
            *patterns.entry(name.to_string()).or_insert(0) += 1;
        }
        let mut outcomes = BTreeMap::new();
        for r in prepared.denoise_records.values() {
            *outcomes.entry(r.outcome).or_insert(0) += 1;
        }
        let count = |o| outcomes.get(&o).copied().unwrap_or(0);
        let agreed = count(ReviewOutcome::Agreed);
        let contested = agreed + count(ReviewOutcome::Reviewed) + count(ReviewOutcome::Fallback);
        let mut score_sources = BTreeMap::new();
        for r in prepared.denoise_records.values().filter(|r| r.outcome.is_resolved()) {
            let name = match r.score_source {
                ScoreSource::Logprobs => "logprobs",
                ScoreSource::VerbalConfidence => "verbal-confidence",
                ScoreSource::Unscored => "unscored",
            };
            *score_sources.entry(name.to_string()).or_insert(0) += 1;
        }
        let scored = prepared.scored.len();
        CurationReport {
            settings: RunSettings {
                task_kind: prepared.input.task_kind(),
                k: settings.k,
                beta: curation.beta,
                reflection_iterations: settings.iterations,
                checker_policy: settings.policy,
            },
            detection: DetectionSection {
                total: prepared.input.len(),
                clean: part.clean.len(),
                noisy: part.noisy.len(),
                errors: part.records.values().filter(|r| r.error.is_some()).count(),
                patterns,
            },
            denoise: DenoiseSection {
                noisy: part.noisy.len(),
                relabeled: prepared.relabeled.len(),
                outcomes,
                candidate_agreement_rate: (contested > 0)
                    .then(|| agreed as f64 / contested as f64),
                index_size: prepared.index_size,
            },
            selection: SelectionSection {
                scored,
                unscored: prepared.scored.iter().filter(|s| s.entropy.is_none()).count(),
                score_sources,
                kept: curation.selected.len(),
                dropped: scored - curation.selected.len(),
                cutoff: curation.selection.cutoff,
                entropy_histogram: entropy_histogram(prepared.scored.iter().filter_map(|s| s.entropy)),
            },
            output: OutputSection {
                clean: part.clean.len(),
                selected: curation.selected.len(),
                total: curation.ft.len(),
            },
        }
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let d = &self.detection;
        let n = &self.denoise;
        let s = &self.selection;
        let mut out = String::new();
        out.push_str(&format!(
            "detect   total={} clean={} noisy={} errors={}\n",
            d.total, d.clean, d.noisy, d.errors
        ));
        for (name, c) in &d.patterns {
            out.push_str(&format!("         pattern {name:<15} {c}\n"));
        }
        out.push_str(&format!("denoise  relabeled={} of {}", n.relabeled, n.noisy));
        if let Some(r) = n.candidate_agreement_rate {
            out.push_str(&format!(" agreement={r:.3}"));
        }
        out.push('\n');
        for (o, c) in &n.outcomes {
            out.push_str(&format!("         outcome {:<15} {c}\n", format!("{o:?}").to_lowercase()));
        }
        out.push_str(&format!(
            "select   beta={} kept={} dropped={} cutoff={}\n",
            self.settings.beta,
            s.kept,
            s.dropped,
            s.cutoff.map_or("-".into(), |c| format!("{c:.4}"))
        ));
        out.push_str(&format!(
            "output   clean={} selected={} total={}\n",
            self.output.clean, self.output.selected, self.output.total
        ));
        out
    }
}

/// Per-sample records in input order.
pub fn sample_records(prepared: &Prepared, curation: &Curation) -> Vec<SampleRecord> {
    let selected: std::collections::BTreeSet<&str> = curation.selected.ids().collect();
    prepared
        .input
        .iter()
        .map(|s| {
            let detection = prepared.partition.records[&s.id].clone();
            let denoise = prepared.denoise_records.get(&s.id).cloned();
            let is_selected = denoise
                .as_ref()
                .filter(|d| d.outcome.is_resolved())
                .map(|_| selected.contains(s.id.as_str()));
            SampleRecord {
                id: s.id.clone(),
                verdict: detection.verdict,
                in_output: curation.ft.contains(&s.id),
                selected: is_selected,
                detection,
                denoise,
            }
        })
        .collect()
}
