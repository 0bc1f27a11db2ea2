//! Noise-injection evaluation against the simulated oracle.

use std::path::Path;

use ftclean_core::{
    detection_metrics, inject_noise, label_accuracy, residual_noise_rate, Dataset,
    DetectionMetrics, NoiseModel, NoiseSpec, Tag, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, CachedBackend, Knowledge, SimSettings, SimulatedBackend};
use crate::error::{Error, Result};
use crate::pipeline::{Curation, Pipeline, Prepared, Settings, StageTimings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub rate: f64,
    pub beta: f64,
    pub noise_model: NoiseModel,
    pub n: usize,
    pub injected_count: usize,
    pub clean_count: usize,
    pub noisy_count: usize,
    pub relabeled_count: usize,
    pub kept_count: usize,
    pub ft_size: usize,
    pub detection: DetectionMetrics,
    pub detection_precision: f64,
    pub detection_recall: f64,
    /// Share of relabeled samples matching ground truth (1.0 when none).
    pub relabel_accuracy: f64,
    /// Share of kept relabels matching ground truth (1.0 when none).
    pub selected_accuracy: f64,
    pub residual_noise_rate: f64,
    pub timings: StageTimings,
}

fn ground_truth_required() -> Error {
    Error::Precondition("evaluation requires ground truth on every sample".into())
}

/// Metrics for one finished run over a noise-injected dataset.
pub fn score_run(spec: &NoiseSpec, prepared: &Prepared, curation: &Curation) -> Result<HarnessReport> {
    let noisy = &prepared.input;
    let kind = noisy.task_kind();
    let mut pairs = Vec::with_capacity(noisy.len());
    for s in noisy {
        let actual = s.is_mislabeled(kind).ok_or_else(ground_truth_required)?;
        pairs.push((prepared.partition.verdict(&s.id) == Some(Verdict::Noisy), actual));
    }
    let detection = detection_metrics(pairs);
    let relabel_accuracy =
        label_accuracy(prepared.relabeled.iter(), kind).ok_or_else(ground_truth_required)?;
    let selected_accuracy =
        label_accuracy(curation.selected.iter(), kind).ok_or_else(ground_truth_required)?;
    let residual = residual_noise_rate(&curation.ft).ok_or_else(ground_truth_required)?;
    Ok(HarnessReport {
        rate: spec.rate,
        beta: curation.beta,
        noise_model: spec.model,
        n: noisy.len(),
        injected_count: noisy.iter().filter(|s| s.has_tag(Tag::InjectedNoise)).count(),
        clean_count: prepared.partition.clean.len(),
        noisy_count: prepared.partition.noisy.len(),
        relabeled_count: prepared.relabeled.len(),
        kept_count: curation.selected.len(),
        ft_size: curation.ft.len(),
        detection_precision: detection.precision,
        detection_recall: detection.recall,
        detection,
        relabel_accuracy,
        selected_accuracy,
        residual_noise_rate: residual,
        timings: StageTimings { select_ms: curation.select_ms, ..prepared.timings },
    })
}

/// Inject noise, run the pipeline once and score it at every `beta`.
pub fn evaluate_with(
    backend: &dyn Backend,
    corpus: &Dataset,
    spec: &NoiseSpec,
    settings: &Settings,
    betas: &[f64],
    index_dir: Option<&Path>,
) -> Result<Vec<HarnessReport>> {
    if betas.is_empty() {
        return Err(Error::Config("at least one beta is required".into()));
    }
    let noisy = inject_noise(corpus, spec)?;
    let mut pipeline = Pipeline::new(backend, settings);
    if let Some(dir) = index_dir {
        pipeline = pipeline.with_index_dir(dir);
    }
    let prepared = pipeline.prepare(&noisy)?;
    betas
        .iter()
        .map(|&beta| score_run(spec, &prepared, &prepared.finish(beta)?))
        .collect()
}

/// Simulated backend whose knowledge is the corpus ground truth.
pub fn oracle_backend(corpus: &Dataset, sim: &SimSettings) -> Result<SimulatedBackend> {
    sim.validate().map_err(Error::Config)?;
    let with_truth: Vec<_> = corpus
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.ground_truth.get_or_insert_with(|| s.label.clone());
            s
        })
        .collect();
    let ds = Dataset::new(corpus.task_kind(), with_truth)?;
    Ok(SimulatedBackend::new(sim.clone(), Knowledge::from_dataset(&ds)))
}

pub fn evaluate_sweep(
    corpus: &Dataset,
    spec: &NoiseSpec,
    sim: &SimSettings,
    settings: &Settings,
    betas: &[f64],
    cache_dir: Option<&Path>,
) -> Result<Vec<HarnessReport>> {
    let backend = oracle_backend(corpus, sim)?;
    match cache_dir {
        Some(dir) => {
            let cached = CachedBackend::new(backend, dir.join("responses"))?;
            evaluate_with(&cached, corpus, spec, settings, betas, Some(&dir.join("index")))
        }
        None => evaluate_with(&backend, corpus, spec, settings, betas, None),
    }
}

pub fn evaluate(
    corpus: &Dataset,
    spec: &NoiseSpec,
    sim: &SimSettings,
    settings: &Settings,
) -> Result<HarnessReport> {
    let mut reports = evaluate_sweep(corpus, spec, sim, settings, &[settings.beta], None)?;
    Ok(reports.remove(0))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gates {
    pub min_precision: Option<f64>,
    pub min_recall: Option<f64>,
    pub min_relabel_accuracy: Option<f64>,
    pub max_residual_noise: Option<f64>,
    /// Residual noise strictly below the injected rate (zero at rate 0).
    pub residual_below_injected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub gate: String,
    pub rate: f64,
    pub beta: f64,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Gates {
    pub fn check(&self, r: &HarnessReport) -> Vec<GateResult> {
        let gate = |name: &str, value: f64, threshold: f64, passed: bool| GateResult {
            gate: name.into(),
            rate: r.rate,
            beta: r.beta,
            value,
            threshold,
            passed,
        };
        let mut out = Vec::new();
        if let Some(t) = self.min_precision {
            out.push(gate("min_precision", r.detection_precision, t, r.detection_precision >= t));
        }
        if let Some(t) = self.min_recall {
            out.push(gate("min_recall", r.detection_recall, t, r.detection_recall >= t));
        }
        if let Some(t) = self.min_relabel_accuracy {
            out.push(gate("min_relabel_accuracy", r.relabel_accuracy, t, r.relabel_accuracy >= t));
        }
        if let Some(t) = self.max_residual_noise {
            out.push(gate("max_residual_noise", r.residual_noise_rate, t, r.residual_noise_rate <= t));
        }
        if self.residual_below_injected {
            let ok = if r.rate == 0.0 {
                r.residual_noise_rate == 0.0
            } else {
                r.residual_noise_rate < r.rate
            };
            out.push(gate("residual_below_injected", r.residual_noise_rate, r.rate, ok));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    pub rates: Vec<f64>,
    pub betas: Vec<f64>,
    pub noise_model: NoiseModel,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub reports: Vec<HarnessReport>,
    pub gates: Vec<GateResult>,
    pub passed: bool,
}

/// One report per (rate, beta), rates outermost.
pub fn run_eval(
    corpus: &Dataset,
    plan: &EvalPlan,
    sim: &SimSettings,
    settings: &Settings,
    gates: &Gates,
    cache_dir: Option<&Path>,
) -> Result<EvalReport> {
    if plan.rates.is_empty() {
        return Err(Error::Config("at least one noise rate is required".into()));
    }
    if let Some(r) = plan.rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Config(format!("noise rate must lie in [0, 1], got {r}")));
    }
    for &b in &plan.betas {
        crate::pipeline::validate_beta(b).map_err(Error::Config)?;
    }
    let mut reports = Vec::new();
    for &rate in &plan.rates {
        let spec = NoiseSpec { rate, model: plan.noise_model, seed: plan.noise_seed };
        let batch = evaluate_sweep(corpus, &spec, sim, settings, &plan.betas, cache_dir)?;
        for r in &batch {
            log::info!(
                "eval: rate={rate} beta={} precision={:.4} recall={:.4} residual={:.4}",
                r.beta,
                r.detection_precision,
                r.detection_recall,
                r.residual_noise_rate
            );
        }
        reports.extend(batch);
    }
    let gate_results: Vec<GateResult> = reports.iter().flat_map(|r| gates.check(r)).collect();
    let passed = gate_results.iter().all(|g| g.passed);
    Ok(EvalReport { reports, gates: gate_results, passed })
}

impl EvalReport {
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:>5} {:>5} {:>6} {:>8} {:>6} {:>6} {:>7} {:>5} {:>9} {:>7} {:>9} {:>8}\n",
            "rate", "beta", "n", "injected", "clean", "noisy", "relabel", "kept", "precision",
            "recall", "relab_acc", "residual"
        );
        for r in &self.reports {
            out.push_str(&format!(
                "{:>5.2} {:>5.2} {:>6} {:>8} {:>6} {:>6} {:>7} {:>5} {:>9.4} {:>7.4} {:>9.4} {:>8.4}\n",
                r.rate,
                r.beta,
                r.n,
                r.injected_count,
                r.clean_count,
                r.noisy_count,
                r.relabeled_count,
                r.kept_count,
                r.detection_precision,
                r.detection_recall,
                r.relabel_accuracy,
                r.residual_noise_rate
            ));
        }
        for g in self.gates.iter().filter(|g| !g.passed) {
            out.push_str(&format!(
                "FAILED gate {} at rate={} beta={}: value {:.4} vs threshold {:.4}\n",
                g.gate, g.rate, g.beta, g.value, g.threshold
            ));
        }
        out
    }
}
