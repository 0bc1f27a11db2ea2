//! Command implementations behind the `ftclean` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use ftclean_core::{synthetic_corpus, Dataset};

use crate::backend::{
    Backend, CachedBackend, HttpBackend, Instrumented, Knowledge, SimulatedBackend,
};
use crate::config::{BackendConfig, Config};
use crate::corpus::{load_dataset, read_jsonl, save_dataset, write_jsonl};
use crate::error::{Error, Result};
use crate::harness::{run_eval, EvalReport};
use crate::pipeline::Pipeline;
use crate::report::{sample_records, CurationReport, SampleRecord};

/// `<output>.<suffix>` next to the output file.
pub fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

pub fn report_path(output: &Path) -> PathBuf {
    sidecar(output, "report.json")
}

pub fn records_path(output: &Path) -> PathBuf {
    sidecar(output, "records.jsonl")
}

/// Backend described by `config`. The simulated backend learns the ground
/// truth carried by `data`.
pub fn build_backend(config: &Config, data: &Dataset) -> Result<Box<dyn Backend>> {
    Ok(match &config.backend {
        BackendConfig::Simulated(sim) => {
            sim.validate().map_err(Error::Config)?;
            Box::new(SimulatedBackend::new(sim.clone(), Knowledge::from_dataset(data)))
        }
        BackendConfig::Http(http) => Box::new(HttpBackend::new(http.clone())?),
    })
}

fn write_report(path: &Path, report: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Curate `input` into `output` with an explicit backend.
pub fn run_curate_with(
    backend: &dyn Backend,
    input: &Path,
    output: &Path,
    config: &Config,
) -> Result<CurationReport> {
    let settings = config.settings()?;
    let ds = load_dataset(input, config.task_kind)?;
    let mut pipeline = Pipeline::new(backend, &settings);
    if let Some(dir) = &config.cache_dir {
        pipeline = pipeline.with_index_dir(dir.join("index"));
    }
    let (prepared, curation) = pipeline.run(&ds)?;
    let report = CurationReport::build(&settings, &prepared, &curation);
    save_dataset(&curation.ft, output)?;
    write_report(&report_path(output), &report)?;
    write_jsonl(&records_path(output), sample_records(&prepared, &curation))?;
    Ok(report)
}

pub fn run_curate(input: &Path, output: &Path, config: &Config) -> Result<CurationReport> {
    config.validate()?;
    let ds = load_dataset(input, config.task_kind)?;
    let counted = Instrumented::new(build_backend(config, &ds)?);
    let report = match &config.cache_dir {
        Some(dir) => {
            let cached = CachedBackend::new(&counted, dir.join("responses"))?;
            run_curate_with(&cached, input, output, config)?
        }
        None => run_curate_with(&counted, input, output, config)?,
    };
    log::info!(
        "backend calls: completions={} embeddings={}",
        counted.completion_calls(),
        counted.embedding_calls()
    );
    Ok(report)
}

pub enum EvalSource<'a> {
    File(&'a Path),
    Synthetic { n: usize, options: usize, seed: u64 },
}

pub fn run_eval_command(
    source: EvalSource,
    config: &Config,
    output: Option<&Path>,
) -> Result<EvalReport> {
    config.validate()?;
    let BackendConfig::Simulated(sim) = &config.backend else {
        return Err(Error::Config("eval requires the simulated backend".into()));
    };
    let settings = config.settings()?;
    let corpus = match source {
        EvalSource::File(p) => load_dataset(p, config.task_kind)?,
        EvalSource::Synthetic { n, options, seed } => synthetic_corpus(n, options, seed),
    };
    let cache = config.cache_dir.as_deref();
    let report =
        run_eval(&corpus, &config.eval_plan(), sim, &settings, &config.eval.gates, cache)?;
    if let Some(path) = output {
        write_report(path, &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
pub struct InspectFilter {
    pub id: Option<String>,
    pub verdict: Option<ftclean_core::Verdict>,
}

/// Records of a finished run; accepts the output path or the records file.
pub fn load_records(path: &Path) -> Result<Vec<SampleRecord>> {
    let records = if path.to_string_lossy().ends_with(".records.jsonl") {
        path.to_path_buf()
    } else {
        records_path(path)
    };
    read_jsonl(&records)
}

pub fn inspect(
    path: &Path,
    filter: &InspectFilter,
    json: bool,
    out: &mut impl Write,
) -> Result<usize> {
    let records: Vec<SampleRecord> = load_records(path)?
        .into_iter()
        .filter(|r| filter.id.as_ref().is_none_or(|id| &r.id == id))
        .filter(|r| filter.verdict.is_none_or(|v| r.verdict == v))
        .collect();
    let io = |e| Error::io("<stdout>", e);
    if json {
        for r in &records {
            serde_json::to_writer(&mut *out, r).map_err(|e| io(e.into()))?;
            out.write_all(b"\n").map_err(io)?;
        }
        return Ok(records.len());
    }
    writeln!(
        out,
        "{:<12} {:<7} {:<15} {:<17} {:<10} {:>8} {:<8} in_output",
        "id", "verdict", "pattern", "outcome", "relabel", "entropy", "selected"
    )
    .map_err(io)?;
    for r in &records {
        let pattern = r.detection.pattern.map_or("error", |p| p.name());
        let (outcome, relabel, entropy) = match &r.denoise {
            Some(d) => (
                format!("{:?}", d.outcome).to_lowercase(),
                d.reviewed_label.clone().unwrap_or_else(|| "-".into()),
                d.entropy.map_or("-".into(), |h| format!("{h:.4}")),
            ),
            None => ("-".into(), "-".into(), "-".into()),
        };
        let selected = r.selected.map_or("-", |s| if s { "yes" } else { "no" });
        writeln!(
            out,
            "{:<12} {:<7} {:<15} {:<17} {:<10} {:>8} {:<8} {}",
            r.id,
            format!("{:?}", r.verdict).to_lowercase(),
            pattern,
            outcome,
            relabel,
            entropy,
            selected,
            if r.in_output { "yes" } else { "no" }
        )
        .map_err(io)?;
    }
    Ok(records.len())
}
