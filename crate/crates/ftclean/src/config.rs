//! TOML run configuration.
//!
//! `${NAME}` anywhere in the file is replaced by the environment variable
//! `NAME` before parsing; `$$` yields a literal `$`. Command-line flags are
//! applied on top through [`Overrides`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ftclean_core::{CheckerPolicy, NoiseModel, TaskKind};
use serde::{Deserialize, Serialize};

use crate::backend::{HttpSettings, SimSettings};
use crate::error::{Error, Result};
use crate::harness::{EvalPlan, Gates};
use crate::pipeline::{validate_beta, Settings};
use crate::prompts::PromptSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    Simulated(SimSettings),
    Http(HttpSettings),
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Simulated(SimSettings::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub rates: Vec<f64>,
    pub betas: Option<Vec<f64>>,
    pub noise_model: NoiseModel,
    pub noise_seed: u64,
    pub gates: Gates,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            rates: vec![0.3, 0.5, 0.7],
            betas: None,
            noise_model: NoiseModel::UniformFlip,
            noise_seed: 0,
            gates: Gates::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub task_kind: TaskKind,
    pub k: usize,
    pub beta: f64,
    pub reflection_iterations: usize,
    pub checker_policy: CheckerPolicy,
    pub concurrency: usize,
    pub cache_dir: Option<PathBuf>,
    pub answer_max_tokens: u32,
    pub reasoning_max_tokens: u32,
    pub backend: BackendConfig,
    /// Template name to replacement text.
    pub prompts: BTreeMap<String, String>,
    pub eval: EvalConfig,
}

impl Default for Config {
    fn default() -> Self {
        let s = Settings::default();
        Config {
            task_kind: TaskKind::MultipleChoice,
            k: s.k,
            beta: s.beta,
            reflection_iterations: s.iterations,
            checker_policy: s.policy,
            concurrency: s.concurrency,
            cache_dir: None,
            answer_max_tokens: s.answer_max_tokens,
            reasoning_max_tokens: s.reasoning_max_tokens,
            backend: BackendConfig::default(),
            prompts: BTreeMap::new(),
            eval: EvalConfig::default(),
        }
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub beta: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub concurrency: Option<usize>,
    pub cache_dir: Option<PathBuf>,
}

pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('$') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            out.push('$');
            rest = tail;
        } else if let Some(body) = after.strip_prefix('{') {
            let end = body
                .find('}')
                .ok_or_else(|| Error::Config("unterminated `${` in config".into()))?;
            let name = &body[..end];
            if name.is_empty() {
                return Err(Error::Config("empty variable name in `${}`".into()));
            }
            let value = lookup(name)
                .ok_or_else(|| Error::Config(format!("environment variable `{name}` is not set")))?;
            out.push_str(&value);
            rest = &body[end + 1..];
        } else {
            out.push('$');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let text = interpolate(text, |name| std::env::var(name).ok())?;
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(b) = o.beta {
            self.beta = b;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(c) = o.concurrency {
            self.concurrency = c;
        }
        if let Some(d) = &o.cache_dir {
            self.cache_dir = Some(d.clone());
        }
        if let Some(seed) = o.seed {
            self.eval.noise_seed = seed;
            if let BackendConfig::Simulated(sim) = &mut self.backend {
                sim.seed = seed;
            }
        }
    }

    pub fn settings(&self) -> Result<Settings> {
        let prompts = PromptSet::with_overrides(
            self.prompts.iter().map(|(k, v)| (k.as_str(), v.as_str())),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let settings = Settings {
            k: self.k,
            beta: self.beta,
            iterations: self.reflection_iterations,
            policy: self.checker_policy,
            concurrency: self.concurrency,
            answer_max_tokens: self.answer_max_tokens,
            reasoning_max_tokens: self.reasoning_max_tokens,
            prompts,
        };
        settings.validate().map_err(Error::Config)?;
        Ok(settings)
    }

    pub fn validate(&self) -> Result<()> {
        self.settings()?;
        match &self.backend {
            BackendConfig::Simulated(s) => s.validate(),
            BackendConfig::Http(h) => h.validate(),
        }
        .map_err(Error::Config)?;
        for &b in self.eval.betas.iter().flatten() {
            validate_beta(b).map_err(Error::Config)?;
        }
        Ok(())
    }

    pub fn eval_plan(&self) -> EvalPlan {
        EvalPlan {
            rates: self.eval.rates.clone(),
            betas: self.eval.betas.clone().unwrap_or_else(|| vec![self.beta]),
            noise_model: self.eval.noise_model,
            noise_seed: self.eval.noise_seed,
        }
    }
}
