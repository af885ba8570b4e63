//! Experiment configuration files.
//!
//! A config is a TOML document; see `configs/` for the bundled experiments
//! and the README for the full grammar. Relative paths inside a config are
//! resolved against the config file's directory.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rfi_core::{scm, ImportanceForm, LinearModel, Ridge, SamplerKind, ScmGraph, TestKind};

use crate::error::CliError;

pub const BUNDLED: [(&str, &str); 2] = [
    ("experiment_a", include_str!("../configs/experiment_a.toml")),
    ("experiment_b", include_str!("../configs/experiment_b.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub target: String,
    /// Training features `D`.
    pub features: Vec<String>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub loss: LossSetting,
    #[serde(default)]
    pub form: FormSetting,
    #[serde(default)]
    pub test: TestSetting,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_permutations")]
    pub max_permutations: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
    pub data: DataSource,
    #[serde(default)]
    pub model: ModelSource,
    #[serde(default)]
    pub sampler: SamplerSettings,
}

fn default_test_fraction() -> f64 {
    0.1
}

fn default_replications() -> usize {
    30
}

fn default_alpha() -> f64 {
    0.01
}

fn default_max_permutations() -> u64 {
    1 << 16
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSetting {
    #[default]
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormSetting {
    #[default]
    Difference,
    Ratio,
}

impl From<FormSetting> for ImportanceForm {
    fn from(f: FormSetting) -> Self {
        match f {
            FormSetting::Difference => ImportanceForm::Difference,
            FormSetting::Ratio => ImportanceForm::Ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSetting {
    #[default]
    PairedT,
    SignFlip,
}

impl From<TestSetting> for TestKind {
    fn from(t: TestSetting) -> Self {
        match t {
            TestSetting::PairedT => TestKind::PairedTOneSided,
            TestSetting::SignFlip => TestKind::SignFlipExact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    /// A bundled SCM (`experiment_a` or `experiment_b`).
    Builtin { graph: String, n: usize },
    /// An SCM graph file.
    Graph { path: PathBuf, n: usize },
    /// A CSV file with a header row. `split_column`, when given, holds 0
    /// (train) or 1 (test) per row; otherwise the split is drawn from the
    /// seed and `test_fraction`.
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        split_column: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSource {
    /// Fit OLS on the training rows.
    #[default]
    Ols,
    /// Load a persisted linear model.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerSetting {
    #[default]
    Gaussian,
    Knockoff,
}

impl From<SamplerSetting> for SamplerKind {
    fn from(s: SamplerSetting) -> Self {
        match s {
            SamplerSetting::Gaussian => SamplerKind::Gaussian,
            SamplerSetting::Knockoff => SamplerKind::Knockoff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    #[serde(default)]
    pub kind: SamplerSetting,
    /// Fixed diagonal ridge; absent means `1e-8 · trace(Σ) / k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

impl SamplerSettings {
    pub fn ridge(&self) -> Ridge {
        self.ridge.map_or(Ridge::Auto, Ridge::Fixed)
    }
}

/// One importance computation: feature `j` relative to `G = given`, and
/// optionally the change when `G` is extended by `extend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub feature: String,
    #[serde(default)]
    pub given: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extend: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over the semantically meaningful fields: the output
    /// directory is ignored, and feature and conditioning lists are
    /// compared as sets.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        canon.features.sort();
        for job in &mut canon.jobs {
            job.given.sort();
            if let Some(e) = &mut job.extend {
                e.sort();
            }
        }
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Loads a config from a path, or a bundled config by name when no such
/// file exists. Returns the config and the directory relative paths are
/// resolved against.
pub fn load_config(spec: &str) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == spec) {
            let cfg = ExperimentConfig::from_toml_str(text).map_err(parse_diagnostic)?;
            return Ok((cfg, PathBuf::from(".")));
        }
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: spec.to_string(),
        source,
    })?;
    let cfg = ExperimentConfig::from_toml_str(&text).map_err(parse_diagnostic)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn parse_diagnostic(e: toml::de::Error) -> CliError {
    CliError::Config(vec![Diagnostic::new("config", e.message().to_string())])
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Reads `spec` (path or bundled name) and lists every schema violation
/// without running anything.
pub fn validate_config(spec: &str) -> Result<Vec<Diagnostic>, CliError> {
    match load_config(spec) {
        Ok((cfg, base)) => Ok(validate(&cfg, &base)),
        Err(CliError::Config(d)) => Ok(d),
        Err(e) => Err(e),
    }
}

/// Variable names the data source provides, or a diagnostic.
fn available_variables(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<String>, Diagnostic> {
    match &cfg.data {
        DataSource::Builtin { graph, .. } => scm::builtin(graph)
            .map(|g| g.names())
            .ok_or_else(|| Diagnostic::new("data.graph", format!("unknown bundled graph `{graph}`"))),
        DataSource::Graph { path, .. } => ScmGraph::from_path(resolve(base, path))
            .map(|g| g.names())
            .map_err(|e| Diagnostic::new("data.path", e.to_string())),
        DataSource::Csv { path, split_column } => {
            let p = resolve(base, path);
            let mut rdr = csv_header(&p).map_err(|e| Diagnostic::new("data.path", e))?;
            if let Some(col) = split_column {
                if !rdr.contains(col) {
                    return Err(Diagnostic::new(
                        "data.split_column",
                        format!("column `{col}` is not in {}", p.display()),
                    ));
                }
                rdr.retain(|c| c != col);
            }
            Ok(rdr)
        }
    }
}

fn csv_header(path: &Path) -> Result<Vec<String>, String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut first = String::new();
    std::io::BufRead::read_line(&mut std::io::BufReader::new(file), &mut first)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(first.trim().split(',').map(|s| s.trim().to_string()).collect())
}

pub fn validate(cfg: &ExperimentConfig, base: &Path) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)
        && !matches!(cfg.data, DataSource::Csv { split_column: Some(_), .. })
    {
        out.push(Diagnostic::new("test_fraction", format!("{} is outside (0, 1)", cfg.test_fraction)));
    }
    if cfg.replications == 0 {
        out.push(Diagnostic::new("replications", "must be at least 1"));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        out.push(Diagnostic::new("alpha", format!("{} is outside (0, 1)", cfg.alpha)));
    }
    if cfg.max_permutations == 0 {
        out.push(Diagnostic::new("max_permutations", "must be at least 1"));
    }
    if let Some(r) = cfg.sampler.ridge {
        if !(r >= 0.0 && r.is_finite()) {
            out.push(Diagnostic::new("sampler.ridge", format!("{r} is not a nonnegative number")));
        }
    }
    if let DataSource::Builtin { n, .. } | DataSource::Graph { n, .. } = cfg.data {
        if n < 4 {
            out.push(Diagnostic::new("data.n", format!("{n} rows is too few")));
        }
    }
    if cfg.features.is_empty() {
        out.push(Diagnostic::new("features", "no training features"));
    }
    let mut seen = HashSet::new();
    for f in &cfg.features {
        if !seen.insert(f) {
            out.push(Diagnostic::new("features", format!("`{f}` is listed twice")));
        }
    }
    if cfg.features.contains(&cfg.target) {
        out.push(Diagnostic::new("features", format!("target `{}` is a training feature", cfg.target)));
    }

    let variables = match available_variables(cfg, base) {
        Ok(v) => Some(v),
        Err(d) => {
            out.push(d);
            None
        }
    };
    if let Some(vars) = &variables {
        if !vars.contains(&cfg.target) {
            out.push(Diagnostic::new("target", format!("`{}` is not in the data", cfg.target)));
        }
        for f in &cfg.features {
            if !vars.contains(f) {
                out.push(Diagnostic::new("features", format!("`{f}` is not in the data")));
            }
        }
    }
    if let ModelSource::File { path } = &cfg.model {
        match LinearModel::load(resolve(base, path)) {
            Ok(m) => {
                let a: BTreeSet<&String> = m.feature_order.iter().collect();
                let b: BTreeSet<&String> = cfg.features.iter().collect();
                if a != b {
                    out.push(Diagnostic::new(
                        "model.path",
                        format!("model features {:?} differ from `features`", m.feature_order),
                    ));
                }
            }
            Err(e) => out.push(Diagnostic::new("model.path", e.to_string())),
        }
    }

    for (i, job) in cfg.jobs.iter().enumerate() {
        let loc = format!("jobs[{i}] (feature `{}`)", job.feature);
        if !cfg.features.contains(&job.feature) {
            out.push(Diagnostic::new(&loc, format!("`{}` is not a training feature", job.feature)));
        }
        let extend = job.extend.as_deref().unwrap_or(&[]);
        for (set, names) in [("given", &job.given[..]), ("extend", extend)] {
            let mut seen = HashSet::new();
            for g in names {
                if *g == cfg.target {
                    out.push(Diagnostic::new(&loc, format!("target `{g}` is in `{set}`")));
                } else if let Some(vars) = &variables {
                    if !vars.contains(g) {
                        out.push(Diagnostic::new(&loc, format!("`{g}` in `{set}` is not in the data")));
                    }
                }
                if !seen.insert(g) {
                    out.push(Diagnostic::new(&loc, format!("`{g}` is listed twice in `{set}`")));
                }
            }
        }
        for e in extend {
            if job.given.contains(e) {
                out.push(Diagnostic::new(&loc, format!("`{e}` is in both `given` and `extend`")));
            }
            if *e == job.feature {
                out.push(Diagnostic::new(&loc, "the feature of interest is in `extend`"));
            }
        }
    }
    out
}
