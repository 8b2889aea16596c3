//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the file.
//! Secrets never live here: API keys come from the environment.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use refwhy_core::llm::{ModelRole, Role, RoleSet};
use refwhy_core::metrics::{ComreadThresholds, MetricsConfig, DEFAULT_FIX_KEYWORDS};
use refwhy_core::sampler::SamplePlan;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub repos: Vec<PathBuf>,
    /// Holds one RefactoringMiner JSON file per project, `<project>.json`.
    pub rm_json_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Optional `<project>.csv` product-metric files keyed by commit and file.
    #[serde(default)]
    pub product_metrics_dir: Option<PathBuf>,
    /// Optional developer-reported motivations, see [`crate::stages::classify`].
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    /// Optional directory of prompt templates overriding the built-in ones.
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    /// Seeds sampling, batch export and the random forests.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sample: SampleSection,
    pub roles: Vec<ModelRole>,
    #[serde(default)]
    pub review: ReviewSection,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub target_n: Option<usize>,
    pub confidence: f64,
    pub margin: f64,
    pub min_per_project: usize,
    pub min_per_type: usize,
}

impl Default for SampleSection {
    fn default() -> Self {
        let p = SamplePlan::default();
        Self {
            target_n: p.target_n,
            confidence: p.confidence,
            margin: p.margin,
            min_per_project: p.min_per_project,
            min_per_type: p.min_per_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewSection {
    pub bind: String,
    pub port: u16,
    /// Accepted reviewer ids; empty accepts anyone.
    pub reviewers: Vec<String>,
    /// Built review UI; a minimal page is served when absent.
    pub static_dir: Option<PathBuf>,
    /// Show other reviewers' verdicts alongside a case.
    pub reveal_others: bool,
}

impl Default for ReviewSection {
    fn default() -> Self {
        Self { bind: "127.0.0.1".into(), port: 8080, reviewers: Vec::new(), static_dir: None, reveal_others: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub comread_low: f64,
    pub comread_high: f64,
    pub fix_keywords: Vec<String>,
    pub adev_window_days: u32,
    pub rexp_window_days: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        let m = MetricsConfig::default();
        let c = ComreadThresholds::default();
        Self {
            comread_low: c.low,
            comread_high: c.high,
            fix_keywords: DEFAULT_FIX_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            adev_window_days: m.adev_window_days,
            rexp_window_days: m.rexp_window_days,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub workers: usize,
    pub align_role: Role,
    /// Size of the human-validation batch; Cochran's n over the records
    /// when absent.
    pub validation_sample: Option<usize>,
    pub bytes_per_token: f64,
    pub retry_base_delay_ms: u64,
    pub max_in_flight: usize,
    pub min_interval_ms: u64,
}

impl Default for LlmSection {
    fn default() -> Self {
        Self {
            workers: 4,
            align_role: Role::Lrm,
            validation_sample: None,
            bytes_per_token: 4.0,
            retry_base_delay_ms: 500,
            max_in_flight: 4,
            min_interval_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub alpha: f64,
    pub n_trees: usize,
    /// Correlation columns; the 41 default metrics when absent.
    pub metrics: Option<Vec<String>>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { alpha: refwhy_core::reference::ALPHA, n_trees: 500, metrics: None }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&raw)?;
        let path = std::fs::canonicalize(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(raw: &str) -> Result<Self, CliError> {
        toml::from_str(raw).map_err(|e| CliError::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        for r in &mut self.repos {
            resolve(base, r);
        }
        resolve(base, &mut self.rm_json_dir);
        resolve(base, &mut self.output_dir);
        for p in [&mut self.product_metrics_dir, &mut self.ground_truth, &mut self.templates_dir, &mut self.review.static_dir]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.repos.is_empty() {
            return bad("repos: at least one repository is required".into());
        }
        let mut names = BTreeSet::new();
        for r in &self.repos {
            if !r.is_dir() {
                return bad(format!("repos: {} is not a directory", r.display()));
            }
            if !names.insert(project_name(r)) {
                return bad(format!("repos: project name {} appears twice", project_name(r)));
            }
        }
        let must_exist = [
            ("rm_json_dir", Some(&self.rm_json_dir)),
            ("product_metrics_dir", self.product_metrics_dir.as_ref()),
            ("ground_truth", self.ground_truth.as_ref()),
            ("templates_dir", self.templates_dir.as_ref()),
            ("review.static_dir", self.review.static_dir.as_ref()),
        ];
        for (key, p) in must_exist {
            if let Some(p) = p {
                if !p.exists() {
                    return bad(format!("{key}: {} does not exist", p.display()));
                }
            }
        }
        if self.roles.len() != 4 {
            return bad(format!("roles: exactly four are required, found {}", self.roles.len()));
        }
        RoleSet::new(self.roles.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        let t = &self.thresholds;
        if !(t.comread_low < t.comread_high) {
            return bad("thresholds: comread_low must be below comread_high".into());
        }
        if t.adev_window_days == 0 || t.rexp_window_days == 0 {
            return bad("thresholds: windows must be at least one day".into());
        }
        let s = &self.sample;
        let inside = |v: f64| v > 0.0 && v < 1.0;
        if !inside(s.confidence) || !inside(s.margin) {
            return bad("sample: confidence and margin must lie strictly between 0 and 1".into());
        }
        if !inside(self.analysis.alpha) {
            return bad("analysis: alpha must lie strictly between 0 and 1".into());
        }
        if self.analysis.n_trees == 0 {
            return bad("analysis: n_trees must be positive".into());
        }
        if self.llm.workers == 0 || self.llm.max_in_flight == 0 || !(self.llm.bytes_per_token > 0.0) {
            return bad("llm: workers, max_in_flight and bytes_per_token must be positive".into());
        }
        let mut seen = BTreeSet::new();
        for r in &self.review.reviewers {
            if r.trim().is_empty() || !seen.insert(r) {
                return bad(format!("review: reviewer id {r:?} is empty or repeated"));
            }
        }
        Ok(())
    }

    pub fn sample_plan(&self) -> SamplePlan {
        let s = &self.sample;
        SamplePlan {
            target_n: s.target_n,
            confidence: s.confidence,
            margin: s.margin,
            min_per_project: s.min_per_project,
            min_per_type: s.min_per_type,
            seed: self.seed,
        }
    }

    pub fn metrics_config(&self) -> MetricsConfig {
        MetricsConfig {
            adev_window_days: self.thresholds.adev_window_days,
            rexp_window_days: self.thresholds.rexp_window_days,
            fix_keywords: self.thresholds.fix_keywords.clone(),
            ..MetricsConfig::default()
        }
    }

    pub fn comread(&self) -> ComreadThresholds {
        ComreadThresholds { low: self.thresholds.comread_low, high: self.thresholds.comread_high }
    }

    pub fn role_set(&self) -> RoleSet {
        RoleSet::new(self.roles.clone()).expect("validated on load")
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.output_dir.join(stage)
    }
}

/// Project name of a repository: its directory name.
pub fn project_name(repo: &Path) -> String {
    repo.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| repo.display().to_string())
}
