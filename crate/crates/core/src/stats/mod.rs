//! Agreement, normality, rank-correlation, multiple-testing and
//! random-forest procedures.

mod agreement;
mod correlation;
mod forest;
mod multiple;
mod normality;
mod rank;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use agreement::{bowker_test, cohen_kappa};
pub use correlation::{
    build_correlation_matrix, render_heatmap_svg, write_correlation_csv, CorrelationCell, CorrelationMatrix,
};
pub use forest::{rf_train_and_importance, Dataset, FeatureImportance, ForestConfig, RandomForest};
pub use multiple::{benjamini_hochberg, bonferroni, BhOutcome, BonferroniOutcome};
pub use normality::anderson_darling_normal;
pub use rank::{kendall_tau, midranks, spearman_rho};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("contingency table must be square with at least two labels and positive total")]
    InvalidTable,
    #[error("chance agreement is 1; kappa is undefined")]
    DegenerateTable,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("only one class present")]
    SingleClass,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Square rater-agreement table: rows are rater A, columns rater B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new<S: Into<String>>(labels: Vec<S>, counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let t = Self { labels: labels.into_iter().map(Into::into).collect(), counts };
        t.validate()?;
        Ok(t)
    }

    /// Tallies paired ratings. Labels come from `labels`, in that order.
    pub fn from_pairs<S: AsRef<str>>(labels: &[S], pairs: &[(usize, usize)]) -> Result<Self, StatsError> {
        let k = labels.len();
        let mut counts = vec![vec![0u64; k]; k];
        for &(a, b) in pairs {
            if a >= k || b >= k {
                return Err(StatsError::InvalidTable);
            }
            counts[a][b] += 1;
        }
        Self::new(labels.iter().map(|s| s.as_ref().to_string()).collect(), counts)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let k = self.labels.len();
        if k < 2 || self.counts.len() != k || self.counts.iter().any(|r| r.len() != k) || self.total() == 0 {
            return Err(StatsError::InvalidTable);
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> Self {
        let k = self.k();
        let counts = (0..k).map(|i| (0..k).map(|j| self.counts[j][i]).collect()).collect();
        Self { labels: self.labels.clone(), counts }
    }

    /// Reorders labels (and both axes) by `perm`, new index i taking old `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        Self {
            labels: perm.iter().map(|&p| self.labels[p].clone()).collect(),
            counts: perm.iter().map(|&i| perm.iter().map(|&j| self.counts[i][j]).collect()).collect(),
        }
    }
}

/// Outcome of one statistical test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<u32>,
    /// Named auxiliary values such as `std_err`, `ci_low`, `ci_high`.
    pub extra: BTreeMap<String, f64>,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, df: Option<u32>) -> Self {
        Self { statistic, p_value: p_value.clamp(0.0, 1.0), df, extra: BTreeMap::new() }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.extra.get(key).copied()
    }
}
