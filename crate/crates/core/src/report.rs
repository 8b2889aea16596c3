//! Summaries of label distributions and rater agreement, shared by the
//! analysis report and the review service.

use serde::{Deserialize, Serialize};

use crate::stats::{bowker_test, cohen_kappa, ContingencyTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelShare {
    pub label: String,
    pub count: u64,
    /// Share of the total, in percent.
    pub percent: f64,
}

/// Per-label counts with their percentage of the total. An all-zero input
/// gives zero shares.
pub fn label_shares<S: AsRef<str>>(counts: &[(S, u64)]) -> Vec<LabelShare> {
    let total: u64 = counts.iter().map(|(_, c)| c).sum();
    counts
        .iter()
        .map(|(l, c)| LabelShare {
            label: l.as_ref().to_string(),
            count: *c,
            percent: if total == 0 { 0.0 } else { 100.0 * *c as f64 / total as f64 },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub kappa: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowkerSummary {
    pub chi2: f64,
    pub df: u32,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub table: ContingencyTable,
    pub n: u64,
    pub agreements: u64,
    /// Diagonal share, in percent.
    pub raw_agreement: f64,
    pub kappa: Option<KappaSummary>,
    pub bowker: Option<BowkerSummary>,
    /// Why a statistic is missing, when one is.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Raw agreement, Cohen's κ and Bowker's test on one table. Statistics that
/// are undefined for the table are left out with a note instead of failing.
pub fn summarize_agreement(table: &ContingencyTable) -> AgreementSummary {
    let n = table.total();
    let agreements: u64 = (0..table.k()).map(|i| table.counts[i][i]).sum();
    let mut notes = Vec::new();
    let kappa = match cohen_kappa(table) {
        Ok(r) => Some(KappaSummary {
            kappa: r.statistic,
            std_err: r.get("std_err").unwrap_or(f64::NAN),
            ci_low: r.get("ci_low").unwrap_or(f64::NAN),
            ci_high: r.get("ci_high").unwrap_or(f64::NAN),
            p_value: r.p_value,
        }),
        Err(e) => {
            notes.push(format!("kappa: {e}"));
            None
        }
    };
    let bowker = match bowker_test(table) {
        Ok(r) => Some(BowkerSummary { chi2: r.statistic, df: r.df.unwrap_or(0), p_value: r.p_value }),
        Err(e) => {
            notes.push(format!("bowker: {e}"));
            None
        }
    };
    AgreementSummary {
        table: table.clone(),
        n,
        agreements,
        raw_agreement: if n == 0 { 0.0 } else { 100.0 * agreements as f64 / n as f64 },
        kappa,
        bowker,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_and_raw_agreement() {
        let s = label_shares(&[("yes", 1), ("no", 3)]);
        assert_eq!(s[0].percent, 25.0);
        assert_eq!(label_shares(&[("x", 0)])[0].percent, 0.0);
        let t = ContingencyTable::new(vec!["a", "b"], vec![vec![3, 1], vec![0, 4]]).unwrap();
        let a = summarize_agreement(&t);
        assert_eq!((a.n, a.agreements), (8, 7));
        assert_eq!(a.raw_agreement, 87.5);
        assert!(a.kappa.is_some() && a.notes.is_empty());
    }

    #[test]
    fn degenerate_table_keeps_raw_agreement() {
        let t = ContingencyTable::new(vec!["a", "b"], vec![vec![5, 0], vec![0, 0]]).unwrap();
        let a = summarize_agreement(&t);
        assert_eq!(a.raw_agreement, 100.0);
        assert!(a.kappa.is_none());
        assert_eq!(a.notes.len(), 1);
    }
}
