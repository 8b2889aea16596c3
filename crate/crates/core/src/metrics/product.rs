use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricVector;

pub const PRODUCT_COLUMNS: [&str; 16] = [
    "CBO", "WMC", "RFC", "ELOC", "NOM", "NOPM", "DIT", "NOC", "NOF", "NOSF", "NOPF", "NOSM", "NOSI", "HsLCOM",
    "COMREAD_val", "COMREAD_cat",
];

const NUMERIC: usize = 14;

#[derive(Debug, thiserror::Error)]
pub enum ProductError {
    #[error("malformed product-metrics CSV: {0}")]
    MalformedCsv(String),
    #[error("{column}: {value:?} is not a number")]
    TypeError { column: String, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComreadCategory {
    Low,
    Medium,
    High,
}

impl ComreadCategory {
    pub fn label(self) -> &'static str {
        match self {
            Self::Low => "Low",
            Self::Medium => "Medium",
            Self::High => "High",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Some(Self::Low),
            "medium" => Some(Self::Medium),
            "high" => Some(Self::High),
            _ => None,
        }
    }
}

/// Cut-offs on the readability score: below `low` is Low, at or above `high`
/// is High, anything between is Medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComreadThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for ComreadThresholds {
    fn default() -> Self {
        Self { low: 0.4, high: 0.7 }
    }
}

impl ComreadThresholds {
    pub fn categorize(&self, value: f64) -> ComreadCategory {
        if value < self.low {
            ComreadCategory::Low
        } else if value >= self.high {
            ComreadCategory::High
        } else {
            ComreadCategory::Medium
        }
    }
}

/// Externally computed class-level metrics. Every field is optional since
/// inputs may carry any subset of the columns.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProductMetrics {
    /// CBO through HsLCOM, in [`PRODUCT_COLUMNS`] order.
    pub numeric: [Option<f64>; NUMERIC],
    pub comread_val: Option<f64>,
    pub comread_cat: Option<ComreadCategory>,
}

impl ProductMetrics {
    pub fn value(&self, column: &str) -> Option<f64> {
        match column {
            "COMREAD_val" => self.comread_val,
            _ => PRODUCT_COLUMNS[..NUMERIC].iter().position(|c| *c == column).and_then(|i| self.numeric[i]),
        }
    }

    pub(crate) fn set(&mut self, column: &str, raw: &str) -> Result<(), ProductError> {
        let type_error = || ProductError::TypeError { column: column.to_string(), value: raw.to_string() };
        if column == "COMREAD_cat" {
            self.comread_cat = Some(ComreadCategory::parse(raw).ok_or_else(type_error)?);
            return Ok(());
        }
        let v: f64 = raw.trim().parse().map_err(|_| type_error())?;
        if !v.is_finite() {
            return Err(type_error());
        }
        if column == "COMREAD_val" {
            self.comread_val = Some(v);
        } else if let Some(i) = PRODUCT_COLUMNS[..NUMERIC].iter().position(|c| *c == column) {
            self.numeric[i] = Some(v);
        }
        Ok(())
    }

    pub(crate) fn cells(&self) -> Vec<String> {
        let mut out: Vec<String> =
            self.numeric.iter().map(|v| v.map(|x| format!("{x}")).unwrap_or_default()).collect();
        out.push(self.comread_val.map(|x| format!("{x:.6}")).unwrap_or_default());
        out.push(self.comread_cat.map(|c| c.label().to_string()).unwrap_or_default());
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub joined: usize,
    /// `(commit, file)` keys with no matching metric row.
    pub unmatched: Vec<(String, String)>,
    /// Skipped data rows: 1-based CSV line and reason.
    pub skipped: Vec<(usize, String)>,
}

/// Joins product metrics from a CSV file onto `rows` by (commit, file).
pub fn ingest_product_metrics(
    csv_path: &Path,
    rows: &mut [MetricVector],
    thresholds: ComreadThresholds,
) -> Result<IngestReport, ProductError> {
    let file = std::fs::File::open(csv_path)?;
    ingest_from_reader(file, rows, thresholds)
}

pub(crate) fn ingest_from_reader<R: std::io::Read>(
    input: R,
    rows: &mut [MetricVector],
    thresholds: ComreadThresholds,
) -> Result<IngestReport, ProductError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| ProductError::MalformedCsv(e.to_string()))?.clone();
    let pos = |name: &str| header.iter().position(|h| h == name);
    let commit = pos("commit").ok_or_else(|| ProductError::MalformedCsv("missing column commit".into()))?;
    let file = pos("file").ok_or_else(|| ProductError::MalformedCsv("missing column file".into()))?;
    let known: Vec<(usize, &str)> = PRODUCT_COLUMNS.iter().filter_map(|c| pos(c).map(|i| (i, *c))).collect();

    let index: HashMap<(String, String), usize> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.commit_id.clone(), r.file_path.clone()), i))
        .collect();

    let mut report = IngestReport::default();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                log::warn!("product metrics line {line}: {e}");
                report.skipped.push((line, e.to_string()));
                continue;
            }
        };
        let mut pm = ProductMetrics::default();
        let parsed = known.iter().filter(|(i, _)| !rec[*i].is_empty()).try_for_each(|(i, c)| pm.set(c, &rec[*i]));
        if let Err(e) = parsed {
            log::warn!("product metrics line {line}: {e}; row skipped");
            report.skipped.push((line, e.to_string()));
            continue;
        }
        if let Some(v) = pm.comread_val {
            let derived = thresholds.categorize(v);
            if pm.comread_cat.is_some_and(|c| c != derived) {
                log::warn!("product metrics line {line}: COMREAD_cat disagrees with thresholds; recomputed");
            }
            pm.comread_cat = Some(derived);
        }
        let key = (rec[commit].to_string(), rec[file].to_string());
        match index.get(&key) {
            Some(&i) => {
                rows[i].product = Some(pm);
                report.joined += 1;
            }
            None => report.unmatched.push(key),
        }
    }
    if !report.unmatched.is_empty() {
        log::warn!("{} product-metric rows matched no metric vector", report.unmatched.len());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(commit: &str, file: &str) -> MetricVector {
        let mut v: MetricVector = serde_json::from_value(serde_json::json!({
            "commit_id": commit, "file_path": file,
            "comm": 0, "adev": 0, "ddev": 0, "add": 0.0, "dele": 0.0, "own": 0.0, "minor": 0, "sctr": 1,
            "nadev": 0, "nddev": 0, "ncomm": 0, "nsctr": 0, "oexp": 0.0, "exp": 0.0, "nd": 1, "ns": 1, "nf": 1,
            "entropy": 0.0, "la": 1, "ld": 0, "lt": 0, "fix": false, "ndev": 0, "age": 0.0, "nuc": 0,
            "cexp": 0, "rexp": 0, "sexp": 0
        }))
        .unwrap();
        v.product = None;
        v
    }

    #[test]
    fn empty_csv_joins_nothing() {
        let mut rows = vec![row("c1", "A.java")];
        let r = ingest_from_reader("commit,file,CBO\n".as_bytes(), &mut rows, Default::default()).unwrap();
        assert_eq!(r.joined, 0);
        assert!(r.unmatched.is_empty());
        assert!(rows[0].product.is_none());
    }

    #[test]
    fn five_rows_four_matching() {
        let mut rows: Vec<_> = (1..=4).map(|i| row(&format!("c{i}"), "A.java")).collect();
        let csv = "commit,file,CBO,WMC\nc1,A.java,3,4\nc2,A.java,1,1\nc3,A.java,0,2\nc4,A.java,7,9\nc9,B.java,1,1\n";
        let r = ingest_from_reader(csv.as_bytes(), &mut rows, Default::default()).unwrap();
        assert_eq!(r.joined, 4);
        assert_eq!(r.unmatched, vec![("c9".to_string(), "B.java".to_string())]);
        assert_eq!(rows[3].value("WMC"), Some(9.0));
        assert_eq!(rows[3].value("RFC"), None);
    }

    #[test]
    fn comread_category_from_thresholds() {
        let mut rows = vec![row("c1", "A.java")];
        let t = ComreadThresholds { low: 0.4, high: 0.7 };
        let csv = "commit,file,COMREAD_val,COMREAD_cat\nc1,A.java,0.72,Low\n";
        ingest_from_reader(csv.as_bytes(), &mut rows, t).unwrap();
        let p = rows[0].product.as_ref().unwrap();
        assert_eq!(p.comread_cat, Some(ComreadCategory::High));
        assert_eq!(t.categorize(0.39), ComreadCategory::Low);
        assert_eq!(t.categorize(0.4), ComreadCategory::Medium);
        assert_eq!(t.categorize(0.7), ComreadCategory::High);
    }

    #[test]
    fn header_without_keys_is_malformed() {
        let mut rows = vec![];
        let err = ingest_from_reader("file,CBO\n".as_bytes(), &mut rows, Default::default()).unwrap_err();
        assert!(matches!(err, ProductError::MalformedCsv(_)));
    }

    #[test]
    fn non_numeric_cell_skips_row() {
        let mut rows = vec![row("c1", "A.java"), row("c2", "A.java")];
        let csv = "commit,file,CBO\nc1,A.java,abc\nc2,A.java,2\n";
        let r = ingest_from_reader(csv.as_bytes(), &mut rows, Default::default()).unwrap();
        assert_eq!(r.joined, 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].0, 2);
        assert!(rows[0].product.is_none());
    }
}
