//! Just-in-time process metrics per (commit, file) and product-metric ingest.

mod engine;
mod formulas;
mod product;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use engine::{MetricsConfig, MetricsEngine, MetricsWarning};
pub use formulas::{detect_fix, entropy, ownership, FixDetector, DEFAULT_FIX_KEYWORDS, MINOR_SHARE};
pub use product::{
    ingest_product_metrics, ComreadCategory, ComreadThresholds, IngestReport, ProductError, ProductMetrics,
    PRODUCT_COLUMNS,
};

/// Process-metric columns, in output order.
pub const PROCESS_COLUMNS: [&str; 28] = [
    "COMM", "ADEV", "DDEV", "ADD", "DELE", "OWN", "MINOR", "SCTR", "NADEV", "NDDEV", "NCOMM", "NSCTR", "OEXP",
    "EXP", "ND", "NS", "NF", "ENTROPY", "LA", "LD", "LT", "FIX", "NDEV", "AGE", "NUC", "CEXP", "REXP", "SEXP",
];

/// Columns printed as fixed 6-decimal ratios.
pub const RATIO_COLUMNS: [&str; 7] = ["ADD", "DELE", "OWN", "OEXP", "EXP", "ENTROPY", "AGE"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub commit_id: String,
    pub file_path: String,
    pub comm: u64,
    pub adev: u64,
    pub ddev: u64,
    pub add: f64,
    pub dele: f64,
    pub own: f64,
    pub minor: u64,
    pub sctr: u64,
    pub nadev: u64,
    pub nddev: u64,
    pub ncomm: u64,
    pub nsctr: u64,
    pub oexp: f64,
    pub exp: f64,
    pub nd: u64,
    pub ns: u64,
    pub nf: u64,
    pub entropy: f64,
    pub la: u64,
    pub ld: u64,
    pub lt: u64,
    pub fix: bool,
    pub ndev: u64,
    pub age: f64,
    pub nuc: u64,
    pub cexp: u64,
    pub rexp: u64,
    pub sexp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductMetrics>,
}

impl MetricVector {
    /// The 28 process metrics as numbers, aligned with [`PROCESS_COLUMNS`].
    pub fn process_values(&self) -> [f64; 28] {
        [
            self.comm as f64,
            self.adev as f64,
            self.ddev as f64,
            self.add,
            self.dele,
            self.own,
            self.minor as f64,
            self.sctr as f64,
            self.nadev as f64,
            self.nddev as f64,
            self.ncomm as f64,
            self.nsctr as f64,
            self.oexp,
            self.exp,
            self.nd as f64,
            self.ns as f64,
            self.nf as f64,
            self.entropy,
            self.la as f64,
            self.ld as f64,
            self.lt as f64,
            if self.fix { 1.0 } else { 0.0 },
            self.ndev as f64,
            self.age,
            self.nuc as f64,
            self.cexp as f64,
            self.rexp as f64,
            self.sexp as f64,
        ]
    }

    /// Looks up a process or product metric by column name.
    pub fn value(&self, column: &str) -> Option<f64> {
        if let Some(i) = PROCESS_COLUMNS.iter().position(|c| *c == column) {
            return Some(self.process_values()[i]);
        }
        self.product.as_ref().and_then(|p| p.value(column))
    }
}

fn format_cell(column: &str, value: f64) -> String {
    if RATIO_COLUMNS.contains(&column) {
        format!("{value:.6}")
    } else {
        format!("{}", value as u64)
    }
}

/// Writes the metrics dataset as CSV.
///
/// Product columns are appended only when at least one row carries product
/// metrics; rows without them leave those cells empty.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricVector]) -> csv::Result<()> {
    let with_product = rows.iter().any(|r| r.product.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = vec!["commit", "file"];
    header.extend(PROCESS_COLUMNS);
    if with_product {
        header.extend(PRODUCT_COLUMNS);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = vec![r.commit_id.clone(), r.file_path.clone()];
        for (col, v) in PROCESS_COLUMNS.iter().zip(r.process_values()) {
            rec.push(format_cell(col, v));
        }
        if with_product {
            match &r.product {
                Some(p) => rec.extend(p.cells()),
                None => rec.extend(PRODUCT_COLUMNS.iter().map(|_| String::new())),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics CSV back, including product columns when present.
pub fn read_metrics_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricVector>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    let idx = |name: &str| header.iter().position(|h| h == name);
    let commit = idx("commit").ok_or("missing column commit")?;
    let file = idx("file").ok_or("missing column file")?;
    let cols: Vec<usize> = PROCESS_COLUMNS
        .iter()
        .map(|c| idx(c).ok_or_else(|| format!("missing column {c}")))
        .collect::<Result<_, _>>()?;
    let product_cols: Vec<(usize, &str)> =
        PRODUCT_COLUMNS.iter().filter_map(|c| idx(c).map(|i| (i, *c))).collect();
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| -> Result<f64, String> {
            rec[i].parse::<f64>().map_err(|_| format!("row {}: bad number {:?}", line + 2, &rec[i]))
        };
        let v: Vec<f64> = cols.iter().map(|&i| num(i)).collect::<Result<_, _>>()?;
        let c = |k: usize| v[k] as u64;
        let mut product = ProductMetrics::default();
        let mut any = false;
        for &(i, name) in &product_cols {
            if !rec[i].is_empty() {
                product.set(name, &rec[i]).map_err(|e| format!("row {}: {e}", line + 2))?;
                any = true;
            }
        }
        out.push(MetricVector {
            commit_id: rec[commit].to_string(),
            file_path: rec[file].to_string(),
            comm: c(0),
            adev: c(1),
            ddev: c(2),
            add: v[3],
            dele: v[4],
            own: v[5],
            minor: c(6),
            sctr: c(7),
            nadev: c(8),
            nddev: c(9),
            ncomm: c(10),
            nsctr: c(11),
            oexp: v[12],
            exp: v[13],
            nd: c(14),
            ns: c(15),
            nf: c(16),
            entropy: v[17],
            la: c(18),
            ld: c(19),
            lt: c(20),
            fix: v[21] != 0.0,
            ndev: c(22),
            age: v[23],
            nuc: c(24),
            cexp: c(25),
            rexp: c(26),
            sexp: c(27),
            product: any.then_some(product),
        });
    }
    Ok(out)
}
