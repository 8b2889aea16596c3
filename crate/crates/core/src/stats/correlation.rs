use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{benjamini_hochberg, bonferroni, kendall_tau, spearman_rho, StatsError};
use crate::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub rmc: String,
    pub metric: String,
    /// `None` when the indicator or the metric is constant.
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    /// Spearman p-value, the one the corrections run over.
    pub p_raw: Option<f64>,
    pub p_bonferroni: f64,
    pub bonferroni_reject: bool,
    pub p_bh: f64,
    pub bh_reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub rmcs: Vec<String>,
    pub metrics: Vec<String>,
    pub alpha: f64,
    pub bonferroni_threshold: f64,
    /// Row-major: `cells[r * metrics.len() + c]`.
    pub cells: Vec<CorrelationCell>,
}

impl CorrelationMatrix {
    /// Number of tests the corrections were applied over.
    pub fn m(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, rmc: usize, metric: usize) -> &CorrelationCell {
        &self.cells[rmc * self.metrics.len() + metric]
    }

    pub fn bh_significant(&self) -> usize {
        self.cells.iter().filter(|c| c.bh_reject).count()
    }
}

type Pair = (Option<(f64, f64)>, Option<f64>);

fn cell_stats(indicator: &[f64], metric: &[f64]) -> Result<Pair, StatsError> {
    match (spearman_rho(indicator, metric), kendall_tau(indicator, metric)) {
        (Ok(s), Ok(k)) => Ok((Some((s.statistic, s.p_value)), Some(k.statistic))),
        (Err(StatsError::ZeroVariance), _) | (_, Err(StatsError::ZeroVariance)) => Ok((None, None)),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Correlates a one-hot indicator per RMC with every metric column.
///
/// `labels[i]` is the RMC of row i; `columns[j][i]` is metric j on row i.
/// Cells where either side is constant get no coefficient and enter the
/// corrections with p = 1.
pub fn build_correlation_matrix<S: AsRef<str>>(
    labels: &[S],
    rmcs: &[S],
    metrics: &[String],
    columns: &[Vec<f64>],
    alpha: f64,
    execution: Execution,
) -> Result<CorrelationMatrix, StatsError> {
    if metrics.len() != columns.len() {
        return Err(StatsError::LengthMismatch(metrics.len(), columns.len()));
    }
    if rmcs.is_empty() || metrics.is_empty() {
        return Err(StatsError::EmptyDataset);
    }
    if let Some(c) = columns.iter().find(|c| c.len() != labels.len()) {
        return Err(StatsError::LengthMismatch(c.len(), labels.len()));
    }
    let indicators: Vec<Vec<f64>> = rmcs
        .iter()
        .map(|r| labels.iter().map(|l| if l.as_ref() == r.as_ref() { 1.0 } else { 0.0 }).collect())
        .collect();
    let p = metrics.len();
    let raw = execution.map_range(rmcs.len() * p, |i| cell_stats(&indicators[i / p], &columns[i % p]));
    let raw: Vec<Pair> = raw.into_iter().collect::<Result<_, _>>()?;

    let pvals: Vec<f64> = raw.iter().map(|(s, _)| s.map_or(1.0, |(_, p)| p)).collect();
    let bonf = bonferroni(&pvals, alpha)?;
    let bh = benjamini_hochberg(&pvals, alpha)?;
    let mut bonf_reject = vec![false; pvals.len()];
    for &i in &bonf.rejections {
        bonf_reject[i] = true;
    }
    let mut bh_reject = vec![false; pvals.len()];
    for &i in &bh.rejections {
        bh_reject[i] = true;
    }
    let cells = raw
        .into_iter()
        .enumerate()
        .map(|(i, (s, tau))| CorrelationCell {
            rmc: rmcs[i / p].as_ref().to_string(),
            metric: metrics[i % p].clone(),
            rho: s.map(|(r, _)| r),
            tau,
            p_raw: s.map(|(_, p)| p),
            p_bonferroni: bonf.p_adjusted[i],
            bonferroni_reject: bonf_reject[i],
            p_bh: bh.p_adjusted[i],
            bh_reject: bh_reject[i],
        })
        .collect();
    Ok(CorrelationMatrix {
        rmcs: rmcs.iter().map(|r| r.as_ref().to_string()).collect(),
        metrics: metrics.to_vec(),
        alpha,
        bonferroni_threshold: bonf.threshold,
        cells,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

/// CSV with columns rmc, metric, rho, tau, p_raw, p_bonf_reject, p_bh.
pub fn write_correlation_csv<W: Write>(out: W, matrix: &CorrelationMatrix) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rmc", "metric", "rho", "tau", "p_raw", "p_bonf_reject", "p_bh"])?;
    for c in &matrix.cells {
        w.write_record([
            c.rmc.clone(),
            c.metric.clone(),
            opt(c.rho),
            opt(c.tau),
            opt(c.p_raw),
            c.bonferroni_reject.to_string(),
            format!("{:.10}", c.p_bh),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn shade(rho: Option<f64>) -> String {
    let Some(r) = rho else { return "#dddddd".into() };
    let t = r.abs().min(1.0);
    let fade = (255.0 * (1.0 - t)).round() as u8;
    if r >= 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else {
        format!("#{fade:02x}{fade:02x}ff")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heat map of ρ: red positive, blue negative, grey undefined.
/// `*` marks BH significance, `**` Bonferroni significance.
pub fn render_heatmap_svg(matrix: &CorrelationMatrix) -> String {
    const CELL: usize = 18;
    const LEFT: usize = 60;
    const TOP: usize = 130;
    let w = LEFT + CELL * matrix.metrics.len() + 10;
    let h = TOP + CELL * matrix.rmcs.len() + 10;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="10">"#
    );
    for (j, m) in matrix.metrics.iter().enumerate() {
        let x = LEFT + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" transform="rotate(-60 {x} {})">{}</text>"#,
            TOP - 4,
            TOP - 4,
            escape(m)
        );
    }
    for (i, r) in matrix.rmcs.iter().enumerate() {
        let y = TOP + i * CELL;
        let _ = writeln!(s, r#"<text x="4" y="{}">{}</text>"#, y + CELL - 5, escape(r));
        for j in 0..matrix.metrics.len() {
            let c = matrix.cell(i, j);
            let x = LEFT + j * CELL;
            let title = format!("{} / {}: rho={} p_bh={:.4}", c.rmc, c.metric, opt(c.rho), c.p_bh);
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="white"><title>{}</title></rect>"#,
                shade(c.rho),
                escape(&title)
            );
            let mark = if c.bonferroni_reject { "**" } else if c.bh_reject { "*" } else { "" };
            if !mark.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{mark}</text>"#,
                    x + CELL / 2,
                    y + CELL - 4
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
