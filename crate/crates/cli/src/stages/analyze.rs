//! Statistics over the classified sample: metric/category correlations,
//! random-forest importances, normality checks and agreement figures.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;

use anyhow::Context;
use refwhy_core::llm::{AlignmentLabel, OpenCoding};
use refwhy_core::metrics::{read_metrics_csv, ComreadCategory, MetricVector, PROCESS_COLUMNS, PRODUCT_COLUMNS};
use refwhy_core::reference::{
    agreement as published, lookup_category, AGREEMENT_LABELS, AGREEMENT_TABLE, ALIGNMENT_COUNTS,
    CORRELATION_METRICS, MOTIVATION_CATEGORIES, MOTIVATION_PAIRS, VALIDATED_PAIRS,
};
use refwhy_core::refactoring::{read_instances_ndjson, RefactoringInstance};
use refwhy_core::report::{label_shares, summarize_agreement, AgreementSummary, LabelShare};
use refwhy_core::sampler::cochran_n;
use refwhy_core::stats::{
    anderson_darling_normal, build_correlation_matrix, render_heatmap_svg, rf_train_and_importance,
    write_correlation_csv, ContingencyTable, CorrelationMatrix, Dataset, FeatureImportance, ForestConfig,
};
use refwhy_core::Execution;
use serde::Serialize;

use super::{classify, mine, read_ndjson, require, write_json, write_output};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::review::{self, AgreementReport, Progress};

pub const DIR: &str = "analyze";
pub const CORRELATION: &str = "correlation.csv";
pub const HEATMAP: &str = "correlation.svg";
pub const IMPORTANCE_PROCESS: &str = "importance_process.csv";
pub const IMPORTANCE_PRODUCT: &str = "importance_product.csv";
pub const IMPORTANCE_COMBINED: &str = "importance_combined.csv";
pub const NORMALITY: &str = "normality.csv";
pub const AGREEMENT: &str = "agreement.json";
pub const SUMMARY: &str = "summary.md";
pub const FILES: [&str; 8] = [
    CORRELATION,
    HEATMAP,
    IMPORTANCE_PROCESS,
    IMPORTANCE_PRODUCT,
    IMPORTANCE_COMBINED,
    NORMALITY,
    AGREEMENT,
    SUMMARY,
];

/// Ordinal encoding of the readability category as one forest feature.
pub const COMREAD_CAT_FEATURE: &str = "COMREAD (Cat)";

#[derive(Debug, Serialize)]
pub struct ReferenceAgreement {
    pub summary: AgreementSummary,
    pub published_kappa: f64,
    pub published_std_err: f64,
    pub published_ci: [f64; 2],
    pub published_bowker_chi2: f64,
    pub alignment: Vec<LabelShare>,
    pub motivation_pairs: u64,
    pub validated_pairs: u64,
    /// Cochran's n for the motivation pairs at 95% confidence, 5% margin.
    pub cochran_for_pairs: u64,
}

#[derive(Debug, Serialize)]
pub struct PipelineAgreement {
    pub alignment: Vec<LabelShare>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review: Option<AgreementReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review_progress: Option<Progress>,
}

#[derive(Debug, Serialize)]
pub struct AgreementFile {
    pub reference: ReferenceAgreement,
    pub pipeline: PipelineAgreement,
}

#[derive(Debug, Serialize)]
pub struct ForestSummary {
    pub model: &'static str,
    pub features: usize,
    pub oob_accuracy: Option<f64>,
    pub importance: Vec<FeatureImportance>,
}

#[derive(Debug)]
pub struct AnalyzeReport {
    pub observations: usize,
    pub matrix: Option<CorrelationMatrix>,
    pub forests: Vec<ForestSummary>,
    pub agreement: AgreementFile,
    pub notes: Vec<String>,
}

/// One coded case joined to the metric row of its main file.
struct Observation<'a> {
    label: String,
    row: &'a MetricVector,
}

fn metric_row<'a>(
    rows: &HashMap<(&str, &str), &'a MetricVector>,
    inst: &RefactoringInstance,
) -> Option<&'a MetricVector> {
    inst.right
        .iter()
        .chain(&inst.left)
        .find_map(|l| rows.get(&(inst.commit_id.as_str(), l.file_path.as_str())).copied())
}

pub fn reference_agreement() -> ReferenceAgreement {
    let table = ContingencyTable::new(
        AGREEMENT_LABELS.to_vec(),
        AGREEMENT_TABLE.iter().map(|r| r.to_vec()).collect(),
    )
    .expect("reference table is valid");
    ReferenceAgreement {
        summary: summarize_agreement(&table),
        published_kappa: published::KAPPA,
        published_std_err: published::STD_ERR,
        published_ci: [published::CI_LOW, published::CI_HIGH],
        published_bowker_chi2: published::BOWKER_CHI2,
        alignment: label_shares(&ALIGNMENT_COUNTS),
        motivation_pairs: MOTIVATION_PAIRS,
        validated_pairs: VALIDATED_PAIRS,
        cochran_for_pairs: cochran_n(0.95, 0.05, Some(MOTIVATION_PAIRS)).expect("valid constants"),
    }
}

fn comread_ordinal(row: &MetricVector) -> Option<f64> {
    row.product.as_ref()?.comread_cat.map(|c| match c {
        ComreadCategory::Low => 0.0,
        ComreadCategory::Medium => 1.0,
        ComreadCategory::High => 2.0,
    })
}

fn importance_csv(imp: &[FeatureImportance]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "mda", "mdg"])?;
    for f in imp {
        w.write_record([f.feature.clone(), f.mda.to_string(), f.mdg.to_string()])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn run(cfg: &PipelineConfig) -> Result<AnalyzeReport, CliError> {
    let mine_dir = cfg.stage_dir(mine::DIR);
    let classify_dir = cfg.stage_dir(classify::DIR);
    let metrics_path = require(mine_dir.join(mine::METRICS))?;
    let instances_path = require(mine_dir.join(mine::INSTANCES))?;
    let coding_path = require(classify_dir.join(classify::CODING))?;
    let alignment_path = require(classify_dir.join(classify::ALIGNMENT))?;

    let rows = read_metrics_csv(File::open(&metrics_path)?)
        .map_err(|e| anyhow::anyhow!("{}: {e}", metrics_path.display()))?;
    let instances = read_instances_ndjson(BufReader::new(File::open(&instances_path)?))
        .with_context(|| format!("reading {}", instances_path.display()))?;
    let coding: OpenCoding = serde_json::from_reader(BufReader::new(File::open(&coding_path)?))
        .with_context(|| format!("reading {}", coding_path.display()))?;
    let labels: Vec<AlignmentLabel> = read_ndjson(&alignment_path)?;

    let mut notes = Vec::new();
    let by_key: HashMap<(&str, &str), &MetricVector> =
        rows.iter().map(|r| ((r.commit_id.as_str(), r.file_path.as_str()), r)).collect();
    let by_id: HashMap<&str, &RefactoringInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();

    let mut obs = Vec::new();
    let mut unmapped = 0;
    let mut no_metrics = 0;
    for a in &coding.assignments {
        let Some(row) = by_id.get(a.case_id.as_str()).and_then(|i| metric_row(&by_key, i)) else {
            no_metrics += 1;
            continue;
        };
        let label = match lookup_category(&a.category) {
            Some(c) => c.code.to_string(),
            None => {
                unmapped += 1;
                a.category.clone()
            }
        };
        obs.push(Observation { label, row });
    }
    if no_metrics > 0 {
        notes.push(format!("{no_metrics} coded case(s) have no metric row and were left out"));
    }
    if unmapped > 0 {
        notes.push(format!("{unmapped} case(s) carry a category outside the 14 reference ones"));
    }

    let requested: Vec<String> = match &cfg.analysis.metrics {
        Some(m) => m.clone(),
        None => CORRELATION_METRICS.iter().map(|s| s.to_string()).collect(),
    };
    let (metrics, missing): (Vec<String>, Vec<String>) =
        requested.into_iter().partition(|m| obs.iter().any(|o| o.row.value(m).is_some()));
    if !missing.is_empty() {
        notes.push(format!("no values for {}; columns dropped", missing.join(", ")));
    }
    let before = obs.len();
    obs.retain(|o| metrics.iter().all(|m| o.row.value(m).is_some()));
    if obs.len() < before {
        notes.push(format!("{} observation(s) lack some metric values and were left out", before - obs.len()));
    }
    let columns: Vec<Vec<f64>> =
        metrics.iter().map(|m| obs.iter().map(|o| o.row.value(m).expect("filtered")).collect()).collect();
    let obs_labels: Vec<String> = obs.iter().map(|o| o.label.clone()).collect();

    let dir = cfg.stage_dir(DIR);
    std::fs::create_dir_all(&dir)?;

    let rmcs: Vec<String> = MOTIVATION_CATEGORIES.iter().map(|c| c.code.to_string()).collect();
    let matrix =
        match build_correlation_matrix(&obs_labels, &rmcs, &metrics, &columns, cfg.analysis.alpha, Execution::Parallel) {
            Ok(m) => Some(m),
            Err(e) => {
                notes.push(format!("correlation matrix not computed: {e}"));
                None
            }
        };
    match &matrix {
        Some(m) => {
            let mut csv = Vec::new();
            write_correlation_csv(&mut csv, m).context("writing correlations")?;
            write_output(&dir.join(CORRELATION), &csv)?;
            write_output(&dir.join(HEATMAP), render_heatmap_svg(m).as_bytes())?;
        }
        None => {
            write_output(&dir.join(CORRELATION), b"rmc,metric,rho,tau,p_raw,p_bonf_reject,p_bh\n")?;
            write_output(
                &dir.join(HEATMAP),
                b"<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"40\"><text x=\"10\" y=\"25\">no correlation matrix</text></svg>\n",
            )?;
        }
    }

    let mut norm = csv::Writer::from_writer(Vec::new());
    norm.write_record(["metric", "n", "statistic", "p_value", "normal"]).context("normality")?;
    for (m, col) in metrics.iter().zip(&columns) {
        let rec = match anderson_darling_normal(col) {
            Ok(r) => vec![
                m.clone(),
                col.len().to_string(),
                r.statistic.to_string(),
                r.p_value.to_string(),
                (r.p_value >= cfg.analysis.alpha).to_string(),
            ],
            Err(e) => vec![m.clone(), col.len().to_string(), String::new(), String::new(), e.to_string()],
        };
        norm.write_record(&rec).context("normality")?;
    }
    write_output(&dir.join(NORMALITY), &norm.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))?)?;

    let comread: Option<Vec<f64>> = obs.iter().map(|o| comread_ordinal(o.row)).collect();
    let comread = comread.filter(|c| !c.is_empty());
    let sets: [(&'static str, &str, Box<dyn Fn(&str) -> bool>, bool); 3] = [
        ("process", IMPORTANCE_PROCESS, Box::new(|m: &str| PROCESS_COLUMNS.contains(&m)), false),
        ("product", IMPORTANCE_PRODUCT, Box::new(|m: &str| PRODUCT_COLUMNS.contains(&m)), true),
        ("combined", IMPORTANCE_COMBINED, Box::new(|_: &str| true), true),
    ];
    let mut forests = Vec::new();
    for (model, file, keep, with_cat) in sets {
        let mut names = Vec::new();
        let mut cols = Vec::new();
        for (m, c) in metrics.iter().zip(&columns) {
            if keep(m) {
                names.push(m.clone());
                cols.push(c.clone());
            }
        }
        if let (true, Some(c)) = (with_cat, &comread) {
            names.push(COMREAD_CAT_FEATURE.to_string());
            cols.push(c.clone());
        }
        let n_features = names.len();
        let fcfg = ForestConfig {
            n_trees: cfg.analysis.n_trees,
            seed: cfg.seed,
            execution: Execution::Parallel,
            ..ForestConfig::default()
        };
        let trained = Dataset::from_columns(names, cols, &obs_labels).and_then(|d| rf_train_and_importance(&d, &fcfg));
        let summary = match trained {
            Ok(rf) => {
                let mut imp = rf.importance.clone();
                imp.sort_by(|a, b| b.mda.total_cmp(&a.mda).then_with(|| a.feature.cmp(&b.feature)));
                ForestSummary { model, features: n_features, oob_accuracy: Some(rf.oob_accuracy), importance: imp }
            }
            Err(e) => {
                notes.push(format!("{model} forest not trained: {e}"));
                ForestSummary { model, features: n_features, oob_accuracy: None, importance: Vec::new() }
            }
        };
        write_output(&dir.join(file), &importance_csv(&summary.importance)?)?;
        forests.push(summary);
    }

    let count = |v: &str| labels.iter().filter(|l| l.value.label() == v).count() as u64;
    let (review, review_progress) = review_agreement(cfg)?;
    let agreement = AgreementFile {
        reference: reference_agreement(),
        pipeline: PipelineAgreement {
            alignment: label_shares(&[("yes", count("yes")), ("no", count("no")), ("extends", count("extends"))]),
            review,
            review_progress,
        },
    };
    write_json(&dir.join(AGREEMENT), &agreement)?;

    let report = AnalyzeReport { observations: obs.len(), matrix, forests, agreement, notes };
    write_output(&dir.join(SUMMARY), render_summary(&report).as_bytes())?;
    Ok(report)
}

/// Agreement from the review service's verdict log, when reviews exist.
fn review_agreement(cfg: &PipelineConfig) -> anyhow::Result<(Option<AgreementReport>, Option<Progress>)> {
    if !review::log_path(cfg).is_file() {
        return Ok((None, None));
    }
    let state = review::snapshot(cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((Some(state.agreement()), Some(state.progress())))
}

fn pct(x: f64) -> String {
    format!("{x:.2}%")
}

fn render_summary(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Analysis summary\n");
    let refa = &r.agreement.reference;
    let _ = writeln!(s, "## Reference agreement (LLM vs human, {} validated pairs)\n", refa.summary.n);
    if let Some(k) = &refa.summary.kappa {
        let _ = writeln!(
            s,
            "- Cohen's kappa {:.3} (SE {:.3}, 95% CI {:.3} to {:.3}); published {:.3}",
            k.kappa, k.std_err, k.ci_low, k.ci_high, refa.published_kappa
        );
    }
    if let Some(b) = &refa.summary.bowker {
        let _ = writeln!(s, "- Bowker chi-square {:.3} (df {}, p {:.2e}); published {:.3}", b.chi2, b.df, b.p_value, refa.published_bowker_chi2);
    }
    let _ = writeln!(s, "- Raw agreement {}/{} = {}", refa.summary.agreements, refa.summary.n, pct(refa.summary.raw_agreement));
    for l in &refa.alignment {
        let _ = writeln!(s, "- Alignment {}: {} ({})", l.label, l.count, pct(l.percent));
    }
    let _ = writeln!(
        s,
        "- Cochran sample for {} pairs: {} (validated: {})\n",
        refa.motivation_pairs, refa.cochran_for_pairs, refa.validated_pairs
    );

    let _ = writeln!(s, "## This run\n");
    let _ = writeln!(s, "- Observations analysed: {}", r.observations);
    for l in &r.agreement.pipeline.alignment {
        let _ = writeln!(s, "- Alignment {}: {} ({})", l.label, l.count, pct(l.percent));
    }
    if let Some(m) = &r.matrix {
        let _ = writeln!(
            s,
            "- Correlation tests: {} ({} categories x {} metrics); Bonferroni threshold {:.4e}",
            m.m(),
            m.rmcs.len(),
            m.metrics.len(),
            m.bonferroni_threshold
        );
        let _ = writeln!(
            s,
            "- Significant after Bonferroni: {}; after Benjamini-Hochberg: {}",
            m.cells.iter().filter(|c| c.bonferroni_reject).count(),
            m.bh_significant()
        );
    }
    for f in &r.forests {
        match f.oob_accuracy {
            Some(acc) => {
                let top: Vec<&str> = f.importance.iter().take(5).map(|i| i.feature.as_str()).collect();
                let _ = writeln!(
                    s,
                    "- Forest ({}, {} features): OOB accuracy {}, top by MDA: {}",
                    f.model,
                    f.features,
                    pct(100.0 * acc),
                    top.join(", ")
                );
            }
            None => {
                let _ = writeln!(s, "- Forest ({}): not trained", f.model);
            }
        }
    }
    if let Some(rev) = &r.agreement.pipeline.review {
        let _ = writeln!(s, "\n## Human review\n");
        for p in &rev.reviewer_pairs {
            match p.summary.as_ref().and_then(|x| x.kappa.as_ref()) {
                Some(k) => {
                    let _ = writeln!(s, "- {} vs {}: kappa {:.3} over {} cases", p.reviewers[0], p.reviewers[1], k.kappa, p.shared_cases);
                }
                None => {
                    let _ = writeln!(s, "- {} vs {}: kappa undefined over {} cases", p.reviewers[0], p.reviewers[1], p.shared_cases);
                }
            }
        }
        for l in rev.llm_vs_reviewer.iter().chain(&rev.llm_vs_majority) {
            if let Some(k) = &l.summary.kappa {
                let _ = writeln!(s, "- LLM vs {}: kappa {:.3} over {} cases", l.rater, k.kappa, l.summary.n);
            }
        }
        let _ = writeln!(s, "- Resolved by majority: {}", rev.majority.resolved);
    }
    if !r.notes.is_empty() {
        let _ = writeln!(s, "\n## Notes\n");
        for n in &r.notes {
            let _ = writeln!(s, "- {n}");
        }
    }
    s
}
